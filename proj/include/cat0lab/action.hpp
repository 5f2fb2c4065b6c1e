#pragma once

#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <variant>
#include <vector>

#include "cat0lab/group.hpp"
#include "cat0lab/space.hpp"

namespace cat0lab {

/// x -> Qx + t with Q orthogonal (validated on construction).
struct EuclideanIso {
  std::vector<std::vector<double>> matrix;
  std::vector<double> translation;
};

/// z -> (az+b)/(cz+d) on the upper half-plane, real coefficients,
/// ad - bc = 1 (normalized on construction; sign-ambiguous).
struct MobiusIso {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
};

/// Length-preserving graph automorphism; vertex_map[v] is the image of v.
struct TreeIso {
  std::vector<int> vertex_map;
};

struct Isometry;

/// Diagonal isometry of a product space (no factor permutation).
struct ProductIso {
  std::vector<Isometry> factors;
};

/// Isometry of a model space. For rescaled spaces the representation is
/// that of the base space (points are shared).
struct Isometry {
  std::variant<EuclideanIso, MobiusIso, TreeIso, ProductIso> rep;
};

Isometry identity_isometry(const Space& space);
/// g then f: apply(compose(f, g), x) == apply(f, apply(g, x)).
Isometry compose(const Space& space, const Isometry& f, const Isometry& g);
Isometry inverse_isometry(const Space& space, const Isometry& f);
Isometry isometry_power(const Space& space, const Isometry& f, std::int64_t n);
Point apply_isometry(const Space& space, const Isometry& f, const Point& x);

/// Checks shape and the defining constraints (orthogonality, determinant,
/// automorphism property); DomainError on failure.
void validate_isometry(const Space& space, const Isometry& f);

/// {"kind": "euclidean"|"mobius"|"tree"|"product", ...}; see the structs.
Isometry isometry_from_json(const Space& space, const nlohmann::json& j);
nlohmann::json isometry_to_json(const Space& space, const Isometry& f);

/// A homomorphism from a group into the isometries of a model space, given
/// by images of the positive standard generators:
///   lattice Z^d   d images (must commute; checked on construction)
///   free F_k      k images
///   dihedral      2 images of the involutions x->-x and x->-x+1
///                 (squares must be the identity; checked on sampled points)
///   cyclic Z/m    1 image (m-th power must be the identity)
///   grigorchuk    4 images for a,b,c,d (relations are NOT checked; callers
///                 must supply images factoring through a genuine quotient)
/// Immutable value type.
class IsometricAction {
 public:
  /// Placeholder (no group/space); only valid as an assignment target.
  IsometricAction() = default;

  static IsometricAction from_images(std::shared_ptr<const Group> group,
                                     std::shared_ptr<const Space> space,
                                     std::vector<Isometry> images);

  /// {"images": [isometry descriptors]} in the order above.
  static IsometricAction from_json(std::shared_ptr<const Group> group,
                                   std::shared_ptr<const Space> space,
                                   const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::shared_ptr<const Group>& group_ptr() const { return group_; }
  const std::shared_ptr<const Space>& space_ptr() const { return space_; }
  const Group& group() const { return *group_; }
  const Space& space() const { return *space_; }
  const std::vector<Isometry>& images() const { return images_; }

  Isometry isometry_of(const GroupElement& g) const;
  Point apply(const GroupElement& g, const Point& x) const;

  /// Same images acting on rescale(space, lambda).
  IsometricAction rescaled(double lambda) const;

 private:
  std::shared_ptr<const Group> group_;
  std::shared_ptr<const Space> space_;
  std::vector<Isometry> images_;
};

/// The orbit map g -> apply(g, basepoint) of an action.
struct EquivariantMap {
  IsometricAction action;
  Point basepoint;

  Point at(const GroupElement& g) const { return action.apply(g, basepoint); }
};

}  // namespace cat0lab
