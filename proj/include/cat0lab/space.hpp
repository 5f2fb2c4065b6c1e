#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cat0lab {

enum class SpaceKind { euclidean, tree, hyperbolic, product, rescaled };

/// Point on a metric tree: offset along edge `edge` measured from the edge's
/// first endpoint, 0 <= offset <= edge length. Vertex points are any
/// incident-edge representation with offset 0 or the full length; distance
/// and equality treat those representations as the same point.
struct TreePoint {
  int edge = 0;
  double offset = 0.0;
};

/// Upper half-plane coordinates, y > 0.
struct H2Point {
  double x = 0.0;
  double y = 1.0;
};

struct Point {
  std::variant<std::vector<double>,  // euclidean
               TreePoint,            // tree
               H2Point,              // hyperbolic plane
               std::vector<Point>>   // product (rescaled shares base points)
      rep;
};

struct WeightedPointSet {
  std::vector<Point> points;
  /// Nonnegative, summing to 1 (validated by consumers).
  std::vector<double> weights;
};

/// A Busemann direction: a boundary point of the space, represented
/// kind-specifically. For finite metric trees the "boundary point" is a
/// vertex w and the horofunction is d(., w)-based.
struct BusemannDirection {
  struct Euclidean {
    std::vector<double> direction;  // unit vector
  };
  struct Hyperbolic {
    std::optional<double> xi;  // boundary real; nullopt = the point at infinity
  };
  struct Tree {
    int vertex = 0;
  };
  struct Product {
    std::vector<BusemannDirection> directions;
    std::vector<double> weights;  // squares sum to 1
  };
  std::variant<Euclidean, Hyperbolic, Tree, Product> rep;
};

struct TreeEdge {
  int u = 0;
  int v = 0;
  double length = 1.0;
};

/// Complete CAT(0) model space. Immutable; all operations are pure.
class Space : public std::enable_shared_from_this<Space> {
 public:
  static std::shared_ptr<const Space> euclidean(int dim);
  /// Vertices 0..n-1; edges must form a tree (connected, acyclic).
  static std::shared_ptr<const Space> tree(int n_vertices,
                                           std::vector<TreeEdge> edges);
  static std::shared_ptr<const Space> hyperbolic_plane();
  static std::shared_ptr<const Space> product(
      std::vector<std::shared_ptr<const Space>> factors);
  /// View of `base` with distances scaled by lambda > 0; points are shared.
  static std::shared_ptr<const Space> rescaled(
      std::shared_ptr<const Space> base, double lambda);

  /// {"kind": "euclidean"|"tree"|"hyperbolic"|"product"|"rescaled", ...}
  static std::shared_ptr<const Space> from_json(const nlohmann::json& j);
  nlohmann::json descriptor() const;

  SpaceKind kind() const { return kind_; }
  int dim() const { return dim_; }  // euclidean only
  double lambda() const { return lambda_; }
  const std::shared_ptr<const Space>& base() const { return base_; }
  const std::vector<std::shared_ptr<const Space>>& factors() const {
    return factors_;
  }
  const std::vector<TreeEdge>& edges() const { return edges_; }
  int vertex_count() const { return n_vertices_; }

  void validate_point(const Point& p) const;  // DomainError on mismatch

  double distance(const Point& x, const Point& y) const;
  /// Constant-speed geodesic from x to y at time t in [0,1].
  Point geodesic_point(const Point& x, const Point& y, double t) const;

  /// Unique minimizer of sum_i alpha_i d(x_i, y)^2. Closed form (euclidean),
  /// exact per-edge quadratic minimization (tree), Karcher descent via
  /// exp/log (hyperbolic), factor-wise (product), base solve (rescaled:
  /// the argmin is scale-invariant). ConvergenceError past max_iter.
  Point barycenter(const WeightedPointSet& ws, double tol = 1e-12,
                   int max_iter = 10'000) const;

  /// Minimizer of y -> max_i d(y, x_i) and the minimax radius. Trees use the
  /// exact diametral-pair midpoint; other kinds anneal a softmax-weighted
  /// Frechet-mean fixed point and polish with farthest-point descent.
  std::pair<Point, double> circumcenter(const std::vector<Point>& points,
                                        double tol = 1e-9) const;

  /// b_xi(x, y) = lim_t [d(x, gamma(t)) - d(y, gamma(t))], closed form.
  double busemann_value(const BusemannDirection& xi, const Point& x,
                        const Point& y) const;
  /// Point on the defining geodesic ray at arclength t >= 0 (for trees, t is
  /// clamped nowhere: requesting t beyond the ray is a DomainError).
  Point ray_point(const BusemannDirection& xi, double t) const;

  /// Samples a grid of weight vectors over the simplex spanned by `points`
  /// (grid+1 levels per coordinate), maps them through barycenter, and
  /// checks whether every interior image is within tol of some boundary
  /// image.
  bool simplex_is_degenerate(const std::vector<Point>& points, double tol,
                             int grid = 20) const;

  std::shared_ptr<const Space> rescale(double lambda) const;

  Point random_point(std::mt19937_64& rng, double scale = 1.0) const;

  Point point_from_json(const nlohmann::json& j) const;
  nlohmann::json point_to_json(const Point& p) const;
  BusemannDirection direction_from_json(const nlohmann::json& j) const;

  /// Canonical tree-point representation of vertex v.
  Point tree_vertex(int v) const;
  /// Distance between tree vertices (precomputed).
  double tree_vertex_distance(int u, int v) const;
  /// Nearest vertex if the point sits exactly on one.
  std::optional<int> tree_vertex_of(const Point& p) const;

 private:
  Space() = default;

  SpaceKind kind_ = SpaceKind::euclidean;
  int dim_ = 0;
  double lambda_ = 1.0;
  std::shared_ptr<const Space> base_;
  std::vector<std::shared_ptr<const Space>> factors_;

  // tree data
  int n_vertices_ = 0;
  std::vector<TreeEdge> edges_;
  std::vector<std::vector<double>> vdist_;   // vertex-to-vertex distances
  std::vector<std::vector<int>> vnext_;      // next hop on the path u -> v
  std::vector<std::vector<int>> edge_index_; // vertex pair -> edge id (-1)
};

bool points_equal(const Space& s, const Point& a, const Point& b,
                  double tol = 1e-12);

}  // namespace cat0lab
