#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <utility>
#include <vector>

#include "cat0lab/group.hpp"
#include "cat0lab/rational.hpp"

namespace cat0lab {

/// Finite-support probability measure on a group. Immutable value type.
/// Support is stored as canonical keys sorted lexicographically, so equal
/// measures compare equal entry-by-entry and iteration order is deterministic.
struct ConvexCombinationSpec;
struct ConvexCombinationResult;

class FiniteSupportMeasure {
 public:
  /// Placeholder (no group, empty support); only valid as an assignment
  /// target.
  FiniteSupportMeasure() = default;

  struct Entry {
    std::string key;
    Rational weight;
  };

  /// Weights must be positive and sum to exactly 1.
  static FiniteSupportMeasure from_weights(
      std::shared_ptr<const Group> group,
      std::vector<std::pair<GroupElement, Rational>> weights);

  static FiniteSupportMeasure uniform(std::shared_ptr<const Group> group,
                                      const std::vector<GroupElement>& support);

  static FiniteSupportMeasure dirac_identity(
      std::shared_ptr<const Group> group);

  /// {"support": [element descriptors], "weights": ["1/4", ...] (optional,
  ///  default uniform), "symmetric": bool (optional, default true)}
  /// Weights are rationals written as "p/q" strings or integers.
  static FiniteSupportMeasure from_json(std::shared_ptr<const Group> group,
                                        const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::shared_ptr<const Group>& group_ptr() const { return group_; }
  const Group& group() const { return *group_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }

  /// Weight of the element with this canonical key (0 if not in support).
  Rational mass(const std::string& key) const;
  Rational mass(const GroupElement& g) const;

  /// True iff mu(g) == mu(g^-1) for every g in the support.
  bool is_symmetric() const;

  bool operator==(const FiniteSupportMeasure& other) const;

 private:
  std::shared_ptr<const Group> group_;
  std::vector<Entry> entries_;  // sorted by key, weights > 0, sum == 1

  friend FiniteSupportMeasure convolve(const FiniteSupportMeasure&,
                                       const FiniteSupportMeasure&,
                                       std::size_t);
  friend ConvexCombinationResult build_convex_combination(
      const FiniteSupportMeasure&, const ConvexCombinationSpec&,
      const GeneratingSet&, std::size_t);
};

/// (mu*nu)(g) = sum_h mu(h) nu(h^-1 g). Exact. Throws ResourceError when the
/// number of pairwise products would exceed `pair_budget`.
FiniteSupportMeasure convolve(const FiniteSupportMeasure& mu,
                              const FiniteSupportMeasure& nu,
                              std::size_t pair_budget = 80'000'000);

/// mu^{*n}, n >= 1, by iterated convolution (deterministic).
FiniteSupportMeasure convolution_power(const FiniteSupportMeasure& mu, int n,
                                       std::size_t pair_budget = 80'000'000);

struct ConvexCombinationSpec {
  /// a_1, ..., a_N; all >= 0, at least one > 0.
  std::vector<Rational> coefficients;
  /// When false, coefficients must already sum to exactly 1.
  bool renormalize = false;

  int truncation() const { return static_cast<int>(coefficients.size()); }
  static ConvexCombinationSpec from_json(const nlohmann::json& j);
};

struct ConvexCombinationResult {
  FiniteSupportMeasure nu;
  /// 1 + sum_n n*a_n with the (possibly renormalized) coefficients.
  Rational factor;
  /// sum_g d(e,g)^2 nu(g) in the word metric of the generating set used.
  Rational second_moment;
  /// supp(nu) contains ball(N) minus the identity?
  bool covers_punctured_ball = false;
};

/// nu = sum_{n<=N} a_n mu^{*n}. Requires mu symmetric. The word metric of S
/// is used for the second moment and the support check.
ConvexCombinationResult build_convex_combination(
    const FiniteSupportMeasure& mu, const ConvexCombinationSpec& spec,
    const GeneratingSet& S, std::size_t pair_budget = 80'000'000);

Rational parse_rational(const nlohmann::json& j);
nlohmann::json rational_to_json(const Rational& r);

}  // namespace cat0lab
