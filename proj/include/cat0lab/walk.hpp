#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cat0lab/group.hpp"
#include "cat0lab/measure.hpp"
#include "cat0lab/rational.hpp"

namespace cat0lab {

/// L^n, Ltilde^n = max_{m<=n} L^m and the running drift estimate, indexed
/// 1..n_max (index 0 present and zero).
struct DriftSeries {
  int n_max = 0;
  bool exact = false;
  std::vector<double> Ln;
  std::vector<double> Ltilde;
  std::vector<double> Ln_over_n;
  std::vector<double> stderrs;     // all zero in exact mode
  std::vector<Rational> Ln_exact;  // empty in Monte Carlo mode

  /// min_{1<=n<=n_max} L^n/n: Fekete gives lim L^n/n = inf L^n/n, so the
  /// prefix minimum is an upper bound for the drift; never extrapolated.
  double drift_estimate = 0.0;
  int drift_argmin = 0;          // n attaining the minimum
  double last_ratio = 0.0;       // L^{n_max}/n_max
  double drift_stderr = 0.0;     // Monte Carlo: stderr of the argmin entry
};

struct WalkSample {
  std::vector<GroupElement> trajectory;  // trajectory[0] = e
  std::uint64_t rng_seed = 0;
};

/// Exact drift table from convolution powers. ResourceError if the support
/// outgrows pair_budget.
DriftSeries drift_series_exact(const FiniteSupportMeasure& mu,
                               const GeneratingSet& S, int n_max,
                               std::size_t pair_budget = 80'000'000);

/// Unbiased Monte Carlo estimate of the same table from `samples` walks,
/// with per-n standard errors. Deterministic for a fixed seed.
DriftSeries drift_series_monte_carlo(const FiniteSupportMeasure& mu,
                                     const GeneratingSet& S, int n_max,
                                     int samples, std::uint64_t seed);

/// Reproducible mu-random walk: trajectory[k+1] = trajectory[k] * increment.
WalkSample sample_walk(const FiniteSupportMeasure& mu, int length,
                       std::uint64_t seed);

struct ConvCombReport {
  Rational factor;        // 1 + sum n*a_n
  double lhs = 0.0;       // drift estimate of nu
  double rhs = 0.0;       // factor * drift estimate of mu
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;  // already scaled by the factor
  bool holds = false;       // lhs <= rhs + 3*(lhs_stderr + rhs_stderr)
  bool exact = false;
  Rational second_moment;
  bool covers_punctured_ball = false;
  DriftSeries mu_series;
  DriftSeries nu_series;
};

/// Checks drift(nu) <= (1 + sum n*a_n) * drift(mu) for the truncated convex
/// combination nu of convolution powers of mu. samples == 0 selects exact
/// mode (stderrs are zero and the comparison is direct).
ConvCombReport verify_conv_comb_bound(const FiniteSupportMeasure& mu,
                                      const ConvexCombinationSpec& spec,
                                      const GeneratingSet& S, int n_max,
                                      int samples = 0, std::uint64_t seed = 0,
                                      std::size_t pair_budget = 80'000'000);

/// Columns: n, Ln, Ltilde, Ln_over_n, stderr.
void write_drift_csv(std::ostream& os, const DriftSeries& series);

}  // namespace cat0lab
