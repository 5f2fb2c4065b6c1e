#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cat0lab/action.hpp"
#include "cat0lab/measure.hpp"

namespace cat0lab {

/// max_{s in S} d(x, s.x).
double displacement(const IsometricAction& action, const Point& x,
                    const GeneratingSet& S);

struct EnergyReport {
  double energy = 0.0;
  Point basepoint;
  /// displacement(basepoint)^2 * min weight of mu, displacement taken over
  /// supp mu; a lower bound for the energy at every point.
  double lower_bound = 0.0;
  std::string truncation_note;
};

/// E(f) = sum_g d(x, g.x)^2 mu(g) at basepoint x, exact sum over supp mu.
EnergyReport energy(const IsometricAction& action,
                    const FiniteSupportMeasure& mu, const Point& basepoint,
                    const std::string& truncation_note = {});

enum class MinimizeStatus { converged, converged_flat, escaped, iteration_capped };
std::string to_string(MinimizeStatus s);

struct MinimizeOptions {
  double tol = 1e-9;       // stop when d(x, orbit barycenter) <= tol
  int max_iter = 10'000;
  double theta = 0.5;      // damping; halved whenever the energy increases
  /// Escape ball radius around the start; default 1e3 * initial displacement.
  std::optional<double> escape_radius;
  bool record_iterates = false;
};

struct MinimizeResult {
  EquivariantMap map;
  EnergyReport report;
  MinimizeStatus status = MinimizeStatus::iteration_capped;
  int iterations = 0;
  std::vector<double> energy_trace;   // energy at every iterate, always kept
  std::vector<Point> iterate_trace;   // only if record_iterates
};

/// Damped orbit-barycenter descent: x <- geodesic(x, bar{(g.x, mu(g))}, theta).
/// converged: barycenter residual <= tol. converged_flat: residual <= tol with
/// positive energy that never decreased (a flat landscape, e.g. a translation
/// action). escaped: iterate left the escape ball while the energy was still
/// strictly decreasing.
MinimizeResult minimize_energy(const IsometricAction& action,
                               const FiniteSupportMeasure& mu,
                               const Point& start,
                               const MinimizeOptions& opts = {});

enum class ShalomOutcome { certificate, fixed_point, delta_bounded_below, inconclusive };
std::string to_string(ShalomOutcome o);

struct ShalomCertificate {
  int n = 0;
  Point v_n;
  double r_n = 0.0;
  double delta_at_vn = 0.0;           // <= r_n / n, checked on emission
  double sampled_min_delta_in_ball = 0.0;  // >= r_n / (2n) over the samples
  int sample_count = 0;
};

struct ShalomOptions {
  int starts = 32;            // multi-start descents per ball search
  int steps_per_start = 60;   // pattern-search steps per start
  int max_levels = 60;        // halving levels before giving up
  double fixed_point_tol = 1e-9;
  std::uint64_t seed = 0;
  std::int64_t eval_budget = 2'000'000;  // displacement evaluations
};

struct ShalomResult {
  ShalomOutcome outcome = ShalomOutcome::inconclusive;
  std::optional<ShalomCertificate> certificate;
  std::optional<Point> fixed_point;
  /// Best displacement value seen anywhere (the delta-infimum estimate; for
  /// delta_bounded_below this is the reported bound).
  double delta_infimum = 0.0;
  Point delta_argmin;
  std::string note;
};

/// The halving procedure: find w_1 with delta(w_1) <= 1/(2n), then search
/// B(w_k, 2^-k) for delta <= 1/(2^{k+1} n). A level that fails yields the
/// certificate (v_n = w_k, r_n = 2^-k); delta reaching fixed_point_tol yields
/// a fixed point; an initial delta-infimum estimate above 1/(2n) yields
/// delta_bounded_below. Ball minima are sampled evidence, not proofs.
ShalomResult shalom_search(const IsometricAction& action,
                           const GeneratingSet& S, int n, const Point& start,
                           const ShalomOptions& opts = {});

struct FixedPointResult {
  bool found = false;
  Point point;                 // fixed point when found
  MinimizeStatus minimize_status = MinimizeStatus::iteration_capped;
  double delta_infimum = 0.0;  // estimates carried by failure reports too
  double energy_infimum = 0.0;
  std::string note;
};

struct FixedPointOptions {
  double tol = 1e-6;
  MinimizeOptions minimize;
  int orbit_radius = 8;        // word-ball radius for the orbit sample
  /// Orbit diameter cap for the bounded-orbit branch; default
  /// 1e3 * (1 + initial displacement).
  std::optional<double> orbit_diameter_cap;
};

/// minimize_energy, then circumcenter-of-orbit polish: when a finite orbit
/// sample is bounded its circumcenter is used whenever that does not increase
/// the displacement (this recovers exact centers, e.g. tree vertices).
/// Verified fixed points satisfy displacement < tol over supp mu.
FixedPointResult fixed_point_search(const IsometricAction& action,
                                    const FiniteSupportMeasure& mu,
                                    const GeneratingSet& S, const Point& start,
                                    const FixedPointOptions& opts = {});

/// Delta_mu u(g) = u(g) - sum_h u(g h) mu(h), weights as doubles.
double mu_laplacian(const std::function<double(const GroupElement&)>& u,
                    const FiniteSupportMeasure& mu, const GroupElement& g);

/// phi(g) = b_xi(f(g), f(e)); phi(identity) == 0.
std::function<double(const GroupElement&)> pullback_horofunction(
    const EquivariantMap& f, const BusemannDirection& xi);

struct SubharmonicReport {
  double max_laplacian = 0.0;
  bool pass = false;
  double tol = 0.0;
  std::size_t sample_count = 0;
};

/// Evaluates Delta_mu phi on the samples; PASS iff max <= tol.
SubharmonicReport check_mu_subharmonic(
    const std::function<double(const GroupElement&)>& phi,
    const FiniteSupportMeasure& mu, const std::vector<GroupElement>& samples,
    double tol = 1e-9);

}  // namespace cat0lab
