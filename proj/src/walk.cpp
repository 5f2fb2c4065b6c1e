#include "cat0lab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "cat0lab/errors.hpp"

namespace cat0lab {

namespace {

void finalize(DriftSeries& s) {
  int n = s.n_max;
  s.Ltilde.assign(n + 1, 0.0);
  s.Ln_over_n.assign(n + 1, 0.0);
  double running_max = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= n; ++k) {
    running_max = std::max(running_max, s.Ln[k]);
    s.Ltilde[k] = running_max;
    s.Ln_over_n[k] = s.Ln[k] / k;
    if (s.Ln_over_n[k] < best) {
      best = s.Ln_over_n[k];
      s.drift_argmin = k;
    }
  }
  s.drift_estimate = best;
  s.last_ratio = s.Ln_over_n[n];
  s.drift_stderr =
      s.stderrs.empty() ? 0.0 : s.stderrs[s.drift_argmin] / s.drift_argmin;
}

/// Increment sampler over the support of mu, by inverse-CDF on cumulative
/// double weights (exact ties are irrelevant at double precision).
struct IncrementSampler {
  std::vector<GroupElement> elems;
  std::vector<double> cdf;

  explicit IncrementSampler(const FiniteSupportMeasure& mu) {
    double acc = 0.0;
    for (const auto& e : mu.entries()) {
      elems.push_back(mu.group().element_from_key(e.key));
      acc += e.weight.to_double();
      cdf.push_back(acc);
    }
    cdf.back() = 1.0;
  }

  const GroupElement& operator()(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = std::min<std::size_t>(it - cdf.begin(), elems.size() - 1);
    return elems[i];
  }
};

}  // namespace

DriftSeries drift_series_exact(const FiniteSupportMeasure& mu,
                               const GeneratingSet& S, int n_max,
                               std::size_t pair_budget) {
  if (n_max < 1) throw DomainError("drift_series: n_max must be >= 1");
  const Group& G = mu.group();
  DriftSeries s;
  s.n_max = n_max;
  s.exact = true;
  s.Ln.assign(n_max + 1, 0.0);
  s.Ln_exact.assign(n_max + 1, Rational(0));
  s.stderrs.assign(n_max + 1, 0.0);

  FiniteSupportMeasure power = mu;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) power = convolve(power, mu, pair_budget);
    Rational L(0);
    for (const auto& e : power.entries()) {
      int d = G.word_length(G.element_from_key(e.key), S);
      L = L + Rational(d) * e.weight;
    }
    s.Ln_exact[n] = L;
    s.Ln[n] = L.to_double();
  }
  finalize(s);
  return s;
}

DriftSeries drift_series_monte_carlo(const FiniteSupportMeasure& mu,
                                     const GeneratingSet& S, int n_max,
                                     int samples, std::uint64_t seed) {
  if (n_max < 1) throw DomainError("drift_series: n_max must be >= 1");
  if (samples < 2) throw DomainError("drift_series: need >= 2 samples");
  const Group& G = mu.group();
  IncrementSampler draw(mu);

  std::vector<double> sum(n_max + 1, 0.0), sumsq(n_max + 1, 0.0);
  std::mt19937_64 rng(seed);
  for (int w = 0; w < samples; ++w) {
    GroupElement x = G.identity();
    for (int n = 1; n <= n_max; ++n) {
      x = G.multiply(x, draw(rng));
      double d = G.word_length(x, S);
      sum[n] += d;
      sumsq[n] += d * d;
    }
  }

  DriftSeries s;
  s.n_max = n_max;
  s.exact = false;
  s.Ln.assign(n_max + 1, 0.0);
  s.stderrs.assign(n_max + 1, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    double mean = sum[n] / samples;
    double var = std::max(0.0, (sumsq[n] - samples * mean * mean) /
                                   (samples - 1));
    s.Ln[n] = mean;
    s.stderrs[n] = std::sqrt(var / samples);
  }
  finalize(s);
  return s;
}

WalkSample sample_walk(const FiniteSupportMeasure& mu, int length,
                       std::uint64_t seed) {
  if (length < 0) throw DomainError("sample_walk: negative length");
  const Group& G = mu.group();
  IncrementSampler draw(mu);
  WalkSample w;
  w.rng_seed = seed;
  w.trajectory.reserve(length + 1);
  w.trajectory.push_back(G.identity());
  std::mt19937_64 rng(seed);
  for (int n = 0; n < length; ++n)
    w.trajectory.push_back(G.multiply(w.trajectory.back(), draw(rng)));
  return w;
}

ConvCombReport verify_conv_comb_bound(const FiniteSupportMeasure& mu,
                                      const ConvexCombinationSpec& spec,
                                      const GeneratingSet& S, int n_max,
                                      int samples, std::uint64_t seed,
                                      std::size_t pair_budget) {
  ConvexCombinationResult cc =
      build_convex_combination(mu, spec, S, pair_budget);

  ConvCombReport r;
  r.factor = cc.factor;
  r.second_moment = cc.second_moment;
  r.covers_punctured_ball = cc.covers_punctured_ball;
  r.exact = (samples == 0);
  if (r.exact) {
    r.mu_series = drift_series_exact(mu, S, n_max, pair_budget);
    r.nu_series = drift_series_exact(cc.nu, S, n_max, pair_budget);
  } else {
    r.mu_series = drift_series_monte_carlo(mu, S, n_max, samples, seed);
    r.nu_series = drift_series_monte_carlo(cc.nu, S, n_max, samples, seed + 1);
  }
  double factor = cc.factor.to_double();
  r.lhs = r.nu_series.drift_estimate;
  r.rhs = factor * r.mu_series.drift_estimate;
  r.lhs_stderr = r.nu_series.drift_stderr;
  r.rhs_stderr = factor * r.mu_series.drift_stderr;
  r.holds = r.lhs <= r.rhs + 3.0 * (r.lhs_stderr + r.rhs_stderr);
  return r;
}

void write_drift_csv(std::ostream& os, const DriftSeries& s) {
  os << "n,Ln,Ltilde,Ln_over_n,stderr\n";
  os.precision(17);
  for (int n = 1; n <= s.n_max; ++n) {
    os << n << ',' << s.Ln[n] << ',' << s.Ltilde[n] << ',' << s.Ln_over_n[n]
       << ',' << (s.stderrs.empty() ? 0.0 : s.stderrs[n]) << '\n';
  }
}

}  // namespace cat0lab
