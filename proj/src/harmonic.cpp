#include "cat0lab/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cat0lab/errors.hpp"

namespace cat0lab {
namespace {

// precomputed isometries for the support of a measure / a generating set
struct OrbitStencil {
  std::vector<Isometry> isos;
  std::vector<double> weights;  // empty for generating sets
};

OrbitStencil stencil_of_measure(const IsometricAction& a,
                                const FiniteSupportMeasure& mu) {
  if (mu.group_ptr().get() != a.group_ptr().get())
    throw DomainError("measure group does not match the action");
  OrbitStencil st;
  for (const auto& e : mu.entries()) {
    st.isos.push_back(a.isometry_of(a.group().element_from_key(e.key)));
    st.weights.push_back(e.weight.to_double());
  }
  return st;
}

OrbitStencil stencil_of_set(const IsometricAction& a, const GeneratingSet& S) {
  OrbitStencil st;
  for (const auto& g : S.elements) st.isos.push_back(a.isometry_of(g));
  return st;
}

double stencil_displacement(const Space& s, const OrbitStencil& st,
                            const Point& x) {
  double d = 0.0;
  for (const auto& f : st.isos)
    d = std::max(d, s.distance(x, apply_isometry(s, f, x)));
  return d;
}

double stencil_energy(const Space& s, const OrbitStencil& st, const Point& x) {
  double e = 0.0;
  for (std::size_t i = 0; i < st.isos.size(); ++i) {
    double d = s.distance(x, apply_isometry(s, st.isos[i], x));
    e += st.weights[i] * d * d;
  }
  return e;
}

}  // namespace

double displacement(const IsometricAction& action, const Point& x,
                    const GeneratingSet& S) {
  if (S.elements.empty()) throw DomainError("displacement: empty generating set");
  return stencil_displacement(action.space(), stencil_of_set(action, S), x);
}

EnergyReport energy(const IsometricAction& action,
                    const FiniteSupportMeasure& mu, const Point& basepoint,
                    const std::string& truncation_note) {
  OrbitStencil st = stencil_of_measure(action, mu);
  const Space& s = action.space();
  EnergyReport r;
  r.basepoint = basepoint;
  r.energy = stencil_energy(s, st, basepoint);
  double min_w = std::numeric_limits<double>::infinity();
  for (double w : st.weights) min_w = std::min(min_w, w);
  double delta = stencil_displacement(s, st, basepoint);
  r.lower_bound = delta * delta * min_w;
  r.truncation_note = truncation_note;
  return r;
}

std::string to_string(MinimizeStatus s) {
  switch (s) {
    case MinimizeStatus::converged: return "converged";
    case MinimizeStatus::converged_flat: return "converged_flat";
    case MinimizeStatus::escaped: return "escaped";
    case MinimizeStatus::iteration_capped: return "iteration_capped";
  }
  return "?";
}

MinimizeResult minimize_energy(const IsometricAction& action,
                               const FiniteSupportMeasure& mu,
                               const Point& start,
                               const MinimizeOptions& opts) {
  if (!(opts.tol >= 0.0)) throw DomainError("minimize_energy: tol must be >= 0");
  if (!(opts.theta > 0.0 && opts.theta <= 1.0))
    throw DomainError("minimize_energy: theta must be in (0, 1]");
  const Space& s = action.space();
  s.validate_point(start);
  OrbitStencil st = stencil_of_measure(action, mu);

  double delta0 = stencil_displacement(s, st, start);
  double escape_r = opts.escape_radius.value_or(1e3 * delta0);
  double theta = opts.theta;

  MinimizeResult res;
  Point x = start;
  double e = stencil_energy(s, st, x);
  const double e0 = e;
  res.energy_trace.push_back(e);
  if (opts.record_iterates) res.iterate_trace.push_back(x);
  res.status = MinimizeStatus::iteration_capped;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    WeightedPointSet ws;
    ws.weights = st.weights;
    for (const auto& f : st.isos) ws.points.push_back(apply_isometry(s, f, x));
    Point y = s.barycenter(ws);
    double resid = s.distance(x, y);
    if (resid <= opts.tol) {
      bool flat = e > 1e-18 && e0 - e <= 1e-12 * (1.0 + e0);
      res.status = flat ? MinimizeStatus::converged_flat : MinimizeStatus::converged;
      break;
    }
    Point xn = theta >= 1.0 ? y : s.geodesic_point(x, y, theta);
    double en = stencil_energy(s, st, xn);
    if (en > e + 1e-15 * (1.0 + std::abs(e))) {
      theta *= 0.5;
      if (theta < 1e-12) break;  // cannot make progress; report capped
      continue;
    }
    x = std::move(xn);
    e = en;
    res.iterations = iter + 1;
    res.energy_trace.push_back(e);
    if (opts.record_iterates) res.iterate_trace.push_back(x);
    if (s.distance(start, x) > escape_r && e < e0) {
      res.status = MinimizeStatus::escaped;
      break;
    }
  }

  res.map = EquivariantMap{action, x};
  res.report = energy(action, mu, x);
  return res;
}

// ---------------------------------------------------------------- shalom

std::string to_string(ShalomOutcome o) {
  switch (o) {
    case ShalomOutcome::certificate: return "certificate";
    case ShalomOutcome::fixed_point: return "fixed_point";
    case ShalomOutcome::delta_bounded_below: return "delta_bounded_below";
    case ShalomOutcome::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// a point of B(center, r), biased toward the vicinity of x
Point random_in_ball(const Space& s, const Point& center, double r,
                     const Point& x, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int tries = 0; tries < 16; ++tries) {
    Point y = s.random_point(rng, 1.0 + r);
    Point from = unif(rng) < 0.5 ? x : center;
    double d = s.distance(from, y);
    if (d < 1e-12) continue;
    Point z = s.geodesic_point(from, y, std::min(1.0, unif(rng) * r / d));
    if (s.distance(center, z) <= r) return z;
  }
  return center;
}

Point clamp_to_ball(const Space& s, const Point& center, double r,
                    const Point& x) {
  double d = s.distance(center, x);
  if (d <= r) return x;
  return s.geodesic_point(center, x, r / d);
}

struct BallSearch {
  Point best;
  double best_delta = std::numeric_limits<double>::infinity();
  std::int64_t evals = 0;
};

// multi-start descent of delta restricted to B(center, r)
BallSearch search_ball(const Space& s, const OrbitStencil& st,
                       const Point& center, double r, double target,
                       const ShalomOptions& opts, std::mt19937_64& rng) {
  BallSearch out;
  out.best = center;
  out.best_delta = stencil_displacement(s, st, center);
  ++out.evals;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int start_i = 0; start_i < opts.starts; ++start_i) {
    Point x = start_i == 0 ? center : random_in_ball(s, center, r, center, rng);
    double dx = stencil_displacement(s, st, x);
    ++out.evals;
    double eta = 0.5;
    for (int step = 0; step < opts.steps_per_start; ++step) {
      Point cand;
      if (step % 2 == 0) {
        // pull toward the orbit barycenter, then clamp into the ball
        WeightedPointSet ws;
        ws.weights.assign(st.isos.size(), 1.0 / st.isos.size());
        for (const auto& f : st.isos)
          ws.points.push_back(apply_isometry(s, f, x));
        cand = clamp_to_ball(s, center, r, s.barycenter(ws));
        cand = s.geodesic_point(x, cand, std::min(1.0, eta * 2.0));
        cand = clamp_to_ball(s, center, r, cand);
      } else {
        cand = random_in_ball(s, center, r, x, rng);
        cand = s.geodesic_point(x, cand, eta);
        cand = clamp_to_ball(s, center, r, cand);
      }
      double dc = stencil_displacement(s, st, cand);
      ++out.evals;
      if (dc < dx) {
        x = std::move(cand);
        dx = dc;
      } else {
        eta *= 0.8;
      }
      if (dx < out.best_delta) {
        out.best = x;
        out.best_delta = dx;
      }
      if (dx <= target) return out;
    }
    if (out.best_delta <= target) return out;
  }
  return out;
}

}  // namespace

ShalomResult shalom_search(const IsometricAction& action,
                           const GeneratingSet& S, int n, const Point& start,
                           const ShalomOptions& opts) {
  if (n < 1) throw DomainError("shalom_search: n must be positive");
  const Space& s = action.space();
  s.validate_point(start);
  OrbitStencil st = stencil_of_set(action, S);
  std::mt19937_64 rng(opts.seed);
  std::int64_t evals = 0;

  ShalomResult res;

  // delta-infimum estimate: energy descent with the uniform measure on S,
  // tracking the displacement along the iterates
  FiniteSupportMeasure uni =
      FiniteSupportMeasure::uniform(action.group_ptr(), S.elements);
  MinimizeOptions mo;
  mo.tol = opts.fixed_point_tol * 0.1;
  mo.max_iter = 20'000;
  mo.escape_radius = std::numeric_limits<double>::infinity();
  mo.record_iterates = true;
  MinimizeResult mr = minimize_energy(action, uni, start, mo);

  double target1 = 1.0 / (2.0 * n);
  res.delta_infimum = std::numeric_limits<double>::infinity();
  res.delta_argmin = start;
  std::optional<Point> w1;
  Point prev = start;
  for (const Point& x : mr.iterate_trace) {
    double d = stencil_displacement(s, st, x);
    evals++;
    if (d < res.delta_infimum) {
      res.delta_infimum = d;
      res.delta_argmin = x;
    }
    if (!w1 && d <= target1) {
      // bisect back toward the previous iterate so delta(w1) sits just
      // under the target (keeps the certificate point canonical)
      Point lo = x;
      if (s.distance(prev, x) > 1e-15) {
        Point hi = prev;  // delta(hi) > target1 unless x was the first iterate
        for (int b = 0; b < 40; ++b) {
          Point mid = s.geodesic_point(lo, hi, 0.5);
          double dm = stencil_displacement(s, st, mid);
          evals++;
          if (dm <= target1)
            lo = mid;
          else
            hi = mid;
          if (stencil_displacement(s, st, lo) > 0.98 * target1) break;
        }
      }
      w1 = lo;
    }
    prev = x;
    if (res.delta_infimum <= opts.fixed_point_tol) {
      res.outcome = ShalomOutcome::fixed_point;
      res.fixed_point = res.delta_argmin;
      return res;
    }
  }

  if (!w1) {
    res.outcome = ShalomOutcome::delta_bounded_below;
    res.note = "initial descent never reached delta <= 1/(2n)";
    return res;
  }

  Point w = *w1;
  double dw = stencil_displacement(s, st, w);
  for (int k = 1; k <= opts.max_levels; ++k) {
    double r = std::ldexp(1.0, -k);  // 2^-k
    double target = 1.0 / (std::ldexp(2.0, k) * n);  // 1/(2^{k+1} n)
    BallSearch bs = search_ball(s, st, w, r, target, opts, rng);
    evals += bs.evals;
    if (bs.best_delta <= target) {
      w = bs.best;
      dw = bs.best_delta;
      if (dw < res.delta_infimum) {
        res.delta_infimum = dw;
        res.delta_argmin = w;
      }
      if (dw <= opts.fixed_point_tol) {
        res.outcome = ShalomOutcome::fixed_point;
        res.fixed_point = w;
        return res;
      }
    } else {
      ShalomCertificate cert;
      cert.n = n;
      cert.v_n = w;
      cert.r_n = r;
      cert.delta_at_vn = dw;
      cert.sampled_min_delta_in_ball = bs.best_delta;
      cert.sample_count = static_cast<int>(bs.evals);
      res.outcome = ShalomOutcome::certificate;
      res.certificate = cert;
      return res;
    }
    if (evals > opts.eval_budget) {
      res.outcome = ShalomOutcome::inconclusive;
      res.note = "evaluation budget exhausted at level " + std::to_string(k);
      return res;
    }
  }
  res.outcome = ShalomOutcome::inconclusive;
  res.note = "halving level limit reached";
  return res;
}

// ------------------------------------------------------------ fixed point

FixedPointResult fixed_point_search(const IsometricAction& action,
                                    const FiniteSupportMeasure& mu,
                                    const GeneratingSet& S, const Point& start,
                                    const FixedPointOptions& opts) {
  const Space& s = action.space();
  s.validate_point(start);
  OrbitStencil st = stencil_of_set(action, S);

  MinimizeResult mr = minimize_energy(action, mu, start, opts.minimize);
  const Point& x = mr.map.basepoint;
  double delta_start = stencil_displacement(s, st, start);
  double delta_x = stencil_displacement(s, st, x);

  FixedPointResult res;
  res.minimize_status = mr.status;
  res.energy_infimum = mr.report.energy;
  res.delta_infimum = std::min(delta_start, delta_x);
  res.point = x;

  // finite orbit sample of the start under a word-metric ball
  WordMetricBall ball = action.group().ball(opts.orbit_radius, S);
  auto orbit_of = [&](const Point& p) {
    std::vector<Point> orb;
    orb.reserve(ball.size());
    for (const auto& e : ball.entries) orb.push_back(action.apply(e.element, p));
    return orb;
  };

  if (mr.status == MinimizeStatus::converged &&
      mr.report.energy < opts.tol * opts.tol) {
    // circumcenter polish recovers exact centers (e.g. tree vertices)
    std::vector<Point> orb = orbit_of(start);
    auto [c, radius] = s.circumcenter(orb);
    double delta_c = stencil_displacement(s, st, c);
    res.found = true;
    if (delta_c <= std::min(delta_x, opts.tol)) {
      res.point = c;
      res.note = "energy minimum polished by orbit circumcenter";
    } else {
      res.note = "energy minimum below tolerance";
    }
    res.delta_infimum = std::min(res.delta_infimum,
                                 stencil_displacement(s, st, res.point));
    return res;
  }

  std::vector<Point> orb = orbit_of(x);
  double diam = 0.0;
  for (std::size_t i = 0; i < orb.size(); ++i)
    for (std::size_t j = i + 1; j < orb.size(); ++j)
      diam = std::max(diam, s.distance(orb[i], orb[j]));
  double cap = opts.orbit_diameter_cap.value_or(1e3 * (1.0 + delta_start));
  if (diam <= cap) {
    auto [c, radius] = s.circumcenter(orb);
    double delta_c = stencil_displacement(s, st, c);
    res.delta_infimum = std::min(res.delta_infimum, delta_c);
    if (delta_c < opts.tol) {
      res.found = true;
      res.point = c;
      res.note = "bounded orbit; circumcenter verified";
      return res;
    }
    res.note = "bounded orbit but circumcenter displacement " +
               std::to_string(delta_c) + " >= tol";
    return res;
  }
  res.note = "orbit diameter " + std::to_string(diam) + " exceeds cap";
  return res;
}

// ------------------------------------------------------- horofunctions

double mu_laplacian(const std::function<double(const GroupElement&)>& u,
                    const FiniteSupportMeasure& mu, const GroupElement& g) {
  const Group& grp = mu.group();
  double acc = 0.0;
  for (const auto& e : mu.entries()) {
    GroupElement h = grp.element_from_key(e.key);
    acc += e.weight.to_double() * u(grp.multiply(g, h));
  }
  return u(g) - acc;
}

std::function<double(const GroupElement&)> pullback_horofunction(
    const EquivariantMap& f, const BusemannDirection& xi) {
  return [f, xi](const GroupElement& g) {
    return f.action.space().busemann_value(xi, f.at(g), f.basepoint);
  };
}

SubharmonicReport check_mu_subharmonic(
    const std::function<double(const GroupElement&)>& phi,
    const FiniteSupportMeasure& mu, const std::vector<GroupElement>& samples,
    double tol) {
  SubharmonicReport rep;
  rep.tol = tol;
  rep.sample_count = samples.size();
  rep.max_laplacian = -std::numeric_limits<double>::infinity();
  if (samples.empty()) throw DomainError("check_mu_subharmonic: no samples");
  for (const auto& g : samples)
    rep.max_laplacian = std::max(rep.max_laplacian, mu_laplacian(phi, mu, g));
  rep.pass = rep.max_laplacian <= tol;
  return rep;
}

}  // namespace cat0lab
