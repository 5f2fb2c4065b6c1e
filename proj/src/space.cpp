#include "cat0lab/space.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "cat0lab/errors.hpp"

namespace cat0lab {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- euclidean

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double euc_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ------------------------------------------------------- hyperbolic plane
// Hyperboloid model X0^2 - X1^2 - X2^2 = 1, X0 > 0, with the upper
// half-plane chart (x, y) -> ((x^2+y^2+1)/2y, x/y, (x^2+y^2-1)/2y).
// cosh d(X, Y) = <X, Y> for the (+,-,-) Minkowski form; exp/log are the
// standard hyperboloid maps used by the Karcher iteration and geodesics.

struct HVec {
  double a = 1.0, b = 0.0, c = 0.0;
};

HVec to_hyp(const H2Point& p) {
  double s = p.x * p.x + p.y * p.y;
  return {(s + 1.0) / (2.0 * p.y), p.x / p.y, (s - 1.0) / (2.0 * p.y)};
}

H2Point from_hyp(const HVec& X) {
  double y = 1.0 / (X.a - X.c);
  return {X.b * y, y};
}

double mink(const HVec& u, const HVec& v) {
  return u.a * v.a - u.b * v.b - u.c * v.c;
}

HVec axpy(double s, const HVec& u, const HVec& v) {  // s*u + v
  return {s * u.a + v.a, s * u.b + v.b, s * u.c + v.c};
}

HVec scale(double s, const HVec& u) { return {s * u.a, s * u.b, s * u.c}; }

double h2_dist(const H2Point& z, const H2Point& w) {
  double dx = z.x - w.x, dy = z.y - w.y;
  return std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * z.y * w.y));
}

/// Tangent vector at p pointing to q with |v| = d(p, q).
HVec h2_log(const HVec& p, const HVec& q) {
  double c = std::max(1.0, mink(p, q));
  double d = std::acosh(c);
  if (d < 1e-15) return {0.0, 0.0, 0.0};
  double s = std::sqrt(c * c - 1.0);
  return scale(d / s, axpy(-c, p, q));
}

HVec h2_exp(const HVec& p, const HVec& v) {
  double n2 = -mink(v, v);  // tangent vectors are spacelike
  if (n2 <= 0.0) return p;
  double n = std::sqrt(n2);
  return axpy(std::sinh(n) / n, v, scale(std::cosh(n), p));
}

}  // namespace

// ----------------------------------------------------------- construction

std::shared_ptr<const Space> Space::euclidean(int dim) {
  if (dim < 1) throw DomainError("euclidean: dim must be >= 1");
  auto s = std::shared_ptr<Space>(new Space());
  s->kind_ = SpaceKind::euclidean;
  s->dim_ = dim;
  return s;
}

std::shared_ptr<const Space> Space::tree(int n_vertices,
                                         std::vector<TreeEdge> edges) {
  if (n_vertices < 2) throw DomainError("tree: need at least 2 vertices");
  if (static_cast<int>(edges.size()) != n_vertices - 1)
    throw DomainError("tree: a tree on n vertices has n-1 edges");
  for (const auto& e : edges) {
    if (e.u < 0 || e.u >= n_vertices || e.v < 0 || e.v >= n_vertices ||
        e.u == e.v)
      throw DomainError("tree: bad edge endpoints");
    if (!(e.length > 0.0)) throw DomainError("tree: edge lengths must be > 0");
  }
  auto s = std::shared_ptr<Space>(new Space());
  s->kind_ = SpaceKind::tree;
  s->n_vertices_ = n_vertices;
  s->edges_ = std::move(edges);

  // Adjacency + connectivity; acyclic follows from |E| = n-1 + connected.
  std::vector<std::vector<std::pair<int, int>>> adj(n_vertices);  // (to, edge)
  s->edge_index_.assign(n_vertices, std::vector<int>(n_vertices, -1));
  for (int i = 0; i < static_cast<int>(s->edges_.size()); ++i) {
    const auto& e = s->edges_[i];
    if (s->edge_index_[e.u][e.v] != -1)
      throw DomainError("tree: duplicate edge");
    adj[e.u].push_back({e.v, i});
    adj[e.v].push_back({e.u, i});
    s->edge_index_[e.u][e.v] = s->edge_index_[e.v][e.u] = i;
  }
  s->vdist_.assign(n_vertices, std::vector<double>(n_vertices, 0.0));
  s->vnext_.assign(n_vertices, std::vector<int>(n_vertices, -1));
  for (int r = 0; r < n_vertices; ++r) {
    std::vector<int> stack{r}, parent(n_vertices, -2);
    parent[r] = -1;
    int seen = 0;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      ++seen;
      for (auto [v, ei] : adj[u])
        if (parent[v] == -2) {
          parent[v] = u;
          s->vdist_[r][v] = s->vdist_[r][u] + s->edges_[ei].length;
          stack.push_back(v);
        }
    }
    if (seen != n_vertices) throw DomainError("tree: not connected");
    for (int v = 0; v < n_vertices; ++v) {
      if (v == r) {
        s->vnext_[r][v] = r;
        continue;
      }
      int x = v;
      while (parent[x] != r) x = parent[x];
      s->vnext_[r][v] = x;
    }
  }
  return s;
}

std::shared_ptr<const Space> Space::hyperbolic_plane() {
  auto s = std::shared_ptr<Space>(new Space());
  s->kind_ = SpaceKind::hyperbolic;
  return s;
}

std::shared_ptr<const Space> Space::product(
    std::vector<std::shared_ptr<const Space>> factors) {
  if (factors.size() < 2) throw DomainError("product: need >= 2 factors");
  for (const auto& f : factors)
    if (!f) throw DomainError("product: null factor");
  auto s = std::shared_ptr<Space>(new Space());
  s->kind_ = SpaceKind::product;
  s->factors_ = std::move(factors);
  return s;
}

std::shared_ptr<const Space> Space::rescaled(std::shared_ptr<const Space> base,
                                             double lambda) {
  if (!base) throw DomainError("rescaled: null base");
  if (!(lambda > 0.0)) throw DomainError("rescaled: lambda must be > 0");
  auto s = std::shared_ptr<Space>(new Space());
  s->kind_ = SpaceKind::rescaled;
  s->base_ = std::move(base);
  s->lambda_ = lambda;
  return s;
}

std::shared_ptr<const Space> Space::rescale(double lambda) const {
  if (kind_ == SpaceKind::rescaled)
    return rescaled(base_, lambda_ * lambda);
  return rescaled(shared_from_this(), lambda);
}

// ------------------------------------------------------------- validation

namespace {

const Vec& as_euc(const Point& p) {
  if (auto* v = std::get_if<Vec>(&p.rep)) return *v;
  throw DomainError("point does not belong to this euclidean space");
}
const TreePoint& as_tree(const Point& p) {
  if (auto* v = std::get_if<TreePoint>(&p.rep)) return *v;
  throw DomainError("point does not belong to this tree");
}
const H2Point& as_h2(const Point& p) {
  if (auto* v = std::get_if<H2Point>(&p.rep)) return *v;
  throw DomainError("point does not belong to the hyperbolic plane");
}
const std::vector<Point>& as_prod(const Point& p) {
  if (auto* v = std::get_if<std::vector<Point>>(&p.rep)) return *v;
  throw DomainError("point does not belong to this product space");
}

}  // namespace

void Space::validate_point(const Point& p) const {
  switch (kind_) {
    case SpaceKind::euclidean:
      if (static_cast<int>(as_euc(p).size()) != dim_)
        throw DomainError("euclidean point: wrong dimension");
      return;
    case SpaceKind::tree: {
      const auto& t = as_tree(p);
      if (t.edge < 0 || t.edge >= static_cast<int>(edges_.size()))
        throw DomainError("tree point: bad edge id");
      if (!(t.offset >= 0.0) || t.offset > edges_[t.edge].length)
        throw DomainError("tree point: offset outside the edge");
      return;
    }
    case SpaceKind::hyperbolic:
      if (!(as_h2(p).y > 0.0))
        throw DomainError("hyperbolic point: y must be > 0");
      return;
    case SpaceKind::product: {
      const auto& parts = as_prod(p);
      if (parts.size() != factors_.size())
        throw DomainError("product point: wrong number of factors");
      for (std::size_t i = 0; i < parts.size(); ++i)
        factors_[i]->validate_point(parts[i]);
      return;
    }
    case SpaceKind::rescaled:
      base_->validate_point(p);
      return;
  }
}

// ------------------------------------------------------------- tree basics

Point Space::tree_vertex(int v) const {
  if (kind_ != SpaceKind::tree) throw DomainError("tree_vertex: not a tree");
  if (v < 0 || v >= n_vertices_) throw DomainError("tree_vertex: bad vertex");
  for (int i = 0; i < static_cast<int>(edges_.size()); ++i) {
    if (edges_[i].u == v) return Point{TreePoint{i, 0.0}};
    if (edges_[i].v == v) return Point{TreePoint{i, edges_[i].length}};
  }
  throw DomainError("tree_vertex: isolated vertex");  // unreachable: connected
}

double Space::tree_vertex_distance(int u, int v) const {
  if (kind_ != SpaceKind::tree) throw DomainError("not a tree");
  return vdist_[u][v];
}

std::optional<int> Space::tree_vertex_of(const Point& p) const {
  const auto& t = as_tree(p);
  const auto& e = edges_[t.edge];
  if (t.offset == 0.0) return e.u;
  if (t.offset == e.length) return e.v;
  return std::nullopt;
}

namespace {

/// Distance from a tree point to a vertex.
double tree_point_vertex_dist(const Space& s, const TreePoint& p, int v) {
  const TreeEdge& e = s.edges()[p.edge];
  return std::min(p.offset + s.tree_vertex_distance(e.u, v),
                  e.length - p.offset + s.tree_vertex_distance(e.v, v));
}

double tree_dist(const Space& s, const TreePoint& p, const TreePoint& q) {
  if (p.edge == q.edge) return std::abs(p.offset - q.offset);
  const TreeEdge& e = s.edges()[p.edge];
  double du = p.offset, dv = e.length - p.offset;
  const TreeEdge& f = s.edges()[q.edge];
  double best = du + s.tree_vertex_distance(e.u, f.u) + q.offset;
  best = std::min(best,
                  du + s.tree_vertex_distance(e.u, f.v) + f.length - q.offset);
  best = std::min(best, dv + s.tree_vertex_distance(e.v, f.u) + q.offset);
  best = std::min(best,
                  dv + s.tree_vertex_distance(e.v, f.v) + f.length - q.offset);
  return best;
}

}  // namespace

// ---------------------------------------------------------------- distance

double Space::distance(const Point& x, const Point& y) const {
  switch (kind_) {
    case SpaceKind::euclidean:
      return euc_dist(as_euc(x), as_euc(y));
    case SpaceKind::tree:
      return tree_dist(*this, as_tree(x), as_tree(y));
    case SpaceKind::hyperbolic:
      return h2_dist(as_h2(x), as_h2(y));
    case SpaceKind::product: {
      const auto& a = as_prod(x);
      const auto& b = as_prod(y);
      if (a.size() != factors_.size() || b.size() != factors_.size())
        throw DomainError("product point: wrong number of factors");
      double s = 0.0;
      for (std::size_t i = 0; i < factors_.size(); ++i) {
        double d = factors_[i]->distance(a[i], b[i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
    case SpaceKind::rescaled:
      return lambda_ * base_->distance(x, y);
  }
  throw DomainError("unreachable");
}

// ---------------------------------------------------------------- geodesic

Point Space::geodesic_point(const Point& x, const Point& y, double t) const {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("geodesic_point: t must lie in [0,1]");
  switch (kind_) {
    case SpaceKind::euclidean: {
      const Vec& a = as_euc(x);
      const Vec& b = as_euc(y);
      Vec r(a.size());
      for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + t * (b[i] - a[i]);
      return Point{std::move(r)};
    }
    case SpaceKind::hyperbolic: {
      HVec p = to_hyp(as_h2(x));
      HVec v = h2_log(p, to_hyp(as_h2(y)));
      return Point{from_hyp(h2_exp(p, scale(t, v)))};
    }
    case SpaceKind::product: {
      const auto& a = as_prod(x);
      const auto& b = as_prod(y);
      std::vector<Point> r;
      r.reserve(factors_.size());
      for (std::size_t i = 0; i < factors_.size(); ++i)
        r.push_back(factors_[i]->geodesic_point(a[i], b[i], t));
      return Point{std::move(r)};
    }
    case SpaceKind::rescaled:
      return base_->geodesic_point(x, y, t);
    case SpaceKind::tree:
      break;
  }

  // Tree: walk arclength t*d(x,y) along the (unique) path.
  const TreePoint& p = as_tree(x);
  const TreePoint& q = as_tree(y);
  double d = tree_dist(*this, p, q);
  double s = t * d;
  if (d == 0.0) return x;
  if (p.edge == q.edge) {
    double off = p.offset + (q.offset > p.offset ? s : -s);
    return Point{TreePoint{p.edge, std::clamp(off, 0.0, edges_[p.edge].length)}};
  }
  // Gate vertices: the exit vertex from p's edge and entry vertex to q's.
  const TreeEdge& e = edges_[p.edge];
  const TreeEdge& f = edges_[q.edge];
  int a_best = e.u, b_best = f.u;
  double best = std::numeric_limits<double>::infinity();
  for (int a : {e.u, e.v})
    for (int b : {f.u, f.v}) {
      double alpha = (a == e.u) ? p.offset : e.length - p.offset;
      double beta = (b == f.u) ? q.offset : f.length - q.offset;
      double total = alpha + vdist_[a][b] + beta;
      if (total < best - 1e-15) {
        best = total;
        a_best = a;
        b_best = b;
      }
    }
  double alpha = (a_best == e.u) ? p.offset : e.length - p.offset;
  if (s <= alpha) {
    double off = p.offset + (a_best == e.u ? -s : s);
    return Point{TreePoint{p.edge, std::clamp(off, 0.0, e.length)}};
  }
  s -= alpha;
  int c = a_best;
  while (c != b_best) {
    int nxt = vnext_[c][b_best];
    int ei = edge_index_[c][nxt];
    double L = edges_[ei].length;
    if (s <= L) {
      double off = (c == edges_[ei].u) ? s : L - s;
      return Point{TreePoint{ei, std::clamp(off, 0.0, L)}};
    }
    s -= L;
    c = nxt;
  }
  double off = (b_best == f.u) ? s : f.length - s;
  return Point{TreePoint{q.edge, std::clamp(off, 0.0, f.length)}};
}

// -------------------------------------------------------------- barycenter

namespace {

void validate_weights(const WeightedPointSet& ws) {
  if (ws.points.empty() || ws.points.size() != ws.weights.size())
    throw DomainError("barycenter: bad weighted point set");
  double total = 0.0;
  for (double w : ws.weights) {
    if (!(w >= 0.0)) throw DomainError("barycenter: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("barycenter: weights must sum to 1");
}

/// Exact per-edge minimization: on each edge the objective is piecewise
/// quadratic in the offset with breakpoints where a point's two routes to
/// the edge tie; minimize each quadratic piece in closed form.
Point tree_barycenter(const Space& s, const WeightedPointSet& ws) {
  double best_f = std::numeric_limits<double>::infinity();
  TreePoint best{0, 0.0};
  for (int ei = 0; ei < static_cast<int>(s.edges().size()); ++ei) {
    const TreeEdge& e = s.edges()[ei];
    double L = e.length;
    std::vector<double> cuts{0.0, L};
    struct Term {
      double w;
      bool same;        // point lies on this edge
      double t_i;       // same-edge offset
      double Du, Dv;    // distances to the edge endpoints otherwise
    };
    std::vector<Term> terms;
    for (std::size_t i = 0; i < ws.points.size(); ++i) {
      if (ws.weights[i] == 0.0) continue;
      const TreePoint& x = std::get<TreePoint>(ws.points[i].rep);
      Term t;
      t.w = ws.weights[i];
      t.same = (x.edge == ei);
      if (t.same) {
        t.t_i = x.offset;
        cuts.push_back(x.offset);
      } else {
        t.Du = tree_point_vertex_dist(s, x, e.u);
        t.Dv = tree_point_vertex_dist(s, x, e.v);
        double cross = (t.Dv + L - t.Du) / 2.0;
        if (cross > 0.0 && cross < L) cuts.push_back(cross);
      }
      terms.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      double t0 = cuts[k], t1 = cuts[k + 1];
      if (t1 <= t0) continue;
      double mid = (t0 + t1) / 2.0;
      // f(t) = sum w (c + s t)^2 on this piece
      double A = 0.0, B = 0.0, C = 0.0;
      for (const auto& tm : terms) {
        double c, sg;
        if (tm.same) {
          if (mid >= tm.t_i) {
            sg = 1.0;
            c = -tm.t_i;
          } else {
            sg = -1.0;
            c = tm.t_i;
          }
        } else if (tm.Du + mid <= tm.Dv + L - mid) {
          sg = 1.0;
          c = tm.Du;
        } else {
          sg = -1.0;
          c = tm.Dv + L;
        }
        A += tm.w;
        B += tm.w * c * sg;
        C += tm.w * c * c;
      }
      double tstar = std::clamp(A > 0.0 ? -B / A : t0, t0, t1);
      double f = A * tstar * tstar + 2.0 * B * tstar + C;
      if (f < best_f) {
        best_f = f;
        best = TreePoint{ei, tstar};
      }
    }
  }
  return Point{best};
}

}  // namespace

Point Space::barycenter(const WeightedPointSet& ws, double tol,
                        int max_iter) const {
  validate_weights(ws);
  for (const auto& p : ws.points) validate_point(p);
  switch (kind_) {
    case SpaceKind::euclidean: {
      Vec mean(dim_, 0.0);
      for (std::size_t i = 0; i < ws.points.size(); ++i) {
        const Vec& x = as_euc(ws.points[i]);
        for (int k = 0; k < dim_; ++k) mean[k] += ws.weights[i] * x[k];
      }
      return Point{std::move(mean)};
    }
    case SpaceKind::tree:
      return tree_barycenter(*this, ws);
    case SpaceKind::hyperbolic: {
      // Karcher fixed point: y <- exp_y(sum_i alpha_i log_y x_i).
      std::vector<HVec> xs;
      xs.reserve(ws.points.size());
      for (const auto& p : ws.points) xs.push_back(to_hyp(as_h2(p)));
      HVec y = xs[0];
      double residual = 0.0;
      double best_residual = std::numeric_limits<double>::infinity();
      int stalled = 0;
      for (int it = 0; it < max_iter; ++it) {
        HVec v{0.0, 0.0, 0.0};
        // Hessian of d(x,.)^2/2 has top eigenvalue d*coth(d) in curvature -1;
        // damp by the weighted bound so the fixed step cannot overshoot.
        double lip = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          HVec g = h2_log(y, xs[i]);
          double d = std::sqrt(std::max(0.0, -mink(g, g)));
          lip += ws.weights[i] * (d < 1e-9 ? 1.0 : d / std::tanh(d));
          v = axpy(1.0, scale(ws.weights[i], g), v);
        }
        residual = std::sqrt(std::max(0.0, -mink(v, v)));
        if (residual <= tol) return Point{from_hyp(y)};
        // acosh near 1 floors the attainable residual at ~sqrt(eps); accept
        // a tiny stalled residual instead of spinning to the cap.
        if (residual < 0.9 * best_residual) {
          best_residual = residual;
          stalled = 0;
        } else if (++stalled >= 20 && residual < 1e-7) {
          return Point{from_hyp(y)};
        }
        y = h2_exp(y, scale(1.0 / std::max(1.0, lip), v));
        // renormalize onto the hyperboloid against fp drift
        double n = std::sqrt(std::max(1e-300, mink(y, y)));
        y = scale(1.0 / n, y);
      }
      throw ConvergenceError("barycenter: Karcher iteration cap hit", residual);
    }
    case SpaceKind::product: {
      std::vector<Point> out;
      out.reserve(factors_.size());
      for (std::size_t f = 0; f < factors_.size(); ++f) {
        WeightedPointSet sub;
        sub.weights = ws.weights;
        for (const auto& p : ws.points) sub.points.push_back(as_prod(p)[f]);
        out.push_back(factors_[f]->barycenter(sub, tol, max_iter));
      }
      return Point{std::move(out)};
    }
    case SpaceKind::rescaled:
      // argmin of sum w d^2 is invariant under scaling d by lambda
      return base_->barycenter(ws, tol, max_iter);
  }
  throw DomainError("unreachable");
}

// ------------------------------------------------------------ circumcenter

std::pair<Point, double> Space::circumcenter(const std::vector<Point>& points,
                                             double tol) const {
  if (points.empty()) throw DomainError("circumcenter: empty point set");
  for (const auto& p : points) validate_point(p);
  if (kind_ == SpaceKind::rescaled) {
    auto [c, r] = base_->circumcenter(points, tol / lambda_);
    return {c, lambda_ * r};
  }

  auto radius_at = [&](const Point& y) {
    double r = 0.0;
    for (const auto& p : points) r = std::max(r, distance(y, p));
    return r;
  };

  if (kind_ == SpaceKind::tree) {
    // 0-hyperbolic: the midpoint of a diametral pair is the circumcenter.
    std::size_t bi = 0, bj = 0;
    double diam = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j) {
        double d = distance(points[i], points[j]);
        if (d > diam) {
          diam = d;
          bi = i;
          bj = j;
        }
      }
    Point c = geodesic_point(points[bi], points[bj], 0.5);
    return {c, radius_at(c)};
  }

  const std::size_t m = points.size();
  std::vector<double> w(m), d(m);
  WeightedPointSet ws;
  ws.points = points;
  ws.weights.assign(m, 1.0 / static_cast<double>(m));
  Point y = barycenter(ws, 1e-12);
  Point best_y = y;
  double best_r = radius_at(y);
  double R0 = best_r;
  if (R0 < 1e-14) return {y, 0.0};

  // Annealed softmax surrogate: Frechet mean with weights
  // w_i ~ exp(beta d_i)/d_i, whose fixed point is a stationary point of the
  // smoothed radius (1/beta) log sum exp(beta d_i); beta doubles per stage.
  for (double beta = 4.0 / R0; beta <= 2.0e8 / R0; beta *= 2.0) {
    for (int it = 0; it < 40; ++it) {
      double dmax = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        d[i] = distance(y, points[i]);
        dmax = std::max(dmax, d[i]);
      }
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        w[i] = std::exp(beta * (d[i] - dmax)) / std::max(d[i], 0.05 * dmax);
        total += w[i];
      }
      for (auto& wi : w) wi /= total;
      ws.weights = w;
      Point z = barycenter(ws, 1e-11 * std::max(1.0, R0));
      Point ynew = geodesic_point(y, z, 0.7);
      double step = distance(y, ynew);
      y = ynew;
      double r = radius_at(y);
      if (r < best_r) {
        best_r = r;
        best_y = y;
      }
      if (step < 1e-13 * R0) break;
    }
  }

  // Polish: fixed-fraction farthest-point stepping (accepted
  // unconditionally, tracking the best true radius), fraction halving.
  y = best_y;
  for (double eta = 0.05; eta > 1e-10; eta *= 0.5) {
    for (int it = 0; it < 60; ++it) {
      std::size_t far = 0;
      double dmax = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double di = distance(y, points[i]);
        if (di > dmax) {
          dmax = di;
          far = i;
        }
      }
      y = geodesic_point(y, points[far], eta);
      double r = radius_at(y);
      if (r < best_r) {
        best_r = r;
        best_y = y;
      }
    }
    y = best_y;
  }
  return {best_y, best_r};
}

// ---------------------------------------------------------------- busemann

double Space::busemann_value(const BusemannDirection& xi, const Point& x,
                             const Point& y) const {
  switch (kind_) {
    case SpaceKind::euclidean: {
      const auto* dir = std::get_if<BusemannDirection::Euclidean>(&xi.rep);
      if (!dir) throw DomainError("busemann: direction kind mismatch");
      Vec u = dir->direction;
      double n = std::sqrt(dot(u, u));
      if (!(n > 0.0)) throw DomainError("busemann: zero direction");
      if (static_cast<int>(u.size()) != dim_)
        throw DomainError("busemann: direction dimension mismatch");
      for (auto& c : u) c /= n;
      const Vec& a = as_euc(x);
      const Vec& b = as_euc(y);
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) s += (b[k] - a[k]) * u[k];
      return s;
    }
    case SpaceKind::hyperbolic: {
      const auto* dir = std::get_if<BusemannDirection::Hyperbolic>(&xi.rep);
      if (!dir) throw DomainError("busemann: direction kind mismatch");
      const H2Point& a = as_h2(x);
      const H2Point& b = as_h2(y);
      if (!dir->xi) return std::log(b.y / a.y);
      // Send xi to infinity with T z = -1/(z - xi); Im T z = Im z/|z - xi|^2.
      double q = *dir->xi;
      double na = (a.x - q) * (a.x - q) + a.y * a.y;
      double nb = (b.x - q) * (b.x - q) + b.y * b.y;
      return std::log((b.y / nb) / (a.y / na));
    }
    case SpaceKind::tree: {
      const auto* dir = std::get_if<BusemannDirection::Tree>(&xi.rep);
      if (!dir) throw DomainError("busemann: direction kind mismatch");
      if (dir->vertex < 0 || dir->vertex >= n_vertices_)
        throw DomainError("busemann: bad tree vertex");
      return tree_point_vertex_dist(*this, as_tree(x), dir->vertex) -
             tree_point_vertex_dist(*this, as_tree(y), dir->vertex);
    }
    case SpaceKind::product: {
      const auto* dir = std::get_if<BusemannDirection::Product>(&xi.rep);
      if (!dir) throw DomainError("busemann: direction kind mismatch");
      if (dir->directions.size() != factors_.size() ||
          dir->weights.size() != factors_.size())
        throw DomainError("busemann: product direction arity mismatch");
      double n2 = 0.0;
      for (double wi : dir->weights) n2 += wi * wi;
      if (!(n2 > 0.0)) throw DomainError("busemann: zero direction");
      double n = std::sqrt(n2);
      const auto& a = as_prod(x);
      const auto& b = as_prod(y);
      double s = 0.0;
      for (std::size_t i = 0; i < factors_.size(); ++i)
        s += (dir->weights[i] / n) *
             factors_[i]->busemann_value(dir->directions[i], a[i], b[i]);
      return s;
    }
    case SpaceKind::rescaled:
      return lambda_ * base_->busemann_value(xi, x, y);
  }
  throw DomainError("unreachable");
}

Point Space::ray_point(const BusemannDirection& xi, double t) const {
  if (!(t >= 0.0)) throw DomainError("ray_point: t must be >= 0");
  switch (kind_) {
    case SpaceKind::euclidean: {
      const auto& dir = std::get<BusemannDirection::Euclidean>(xi.rep);
      Vec u = dir.direction;
      double n = std::sqrt(dot(u, u));
      Vec p(dim_, 0.0);
      for (int k = 0; k < dim_; ++k) p[k] = t * u[k] / n;
      return Point{std::move(p)};
    }
    case SpaceKind::hyperbolic: {
      const auto& dir = std::get<BusemannDirection::Hyperbolic>(xi.rep);
      if (!dir.xi) return Point{H2Point{0.0, std::exp(t)}};
      return Point{H2Point{*dir.xi, std::exp(-t)}};
    }
    case SpaceKind::tree: {
      const auto& dir = std::get<BusemannDirection::Tree>(xi.rep);
      // Start at the vertex farthest from w and walk toward w.
      int w = dir.vertex;
      int start = 0;
      for (int v = 0; v < n_vertices_; ++v)
        if (vdist_[w][v] > vdist_[w][start]) start = v;
      double total = vdist_[w][start];
      if (t > total)
        throw DomainError("ray_point: finite tree ray exhausted");
      return geodesic_point(tree_vertex(start), tree_vertex(w),
                            total > 0.0 ? t / total : 0.0);
    }
    case SpaceKind::product: {
      const auto& dir = std::get<BusemannDirection::Product>(xi.rep);
      double n2 = 0.0;
      for (double wi : dir.weights) n2 += wi * wi;
      double n = std::sqrt(n2);
      std::vector<Point> parts;
      for (std::size_t i = 0; i < factors_.size(); ++i)
        parts.push_back(
            factors_[i]->ray_point(dir.directions[i], t * dir.weights[i] / n));
      return Point{std::move(parts)};
    }
    case SpaceKind::rescaled:
      return base_->ray_point(xi, t / lambda_);
  }
  throw DomainError("unreachable");
}

// ------------------------------------------------------ simplex degeneracy

bool Space::simplex_is_degenerate(const std::vector<Point>& points, double tol,
                                  int grid) const {
  if (points.empty() || grid < 2)
    throw DomainError("simplex_is_degenerate: bad arguments");
  const std::size_t k = points.size();
  // Count C(grid + k - 1, k - 1) weight vectors; keep it desk-scale.
  double count = 1.0;
  for (std::size_t i = 1; i < k; ++i)
    count *= static_cast<double>(grid + i) / static_cast<double>(i);
  if (count > 2e6)
    throw ResourceError("simplex_is_degenerate: sampling budget exceeded");

  std::vector<Point> interior, boundary;
  WeightedPointSet ws;
  ws.points = points;
  ws.weights.assign(k, 0.0);
  auto emit = [&](const std::vector<int>& c) {
    bool inter = true;
    for (std::size_t i = 0; i < k; ++i) {
      ws.weights[i] = static_cast<double>(c[i]) / grid;
      if (c[i] == 0) inter = false;
    }
    Point b = barycenter(ws, 1e-11);
    (inter ? interior : boundary).push_back(std::move(b));
  };
  // Enumerate compositions of `grid` into k nonnegative parts.
  std::vector<int> c(k, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int r) {
    if (i + 1 == k) {
      c[i] = r;
      emit(c);
      return;
    }
    for (int v = 0; v <= r; ++v) {
      c[i] = v;
      rec(i + 1, r - v);
    }
  };
  rec(0, grid);

  for (const auto& p : interior) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& q : boundary) nearest = std::min(nearest, distance(p, q));
    if (nearest > tol) return false;
  }
  return true;
}

// ------------------------------------------------------------ random points

Point Space::random_point(std::mt19937_64& rng, double scale) const {
  std::normal_distribution<double> g(0.0, 1.0);
  switch (kind_) {
    case SpaceKind::euclidean: {
      Vec p(dim_);
      for (auto& c : p) c = scale * g(rng);
      return Point{std::move(p)};
    }
    case SpaceKind::tree: {
      std::uniform_int_distribution<int> pick(
          0, static_cast<int>(edges_.size()) - 1);
      int e = pick(rng);
      std::uniform_real_distribution<double> off(0.0, edges_[e].length);
      return Point{TreePoint{e, off(rng)}};
    }
    case SpaceKind::hyperbolic:
      return Point{H2Point{scale * g(rng), std::exp(scale * g(rng))}};
    case SpaceKind::product: {
      std::vector<Point> parts;
      for (const auto& f : factors_) parts.push_back(f->random_point(rng, scale));
      return Point{std::move(parts)};
    }
    case SpaceKind::rescaled:
      return base_->random_point(rng, scale);
  }
  throw DomainError("unreachable");
}

// ------------------------------------------------------------------- JSON

std::shared_ptr<const Space> Space::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw SchemaError("space: expected an object with 'kind'");
  std::string kind = j.at("kind").get<std::string>();
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, val] : j.items()) {
      (void)val;
      bool ok = false;
      for (const char* a : allowed) ok |= (key == a);
      if (!ok) throw SchemaError("space: unknown key '" + key + "'");
    }
  };
  if (kind == "euclidean") {
    check_keys({"kind", "dim"});
    return euclidean(j.at("dim").get<int>());
  }
  if (kind == "tree") {
    check_keys({"kind", "vertices", "edges"});
    std::vector<TreeEdge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3)
        throw SchemaError("space: tree edge must be [u, v, length]");
      edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    return tree(j.at("vertices").get<int>(), std::move(edges));
  }
  if (kind == "hyperbolic") {
    check_keys({"kind"});
    return hyperbolic_plane();
  }
  if (kind == "product") {
    check_keys({"kind", "factors"});
    std::vector<std::shared_ptr<const Space>> fs;
    for (const auto& f : j.at("factors")) fs.push_back(from_json(f));
    return product(std::move(fs));
  }
  if (kind == "rescaled") {
    check_keys({"kind", "base", "lambda"});
    return rescaled(from_json(j.at("base")), j.at("lambda").get<double>());
  }
  throw SchemaError("space: unknown kind '" + kind + "'");
}

json Space::descriptor() const {
  switch (kind_) {
    case SpaceKind::euclidean:
      return json{{"kind", "euclidean"}, {"dim", dim_}};
    case SpaceKind::tree: {
      json edges = json::array();
      for (const auto& e : edges_)
        edges.push_back(json::array({e.u, e.v, e.length}));
      return json{{"kind", "tree"}, {"vertices", n_vertices_}, {"edges", edges}};
    }
    case SpaceKind::hyperbolic:
      return json{{"kind", "hyperbolic"}};
    case SpaceKind::product: {
      json fs = json::array();
      for (const auto& f : factors_) fs.push_back(f->descriptor());
      return json{{"kind", "product"}, {"factors", fs}};
    }
    case SpaceKind::rescaled:
      return json{{"kind", "rescaled"},
                  {"base", base_->descriptor()},
                  {"lambda", lambda_}};
  }
  throw DomainError("unreachable");
}

Point Space::point_from_json(const json& j) const {
  switch (kind_) {
    case SpaceKind::euclidean: {
      if (!j.is_array()) throw SchemaError("point: expected an array");
      Point p{j.get<Vec>()};
      validate_point(p);
      return p;
    }
    case SpaceKind::tree: {
      if (j.is_object() && j.contains("vertex"))
        return tree_vertex(j.at("vertex").get<int>());
      if (!j.is_object() || !j.contains("edge") || !j.contains("offset"))
        throw SchemaError("point: expected {edge, offset} or {vertex}");
      Point p{TreePoint{j.at("edge").get<int>(), j.at("offset").get<double>()}};
      validate_point(p);
      return p;
    }
    case SpaceKind::hyperbolic: {
      if (!j.is_object() || !j.contains("x") || !j.contains("y"))
        throw SchemaError("point: expected {x, y}");
      Point p{H2Point{j.at("x").get<double>(), j.at("y").get<double>()}};
      validate_point(p);
      return p;
    }
    case SpaceKind::product: {
      if (!j.is_array() || j.size() != factors_.size())
        throw SchemaError("point: expected one entry per factor");
      std::vector<Point> parts;
      for (std::size_t i = 0; i < factors_.size(); ++i)
        parts.push_back(factors_[i]->point_from_json(j[i]));
      return Point{std::move(parts)};
    }
    case SpaceKind::rescaled:
      return base_->point_from_json(j);
  }
  throw SchemaError("unreachable");
}

json Space::point_to_json(const Point& p) const {
  switch (kind_) {
    case SpaceKind::euclidean:
      return as_euc(p);
    case SpaceKind::tree: {
      const auto& t = as_tree(p);
      return json{{"edge", t.edge}, {"offset", t.offset}};
    }
    case SpaceKind::hyperbolic: {
      const auto& z = as_h2(p);
      return json{{"x", z.x}, {"y", z.y}};
    }
    case SpaceKind::product: {
      json parts = json::array();
      const auto& xs = as_prod(p);
      for (std::size_t i = 0; i < factors_.size(); ++i)
        parts.push_back(factors_[i]->point_to_json(xs[i]));
      return parts;
    }
    case SpaceKind::rescaled:
      return base_->point_to_json(p);
  }
  throw DomainError("unreachable");
}

BusemannDirection Space::direction_from_json(const json& j) const {
  switch (kind_) {
    case SpaceKind::euclidean: {
      if (!j.is_object() || !j.contains("direction"))
        throw SchemaError("direction: expected {direction: [...]}");
      return BusemannDirection{
          BusemannDirection::Euclidean{j.at("direction").get<Vec>()}};
    }
    case SpaceKind::hyperbolic: {
      if (!j.is_object() || !j.contains("xi"))
        throw SchemaError("direction: expected {xi: real | \"inf\"}");
      const auto& x = j.at("xi");
      if (x.is_string() && x.get<std::string>() == "inf")
        return BusemannDirection{BusemannDirection::Hyperbolic{std::nullopt}};
      return BusemannDirection{
          BusemannDirection::Hyperbolic{x.get<double>()}};
    }
    case SpaceKind::tree: {
      if (!j.is_object() || !j.contains("vertex"))
        throw SchemaError("direction: expected {vertex: id}");
      return BusemannDirection{
          BusemannDirection::Tree{j.at("vertex").get<int>()}};
    }
    case SpaceKind::product: {
      if (!j.is_object() || !j.contains("directions") ||
          !j.contains("weights"))
        throw SchemaError("direction: expected {directions, weights}");
      BusemannDirection::Product d;
      const auto& ds = j.at("directions");
      if (!ds.is_array() || ds.size() != factors_.size())
        throw SchemaError("direction: one entry per factor required");
      for (std::size_t i = 0; i < factors_.size(); ++i)
        d.directions.push_back(factors_[i]->direction_from_json(ds[i]));
      d.weights = j.at("weights").get<std::vector<double>>();
      if (d.weights.size() != factors_.size())
        throw SchemaError("direction: one weight per factor required");
      return BusemannDirection{std::move(d)};
    }
    case SpaceKind::rescaled:
      return base_->direction_from_json(j);
  }
  throw SchemaError("unreachable");
}

bool points_equal(const Space& s, const Point& a, const Point& b, double tol) {
  return s.distance(a, b) <= tol;
}

}  // namespace cat0lab
