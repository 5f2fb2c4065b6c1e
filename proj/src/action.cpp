#include "cat0lab/action.hpp"

#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "cat0lab/errors.hpp"

namespace cat0lab {
namespace {

using json = nlohmann::json;
using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

// rescaled spaces share points and isometries with their base
const Space& core(const Space& s) {
  return s.kind() == SpaceKind::rescaled ? *s.base() : s;
}

Mat mat_identity(int n) {
  Mat m(n, Vec(n, 0.0));
  for (int i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

Vec matvec(const Mat& m, const Vec& v) {
  Vec out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  std::size_t n = a.size();
  Mat out(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

Mat transpose(const Mat& a) {
  std::size_t n = a.size();
  Mat out(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j][i] = a[i][j];
  return out;
}

int tree_edge_between(const Space& s, int a, int b) {
  const auto& es = s.edges();
  for (std::size_t i = 0; i < es.size(); ++i)
    if ((es[i].u == a && es[i].v == b) || (es[i].u == b && es[i].v == a))
      return static_cast<int>(i);
  return -1;
}

}  // namespace

Isometry identity_isometry(const Space& space) {
  const Space& s = core(space);
  switch (s.kind()) {
    case SpaceKind::euclidean:
      return Isometry{EuclideanIso{mat_identity(s.dim()), Vec(s.dim(), 0.0)}};
    case SpaceKind::hyperbolic:
      return Isometry{MobiusIso{}};
    case SpaceKind::tree: {
      TreeIso t;
      t.vertex_map.resize(s.vertex_count());
      for (int v = 0; v < s.vertex_count(); ++v) t.vertex_map[v] = v;
      return Isometry{std::move(t)};
    }
    case SpaceKind::product: {
      ProductIso p;
      for (const auto& f : s.factors()) p.factors.push_back(identity_isometry(*f));
      return Isometry{std::move(p)};
    }
    default:
      throw DomainError("identity_isometry: bad space kind");
  }
}

Isometry compose(const Space& space, const Isometry& f, const Isometry& g) {
  const Space& s = core(space);
  if (f.rep.index() != g.rep.index())
    throw DomainError("compose: mismatched isometry kinds");
  if (const auto* fe = std::get_if<EuclideanIso>(&f.rep)) {
    const auto& ge = std::get<EuclideanIso>(g.rep);
    EuclideanIso out;
    out.matrix = matmul(fe->matrix, ge.matrix);
    out.translation = matvec(fe->matrix, ge.translation);
    for (std::size_t i = 0; i < out.translation.size(); ++i)
      out.translation[i] += fe->translation[i];
    return Isometry{std::move(out)};
  }
  if (const auto* fm = std::get_if<MobiusIso>(&f.rep)) {
    const auto& gm = std::get<MobiusIso>(g.rep);
    return Isometry{MobiusIso{fm->a * gm.a + fm->b * gm.c,
                              fm->a * gm.b + fm->b * gm.d,
                              fm->c * gm.a + fm->d * gm.c,
                              fm->c * gm.b + fm->d * gm.d}};
  }
  if (const auto* ft = std::get_if<TreeIso>(&f.rep)) {
    const auto& gt = std::get<TreeIso>(g.rep);
    TreeIso out;
    out.vertex_map.resize(gt.vertex_map.size());
    for (std::size_t v = 0; v < gt.vertex_map.size(); ++v)
      out.vertex_map[v] = ft->vertex_map[gt.vertex_map[v]];
    return Isometry{std::move(out)};
  }
  const auto& fp = std::get<ProductIso>(f.rep);
  const auto& gp = std::get<ProductIso>(g.rep);
  if (fp.factors.size() != gp.factors.size())
    throw DomainError("compose: product arity mismatch");
  ProductIso out;
  for (std::size_t i = 0; i < fp.factors.size(); ++i)
    out.factors.push_back(compose(*s.factors()[i], fp.factors[i], gp.factors[i]));
  return Isometry{std::move(out)};
}

Isometry inverse_isometry(const Space& space, const Isometry& f) {
  const Space& s = core(space);
  if (const auto* fe = std::get_if<EuclideanIso>(&f.rep)) {
    EuclideanIso out;
    out.matrix = transpose(fe->matrix);  // orthogonal
    out.translation = matvec(out.matrix, fe->translation);
    for (auto& c : out.translation) c = -c;
    return Isometry{std::move(out)};
  }
  if (const auto* fm = std::get_if<MobiusIso>(&f.rep))
    return Isometry{MobiusIso{fm->d, -fm->b, -fm->c, fm->a}};
  if (const auto* ft = std::get_if<TreeIso>(&f.rep)) {
    TreeIso out;
    out.vertex_map.resize(ft->vertex_map.size());
    for (std::size_t v = 0; v < ft->vertex_map.size(); ++v)
      out.vertex_map[ft->vertex_map[v]] = static_cast<int>(v);
    return Isometry{std::move(out)};
  }
  const auto& fp = std::get<ProductIso>(f.rep);
  ProductIso out;
  for (std::size_t i = 0; i < fp.factors.size(); ++i)
    out.factors.push_back(inverse_isometry(*s.factors()[i], fp.factors[i]));
  return Isometry{std::move(out)};
}

Isometry isometry_power(const Space& space, const Isometry& f, std::int64_t n) {
  Isometry base = n < 0 ? inverse_isometry(space, f) : f;
  std::uint64_t e = n < 0 ? -static_cast<std::uint64_t>(n) : static_cast<std::uint64_t>(n);
  Isometry acc = identity_isometry(space);
  while (e > 0) {
    if (e & 1) acc = compose(space, acc, base);
    e >>= 1;
    if (e > 0) base = compose(space, base, base);
  }
  return acc;
}

Point apply_isometry(const Space& space, const Isometry& f, const Point& x) {
  const Space& s = core(space);
  if (const auto* fe = std::get_if<EuclideanIso>(&f.rep)) {
    const auto& v = std::get<Vec>(x.rep);
    Vec out = matvec(fe->matrix, v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += fe->translation[i];
    return Point{std::move(out)};
  }
  if (const auto* fm = std::get_if<MobiusIso>(&f.rep)) {
    const auto& z = std::get<H2Point>(x.rep);
    double cx = fm->c * z.x + fm->d, cy = fm->c * z.y;
    double denom = cx * cx + cy * cy;
    double wx = ((fm->a * z.x + fm->b) * cx + fm->a * fm->c * z.y * z.y) / denom;
    double wy = (fm->a * fm->d - fm->b * fm->c) * z.y / denom;
    return Point{H2Point{wx, wy}};
  }
  if (const auto* ft = std::get_if<TreeIso>(&f.rep)) {
    const auto& p = std::get<TreePoint>(x.rep);
    const TreeEdge& e = s.edges().at(p.edge);
    int a = ft->vertex_map.at(e.u), b = ft->vertex_map.at(e.v);
    int img = tree_edge_between(s, a, b);
    if (img < 0) throw DomainError("apply_isometry: image edge missing");
    const TreeEdge& ie = s.edges()[img];
    double off = ie.u == a ? p.offset : e.length - p.offset;
    return Point{TreePoint{img, off}};
  }
  const auto& fp = std::get<ProductIso>(f.rep);
  const auto& parts = std::get<std::vector<Point>>(x.rep);
  if (fp.factors.size() != parts.size())
    throw DomainError("apply_isometry: product arity mismatch");
  std::vector<Point> out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    out.push_back(apply_isometry(*s.factors()[i], fp.factors[i], parts[i]));
  return Point{std::move(out)};
}

void validate_isometry(const Space& space, const Isometry& f) {
  const Space& s = core(space);
  switch (s.kind()) {
    case SpaceKind::euclidean: {
      const auto* fe = std::get_if<EuclideanIso>(&f.rep);
      if (!fe) throw DomainError("validate_isometry: expected euclidean");
      std::size_t n = static_cast<std::size_t>(s.dim());
      if (fe->matrix.size() != n || fe->translation.size() != n)
        throw DomainError("validate_isometry: bad euclidean shape");
      for (const auto& row : fe->matrix)
        if (row.size() != n) throw DomainError("validate_isometry: bad matrix row");
      Mat qtq = matmul(transpose(fe->matrix), fe->matrix);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (std::abs(qtq[i][j] - (i == j ? 1.0 : 0.0)) > 1e-9)
            throw DomainError("validate_isometry: matrix not orthogonal");
      return;
    }
    case SpaceKind::hyperbolic: {
      const auto* fm = std::get_if<MobiusIso>(&f.rep);
      if (!fm) throw DomainError("validate_isometry: expected mobius");
      if (std::abs(fm->a * fm->d - fm->b * fm->c - 1.0) > 1e-9)
        throw DomainError("validate_isometry: ad - bc != 1");
      return;
    }
    case SpaceKind::tree: {
      const auto* ft = std::get_if<TreeIso>(&f.rep);
      if (!ft) throw DomainError("validate_isometry: expected tree");
      int n = s.vertex_count();
      if (static_cast<int>(ft->vertex_map.size()) != n)
        throw DomainError("validate_isometry: bad vertex_map size");
      std::vector<bool> seen(n, false);
      for (int img : ft->vertex_map) {
        if (img < 0 || img >= n || seen[img])
          throw DomainError("validate_isometry: vertex_map not a permutation");
        seen[img] = true;
      }
      for (const auto& e : s.edges()) {
        int img = tree_edge_between(s, ft->vertex_map[e.u], ft->vertex_map[e.v]);
        if (img < 0 || std::abs(s.edges()[img].length - e.length) > 1e-12)
          throw DomainError("validate_isometry: not a tree automorphism");
      }
      return;
    }
    case SpaceKind::product: {
      const auto* fp = std::get_if<ProductIso>(&f.rep);
      if (!fp) throw DomainError("validate_isometry: expected product");
      if (fp->factors.size() != s.factors().size())
        throw DomainError("validate_isometry: product arity mismatch");
      for (std::size_t i = 0; i < fp->factors.size(); ++i)
        validate_isometry(*s.factors()[i], fp->factors[i]);
      return;
    }
    default:
      throw DomainError("validate_isometry: bad space kind");
  }
}

namespace {

// equality up to tolerance; Mobius coefficients compare up to overall sign
bool iso_approx_equal(const Space& space, const Isometry& f, const Isometry& g,
                      double tol) {
  const Space& s = core(space);
  if (f.rep.index() != g.rep.index()) return false;
  if (const auto* fe = std::get_if<EuclideanIso>(&f.rep)) {
    const auto& ge = std::get<EuclideanIso>(g.rep);
    for (std::size_t i = 0; i < fe->matrix.size(); ++i)
      for (std::size_t j = 0; j < fe->matrix.size(); ++j)
        if (std::abs(fe->matrix[i][j] - ge.matrix[i][j]) > tol) return false;
    for (std::size_t i = 0; i < fe->translation.size(); ++i)
      if (std::abs(fe->translation[i] - ge.translation[i]) > tol) return false;
    return true;
  }
  if (const auto* fm = std::get_if<MobiusIso>(&f.rep)) {
    const auto& gm = std::get<MobiusIso>(g.rep);
    auto close = [&](double sign) {
      return std::abs(fm->a - sign * gm.a) <= tol &&
             std::abs(fm->b - sign * gm.b) <= tol &&
             std::abs(fm->c - sign * gm.c) <= tol &&
             std::abs(fm->d - sign * gm.d) <= tol;
    };
    return close(1.0) || close(-1.0);
  }
  if (const auto* ft = std::get_if<TreeIso>(&f.rep))
    return ft->vertex_map == std::get<TreeIso>(g.rep).vertex_map;
  const auto& fp = std::get<ProductIso>(f.rep);
  const auto& gp = std::get<ProductIso>(g.rep);
  for (std::size_t i = 0; i < fp.factors.size(); ++i)
    if (!iso_approx_equal(*s.factors()[i], fp.factors[i], gp.factors[i], tol))
      return false;
  return true;
}

std::size_t expected_image_count(const Group& g) {
  switch (g.kind()) {
    case GroupKind::lattice: return static_cast<std::size_t>(g.rank());
    case GroupKind::free_group: return static_cast<std::size_t>(g.rank());
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: return 2;
    case GroupKind::cyclic: return 1;
    case GroupKind::grigorchuk: return 4;
  }
  throw DomainError("expected_image_count: bad group kind");
}

}  // namespace

IsometricAction IsometricAction::from_images(std::shared_ptr<const Group> group,
                                             std::shared_ptr<const Space> space,
                                             std::vector<Isometry> images) {
  if (!group || !space) throw DomainError("IsometricAction: null group/space");
  if (images.size() != expected_image_count(*group))
    throw DomainError("IsometricAction: wrong number of generator images");
  for (const auto& f : images) validate_isometry(*space, f);

  const double tol = 1e-9;
  Isometry id = identity_isometry(*space);
  switch (group->kind()) {
    case GroupKind::lattice:
      for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
          if (!iso_approx_equal(*space, compose(*space, images[i], images[j]),
                                compose(*space, images[j], images[i]), tol))
            throw DomainError("IsometricAction: lattice images must commute");
      break;
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral:
      for (const auto& f : images)
        if (!iso_approx_equal(*space, compose(*space, f, f), id, tol))
          throw DomainError("IsometricAction: dihedral images must be involutions");
      if (group->kind() == GroupKind::dihedral) {
        Isometry t = compose(*space, images[1], images[0]);
        if (!iso_approx_equal(*space, isometry_power(*space, t, group->order_param()),
                              id, tol))
          throw DomainError("IsometricAction: rotation order relation violated");
      }
      break;
    case GroupKind::cyclic:
      if (!iso_approx_equal(*space,
                            isometry_power(*space, images[0], group->order_param()),
                            id, tol))
        throw DomainError("IsometricAction: cyclic order relation violated");
      break;
    case GroupKind::free_group:
    case GroupKind::grigorchuk:
      break;  // free: nothing to check; grigorchuk: caller's responsibility
  }

  IsometricAction a;
  a.group_ = std::move(group);
  a.space_ = std::move(space);
  a.images_ = std::move(images);
  return a;
}

Isometry IsometricAction::isometry_of(const GroupElement& g) const {
  if (g.group != group_.get())
    throw DomainError("isometry_of: element from a different group");
  const Space& s = *space_;
  if (const auto* v = std::get_if<std::vector<std::int64_t>>(&g.rep)) {
    Isometry acc = identity_isometry(s);
    for (std::size_t i = 0; i < v->size(); ++i)
      if ((*v)[i] != 0)
        acc = compose(s, acc, isometry_power(s, images_[i], (*v)[i]));
    return acc;
  }
  if (const auto* w = std::get_if<FreeWord>(&g.rep)) {
    Isometry acc = identity_isometry(s);
    for (std::int16_t l : w->letters) {
      const Isometry& gen = images_[static_cast<std::size_t>(std::abs(l)) - 1];
      acc = compose(s, acc, l > 0 ? gen : inverse_isometry(s, gen));
    }
    return acc;
  }
  if (const auto* d = std::get_if<DihedralElem>(&g.rep)) {
    Isometry t = compose(s, images_[1], images_[0]);  // translation x -> x+1
    Isometry acc = isometry_power(s, t, d->shift);
    if (d->flip) acc = compose(s, acc, images_[0]);
    return acc;
  }
  if (const auto* k = std::get_if<std::int64_t>(&g.rep))
    return isometry_power(s, images_[0], *k);
  const auto& w = std::get<GrigWord>(g.rep);
  Isometry acc = identity_isometry(s);
  for (char c : w.letters)
    acc = compose(s, acc, images_[static_cast<std::size_t>(c - 'a')]);
  return acc;
}

Point IsometricAction::apply(const GroupElement& g, const Point& x) const {
  space_->validate_point(x);
  return apply_isometry(*space_, isometry_of(g), x);
}

IsometricAction IsometricAction::rescaled(double lambda) const {
  return from_images(group_, space_->rescale(lambda), images_);
}

// ------------------------------------------------------------------- JSON

Isometry isometry_from_json(const Space& space, const nlohmann::json& j) {
  const Space& s = core(space);
  if (!j.is_object() || !j.contains("kind"))
    throw SchemaError("isometry: expected object with \"kind\"");
  std::string kind = j.at("kind").get<std::string>();
  Isometry f;
  if (kind == "euclidean") {
    EuclideanIso e;
    e.matrix = j.at("matrix").get<Mat>();
    e.translation = j.at("translation").get<Vec>();
    f.rep = std::move(e);
  } else if (kind == "mobius") {
    f.rep = MobiusIso{j.at("a").get<double>(), j.at("b").get<double>(),
                      j.at("c").get<double>(), j.at("d").get<double>()};
  } else if (kind == "tree") {
    f.rep = TreeIso{j.at("perm").get<std::vector<int>>()};
  } else if (kind == "product") {
    ProductIso p;
    const auto& arr = j.at("factors");
    if (!arr.is_array() || arr.size() != s.factors().size())
      throw SchemaError("isometry: bad product factors");
    for (std::size_t i = 0; i < arr.size(); ++i)
      p.factors.push_back(isometry_from_json(*s.factors()[i], arr[i]));
    f.rep = std::move(p);
  } else {
    throw SchemaError("isometry: unknown kind " + kind);
  }
  validate_isometry(s, f);
  return f;
}

nlohmann::json isometry_to_json(const Space& space, const Isometry& f) {
  const Space& s = core(space);
  if (const auto* fe = std::get_if<EuclideanIso>(&f.rep))
    return json{{"kind", "euclidean"},
                {"matrix", fe->matrix},
                {"translation", fe->translation}};
  if (const auto* fm = std::get_if<MobiusIso>(&f.rep))
    return json{{"kind", "mobius"},
                {"a", fm->a}, {"b", fm->b}, {"c", fm->c}, {"d", fm->d}};
  if (const auto* ft = std::get_if<TreeIso>(&f.rep))
    return json{{"kind", "tree"}, {"perm", ft->vertex_map}};
  const auto& fp = std::get<ProductIso>(f.rep);
  json arr = json::array();
  for (std::size_t i = 0; i < fp.factors.size(); ++i)
    arr.push_back(isometry_to_json(*s.factors()[i], fp.factors[i]));
  return json{{"kind", "product"}, {"factors", arr}};
}

IsometricAction IsometricAction::from_json(std::shared_ptr<const Group> group,
                                           std::shared_ptr<const Space> space,
                                           const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("images"))
    throw SchemaError("action: expected object with \"images\"");
  std::vector<Isometry> images;
  for (const auto& ij : j.at("images"))
    images.push_back(isometry_from_json(*space, ij));
  return from_images(std::move(group), std::move(space), std::move(images));
}

nlohmann::json IsometricAction::to_json() const {
  json arr = json::array();
  for (const auto& f : images_) arr.push_back(isometry_to_json(*space_, f));
  return json{{"group", group_->descriptor()},
              {"space", space_->descriptor()},
              {"images", arr}};
}

}  // namespace cat0lab
