#include "cat0lab/group.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "grigorchuk_detail.hpp"

namespace cat0lab {

using json = nlohmann::json;

namespace {

std::int64_t mod_positive(std::int64_t x, std::int64_t m) {
  std::int64_t r = x % m;
  return r < 0 ? r + m : r;
}

std::string join_ints(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(v[i]);
  }
  return out;
}

std::string free_word_to_string(const FreeWord& w) {
  std::string out;
  out.reserve(w.letters.size());
  for (std::int16_t l : w.letters) {
    if (l > 0)
      out.push_back(static_cast<char>('a' + l - 1));
    else
      out.push_back(static_cast<char>('A' - l - 1));
  }
  return out;
}

FreeWord free_word_from_string(const std::string& s, int rank) {
  FreeWord w;
  w.letters.reserve(s.size());
  for (char c : s) {
    std::int16_t l;
    if (c >= 'a' && c < 'a' + rank)
      l = static_cast<std::int16_t>(c - 'a' + 1);
    else if (c >= 'A' && c < 'A' + rank)
      l = static_cast<std::int16_t>(-(c - 'A' + 1));
    else
      throw DomainError("free group word: invalid letter");
    if (!w.letters.empty() && w.letters.back() == -l)
      w.letters.pop_back();
    else
      w.letters.push_back(l);
  }
  return w;
}

// shortlex on serialized keys; used to fix BFS insertion order.
bool shortlex_less(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::optional<int> WordMetricBall::length_of(const std::string& key) const {
  if (!index_built_) {
    for (const auto& e : entries) index_.emplace(e.key, e.length);
    index_built_ = true;
  }
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Group::Group(GroupKind kind, int rank, std::int64_t order)
    : kind_(kind), rank_(rank), order_(order) {
  if (kind_ == GroupKind::grigorchuk) grig_ = std::make_unique<GrigorchukState>();
}

namespace {
void drop_bfs_state(const Group* g);
}

Group::~Group() { drop_bfs_state(this); }

std::shared_ptr<const Group> Group::lattice(int rank) {
  if (rank < 1) throw SchemaError("lattice: rank must be >= 1");
  return std::shared_ptr<const Group>(new Group(GroupKind::lattice, rank, 0));
}
std::shared_ptr<const Group> Group::free_group(int rank) {
  if (rank < 1 || rank > 26) throw SchemaError("free group: rank must be in 1..26");
  return std::shared_ptr<const Group>(new Group(GroupKind::free_group, rank, 0));
}
std::shared_ptr<const Group> Group::infinite_dihedral() {
  return std::shared_ptr<const Group>(new Group(GroupKind::dihedral_inf, 0, 0));
}
std::shared_ptr<const Group> Group::cyclic(std::int64_t order) {
  if (order < 1) throw SchemaError("cyclic: order must be >= 1");
  return std::shared_ptr<const Group>(new Group(GroupKind::cyclic, 0, order));
}
std::shared_ptr<const Group> Group::finite_dihedral(std::int64_t order) {
  if (order < 1) throw SchemaError("dihedral: order must be >= 1");
  return std::shared_ptr<const Group>(new Group(GroupKind::dihedral, 0, order));
}
std::shared_ptr<const Group> Group::grigorchuk() {
  return std::shared_ptr<const Group>(new Group(GroupKind::grigorchuk, 0, 0));
}

std::shared_ptr<const Group> Group::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw SchemaError("group descriptor: object with \"kind\" required");
  std::string kind = j.at("kind").get<std::string>();
  for (auto& [k, v] : j.items()) {
    if (k != "kind" && k != "rank" && k != "order")
      throw SchemaError("group descriptor: unknown key \"" + k + "\"");
  }
  if (kind == "lattice") return lattice(j.at("rank").get<int>());
  if (kind == "free") return free_group(j.at("rank").get<int>());
  if (kind == "dihedral_inf") return infinite_dihedral();
  if (kind == "cyclic") return cyclic(j.at("order").get<std::int64_t>());
  if (kind == "dihedral") return finite_dihedral(j.at("order").get<std::int64_t>());
  if (kind == "grigorchuk") return grigorchuk();
  throw SchemaError("group descriptor: unknown kind \"" + kind + "\"");
}

std::string Group::descriptor() const {
  switch (kind_) {
    case GroupKind::lattice: return "lattice(" + std::to_string(rank_) + ")";
    case GroupKind::free_group: return "free(" + std::to_string(rank_) + ")";
    case GroupKind::dihedral_inf: return "dihedral_inf";
    case GroupKind::cyclic: return "cyclic(" + std::to_string(order_) + ")";
    case GroupKind::dihedral: return "dihedral(" + std::to_string(order_) + ")";
    case GroupKind::grigorchuk: return "grigorchuk";
  }
  return "?";
}

void Group::check_mine(const GroupElement& g) const {
  if (g.group != this)
    throw DomainError("group element does not belong to this group");
}
void Group::check_same_group(const GroupElement& a, const GroupElement& b) const {
  check_mine(a);
  check_mine(b);
}

GroupElement Group::identity() const {
  switch (kind_) {
    case GroupKind::lattice:
      return {this, std::vector<std::int64_t>(rank_, 0)};
    case GroupKind::free_group:
      return {this, FreeWord{}};
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral:
      return {this, DihedralElem{}};
    case GroupKind::cyclic:
      return {this, std::int64_t{0}};
    case GroupKind::grigorchuk:
      return {this, GrigWord{}};
  }
  throw DomainError("unreachable");
}

GroupElement Group::multiply(const GroupElement& a, const GroupElement& b) const {
  check_same_group(a, b);
  switch (kind_) {
    case GroupKind::lattice: {
      const auto& x = std::get<std::vector<std::int64_t>>(a.rep);
      const auto& y = std::get<std::vector<std::int64_t>>(b.rep);
      std::vector<std::int64_t> z(rank_);
      for (int i = 0; i < rank_; ++i) z[i] = x[i] + y[i];
      return {this, std::move(z)};
    }
    case GroupKind::free_group: {
      const auto& x = std::get<FreeWord>(a.rep);
      const auto& y = std::get<FreeWord>(b.rep);
      FreeWord z = x;
      for (std::int16_t l : y.letters) {
        if (!z.letters.empty() && z.letters.back() == -l)
          z.letters.pop_back();
        else
          z.letters.push_back(l);
      }
      return {this, std::move(z)};
    }
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: {
      // (f1,s1)(f2,s2): x -> e1(e2 x + s2) + s1.
      const auto& x = std::get<DihedralElem>(a.rep);
      const auto& y = std::get<DihedralElem>(b.rep);
      DihedralElem z;
      z.flip = x.flip != y.flip;
      z.shift = x.shift + (x.flip ? -y.shift : y.shift);
      if (kind_ == GroupKind::dihedral) z.shift = mod_positive(z.shift, order_);
      return {this, z};
    }
    case GroupKind::cyclic: {
      std::int64_t z = mod_positive(std::get<std::int64_t>(a.rep) +
                                        std::get<std::int64_t>(b.rep),
                                    order_);
      return {this, z};
    }
    case GroupKind::grigorchuk: {
      const auto& x = std::get<GrigWord>(a.rep);
      const auto& y = std::get<GrigWord>(b.rep);
      return {this, GrigWord{grig::multiply(x.letters, y.letters)}};
    }
  }
  throw DomainError("unreachable");
}

GroupElement Group::inverse(const GroupElement& g) const {
  check_mine(g);
  switch (kind_) {
    case GroupKind::lattice: {
      auto x = std::get<std::vector<std::int64_t>>(g.rep);
      for (auto& v : x) v = -v;
      return {this, std::move(x)};
    }
    case GroupKind::free_group: {
      const auto& x = std::get<FreeWord>(g.rep);
      FreeWord z;
      z.letters.reserve(x.letters.size());
      for (auto it = x.letters.rbegin(); it != x.letters.rend(); ++it)
        z.letters.push_back(static_cast<std::int16_t>(-*it));
      return {this, std::move(z)};
    }
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: {
      const auto& x = std::get<DihedralElem>(g.rep);
      DihedralElem z{x.flip, x.flip ? x.shift : -x.shift};
      if (kind_ == GroupKind::dihedral) z.shift = mod_positive(z.shift, order_);
      return {this, z};
    }
    case GroupKind::cyclic:
      return {this, mod_positive(-std::get<std::int64_t>(g.rep), order_)};
    case GroupKind::grigorchuk: {
      const auto& x = std::get<GrigWord>(g.rep);
      return {this, GrigWord{grig::inverse(x.letters)}};
    }
  }
  throw DomainError("unreachable");
}

bool Group::is_identity(const GroupElement& g) const {
  check_mine(g);
  if (kind_ == GroupKind::grigorchuk)
    return grig::is_trivial(std::get<GrigWord>(g.rep).letters);
  return equal(g, identity());
}

bool Group::equal(const GroupElement& a, const GroupElement& b) const {
  check_same_group(a, b);
  if (kind_ == GroupKind::grigorchuk)
    return grig::words_equal(std::get<GrigWord>(a.rep).letters,
                             std::get<GrigWord>(b.rep).letters);
  return a.rep == b.rep;
}

std::string Group::canonical_key(const GroupElement& g) const {
  check_mine(g);
  switch (kind_) {
    case GroupKind::lattice:
      return join_ints(std::get<std::vector<std::int64_t>>(g.rep));
    case GroupKind::free_group:
      return free_word_to_string(std::get<FreeWord>(g.rep));
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: {
      const auto& x = std::get<DihedralElem>(g.rep);
      return (x.flip ? "f" : "t") + std::to_string(x.shift);
    }
    case GroupKind::cyclic:
      return std::to_string(std::get<std::int64_t>(g.rep));
    case GroupKind::grigorchuk:
      return grig_->table.canonicalize(std::get<GrigWord>(g.rep).letters);
  }
  throw DomainError("unreachable");
}

GroupElement Group::element_from_key(const std::string& key) const {
  switch (kind_) {
    case GroupKind::lattice: {
      std::vector<std::int64_t> v;
      std::size_t pos = 0;
      while (pos <= key.size()) {
        std::size_t comma = key.find(',', pos);
        std::string tok = key.substr(pos, comma == std::string::npos
                                              ? std::string::npos
                                              : comma - pos);
        v.push_back(std::stoll(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (static_cast<int>(v.size()) != rank_)
        throw DomainError("lattice key: wrong dimension");
      return {this, std::move(v)};
    }
    case GroupKind::free_group:
      return {this, free_word_from_string(key, rank_)};
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: {
      if (key.empty() || (key[0] != 't' && key[0] != 'f'))
        throw DomainError("dihedral key: expected t<shift> or f<shift>");
      DihedralElem e{key[0] == 'f', std::stoll(key.substr(1))};
      if (kind_ == GroupKind::dihedral) e.shift = mod_positive(e.shift, order_);
      return {this, e};
    }
    case GroupKind::cyclic:
      return {this, mod_positive(std::stoll(key), order_)};
    case GroupKind::grigorchuk:
      return {this, GrigWord{grig::reduce(key)}};
  }
  throw DomainError("unreachable");
}

GeneratingSet Group::standard_generators() const {
  GeneratingSet S;
  S.symmetric = true;
  switch (kind_) {
    case GroupKind::lattice:
      for (int i = 0; i < rank_; ++i) {
        std::vector<std::int64_t> v(rank_, 0);
        v[i] = 1;
        S.elements.push_back({this, v});
        v[i] = -1;
        S.elements.push_back({this, v});
      }
      break;
    case GroupKind::free_group:
      for (int i = 1; i <= rank_; ++i) {
        S.elements.push_back({this, FreeWord{{static_cast<std::int16_t>(i)}}});
        S.elements.push_back({this, FreeWord{{static_cast<std::int16_t>(-i)}}});
      }
      break;
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral:
      S.elements.push_back({this, DihedralElem{true, 0}});
      S.elements.push_back({this, DihedralElem{true, 1}});
      break;
    case GroupKind::cyclic:
      S.elements.push_back({this, std::int64_t{1}});
      if (order_ > 2) S.elements.push_back({this, order_ - 1});
      break;
    case GroupKind::grigorchuk:
      for (char c : {'a', 'b', 'c', 'd'})
        S.elements.push_back({this, GrigWord{std::string(1, c)}});
      break;
  }
  return S;
}

bool Group::is_standard_generating_set(const GeneratingSet& S) const {
  GeneratingSet std_set = standard_generators();
  if (S.elements.size() != std_set.elements.size()) return false;
  std::vector<std::string> a, b;
  for (const auto& g : S.elements) a.push_back(canonical_key(g));
  for (const auto& g : std_set.elements) b.push_back(canonical_key(g));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

namespace {

// Incremental BFS state, kept per (group, generating set) for reuse by
// word_length and ball.
struct BfsState {
  std::unordered_map<std::string, int> length;  // canonical key -> length
  std::vector<GroupElement> frontier;
  int radius = 0;
};

std::string generating_set_key(const Group& g, const GeneratingSet& S) {
  std::vector<std::string> keys;
  for (const auto& s : S.elements) keys.push_back(g.canonical_key(s));
  std::sort(keys.begin(), keys.end());
  std::string out;
  for (const auto& k : keys) {
    out += k;
    out.push_back('|');
  }
  return out;
}

struct BfsCache {
  std::mutex mu;
  std::unordered_map<const Group*, std::unordered_map<std::string, BfsState>> states;
};

BfsCache& bfs_cache() {
  static BfsCache* cache = new BfsCache;  // leaked; outlives all groups
  return *cache;
}

void drop_bfs_state(const Group* g) {
  std::lock_guard<std::mutex> lock(bfs_cache().mu);
  bfs_cache().states.erase(g);
}

void validate_generating_set(const Group& g, const GeneratingSet& S) {
  if (S.elements.empty()) throw DomainError("generating set: empty");
  for (const auto& s : S.elements) {
    if (g.is_identity(s))
      throw DomainError("generating set: contains the identity");
  }
  if (S.symmetric) {
    std::vector<std::string> keys;
    for (const auto& s : S.elements) keys.push_back(g.canonical_key(s));
    std::sort(keys.begin(), keys.end());
    for (const auto& s : S.elements) {
      std::string inv = g.canonical_key(g.inverse(s));
      if (!std::binary_search(keys.begin(), keys.end(), inv))
        throw DomainError("generating set: not closed under inverse");
    }
  }
}

// Grows st to the requested radius. Candidates of each new sphere are
// canonicalized in shortlex order of their raw serialization, which keeps
// Grigorchuk canonical words shortlex-minimal inside enumerated balls.
void bfs_extend(const Group& g, const GeneratingSet& S, BfsState& st, int radius,
                std::size_t element_budget) {
  if (st.radius == 0 && st.length.empty()) {
    GroupElement e = g.identity();
    st.length.emplace(g.canonical_key(e), 0);
    st.frontier.push_back(e);
  }
  while (st.radius < radius) {
    std::vector<GroupElement> candidates;
    candidates.reserve(st.frontier.size() * S.elements.size());
    for (const auto& x : st.frontier)
      for (const auto& s : S.elements) candidates.push_back(g.multiply(x, s));
    std::sort(candidates.begin(), candidates.end(),
              [&](const GroupElement& a, const GroupElement& b) {
                // Raw serialization, before any canonicalization.
                if (g.kind() == GroupKind::grigorchuk)
                  return shortlex_less(std::get<GrigWord>(a.rep).letters,
                                       std::get<GrigWord>(b.rep).letters);
                return false;  // keep generation order elsewhere
              });
    std::vector<GroupElement> next;
    for (auto& c : candidates) {
      std::string key = g.canonical_key(c);
      if (st.length.emplace(key, st.radius + 1).second) {
        if (st.length.size() > element_budget)
          throw ResourceError("ball enumeration: element budget exceeded");
        next.push_back(std::move(c));
      }
    }
    st.frontier = std::move(next);
    ++st.radius;
  }
}

std::string ball_cache_path(const std::string& dir, const Group& g,
                            const GeneratingSet& S, int radius) {
  std::string key = g.descriptor() + "#" + generating_set_key(g, S) + "#r" +
                    std::to_string(radius) + "#v1";
  std::size_t h = std::hash<std::string>{}(key);
  std::ostringstream name;
  name << "cat0lab-ball-" << std::hex << h << ".jsonl";
  return (std::filesystem::path(dir) / name.str()).string();
}

}  // namespace

WordMetricBall Group::ball(int radius, const GeneratingSet& S,
                           std::size_t element_budget,
                           const std::string& cache_dir) const {
  if (radius < 0) throw DomainError("ball: negative radius");
  validate_generating_set(*this, S);

  WordMetricBall out;
  out.radius = radius;

  if (!cache_dir.empty()) {
    std::string path = ball_cache_path(cache_dir, *this, S, radius);
    std::ifstream in(path);
    if (in) {
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        GroupElement e = element_from_key(j.at("w").get<std::string>());
        std::string key = canonical_key(e);
        out.entries.push_back({key, std::move(e), j.at("l").get<int>()});
      }
      return out;
    }
  }

  std::string skey = generating_set_key(*this, S);
  {
    std::lock_guard<std::mutex> lock(bfs_cache().mu);
    BfsState& st = bfs_cache().states[this][skey];
    bfs_extend(*this, S, st, radius, element_budget);
    for (const auto& [key, len] : st.length) {
      if (len <= radius)
        out.entries.push_back({key, element_from_key(key), len});
    }
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const WordMetricBall::Entry& a, const WordMetricBall::Entry& b) {
              if (a.length != b.length) return a.length < b.length;
              return shortlex_less(a.key, b.key);
            });

  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    std::string path = ball_cache_path(cache_dir, *this, S, radius);
    std::ofstream outf(path);
    for (const auto& e : out.entries) {
      json j{{"w", e.key}, {"l", e.length}};
      outf << j.dump() << "\n";
    }
  }
  return out;
}

std::optional<int> Group::closed_form_length(const GroupElement& g) const {
  switch (kind_) {
    case GroupKind::lattice: {
      const auto& x = std::get<std::vector<std::int64_t>>(g.rep);
      std::int64_t sum = 0;
      for (auto v : x) sum += v < 0 ? -v : v;
      return static_cast<int>(sum);
    }
    case GroupKind::free_group:
      return static_cast<int>(std::get<FreeWord>(g.rep).letters.size());
    case GroupKind::dihedral_inf: {
      const auto& x = std::get<DihedralElem>(g.rep);
      if (!x.flip) return static_cast<int>(2 * (x.shift < 0 ? -x.shift : x.shift));
      // reflections x -> -x + n: n >= 1 costs 2n-1, n <= 0 costs 2|n|+1
      return static_cast<int>(x.shift >= 1 ? 2 * x.shift - 1 : -2 * x.shift + 1);
    }
    case GroupKind::dihedral: {
      const auto& x = std::get<DihedralElem>(g.rep);
      std::int64_t n = x.shift;  // in [0, order)
      if (!x.flip) return static_cast<int>(2 * std::min(n, order_ - n));
      std::int64_t up = n >= 1 ? 2 * n - 1 : 1;
      std::int64_t down = 2 * (order_ - n) + 1;
      return static_cast<int>(std::min(up, down));
    }
    case GroupKind::cyclic: {
      std::int64_t k = std::get<std::int64_t>(g.rep);
      return static_cast<int>(std::min(k, order_ - k));
    }
    case GroupKind::grigorchuk:
      return std::nullopt;
  }
  return std::nullopt;
}

int Group::word_length(const GroupElement& g, const GeneratingSet& S,
                       int radius_cap) const {
  check_mine(g);
  if (is_standard_generating_set(S)) {
    if (auto len = closed_form_length(g)) return *len;
  }
  std::string key = canonical_key(g);
  std::string skey = generating_set_key(*this, S);
  std::lock_guard<std::mutex> lock(bfs_cache().mu);
  BfsState& st = bfs_cache().states[this][skey];
  if (st.length.empty()) bfs_extend(*this, S, st, 0, 1);
  for (;;) {
    auto it = st.length.find(key);
    if (it != st.length.end()) return it->second;
    if (st.radius >= radius_cap)
      throw RadiusExceededError(
          "word_length: element not within radius cap " + std::to_string(radius_cap),
          radius_cap);
    bfs_extend(*this, S, st, st.radius + 1, 50'000'000);
  }
}

std::optional<std::int64_t> Group::element_order(const GroupElement& g,
                                                 std::int64_t cap) const {
  check_mine(g);
  if (cap < 1) throw DomainError("element_order: cap must be >= 1");
  GroupElement p = g;
  for (std::int64_t n = 1; n <= cap; ++n) {
    if (is_identity(p)) return n;
    p = multiply(p, g);
  }
  return std::nullopt;
}

Group::WreathDecomposition Group::wreath_decompose(const GroupElement& g) const {
  check_mine(g);
  if (kind_ != GroupKind::grigorchuk)
    throw DomainError("wreath_decompose: only defined for the Grigorchuk group");
  grig::Sections s = grig::sections(std::get<GrigWord>(g.rep).letters);
  return {GroupElement{this, GrigWord{s.first}},
          GroupElement{this, GrigWord{s.second}}, s.swap};
}

std::optional<std::int64_t> Group::grigorchuk_order_recursive(
    const GroupElement& g, std::int64_t cap) const {
  check_mine(g);
  if (kind_ != GroupKind::grigorchuk)
    throw DomainError("grigorchuk_order_recursive: wrong group");
  return grig::recursive_order(std::get<GrigWord>(g.rep).letters, cap);
}

GroupElement element_from_json(const Group& g, const json& j) {
  switch (g.kind()) {
    case GroupKind::lattice: {
      auto v = j.get<std::vector<std::int64_t>>();
      if (static_cast<int>(v.size()) != g.rank())
        throw SchemaError("lattice element: wrong dimension");
      return {&g, std::move(v)};
    }
    case GroupKind::free_group:
      return {&g, free_word_from_string(j.get<std::string>(), g.rank())};
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: {
      DihedralElem e{j.at("flip").get<bool>(), j.at("shift").get<std::int64_t>()};
      if (g.kind() == GroupKind::dihedral)
        e.shift = mod_positive(e.shift, g.order_param());
      return {&g, e};
    }
    case GroupKind::cyclic:
      return {&g, mod_positive(j.get<std::int64_t>(), g.order_param())};
    case GroupKind::grigorchuk: {
      std::string w = j.get<std::string>();
      if (w == "e") w.clear();
      return {&g, GrigWord{grig::reduce(w)}};
    }
  }
  throw SchemaError("unreachable");
}

json element_to_json(const GroupElement& g) {
  switch (g.group->kind()) {
    case GroupKind::lattice:
      return std::get<std::vector<std::int64_t>>(g.rep);
    case GroupKind::free_group:
      return free_word_to_string(std::get<FreeWord>(g.rep));
    case GroupKind::dihedral_inf:
    case GroupKind::dihedral: {
      const auto& x = std::get<DihedralElem>(g.rep);
      return json{{"flip", x.flip}, {"shift", x.shift}};
    }
    case GroupKind::cyclic:
      return std::get<std::int64_t>(g.rep);
    case GroupKind::grigorchuk:
      return std::get<GrigWord>(g.rep).letters;
  }
  throw DomainError("unreachable");
}

}  // namespace cat0lab
