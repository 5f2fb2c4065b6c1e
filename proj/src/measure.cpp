#include "cat0lab/measure.hpp"

#include <algorithm>
#include <charconv>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

#include "cat0lab/errors.hpp"

namespace cat0lab {

using nlohmann::json;

namespace {

Rational sum_weights(const std::vector<FiniteSupportMeasure::Entry>& entries) {
  Rational total(0);
  for (const auto& e : entries) total = total + e.weight;
  return total;
}

/// Collapse duplicate keys in a (key, weight) list: sort + merge adjacent.
std::vector<FiniteSupportMeasure::Entry> accumulate_entries(
    std::vector<FiniteSupportMeasure::Entry> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  std::vector<FiniteSupportMeasure::Entry> out;
  out.reserve(raw.size());
  for (auto& e : raw) {
    if (!out.empty() && out.back().key == e.key)
      out.back().weight = out.back().weight + e.weight;
    else
      out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

FiniteSupportMeasure FiniteSupportMeasure::from_weights(
    std::shared_ptr<const Group> group,
    std::vector<std::pair<GroupElement, Rational>> weights) {
  if (!group) throw DomainError("measure: null group");
  if (weights.empty()) throw DomainError("measure: empty support");
  std::vector<Entry> raw;
  raw.reserve(weights.size());
  for (auto& [g, w] : weights) {
    if (g.group != group.get())
      throw DomainError("measure: element from a different group");
    if (!(w > Rational(0)))
      throw DomainError("measure: weights must be positive");
    raw.push_back({group->canonical_key(g), w});
  }
  auto entries = accumulate_entries(std::move(raw));
  if (sum_weights(entries) != Rational(1))
    throw DomainError("measure: weights must sum to 1");
  FiniteSupportMeasure m;
  m.group_ = std::move(group);
  m.entries_ = std::move(entries);
  return m;
}

FiniteSupportMeasure FiniteSupportMeasure::uniform(
    std::shared_ptr<const Group> group,
    const std::vector<GroupElement>& support) {
  if (support.empty()) throw DomainError("measure: empty support");
  // Deduplicate first so the uniform weight matches the distinct support.
  std::set<std::string> keys;
  for (const auto& g : support) {
    if (g.group != group.get())
      throw DomainError("measure: element from a different group");
    keys.insert(group->canonical_key(g));
  }
  Rational w(1, static_cast<std::int64_t>(keys.size()));
  FiniteSupportMeasure m;
  m.group_ = group;
  for (const auto& k : keys) m.entries_.push_back({k, w});
  return m;
}

FiniteSupportMeasure FiniteSupportMeasure::dirac_identity(
    std::shared_ptr<const Group> group) {
  FiniteSupportMeasure m;
  m.entries_.push_back({group->canonical_key(group->identity()), Rational(1)});
  m.group_ = std::move(group);
  return m;
}

FiniteSupportMeasure FiniteSupportMeasure::from_json(
    std::shared_ptr<const Group> group, const json& j) {
  if (!j.is_object()) throw SchemaError("measure: expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "support" && k != "weights" && k != "symmetric")
      throw SchemaError("measure: unknown key '" + k + "'");
  }
  if (!j.contains("support") || !j["support"].is_array() ||
      j["support"].empty())
    throw SchemaError("measure: 'support' must be a nonempty array");
  std::vector<GroupElement> support;
  for (const auto& e : j["support"])
    support.push_back(element_from_json(*group, e));

  FiniteSupportMeasure m;
  if (j.contains("weights")) {
    const auto& jw = j["weights"];
    if (!jw.is_array() || jw.size() != support.size())
      throw SchemaError("measure: 'weights' must match 'support' in length");
    std::vector<std::pair<GroupElement, Rational>> weights;
    for (std::size_t i = 0; i < support.size(); ++i)
      weights.emplace_back(support[i], parse_rational(jw[i]));
    m = from_weights(group, std::move(weights));
  } else {
    m = uniform(group, support);
  }
  if (j.value("symmetric", true) && !m.is_symmetric())
    throw SchemaError("measure: declared symmetric but mu(g) != mu(g^-1)");
  return m;
}

json FiniteSupportMeasure::to_json() const {
  json support = json::array();
  json weights = json::array();
  for (const auto& e : entries_) {
    support.push_back(element_to_json(group_->element_from_key(e.key)));
    weights.push_back(rational_to_json(e.weight));
  }
  return json{{"support", support},
              {"weights", weights},
              {"symmetric", is_symmetric()}};
}

Rational FiniteSupportMeasure::mass(const std::string& key) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), key,
      [](const Entry& e, const std::string& k) { return e.key < k; });
  if (it != entries_.end() && it->key == key) return it->weight;
  return Rational(0);
}

Rational FiniteSupportMeasure::mass(const GroupElement& g) const {
  return mass(group_->canonical_key(g));
}

bool FiniteSupportMeasure::is_symmetric() const {
  for (const auto& e : entries_) {
    GroupElement g = group_->element_from_key(e.key);
    if (mass(group_->inverse(g)) != e.weight) return false;
  }
  return true;
}

bool FiniteSupportMeasure::operator==(const FiniteSupportMeasure& o) const {
  if (group_.get() != o.group_.get() || entries_.size() != o.entries_.size())
    return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].key != o.entries_[i].key ||
        entries_[i].weight != o.entries_[i].weight)
      return false;
  return true;
}

FiniteSupportMeasure convolve(const FiniteSupportMeasure& mu,
                              const FiniteSupportMeasure& nu,
                              std::size_t pair_budget) {
  if (mu.group_.get() != nu.group_.get())
    throw DomainError("convolve: measures on different groups");
  const Group& G = mu.group();
  std::size_t pairs = mu.support_size() * nu.support_size();
  if (pairs > pair_budget)
    throw ResourceError("convolve: support budget exceeded (" +
                        std::to_string(pairs) + " products)");
  std::vector<GroupElement> nu_elems;
  nu_elems.reserve(nu.support_size());
  for (const auto& b : nu.entries())
    nu_elems.push_back(G.element_from_key(b.key));

  std::vector<FiniteSupportMeasure::Entry> raw;
  raw.reserve(pairs);
  for (const auto& a : mu.entries()) {
    GroupElement ga = G.element_from_key(a.key);
    for (std::size_t i = 0; i < nu_elems.size(); ++i) {
      raw.push_back({G.canonical_key(G.multiply(ga, nu_elems[i])),
                     a.weight * nu.entries()[i].weight});
    }
  }
  FiniteSupportMeasure out;
  out.group_ = mu.group_;
  out.entries_ = accumulate_entries(std::move(raw));
  return out;
}

FiniteSupportMeasure convolution_power(const FiniteSupportMeasure& mu, int n,
                                       std::size_t pair_budget) {
  if (n < 1) throw DomainError("convolution_power: n must be >= 1");
  FiniteSupportMeasure acc = mu;
  for (int i = 1; i < n; ++i) acc = convolve(acc, mu, pair_budget);
  return acc;
}

ConvexCombinationSpec ConvexCombinationSpec::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("conv-comb spec: expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "coefficients" && k != "renormalize")
      throw SchemaError("conv-comb spec: unknown key '" + k + "'");
  }
  if (!j.contains("coefficients") || !j["coefficients"].is_array() ||
      j["coefficients"].empty())
    throw SchemaError("conv-comb spec: 'coefficients' must be nonempty");
  ConvexCombinationSpec spec;
  for (const auto& c : j["coefficients"])
    spec.coefficients.push_back(parse_rational(c));
  spec.renormalize = j.value("renormalize", false);
  return spec;
}

ConvexCombinationResult build_convex_combination(
    const FiniteSupportMeasure& mu, const ConvexCombinationSpec& spec,
    const GeneratingSet& S, std::size_t pair_budget) {
  if (!mu.is_symmetric())
    throw DomainError("build_convex_combination: mu must be symmetric");
  std::vector<Rational> a = spec.coefficients;
  Rational total(0);
  for (const auto& c : a) {
    if (c < Rational(0))
      throw DomainError("build_convex_combination: negative coefficient");
    total = total + c;
  }
  if (total == Rational(0))
    throw DomainError("build_convex_combination: all coefficients zero");
  if (total != Rational(1)) {
    if (!spec.renormalize)
      throw SchemaError(
          "build_convex_combination: coefficients sum to " + total.str() +
          ", not 1, and renormalize is off");
    for (auto& c : a) c = c / total;
  }

  const Group& G = mu.group();
  std::vector<FiniteSupportMeasure::Entry> raw;
  Rational factor(1);
  FiniteSupportMeasure power = mu;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i > 0) power = convolve(power, mu, pair_budget);
    std::int64_t n = static_cast<std::int64_t>(i) + 1;
    factor = factor + Rational(n) * a[i];
    if (a[i] == Rational(0)) continue;
    for (const auto& e : power.entries()) raw.push_back({e.key, a[i] * e.weight});
  }

  ConvexCombinationResult res;
  res.nu.group_ = mu.group_ptr();
  res.nu.entries_ = accumulate_entries(std::move(raw));
  res.factor = factor;

  Rational second(0);
  for (const auto& e : res.nu.entries_) {
    int d = G.word_length(G.element_from_key(e.key), S);
    second = second + Rational(static_cast<std::int64_t>(d) * d) * e.weight;
  }
  res.second_moment = second;

  WordMetricBall ball = G.ball(spec.truncation(), S);
  res.covers_punctured_ball = true;
  for (const auto& be : ball.entries) {
    if (be.length == 0) continue;
    if (res.nu.mass(be.key) == Rational(0)) {
      res.covers_punctured_ball = false;
      break;
    }
  }
  return res;
}

Rational parse_rational(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    auto slash = s.find('/');
    auto parse_int = [&](std::string_view sv) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (ec != std::errc() || p != sv.data() + sv.size())
        throw SchemaError("rational: cannot parse '" + s + "'");
      return v;
    };
    if (slash == std::string::npos) return Rational(parse_int(s));
    return Rational(parse_int(std::string_view(s).substr(0, slash)),
                    parse_int(std::string_view(s).substr(slash + 1)));
  }
  throw SchemaError("rational: expected an integer or a 'p/q' string");
}

json rational_to_json(const Rational& r) {
  if (r.den() == 1) return json(r.num());
  return json(r.str());
}

}  // namespace cat0lab
