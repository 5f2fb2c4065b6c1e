#include "grigorchuk_detail.hpp"

#include <numeric>

#include "cat0lab/errors.hpp"

namespace cat0lab::grig {

namespace {

// b,c,d encoded as 1,2,3: Klein product is xor.
inline int bcd_code(char c) { return c - 'b' + 1; }
inline char bcd_char(int code) { return static_cast<char>('b' + code - 1); }

constexpr int kSignatureDepth = 7;

}  // namespace

std::string reduce(const std::string& word) {
  for (char c : word)
    if (c != 'a' && (c < 'b' || c > 'd'))
      throw DomainError("grigorchuk word: invalid letter");
  // Stack reduction. Combining two {b,c,d} letters may cancel ("bb") and
  // expose an "aa" pair underneath, so re-check the top after every pop.
  std::string out;
  out.reserve(word.size());
  for (char c : word) {
    char cur = c;
    while (cur != 0 && !out.empty()) {
      char t = out.back();
      if (t == 'a' && cur == 'a') {
        out.pop_back();
        cur = 0;
      } else if (t != 'a' && cur != 'a') {
        int prod = bcd_code(t) ^ bcd_code(cur);
        out.pop_back();
        cur = prod == 0 ? 0 : bcd_char(prod);
      } else {
        break;
      }
    }
    if (cur != 0) out.push_back(cur);
  }
  return out;
}

std::string multiply(const std::string& a, const std::string& b) {
  return reduce(a + b);
}

bool root_swap(const std::string& reduced) {
  std::size_t n = 0;
  for (char c : reduced)
    if (c == 'a') ++n;
  return (n % 2) == 1;
}

Sections sections(const std::string& reduced) {
  // Maintain the section words (u0, u1) of the growing left prefix.
  // Right-multiplying by a letter s = (s0, s1) tau gives
  // u0' = u_{tau(0)} s0, u1' = u_{tau(1)} s1.
  std::string u0, u1;
  for (char c : reduced) {
    switch (c) {
      case 'a':
        std::swap(u0, u1);
        break;
      case 'b':
        u0.push_back('a');
        u1.push_back('c');
        break;
      case 'c':
        u0.push_back('a');
        u1.push_back('d');
        break;
      case 'd':
        u1.push_back('b');
        break;
    }
  }
  return Sections{reduce(u0), reduce(u1), root_swap(reduced)};
}

bool is_trivial(const std::string& word) {
  std::string w = reduce(word);
  if (w.empty()) return true;
  if (w.size() == 1) return false;
  if (root_swap(w)) return false;
  Sections s = sections(w);
  return is_trivial(s.first) && is_trivial(s.second);
}

std::uint64_t apply_to_vertex(const std::string& reduced, std::uint64_t v,
                              int depth) {
  // Rightmost factor acts first.
  for (auto it = reduced.rbegin(); it != reduced.rend(); ++it) {
    // Apply a single generator, descending the tree iteratively.
    char g = *it;
    int level = 0;
    while (level < depth && g != 0) {
      int bit_pos = depth - 1 - level;
      std::uint64_t bit = (v >> bit_pos) & 1u;
      switch (g) {
        case 'a':
          v ^= (std::uint64_t{1} << bit_pos);
          g = 0;
          break;
        case 'b':
          g = bit == 0 ? 'a' : 'c';
          break;
        case 'c':
          g = bit == 0 ? 'a' : 'd';
          break;
        case 'd':
          g = bit == 0 ? 0 : 'b';
          break;
      }
      ++level;
    }
  }
  return v;
}

std::uint64_t action_signature(const std::string& reduced) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  const std::uint64_t leaves = std::uint64_t{1} << kSignatureDepth;
  for (std::uint64_t v = 0; v < leaves; ++v) {
    std::uint64_t img = apply_to_vertex(reduced, v, kSignatureDepth);
    h ^= img + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

namespace {

std::optional<std::int64_t> recursive_order_impl(const std::string& reduced,
                                                 std::int64_t cap, int depth) {
  if (cap < 1 || depth > 256) return std::nullopt;
  if (reduced.empty()) return 1;
  if (reduced.size() == 1) return cap >= 2 ? std::optional<std::int64_t>(2)
                                           : std::nullopt;
  if (root_swap(reduced)) {
    std::string sq = multiply(reduced, reduced);
    auto half = recursive_order_impl(sq, cap / 2, depth + 1);
    if (!half) return std::nullopt;
    return 2 * *half;
  }
  Sections s = sections(reduced);
  auto o0 = recursive_order_impl(s.first, cap, depth + 1);
  if (!o0) return std::nullopt;
  auto o1 = recursive_order_impl(s.second, cap, depth + 1);
  if (!o1) return std::nullopt;
  std::int64_t ord = std::lcm(*o0, *o1);
  if (ord > cap) return std::nullopt;
  return ord;
}

}  // namespace

std::optional<std::int64_t> recursive_order(const std::string& reduced,
                                            std::int64_t cap) {
  return recursive_order_impl(reduced, cap, 0);
}

std::string CanonicalTable::canonicalize(const std::string& reduced) const {
  std::lock_guard<std::mutex> lock(mu);
  std::uint64_t sig = action_signature(reduced);
  auto it = buckets.find(sig);
  if (it != buckets.end()) {
    for (int id : it->second) {
      if (canon[id] == reduced || words_equal(canon[id], reduced))
        return canon[id];
    }
  }
  int id = static_cast<int>(canon.size());
  canon.push_back(reduced);
  buckets[sig].push_back(id);
  return reduced;
}

}  // namespace cat0lab::grig
