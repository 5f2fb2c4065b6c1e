#pragma once

// Word machinery for the first Grigorchuk group, acting on the rooted
// binary tree via the wreath recursion a = swap, b = (a,c), c = (a,d),
// d = (e,b). Elements are reduced words over {a,b,c,d}; equality is decided
// exactly by the contracting section recursion.

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cat0lab::grig {

// Reduce using a^2=b^2=c^2=d^2=e and the Klein relations bc=cb=d etc.
std::string reduce(const std::string& word);

// reduce(a + b)
std::string multiply(const std::string& a, const std::string& b);

// Generators are involutions, so the inverse word is the reversal.
inline std::string inverse(const std::string& a) {
  return std::string(a.rbegin(), a.rend());
}

bool root_swap(const std::string& reduced);

// First-level sections: g = (first, second) * (root swap). Inputs reduced.
struct Sections {
  std::string first, second;
  bool swap;
};
Sections sections(const std::string& reduced);

bool is_trivial(const std::string& word);

inline bool words_equal(const std::string& a, const std::string& b) {
  return is_trivial(multiply(a, inverse(b)));
}

// Image of a depth-|v| vertex (bit string, MSB = first level) under the word.
std::uint64_t apply_to_vertex(const std::string& reduced, std::uint64_t v,
                              int depth);

// Hash of the action on all vertices at a fixed depth; collision-tolerant
// bucket key for the canonicalization table.
std::uint64_t action_signature(const std::string& reduced);

// Order via the recursion: swap => 2 * order(g^2); no swap => lcm of the
// section orders. Returns nullopt past cap.
std::optional<std::int64_t> recursive_order(const std::string& reduced,
                                            std::int64_t cap);

// First-seen canonicalization table. Keys are stable for the lifetime of
// the owning Group; ball enumeration feeds words in shortlex order so keys
// inside enumerated balls are shortlex-minimal.
struct CanonicalTable {
  mutable std::mutex mu;
  mutable std::vector<std::string> canon;
  mutable std::unordered_map<std::uint64_t, std::vector<int>> buckets;

  // Returns the canonical word for the element represented by `reduced`,
  // inserting it as new if unseen.
  std::string canonicalize(const std::string& reduced) const;
};

}  // namespace cat0lab::grig

namespace cat0lab {
struct GrigorchukState {
  grig::CanonicalTable table;
};
}  // namespace cat0lab
