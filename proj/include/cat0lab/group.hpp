#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cat0lab/errors.hpp"

namespace cat0lab {

class Group;

enum class GroupKind { lattice, free_group, dihedral_inf, cyclic, dihedral, grigorchuk };

/// Freely reduced word over k generators; letter +i / -i is the i-th
/// generator / its inverse (1-based).
struct FreeWord {
  std::vector<std::int16_t> letters;
  bool operator==(const FreeWord&) const = default;
};

/// Isometry x -> sign*x + shift of Z (infinite dihedral) or of Z/m
/// (finite dihedral, shift reduced mod m). flip means sign = -1.
struct DihedralElem {
  bool flip = false;
  std::int64_t shift = 0;
  bool operator==(const DihedralElem&) const = default;
};

/// Reduced word over the Grigorchuk generators, chars 'a','b','c','d'.
/// Reduced means: no letter repeated, no two of {b,c,d} adjacent.
struct GrigWord {
  std::string letters;
  bool operator==(const GrigWord&) const = default;
};

using ElementRep =
    std::variant<std::vector<std::int64_t>,  // lattice Z^d
                 FreeWord,                   // free group F_k
                 DihedralElem,               // D_inf / D_m
                 std::int64_t,               // cyclic Z/m
                 GrigWord>;                  // Grigorchuk group

struct GroupElement {
  const Group* group = nullptr;
  ElementRep rep;
};

/// Finite symmetric generating set. Never contains the identity.
struct GeneratingSet {
  std::vector<GroupElement> elements;
  bool symmetric = true;
};

/// All elements of word length <= radius, with exact lengths, iterable in
/// canonical (length, key) order.
class WordMetricBall {
 public:
  int radius = 0;
  /// (canonical key, element, word length), sorted by (length, key).
  struct Entry {
    std::string key;
    GroupElement element;
    int length;
  };
  std::vector<Entry> entries;

  std::optional<int> length_of(const std::string& key) const;
  std::size_t size() const { return entries.size(); }

 private:
  friend class Group;
  mutable std::map<std::string, int> index_;  // lazily built key -> length
  mutable bool index_built_ = false;
};

struct GrigorchukState;  // equality/canonicalization cache, group.cpp internal

class Group {
 public:
  static std::shared_ptr<const Group> lattice(int rank);
  static std::shared_ptr<const Group> free_group(int rank);
  static std::shared_ptr<const Group> infinite_dihedral();
  static std::shared_ptr<const Group> cyclic(std::int64_t order);
  static std::shared_ptr<const Group> finite_dihedral(std::int64_t order);
  static std::shared_ptr<const Group> grigorchuk();

  /// {"kind": "lattice"|"free"|"dihedral_inf"|"cyclic"|"dihedral"|"grigorchuk",
  ///  "rank": int (lattice/free), "order": int (cyclic/dihedral)}
  static std::shared_ptr<const Group> from_json(const nlohmann::json& j);
  std::string descriptor() const;

  GroupKind kind() const { return kind_; }
  int rank() const { return rank_; }
  std::int64_t order_param() const { return order_; }

  GroupElement identity() const;
  GroupElement multiply(const GroupElement& a, const GroupElement& b) const;
  GroupElement inverse(const GroupElement& g) const;
  bool equal(const GroupElement& a, const GroupElement& b) const;
  bool is_identity(const GroupElement& g) const;

  /// Canonical key: equal elements always map to the same string, distinct
  /// elements to distinct strings. For the Grigorchuk group the key is the
  /// shortlex-minimal word over {a,b,c,d} once the element has been seen by
  /// ball enumeration, otherwise the first reduced word encountered.
  std::string canonical_key(const GroupElement& g) const;
  GroupElement element_from_key(const std::string& key) const;

  /// Standard symmetric generating set (lattice: +-e_i; free: letters and
  /// inverses; dihedral: the two involutions; cyclic: g, g^-1;
  /// Grigorchuk: a,b,c,d).
  GeneratingSet standard_generators() const;
  bool is_standard_generating_set(const GeneratingSet& S) const;

  /// BFS ball of the word metric. Deterministic (length, key) order.
  /// cache_dir, when nonempty, enables a JSON-lines disk cache.
  WordMetricBall ball(int radius, const GeneratingSet& S,
                      std::size_t element_budget = 50'000'000,
                      const std::string& cache_dir = {}) const;

  /// Length of the shortest S-word equal to g. Uses per-group closed forms
  /// for the standard generating set, BFS with memoized balls otherwise.
  /// Throws RadiusExceededError when g is not found within radius_cap.
  int word_length(const GroupElement& g, const GeneratingSet& S,
                  int radius_cap = 64) const;

  /// Least n <= cap with g^n = e, or nullopt ("exceeds cap").
  std::optional<std::int64_t> element_order(const GroupElement& g,
                                            std::int64_t cap) const;

  /// Grigorchuk only: first-level wreath decomposition g = (left, right)swap.
  struct WreathDecomposition {
    GroupElement left, right;
    bool swap;
  };
  WreathDecomposition wreath_decompose(const GroupElement& g) const;

  /// Grigorchuk only: order via the wreath recursion, independent of
  /// iterated multiplication.
  std::optional<std::int64_t> grigorchuk_order_recursive(const GroupElement& g,
                                                         std::int64_t cap) const;

  ~Group();

 private:
  Group(GroupKind kind, int rank, std::int64_t order);
  void check_same_group(const GroupElement& a, const GroupElement& b) const;
  void check_mine(const GroupElement& g) const;
  std::optional<int> closed_form_length(const GroupElement& g) const;

  GroupKind kind_;
  int rank_ = 0;          // lattice / free
  std::int64_t order_ = 0;  // cyclic / dihedral
  std::unique_ptr<GrigorchukState> grig_;
};

/// Builds an element from user-facing JSON: lattice [1,-2]; free "abA";
/// dihedral {"flip":bool,"shift":int}; cyclic int; grigorchuk "abad".
GroupElement element_from_json(const Group& g, const nlohmann::json& j);
nlohmann::json element_to_json(const GroupElement& g);

}  // namespace cat0lab
