#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace jtsmc {

// Set of at most 64 nodes, one bit per 0-based label.
class NodeSet {
public:
  constexpr NodeSet() = default;
  constexpr explicit NodeSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr NodeSet single(int v) { return NodeSet(std::uint64_t{1} << v); }
  static constexpr NodeSet first_n(int n) {
    return NodeSet(n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
  }
  static NodeSet of(std::initializer_list<int> vs) {
    NodeSet s;
    for (int v : vs) s = s.with(v);
    return s;
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool contains(int v) const { return (bits_ >> v) & 1u; }
  constexpr bool subset_of(NodeSet o) const { return (bits_ & ~o.bits_) == 0; }
  constexpr bool intersects(NodeSet o) const { return (bits_ & o.bits_) != 0; }
  constexpr NodeSet with(int v) const { return NodeSet(bits_ | (std::uint64_t{1} << v)); }
  constexpr NodeSet without(int v) const { return NodeSet(bits_ & ~(std::uint64_t{1} << v)); }
  // Lowest member; undefined on the empty set.
  constexpr int first() const { return std::countr_zero(bits_); }
  // Highest member; undefined on the empty set.
  constexpr int last() const { return 63 - std::countl_zero(bits_); }

  constexpr NodeSet operator|(NodeSet o) const { return NodeSet(bits_ | o.bits_); }
  constexpr NodeSet operator&(NodeSet o) const { return NodeSet(bits_ & o.bits_); }
  constexpr NodeSet operator-(NodeSet o) const { return NodeSet(bits_ & ~o.bits_); }
  constexpr NodeSet& operator|=(NodeSet o) { bits_ |= o.bits_; return *this; }
  constexpr NodeSet& operator&=(NodeSet o) { bits_ &= o.bits_; return *this; }

  constexpr auto operator<=>(const NodeSet&) const = default;

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(size());
    for (std::uint64_t b = bits_; b; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::uint64_t b = bits_; b; b &= b - 1) f(std::countr_zero(b));
  }

  // The k-th subset in the natural enumeration of subsets of *this
  // (bit i of k selects the i-th lowest member).
  NodeSet scatter(std::uint64_t k) const {
    std::uint64_t out = 0;
    for (std::uint64_t b = bits_; b && k; b &= b - 1, k >>= 1)
      if (k & 1u) out |= b & (~b + 1);
    return NodeSet(out);
  }

  // 1-based, brace-delimited, for diagnostics.
  std::string str() const {
    std::string s = "{";
    bool first_member = true;
    for_each([&](int v) {
      if (!first_member) s += ",";
      s += std::to_string(v + 1);
      first_member = false;
    });
    return s + "}";
  }

private:
  std::uint64_t bits_ = 0;
};

// External variable labels (0-based) of internal nodes 0..m-1, in insertion order.
struct NodeOrder {
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  NodeSet visited() const {
    NodeSet s;
    for (int v : labels) s = s.with(v);
    return s;
  }
  NodeSet to_external(NodeSet internal) const {
    NodeSet s;
    internal.for_each([&](int v) { s = s.with(labels[v]); });
    return s;
  }
  NodeOrder prefix(int m) const { return NodeOrder{{labels.begin(), labels.begin() + m}}; }
  bool operator==(const NodeOrder&) const = default;
};

}  // namespace jtsmc

template <>
struct std::hash<jtsmc::NodeSet> {
  std::size_t operator()(jtsmc::NodeSet s) const noexcept {
    std::uint64_t z = s.bits() + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return static_cast<std::size_t>(z ^ (z >> 31));
  }
};
