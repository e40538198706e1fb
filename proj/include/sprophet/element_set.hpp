#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace sprophet {

using ElementId = std::size_t;

// Subset of the ground set [0, universe). Bit-packed; universes up to 128
// elements live inline so copies in hot loops never allocate.
class ElementSet {
 public:
  using word_type = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;
  static constexpr std::size_t kInlineWords = 2;

  ElementSet() = default;

  explicit ElementSet(std::size_t universe) : universe_(universe) {
    if (word_count() > kInlineWords) heap_.assign(word_count(), 0);
  }

  ElementSet(std::size_t universe, std::initializer_list<ElementId> elements)
      : ElementSet(universe) {
    for (ElementId e : elements) insert(e);
  }

  template <class Range>
  static ElementSet from_range(std::size_t universe, const Range& elements) {
    ElementSet s(universe);
    for (auto e : elements) s.insert(static_cast<ElementId>(e));
    return s;
  }

  static ElementSet full(std::size_t universe) {
    ElementSet s(universe);
    for (std::size_t w = 0; w < s.word_count(); ++w) s.data()[w] = ~word_type{0};
    s.trim();
    return s;
  }

  // Low `universe` bits of `mask` (universe <= 64).
  static ElementSet from_mask(std::size_t universe, word_type mask) {
    if (universe > kWordBits) throw std::invalid_argument("from_mask: universe exceeds 64");
    ElementSet s(universe);
    if (universe > 0) s.data()[0] = mask;
    s.trim();
    return s;
  }

  std::size_t universe() const { return universe_; }

  bool contains(ElementId e) const {
    check(e);
    return (data()[e / kWordBits] >> (e % kWordBits)) & 1U;
  }

  void insert(ElementId e) {
    check(e);
    data()[e / kWordBits] |= word_type{1} << (e % kWordBits);
  }

  void erase(ElementId e) {
    check(e);
    data()[e / kWordBits] &= ~(word_type{1} << (e % kWordBits));
  }

  ElementSet with(ElementId e) const {
    ElementSet s = *this;
    s.insert(e);
    return s;
  }

  ElementSet without(ElementId e) const {
    ElementSet s = *this;
    s.erase(e);
    return s;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < word_count(); ++w) total += std::popcount(data()[w]);
    return total;
  }

  bool empty() const {
    for (std::size_t w = 0; w < word_count(); ++w)
      if (data()[w] != 0) return false;
    return true;
  }

  // Low word; the whole set when universe <= 64.
  word_type mask() const { return word_count() == 0 ? 0 : data()[0]; }

  bool is_subset_of(const ElementSet& other) const {
    same_universe(other);
    for (std::size_t w = 0; w < word_count(); ++w)
      if ((data()[w] & ~other.data()[w]) != 0) return false;
    return true;
  }

  bool intersects(const ElementSet& other) const {
    same_universe(other);
    for (std::size_t w = 0; w < word_count(); ++w)
      if ((data()[w] & other.data()[w]) != 0) return true;
    return false;
  }

  ElementSet& operator|=(const ElementSet& other) {
    same_universe(other);
    for (std::size_t w = 0; w < word_count(); ++w) data()[w] |= other.data()[w];
    return *this;
  }
  ElementSet& operator&=(const ElementSet& other) {
    same_universe(other);
    for (std::size_t w = 0; w < word_count(); ++w) data()[w] &= other.data()[w];
    return *this;
  }
  ElementSet& operator-=(const ElementSet& other) {
    same_universe(other);
    for (std::size_t w = 0; w < word_count(); ++w) data()[w] &= ~other.data()[w];
    return *this;
  }

  friend ElementSet operator|(ElementSet a, const ElementSet& b) { return a |= b; }
  friend ElementSet operator&(ElementSet a, const ElementSet& b) { return a &= b; }
  friend ElementSet operator-(ElementSet a, const ElementSet& b) { return a -= b; }

  ElementSet complement() const { return full(universe_) - *this; }

  friend bool operator==(const ElementSet& a, const ElementSet& b) {
    if (a.universe_ != b.universe_) return false;
    return std::equal(a.data(), a.data() + a.word_count(), b.data());
  }

  // Total order for use as a map key: universe, then words from high to low.
  friend std::strong_ordering operator<=>(const ElementSet& a, const ElementSet& b) {
    if (auto c = a.universe_ <=> b.universe_; c != 0) return c;
    for (std::size_t w = a.word_count(); w-- > 0;)
      if (auto c = a.data()[w] <=> b.data()[w]; c != 0) return c;
    return std::strong_ordering::equal;
  }

  std::vector<ElementId> to_vector() const {
    std::vector<ElementId> out;
    out.reserve(size());
    for (ElementId e : *this) out.push_back(e);
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (ElementId e : *this) {
      if (!first) s += ",";
      s += std::to_string(e);
      first = false;
    }
    return s + "}";
  }

  std::size_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ universe_;
    for (std::size_t w = 0; w < word_count(); ++w) {
      h ^= data()[w] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }

  // Forward iteration over members in ascending order.
  class const_iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = ElementId;
    using difference_type = std::ptrdiff_t;
    using pointer = const ElementId*;
    using reference = ElementId;

    const_iterator() = default;
    const_iterator(const ElementSet* set, std::size_t word) : set_(set), word_(word) {
      if (set_ != nullptr && word_ < set_->word_count()) {
        bits_ = set_->data()[word_];
        advance_to_set_bit();
      }
    }

    ElementId operator*() const {
      return word_ * kWordBits + static_cast<std::size_t>(std::countr_zero(bits_));
    }
    const_iterator& operator++() {
      bits_ &= bits_ - 1;
      advance_to_set_bit();
      return *this;
    }
    const_iterator operator++(int) {
      auto tmp = *this;
      ++*this;
      return tmp;
    }
    friend bool operator==(const const_iterator& a, const const_iterator& b) {
      return a.word_ == b.word_ && a.bits_ == b.bits_;
    }

   private:
    void advance_to_set_bit() {
      while (bits_ == 0) {
        ++word_;
        if (word_ >= set_->word_count()) {
          word_ = set_->word_count();
          bits_ = 0;
          return;
        }
        bits_ = set_->data()[word_];
      }
    }

    const ElementSet* set_ = nullptr;
    std::size_t word_ = 0;
    word_type bits_ = 0;
  };

  const_iterator begin() const { return const_iterator(this, 0); }
  const_iterator end() const {
    const_iterator it(this, word_count());
    return it;
  }

 private:
  std::size_t word_count() const { return (universe_ + kWordBits - 1) / kWordBits; }
  bool inline_storage() const { return word_count() <= kInlineWords; }
  word_type* data() { return inline_storage() ? inline_.data() : heap_.data(); }
  const word_type* data() const { return inline_storage() ? inline_.data() : heap_.data(); }

  void check(ElementId e) const {
    if (e >= universe_) {
      throw std::out_of_range("element " + std::to_string(e) + " outside ground set of size " +
                              std::to_string(universe_));
    }
  }

  void same_universe(const ElementSet& other) const {
    if (other.universe_ != universe_) throw std::invalid_argument("ElementSet universe mismatch");
  }

  void trim() {
    const std::size_t tail = universe_ % kWordBits;
    if (tail != 0) data()[word_count() - 1] &= (word_type{1} << tail) - 1;
  }

  std::size_t universe_ = 0;
  std::array<word_type, kInlineWords> inline_{};
  std::vector<word_type> heap_;
};

struct ElementSetHash {
  std::size_t operator()(const ElementSet& s) const { return s.hash(); }
};

}  // namespace sprophet
