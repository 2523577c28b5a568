#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slbag {

/// 128-bit fingerprint used to deduplicate simulator states. Two independent
/// 64-bit mixes keep the collision probability for N distinct states around
/// N^2 / 2^129 — vanishing even for billions of states.
struct Key128 {
  std::uint64_t a = 0, b = 0;
  bool operator==(const Key128&) const = default;
};

Key128 hash128(const std::string& bytes);

/// Open-addressing map from Key128 to V (linear probing, power-of-two
/// capacity). Zero keys are reserved as empty markers; hash128 never emits
/// them for non-empty input.
template <class V>
class Key128Map {
 public:
  Key128Map() { rehash(1024); }

  V* find(const Key128& k) {
    std::size_t i = probe(k);
    return slots_[i].used ? &slots_[i].value : nullptr;
  }

  /// Returns (slot value, inserted?).
  std::pair<V*, bool> emplace(const Key128& k, V v) {
    if (size_ * 10 >= cap_ * 7) rehash(cap_ * 2);
    std::size_t i = probe(k);
    if (slots_[i].used) return {&slots_[i].value, false};
    slots_[i].used = true;
    slots_[i].key = k;
    slots_[i].value = std::move(v);
    ++size_;
    return {&slots_[i].value, true};
  }

  std::size_t size() const { return size_; }

  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto& s : slots_)
      if (s.used) fn(s.key, s.value);
  }

  void clear() {
    slots_.clear();
    size_ = 0;
    rehash(1024);
  }

 private:
  struct Slot {
    bool used = false;
    Key128 key;
    V value{};
  };

  std::size_t probe(const Key128& k) const {
    std::size_t mask = cap_ - 1;
    std::size_t i = static_cast<std::size_t>(k.a) & mask;
    while (slots_[i].used && !(slots_[i].key == k)) i = (i + 1) & mask;
    return i;
  }

  void rehash(std::size_t ncap) {
    std::vector<Slot> old = std::move(slots_);
    cap_ = ncap < 1024 ? 1024 : ncap;
    slots_.assign(cap_, Slot{});
    size_ = 0;
    for (auto& s : old)
      if (s.used) {
        std::size_t i = probe(s.key);
        slots_[i] = std::move(s);
        ++size_;
      }
  }

  std::vector<Slot> slots_;
  std::size_t cap_ = 0;
  std::size_t size_ = 0;
};

}  // namespace slbag
