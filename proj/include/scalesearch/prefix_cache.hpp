// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "scalesearch/core.hpp"

namespace scalesearch {

/// Identifies one forward pass: the prefix it extends (by lineage, never by
/// token content), the step seed, and the sampling temperature.
struct PrefixKey {
  std::uint64_t schedule = 0;
  Seed root = 0;
  std::vector<std::uint32_t> branches;
  Seed seed = 0;
  std::uint64_t temperature_bits = 0;

  static PrefixKey of(const SequenceState& prefix, Seed seed, double temperature);

  friend bool operator==(const PrefixKey&, const PrefixKey&) = default;
};

struct PrefixKeyHash {
  std::size_t operator()(const PrefixKey& key) const noexcept;
};

/// Stores the output of completed forward passes so identical requests are
/// served without recomputation. Unbounded by default; a nonzero capacity
/// turns on LRU eviction. Safe for concurrent use. Values for a key are
/// identical by purity of the generator, so racing inserts are harmless.
class PrefixCache {
 public:
  explicit PrefixCache(std::size_t capacity = 0) : capacity_(capacity) {}

  std::optional<TokenMap> find(const PrefixKey& key);
  void insert(const PrefixKey& key, TokenMap value);
  void clear();

  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t hits() const;
  std::uint64_t misses() const;
  std::uint64_t evictions() const;

 private:
  using Order = std::list<PrefixKey>;
  struct Entry {
    TokenMap value;
    Order::iterator position;
  };

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::unordered_map<PrefixKey, Entry, PrefixKeyHash> entries_;
  Order order_;  // front = most recently used
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace scalesearch
