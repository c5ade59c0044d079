/* Copyright 2026 The prefixsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Reference prefix cache: a flat list of cached block-aligned prefixes and a
// linear LRU scan for eviction. No tree, no candidate index; every query is a
// brute-force pass over the list.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "prefixsim/core/types.h"

namespace prefixsim::testing {

class PoolOracle {
 public:
  struct Entry {
    std::string ns;
    std::vector<TokenId> prefix;  // whole path, length = depth * block_size
    uint64_t id = 0;
    uint32_t ref = 0;
    int64_t last_access = 0;
  };

  struct Match {
    uint64_t matched_tokens = 0;
    std::vector<uint64_t> ids;
  };

  PoolOracle(uint32_t block_size, uint64_t capacity)
      : block_size_(block_size), capacity_(capacity) {}

  Match lookup(const std::string& ns, const std::vector<TokenId>& query, int64_t now) {
    Match m;
    lookup_tokens_ += query.size();
    for (size_t k = 1; k * block_size_ <= query.size(); ++k) {
      Entry* e = find(ns, query, k);
      if (e == nullptr) break;
      e->ref++;
      e->last_access = now;
      m.ids.push_back(e->id);
    }
    m.matched_tokens = m.ids.size() * block_size_;
    matched_tokens_ += m.matched_tokens;
    return m;
  }

  // Returns allocated ids, or nullopt on capacity exhaustion (state unchanged).
  std::optional<std::vector<uint64_t>> insert(const std::string& ns,
                                              const std::vector<TokenId>& seq, int64_t now,
                                              bool pin, std::vector<uint64_t>* pinned) {
    const size_t full = seq.size() / block_size_;
    size_t cached = 0;
    while (cached < full && find(ns, seq, cached + 1) != nullptr) ++cached;
    const uint64_t need = full - cached;
    uint64_t unpinned = 0;
    for (const Entry& e : entries_) unpinned += e.ref == 0 ? 1 : 0;
    // The cached path is about to be pinned; it cannot be reclaimed.
    for (size_t k = 1; k <= cached; ++k) {
      if (find(ns, seq, k)->ref == 0) --unpinned;
    }
    const uint64_t free = capacity_ - entries_.size();
    if (need > 0 && free < need && free + unpinned < need) {
      return std::nullopt;
    }
    for (size_t k = 1; k <= cached; ++k) {
      Entry* e = find(ns, seq, k);
      e->ref++;
      e->last_access = now;
    }
    while (capacity_ - entries_.size() < need) evict_one();
    std::vector<uint64_t> allocated;
    for (size_t k = cached + 1; k <= full; ++k) {
      Entry e;
      e.ns = ns;
      e.prefix.assign(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(k * block_size_));
      e.id = next_id_++;
      e.ref = 1;
      e.last_access = now;
      entries_.push_back(std::move(e));
      allocated.push_back(entries_.back().id);
    }
    std::vector<uint64_t> path;
    for (size_t k = 1; k <= full; ++k) path.push_back(find(ns, seq, k)->id);
    if (pin) {
      if (pinned != nullptr) *pinned = path;
    } else {
      for (uint64_t id : path) by_id(id).ref--;
    }
    return allocated;
  }

  void release(const std::vector<uint64_t>& ids) {
    for (uint64_t id : ids) {
      Entry& e = by_id(id);
      if (e.ref == 0) throw std::logic_error("oracle: release underflow");
      e.ref--;
    }
  }

  // Returns evicted count, or nullopt if unsatisfiable (state unchanged).
  std::optional<uint64_t> evict_until(uint64_t need) {
    uint64_t unpinned = 0;
    for (const Entry& e : entries_) unpinned += e.ref == 0 ? 1 : 0;
    const uint64_t free = capacity_ - entries_.size();
    if (free >= need) return 0;
    if (free + unpinned < need) return std::nullopt;
    uint64_t n = 0;
    while (capacity_ - entries_.size() < need) {
      evict_one();
      ++n;
    }
    return n;
  }

  uint64_t used() const { return entries_.size(); }
  uint64_t evictions() const { return evictions_; }
  uint64_t matched_tokens() const { return matched_tokens_; }
  uint64_t lookup_tokens() const { return lookup_tokens_; }
  const std::vector<uint64_t>& eviction_log() const { return eviction_log_; }
  const std::vector<Entry>& entries() const { return entries_; }

  uint64_t footprint(const std::string& ns) const {
    uint64_t n = 0;
    for (const Entry& e : entries_) n += e.ns == ns ? block_size_ : 0;
    return n;
  }

 private:
  Entry* find(const std::string& ns, const std::vector<TokenId>& seq, size_t blocks) {
    const size_t len = blocks * block_size_;
    for (Entry& e : entries_) {
      if (e.ns == ns && e.prefix.size() == len && std::equal(e.prefix.begin(), e.prefix.end(), seq.begin())) {
        return &e;
      }
    }
    return nullptr;
  }

  Entry& by_id(uint64_t id) {
    for (Entry& e : entries_) {
      if (e.id == id) return e;
    }
    throw std::logic_error("oracle: unknown id");
  }

  bool has_child(const Entry& p) const {
    for (const Entry& e : entries_) {
      if (e.ns == p.ns && e.prefix.size() == p.prefix.size() + block_size_ &&
          std::equal(p.prefix.begin(), p.prefix.end(), e.prefix.begin())) {
        return true;
      }
    }
    return false;
  }

  // Least recently used unpinned leaf; deeper first, then lower id.
  void evict_one() {
    size_t best = entries_.size();
    for (size_t i = 0; i < entries_.size(); ++i) {
      const Entry& e = entries_[i];
      if (e.ref != 0 || has_child(e)) continue;
      if (best == entries_.size()) {
        best = i;
        continue;
      }
      const Entry& b = entries_[best];
      const auto key = [](const Entry& x) {
        return std::make_tuple(x.last_access, -static_cast<int64_t>(x.prefix.size()), x.id);
      };
      if (key(e) < key(b)) best = i;
    }
    if (best == entries_.size()) throw std::logic_error("oracle: nothing evictable");
    eviction_log_.push_back(entries_[best].id);
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(best));
    ++evictions_;
  }

  uint32_t block_size_;
  uint64_t capacity_;
  uint64_t next_id_ = 1;
  uint64_t evictions_ = 0;
  uint64_t matched_tokens_ = 0;
  uint64_t lookup_tokens_ = 0;
  std::vector<Entry> entries_;
  std::vector<uint64_t> eviction_log_;
};

}  // namespace prefixsim::testing
