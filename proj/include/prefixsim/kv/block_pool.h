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

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "prefixsim/core/types.h"

namespace prefixsim::kv {

using BlockId = uint64_t;

// Parameter identity a cached block is valid under. Lookups never cross
// namespaces.
struct Namespace {
  enum class Kind { kShared, kPerModel };

  Kind kind = Kind::kShared;
  ModelId model;

  static Namespace shared() { return Namespace{Kind::kShared, {}}; }
  static Namespace per_model(ModelId m) { return Namespace{Kind::kPerModel, std::move(m)}; }

  std::string to_string() const;
  auto operator<=>(const Namespace&) const = default;
};

struct KvBlock {
  BlockId id = 0;
  Namespace ns;
  std::vector<TokenId> tokens;
  uint32_t ref_count = 0;
  SimTime last_access;
  uint32_t depth = 0;  // 1 for a child of the namespace root
};

struct PrefixMatch {
  uint64_t matched_tokens = 0;
  std::vector<BlockId> blocks;  // root-to-leaf order, pinned
};

struct InsertResult {
  std::vector<BlockId> allocated;
  std::vector<BlockId> pinned;  // full path, only when pinning was requested
};

struct PoolStats {
  uint64_t capacity_blocks = 0;
  uint64_t used_blocks = 0;
  uint64_t free_blocks = 0;
  uint64_t matched_tokens = 0;
  uint64_t lookup_tokens = 0;
  uint64_t eviction_count = 0;
};

// Observer invoked once per evicted block, before it is destroyed.
using EvictionObserver = std::function<void(const KvBlock&)>;

// Block-granular prefix cache for one worker.
//
// Each namespace owns a paged radix tree: every node holds exactly one full
// block of tokens and the path from the namespace root spells out a cached
// block-aligned prefix. Partial tail blocks are never indexed.
//
// Pins are always taken on whole root paths (by lookup or by a pinning
// insert), so an unpinned node never has a pinned descendant. Eviction picks
// unpinned leaves by (last_access asc, depth desc, block_id asc).
class BlockPool {
 public:
  BlockPool(uint32_t block_size, uint64_t capacity_blocks);

  BlockPool(const BlockPool&) = delete;
  BlockPool& operator=(const BlockPool&) = delete;
  BlockPool(BlockPool&&) = default;
  BlockPool& operator=(BlockPool&&) = default;

  // Longest cached block-aligned prefix of `query` in `ns`. Matched blocks
  // are pinned and touched at `now`. Counts towards hit-ratio statistics.
  PrefixMatch longest_prefix_match(const Namespace& ns, const TokenSeq& query,
                                   SimTime now);

  // Caches every full block of `seq` in `ns`, reusing the already-cached
  // prefix. All full blocks on the path are touched at `now`. With
  // `pin_path` the whole path is pinned on return.
  // Throws CapacityExhausted (leaving the pool unchanged apart from
  // evictions) if pinned blocks prevent allocation.
  InsertResult insert(const Namespace& ns, const TokenSeq& seq, SimTime now,
                      bool pin_path = false);

  // Evicts unpinned leaves until free_blocks >= need. Returns the number of
  // evicted blocks.
  uint64_t evict_until(uint64_t need);

  // Drops one pin from each block.
  void release(std::span<const BlockId> blocks);

  // Indexed token slots per namespace (namespaces with no blocks omitted).
  std::map<Namespace, uint64_t> footprint_tokens() const;
  uint64_t total_footprint_tokens() const { return used_blocks_ * block_size_; }
  uint64_t peak_footprint_tokens() const { return peak_used_blocks_ * block_size_; }
  std::map<Namespace, uint64_t> peak_footprint_by_namespace() const;

  PoolStats stats() const;
  uint32_t block_size() const { return block_size_; }
  uint64_t capacity_blocks() const { return capacity_blocks_; }
  uint64_t used_blocks() const { return used_blocks_; }
  uint64_t free_blocks() const { return capacity_blocks_ - used_blocks_; }
  uint64_t pinned_blocks() const { return pinned_blocks_; }

  bool contains(BlockId id) const { return blocks_.count(id) != 0; }
  const KvBlock& block(BlockId id) const;

  void set_eviction_observer(EvictionObserver observer) {
    on_evict_ = std::move(observer);
  }

  // Deterministic text tree, one line per node:
  //   <indent><path-prefix-hash> <block_id> <ref_count> <last_access>
  std::string dump() const;

  // Validates internal bookkeeping; throws std::logic_error on corruption.
  void check_invariants() const;

 private:
  using Key = std::vector<TokenId>;
  using Children = std::map<Key, BlockId>;
  using CandidateKey = std::tuple<int64_t, int64_t, BlockId>;

  struct Node {
    KvBlock block;
    BlockId parent = 0;  // 0: namespace root
    Children children;
    bool is_candidate = false;
    CandidateKey candidate_key{};
  };

  static constexpr BlockId kRoot = 0;

  Children& children_of(const Namespace& ns, BlockId parent);
  const Children* find_children(const Namespace& ns, BlockId parent) const;
  void pin(Node& node);
  void unpin(Node& node);
  void touch(Node& node, SimTime now);
  void refresh_candidate(Node& node);
  void evict_one();
  void dump_subtree(std::string& out, const Children& children, uint64_t hash,
                    int indent) const;

  uint32_t block_size_;
  uint64_t capacity_blocks_;
  uint64_t used_blocks_ = 0;
  uint64_t peak_used_blocks_ = 0;
  uint64_t pinned_blocks_ = 0;
  BlockId next_id_ = 1;

  uint64_t matched_tokens_ = 0;
  uint64_t lookup_tokens_ = 0;
  uint64_t eviction_count_ = 0;

  std::unordered_map<BlockId, Node> blocks_;
  std::map<Namespace, Children> roots_;
  std::map<Namespace, uint64_t> ns_blocks_;
  std::map<Namespace, uint64_t> ns_peak_blocks_;
  std::set<CandidateKey> candidates_;
  EvictionObserver on_evict_;
};

}  // namespace prefixsim::kv
