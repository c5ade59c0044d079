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

#include "prefixsim/kv/block_pool.h"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>

namespace prefixsim::kv {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

uint64_t fnv_extend(uint64_t hash, std::span<const TokenId> tokens) {
  for (TokenId t : tokens) {
    for (int i = 0; i < 8; ++i) {
      hash ^= (t >> (8 * i)) & 0xFF;
      hash *= kFnvPrime;
    }
  }
  return hash;
}

}  // namespace

std::string Namespace::to_string() const {
  return kind == Kind::kShared ? std::string("shared") : "model:" + model;
}

BlockPool::BlockPool(uint32_t block_size, uint64_t capacity_blocks)
    : block_size_(block_size), capacity_blocks_(capacity_blocks) {
  if (block_size_ == 0) {
    throw std::invalid_argument("block_size must be > 0");
  }
}

const KvBlock& BlockPool::block(BlockId id) const {
  auto it = blocks_.find(id);
  if (it == blocks_.end()) {
    throw std::out_of_range("unknown block id " + std::to_string(id));
  }
  return it->second.block;
}

BlockPool::Children& BlockPool::children_of(const Namespace& ns, BlockId parent) {
  if (parent == kRoot) {
    return roots_[ns];
  }
  return blocks_.at(parent).children;
}

const BlockPool::Children* BlockPool::find_children(const Namespace& ns,
                                                    BlockId parent) const {
  if (parent == kRoot) {
    auto it = roots_.find(ns);
    return it == roots_.end() ? nullptr : &it->second;
  }
  return &blocks_.at(parent).children;
}

void BlockPool::refresh_candidate(Node& node) {
  if (node.is_candidate) {
    candidates_.erase(node.candidate_key);
    node.is_candidate = false;
  }
  if (node.block.ref_count == 0 && node.children.empty()) {
    node.candidate_key = CandidateKey(node.block.last_access.us(),
                                      -static_cast<int64_t>(node.block.depth),
                                      node.block.id);
    candidates_.insert(node.candidate_key);
    node.is_candidate = true;
  }
}

void BlockPool::pin(Node& node) {
  if (node.block.ref_count++ == 0) {
    ++pinned_blocks_;
  }
  refresh_candidate(node);
}

void BlockPool::unpin(Node& node) {
  if (node.block.ref_count == 0) {
    throw std::logic_error("release underflow on block " +
                           std::to_string(node.block.id));
  }
  if (--node.block.ref_count == 0) {
    --pinned_blocks_;
  }
  refresh_candidate(node);
}

void BlockPool::touch(Node& node, SimTime now) {
  node.block.last_access = now;
  refresh_candidate(node);
}

PrefixMatch BlockPool::longest_prefix_match(const Namespace& ns,
                                            const TokenSeq& query, SimTime now) {
  PrefixMatch match;
  lookup_tokens_ += query.size();
  const size_t full_blocks = query.size() / block_size_;
  const Children* children = find_children(ns, kRoot);
  for (size_t i = 0; children != nullptr && i < full_blocks; ++i) {
    auto span = query.slice(i * block_size_, block_size_);
    auto it = children->find(Key(span.begin(), span.end()));
    if (it == children->end()) {
      break;
    }
    Node& node = blocks_.at(it->second);
    node.block.last_access = now;
    pin(node);
    match.blocks.push_back(node.block.id);
    children = &node.children;
  }
  match.matched_tokens = match.blocks.size() * block_size_;
  matched_tokens_ += match.matched_tokens;
  return match;
}

InsertResult BlockPool::insert(const Namespace& ns, const TokenSeq& seq,
                               SimTime now, bool pin_path) {
  InsertResult result;
  const size_t full_blocks = seq.size() / block_size_;

  // Pin the cached part of the path so eviction cannot cut it.
  std::vector<BlockId> path;
  BlockId parent = kRoot;
  for (size_t i = 0; i < full_blocks; ++i) {
    const Children* children = find_children(ns, parent);
    if (children == nullptr) {
      break;
    }
    auto span = seq.slice(i * block_size_, block_size_);
    auto it = children->find(Key(span.begin(), span.end()));
    if (it == children->end()) {
      break;
    }
    pin(blocks_.at(it->second));
    path.push_back(it->second);
    parent = it->second;
  }

  const uint64_t need = full_blocks - path.size();
  if (need > 0 && free_blocks() < need) {
    const uint64_t reclaimable = used_blocks_ - pinned_blocks_;
    if (free_blocks() + reclaimable < need) {
      for (BlockId id : path) {
        unpin(blocks_.at(id));
      }
      throw CapacityExhausted("insert needs " + std::to_string(need) +
                              " blocks, only " +
                              std::to_string(free_blocks() + reclaimable) +
                              " reclaimable");
    }
    evict_until(need);
  }
  for (BlockId id : path) {
    touch(blocks_.at(id), now);
  }

  for (size_t i = path.size(); i < full_blocks; ++i) {
    auto span = seq.slice(i * block_size_, block_size_);
    Node node;
    node.block.id = next_id_++;
    node.block.ns = ns;
    node.block.tokens.assign(span.begin(), span.end());
    node.block.last_access = now;
    node.block.depth = static_cast<uint32_t>(i + 1);
    node.parent = parent;
    const BlockId id = node.block.id;
    children_of(ns, parent).emplace(node.block.tokens, id);
    if (parent != kRoot) {
      refresh_candidate(blocks_.at(parent));
    }
    Node& inserted = blocks_.emplace(id, std::move(node)).first->second;
    pin(inserted);
    ++used_blocks_;
    uint64_t& ns_count = ++ns_blocks_[ns];
    ns_peak_blocks_[ns] = std::max(ns_peak_blocks_[ns], ns_count);
    peak_used_blocks_ = std::max(peak_used_blocks_, used_blocks_);
    result.allocated.push_back(id);
    path.push_back(id);
    parent = id;
  }

  if (pin_path) {
    result.pinned = path;
  } else {
    for (BlockId id : path) {
      unpin(blocks_.at(id));
    }
  }
  return result;
}

void BlockPool::evict_one() {
  auto first = candidates_.begin();
  const BlockId id = std::get<2>(*first);
  candidates_.erase(first);
  auto it = blocks_.find(id);
  Node& node = it->second;
  node.is_candidate = false;
  if (on_evict_) {
    on_evict_(node.block);
  }
  const Namespace ns = node.block.ns;
  const BlockId parent = node.parent;
  children_of(ns, parent).erase(node.block.tokens);
  blocks_.erase(it);
  --used_blocks_;
  if (--ns_blocks_[ns] == 0) {
    ns_blocks_.erase(ns);
  }
  ++eviction_count_;
  if (parent != kRoot) {
    refresh_candidate(blocks_.at(parent));
  } else if (roots_[ns].empty()) {
    roots_.erase(ns);
  }
}

uint64_t BlockPool::evict_until(uint64_t need) {
  if (need > capacity_blocks_) {
    throw std::invalid_argument("evict_until: need exceeds capacity");
  }
  if (free_blocks() >= need) {
    return 0;
  }
  if (free_blocks() + (used_blocks_ - pinned_blocks_) < need) {
    throw CapacityExhausted("evict_until: pinned blocks prevent freeing " +
                            std::to_string(need) + " blocks");
  }
  uint64_t evicted = 0;
  while (free_blocks() < need) {
    if (candidates_.empty()) {
      throw CapacityExhausted("evict_until: no evictable block left");
    }
    evict_one();
    ++evicted;
  }
  return evicted;
}

void BlockPool::release(std::span<const BlockId> blocks) {
  for (BlockId id : blocks) {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) {
      throw std::logic_error("release of unknown block " + std::to_string(id));
    }
    unpin(it->second);
  }
}

std::map<Namespace, uint64_t> BlockPool::footprint_tokens() const {
  std::map<Namespace, uint64_t> out;
  for (const auto& [ns, count] : ns_blocks_) {
    out[ns] = count * block_size_;
  }
  return out;
}

std::map<Namespace, uint64_t> BlockPool::peak_footprint_by_namespace() const {
  std::map<Namespace, uint64_t> out;
  for (const auto& [ns, count] : ns_peak_blocks_) {
    out[ns] = count * block_size_;
  }
  return out;
}

PoolStats BlockPool::stats() const {
  return PoolStats{capacity_blocks_, used_blocks_, free_blocks(),
                   matched_tokens_,  lookup_tokens_, eviction_count_};
}

void BlockPool::dump_subtree(std::string& out, const Children& children,
                             uint64_t hash, int indent) const {
  for (const auto& [key, id] : children) {
    const Node& node = blocks_.at(id);
    const uint64_t path_hash = fnv_extend(hash, key);
    char line[128];
    std::snprintf(line, sizeof(line), "%016" PRIx64 " %" PRIu64 " %u %" PRId64 "\n",
                  path_hash, id, node.block.ref_count, node.block.last_access.us());
    out.append(static_cast<size_t>(indent) * 2, ' ');
    out += line;
    dump_subtree(out, node.children, path_hash, indent + 1);
  }
}

std::string BlockPool::dump() const {
  std::string out;
  for (const auto& [ns, children] : roots_) {
    out += "[" + ns.to_string() + "]\n";
    dump_subtree(out, children, kFnvOffset, 1);
  }
  return out;
}

void BlockPool::check_invariants() const {
  if (used_blocks_ > capacity_blocks_) {
    throw std::logic_error("used blocks exceed capacity");
  }
  if (used_blocks_ != blocks_.size()) {
    throw std::logic_error("used block count drifted");
  }
  uint64_t pinned = 0;
  uint64_t candidates = 0;
  for (const auto& [id, node] : blocks_) {
    if (node.block.ref_count > 0) {
      ++pinned;
    }
    const bool eligible = node.block.ref_count == 0 && node.children.empty();
    if (eligible != node.is_candidate) {
      throw std::logic_error("candidate set out of sync for block " +
                             std::to_string(id));
    }
    candidates += eligible ? 1 : 0;
    if (node.block.tokens.size() != block_size_) {
      throw std::logic_error("block with partial token span");
    }
  }
  if (pinned != pinned_blocks_ || candidates != candidates_.size()) {
    throw std::logic_error("pin/candidate counters drifted");
  }
}

}  // namespace prefixsim::kv
