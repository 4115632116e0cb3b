#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "wasym/wat/ast.hpp"

namespace wasym::mem {

/// Raised on an attempt to modify a snapshot that already has children.
class FrozenSnapshotError : public std::logic_error {
 public:
  FrozenSnapshotError() : std::logic_error("write into a frozen memory snapshot") {}
};

template <class Cell>
struct SnapshotNode {
  std::shared_ptr<const SnapshotNode> parent;
  std::unordered_map<std::uint32_t, Cell> writes;
  std::size_t depth = 0;
  mutable std::atomic<bool> frozen{false};

  static std::atomic<std::int64_t>& retained() {
    static std::atomic<std::int64_t> count{0};
    return count;
  }

  SnapshotNode() = default;
  explicit SnapshotNode(std::shared_ptr<const SnapshotNode> p) : parent(std::move(p)), depth(parent->depth + 1) {
    parent->frozen.store(true, std::memory_order_relaxed);
  }
  SnapshotNode(const SnapshotNode&) = delete;
  SnapshotNode& operator=(const SnapshotNode&) = delete;

  ~SnapshotNode() {
    retained().fetch_sub(static_cast<std::int64_t>(writes.size()), std::memory_order_relaxed);
    // Unlink uniquely-owned ancestors iteratively so long chains do not recurse.
    auto p = std::move(parent);
    while (p && p.use_count() == 1) {
      auto next = std::const_pointer_cast<SnapshotNode>(p)->take_parent();
      p = std::move(next);
    }
  }

  std::shared_ptr<const SnapshotNode> take_parent() { return std::move(parent); }

  void write(std::uint32_t addr, Cell value) {
    if (frozen.load(std::memory_order_relaxed)) throw FrozenSnapshotError{};
    auto [it, inserted] = writes.insert_or_assign(addr, std::move(value));
    if (inserted) retained().fetch_add(1, std::memory_order_relaxed);
  }
};

/// Linear memory as a chain of modification maps over a zero-filled base. Copying a
/// snapshot shares its node; the first write through a shared or frozen node starts a
/// child node, so a fork costs O(1) and a branch retains only the bytes it wrote.
template <class Cell>
class MemorySnapshot {
 public:
  using Node = SnapshotNode<Cell>;

  MemorySnapshot() : MemorySnapshot(0, std::nullopt, Cell{}) {}

  MemorySnapshot(std::uint32_t min_pages, std::optional<std::uint32_t> max_pages, Cell zero)
      : node_(std::make_shared<Node>()),
        zero_(std::move(zero)),
        size_(std::uint64_t{min_pages} * wat::kPageSize),
        max_pages_(max_pages) {}

  std::uint64_t size_bytes() const { return size_; }
  std::uint32_t pages() const { return static_cast<std::uint32_t>(size_ / wat::kPageSize); }
  std::optional<std::uint32_t> max_pages() const { return max_pages_; }

  /// Number of nodes between this view and the root.
  std::size_t chain_depth() const { return node_->depth; }

  const Cell& load(std::uint32_t addr) const {
    for (const Node* n = node_.get(); n; n = n->parent.get()) {
      if (auto it = n->writes.find(addr); it != n->writes.end()) return it->second;
    }
    return zero_;
  }

  void store(std::uint32_t addr, Cell value) {
    if (retired_) throw FrozenSnapshotError{};
    if (node_.use_count() > 1 || node_->frozen.load(std::memory_order_relaxed))
      node_ = std::make_shared<Node>(std::shared_ptr<const Node>(node_));
    node_->write(addr, std::move(value));
  }

  /// Returns the previous size in pages, or -1 if the maximum would be exceeded.
  std::int64_t grow(std::uint32_t delta_pages) {
    const std::uint64_t old_pages = pages();
    const std::uint64_t limit = max_pages_ ? *max_pages_ : wat::kMaxPages;
    if (old_pages + delta_pages > limit) return -1;
    size_ += std::uint64_t{delta_pages} * wat::kPageSize;
    return static_cast<std::int64_t>(old_pages);
  }

  /// Freezes `m` and returns two children that start empty and read through to it.
  /// `m` stays readable but any later store through it is an error.
  static std::pair<MemorySnapshot, MemorySnapshot> fork(MemorySnapshot& m) {
    m.node_->frozen.store(true, std::memory_order_relaxed);
    m.retired_ = true;
    MemorySnapshot left = m;
    MemorySnapshot right = m;
    left.retired_ = right.retired_ = false;
    left.node_ = std::make_shared<Node>(std::shared_ptr<const Node>(m.node_));
    right.node_ = std::make_shared<Node>(std::shared_ptr<const Node>(m.node_));
    return {std::move(left), std::move(right)};
  }

  /// Direct access to the tip node; writes through it bypass copy-on-write.
  Node& tip() { return *node_; }

  /// Total modification-map entries alive across all snapshots of this cell type.
  static std::int64_t retained_entries() { return Node::retained().load(); }

 private:
  std::shared_ptr<Node> node_;
  Cell zero_;
  std::uint64_t size_;
  std::optional<std::uint32_t> max_pages_;
  bool retired_ = false;
};

}  // namespace wasym::mem
