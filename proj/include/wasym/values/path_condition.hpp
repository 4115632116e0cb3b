#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <vector>

#include "wasym/values/expr.hpp"

namespace wasym::sym {

/// Persistent conjunct list. Extending never mutates, so sibling branches share
/// their common prefix node for node, which incremental solver sessions exploit.
class PathCondition {
 public:
  struct Node {
    ExprPtr conjunct;
    std::shared_ptr<const Node> prev;
    std::size_t length = 0;

    Node(ExprPtr c, std::shared_ptr<const Node> p)
        : conjunct(std::move(c)), prev(std::move(p)), length(prev ? prev->length + 1 : 1) {}
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    ~Node() {
      auto p = std::move(prev);
      while (p && p.use_count() == 1) {
        auto next = std::move(const_cast<Node&>(*p).prev);
        p = std::move(next);
      }
    }
  };

  PathCondition() = default;

  PathCondition with(ExprPtr conjunct) const {
    PathCondition pc;
    pc.head_ = std::make_shared<const Node>(std::move(conjunct), head_);
    return pc;
  }

  std::size_t size() const { return head_ ? head_->length : 0; }
  bool empty() const { return !head_; }
  const Node* head() const { return head_.get(); }
  const std::shared_ptr<const Node>& head_ptr() const { return head_; }

  /// Conjuncts oldest first.
  std::vector<ExprPtr> conjuncts() const {
    std::vector<ExprPtr> out;
    out.reserve(size());
    for (const Node* n = head_.get(); n; n = n->prev.get()) out.push_back(n->conjunct);
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Nodes oldest first.
  std::vector<const Node*> nodes() const {
    std::vector<const Node*> out;
    out.reserve(size());
    for (const Node* n = head_.get(); n; n = n->prev.get()) out.push_back(n);
    std::reverse(out.begin(), out.end());
    return out;
  }

  bool is_prefix_of(const PathCondition& other) const {
    const Node* n = other.head_.get();
    while (n && n->length > size()) n = n->prev.get();
    return n == head_.get();
  }

 private:
  std::shared_ptr<const Node> head_;
};

}  // namespace wasym::sym
