#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <vector>

#include "matchkit/core.hpp"

namespace matchkit {

template <typename Scalar>
struct Neighbor {
  Index id;
  Scalar squared_distance;

  Scalar distance() const { return std::sqrt(squared_distance); }

  friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending by (distance, id).
template <typename Scalar>
using NeighborList = std::vector<Neighbor<Scalar>>;

template <typename Scalar>
class NeighborStream;

/// Immutable k-d tree over a point set.
///
/// Splits cycle through the coordinates with depth and cut at the median
/// position, so the tree is balanced. Points are copied into tree order for
/// locality; ids reported by queries are the row indices of the source set.
/// Distance ties are broken by the smaller id. The leaf size only affects
/// speed, never results.
template <typename Scalar = double>
class KdTree {
 public:
  struct Node {
    Index begin;
    Index end;
    Index left = -1;
    Index right = -1;
    Index split_dim = -1;
    Scalar split_value = 0;

    bool is_leaf() const noexcept { return left < 0; }
  };

  explicit KdTree(const BasicPointSet<Scalar>& points, Index leaf_size = 16)
      : dim_(points.dim()), leaf_size_(std::max<Index>(leaf_size, 1)) {
    if (points.empty()) throw Error(Errc::EmptySample, "cannot index an empty point set");
    const Index n = points.size();
    ids_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids_[static_cast<std::size_t>(i)] = i;
    nodes_.reserve(static_cast<std::size_t>(2 * (n / leaf_size_ + 1)));
    build(points, 0, n, 0);

    points_.resize(n, dim_);
    for (Index pos = 0; pos < n; ++pos) points_.row(pos) = points.matrix().row(ids_[static_cast<std::size_t>(pos)]);
    compute_boxes();
  }

  Index size() const noexcept { return points_.rows(); }
  Index dim() const noexcept { return dim_; }
  Index leaf_size() const noexcept { return leaf_size_; }
  Index depth() const noexcept { return depth_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  /// Source id of the point stored at tree position `pos`.
  Index id_at(Index pos) const { return ids_[static_cast<std::size_t>(pos)]; }

  /// Exact k nearest neighbors of `query`.
  NeighborList<Scalar> knn(std::span<const Scalar> query, Index k) const {
    NeighborList<Scalar> out;
    knn_into(query, k, out);
    return out;
  }

  /// As knn(), writing into `out` so callers can reuse its storage across queries.
  void knn_into(std::span<const Scalar> query, Index k, NeighborList<Scalar>& out) const {
    check_query(query);
    if (k < 1 || k > size()) {
      throw Error(Errc::InvalidK, "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(size()) + "]");
    }
    out.clear();
    out.reserve(static_cast<std::size_t>(k));
    search(0, query, k, out);
    std::sort_heap(out.begin(), out.end());
  }

  NeighborList<Scalar> knn(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& query, Index k) const {
    return knn(std::span<const Scalar>(query.data(), static_cast<std::size_t>(query.size())), k);
  }

  /// Neighbors of `query` one at a time in ascending (distance, id) order.
  NeighborStream<Scalar> stream(std::span<const Scalar> query) const { return NeighborStream<Scalar>(*this, query); }

 private:
  friend class NeighborStream<Scalar>;

  std::span<const Scalar> point_at(Index pos) const {
    return {points_.data() + pos * dim_, static_cast<std::size_t>(dim_)};
  }

  void check_query(std::span<const Scalar> query) const {
    if (static_cast<Index>(query.size()) != dim_) {
      throw Error(Errc::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                               ", index has dimension " + std::to_string(dim_));
    }
  }

  Index build(const BasicPointSet<Scalar>& points, Index begin, Index end, Index level) {
    depth_ = std::max(depth_, level + 1);
    const Index node_id = static_cast<Index>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return node_id;

    const Index dim = level % dim_;
    const Index mid = begin + (end - begin) / 2;
    const auto& m = points.matrix();
    auto first = ids_.begin() + begin;
    std::nth_element(first, ids_.begin() + mid, ids_.begin() + end, [&](Index a, Index b) {
      const Scalar va = m(a, dim), vb = m(b, dim);
      return va < vb || (va == vb && a < b);
    });
    const Scalar split = m(ids_[static_cast<std::size_t>(mid)], dim);
    const Index left = build(points, begin, mid, level + 1);
    const Index right = build(points, mid, end, level + 1);
    Node& node = nodes_[static_cast<std::size_t>(node_id)];
    node.left = left;
    node.right = right;
    node.split_dim = dim;
    node.split_value = split;
    return node_id;
  }

  void compute_boxes() {
    boxes_.assign(nodes_.size() * static_cast<std::size_t>(2 * dim_), Scalar(0));
    for (std::size_t ni = nodes_.size(); ni-- > 0;) {
      const Node& node = nodes_[ni];
      Scalar* lo = boxes_.data() + ni * static_cast<std::size_t>(2 * dim_);
      Scalar* hi = lo + dim_;
      if (node.is_leaf()) {
        for (Index k = 0; k < dim_; ++k) lo[k] = hi[k] = points_(node.begin, k);
        for (Index pos = node.begin + 1; pos < node.end; ++pos) {
          for (Index k = 0; k < dim_; ++k) {
            lo[k] = std::min(lo[k], points_(pos, k));
            hi[k] = std::max(hi[k], points_(pos, k));
          }
        }
      } else {
        const Scalar* llo = boxes_.data() + static_cast<std::size_t>(node.left) * static_cast<std::size_t>(2 * dim_);
        const Scalar* rlo = boxes_.data() + static_cast<std::size_t>(node.right) * static_cast<std::size_t>(2 * dim_);
        for (Index k = 0; k < dim_; ++k) {
          lo[k] = std::min(llo[k], rlo[k]);
          hi[k] = std::max(llo[dim_ + k], rlo[dim_ + k]);
        }
      }
    }
  }

  /// Squared distance from `query` to the bounding box of node `ni`.
  Scalar box_distance(Index ni, std::span<const Scalar> query) const noexcept {
    const Scalar* lo = boxes_.data() + static_cast<std::size_t>(ni) * static_cast<std::size_t>(2 * dim_);
    const Scalar* hi = lo + dim_;
    Scalar acc = 0;
    for (Index k = 0; k < dim_; ++k) {
      const Scalar q = query[static_cast<std::size_t>(k)];
      Scalar gap = 0;
      if (q < lo[k]) gap = lo[k] - q;
      else if (q > hi[k]) gap = q - hi[k];
      acc += gap * gap;
    }
    return acc;
  }

  void search(Index ni, std::span<const Scalar> query, Index k, NeighborList<Scalar>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(ni)];
    if (node.is_leaf()) {
      for (Index pos = node.begin; pos < node.end; ++pos) {
        Neighbor<Scalar> cand{ids_[static_cast<std::size_t>(pos)], squared_distance(point_at(pos), query)};
        if (static_cast<Index>(heap.size()) < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const bool go_left = query[static_cast<std::size_t>(node.split_dim)] < node.split_value;
    const Index near = go_left ? node.left : node.right;
    const Index far = go_left ? node.right : node.left;
    for (Index child : {near, far}) {
      // Equal bounds are still visited: the subtree may hold a tied point with a smaller id.
      if (static_cast<Index>(heap.size()) == k && box_distance(child, query) > heap.front().squared_distance) continue;
      search(child, query, k, heap);
    }
  }

  Index dim_;
  Index leaf_size_;
  Index depth_ = 0;
  RowMatrix<Scalar> points_;
  std::vector<Index> ids_;
  std::vector<Node> nodes_;
  std::vector<Scalar> boxes_;
};

/// Incremental nearest-neighbor search (best-first over nodes and points).
///
/// At equal keys nodes are expanded before points are emitted, and points are
/// emitted by ascending id, so the sequence matches a full (distance, id) sort.
template <typename Scalar>
class NeighborStream {
 public:
  NeighborStream(const KdTree<Scalar>& tree, std::span<const Scalar> query) : tree_(&tree) {
    tree.check_query(query);
    query_.assign(query.begin(), query.end());
    push(Entry{tree.box_distance(0, query_), 0, false});
  }

  /// Next neighbor, or nullopt once every indexed point has been produced.
  std::optional<Neighbor<Scalar>> next() {
    while (!queue_.empty()) {
      const Entry top = queue_.front();
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      queue_.pop_back();
      if (top.is_point) return Neighbor<Scalar>{top.ref, top.key};
      expand(top.ref);
    }
    return std::nullopt;
  }

  /// Squared distance of the neighbor `next()` would return, without consuming it.
  std::optional<Scalar> peek_squared_distance() {
    while (!queue_.empty() && !queue_.front().is_point) {
      const Entry top = queue_.front();
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      queue_.pop_back();
      expand(top.ref);
    }
    if (queue_.empty()) return std::nullopt;
    return queue_.front().key;
  }

 private:
  struct Entry {
    Scalar key;
    Index ref;  // source id for points, node index for nodes
    bool is_point;
  };

  // Heap comparator: "a is popped after b".
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const noexcept {
      if (a.key != b.key) return a.key > b.key;
      if (a.is_point != b.is_point) return a.is_point;
      return a.ref > b.ref;
    }
  };

  void push(Entry e) {
    queue_.push_back(e);
    std::push_heap(queue_.begin(), queue_.end(), Later{});
  }

  void expand(Index ni) {
    const auto& node = tree_->nodes_[static_cast<std::size_t>(ni)];
    const std::span<const Scalar> q(query_);
    if (node.is_leaf()) {
      for (Index pos = node.begin; pos < node.end; ++pos) {
        push(Entry{squared_distance(tree_->point_at(pos), q), tree_->ids_[static_cast<std::size_t>(pos)], true});
      }
    } else {
      push(Entry{tree_->box_distance(node.left, q), node.left, false});
      push(Entry{tree_->box_distance(node.right, q), node.right, false});
    }
  }

  const KdTree<Scalar>* tree_;
  std::vector<Scalar> query_;
  std::vector<Entry> queue_;
};

/// Double-precision index used by the estimators.
using NnIndex = KdTree<double>;

}  // namespace matchkit
