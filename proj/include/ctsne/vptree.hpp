#ifndef CTSNE_VPTREE_HPP
#define CTSNE_VPTREE_HPP

#include "common.hpp"
#include "random.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace ctsne {

/// k nearest neighbors per point, sorted by (squared distance, index).
struct NeighborLists {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> indices;
    std::vector<double> sq_distances;

    std::span<const std::uint32_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }
    std::span<const double> distances(std::size_t i) const { return {sq_distances.data() + i * k, k}; }
};

/**
 * Vantage-point tree over the rows of a matrix with Euclidean distance.
 *
 * Search is exact. Candidates are ordered by (squared distance, index) so
 * ties resolve to the lower index, matching a brute-force sort.
 */
class VpTree {
public:
    explicit VpTree(const Matrix& points, std::uint64_t seed = 42) : points_(&points) {
        order_.resize(points.rows());
        for (std::size_t i = 0; i < order_.size(); ++i) {
            order_[i] = static_cast<std::uint32_t>(i);
        }
        nodes_.reserve(points.rows());
        Rng rng(seed);
        if (!order_.empty()) {
            root_ = build(0, order_.size(), rng);
        }
    }

    /// The k nearest rows to `query`, skipping row `exclude` (pass npos to keep all).
    std::vector<std::pair<double, std::uint32_t>> search(std::span<const double> query, std::size_t k,
                                                         std::size_t exclude = npos) const {
        Heap heap;
        if (root_ != npos && k > 0) {
            search(root_, query, k, exclude, heap);
        }
        std::vector<std::pair<double, std::uint32_t>> out(heap.size());
        for (std::size_t i = out.size(); i > 0; --i) {
            out[i - 1] = heap.top();
            heap.pop();
        }
        return out;
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

private:
    struct Node {
        std::uint32_t point;
        double threshold = 0;
        std::size_t inside = npos;
        std::size_t outside = npos;
    };
    using Candidate = std::pair<double, std::uint32_t>;
    using Heap = std::priority_queue<Candidate>;

    double distance(std::uint32_t a, std::span<const double> q) const {
        return std::sqrt(squared_distance(points_->row(a), q));
    }

    std::size_t build(std::size_t lo, std::size_t hi, Rng& rng) {
        const std::size_t id = nodes_.size();
        const auto pick = lo + rng.below(hi - lo);
        std::swap(order_[lo], order_[pick]);
        nodes_.push_back({order_[lo]});
        if (hi - lo > 1) {
            const auto vp = points_->row(order_[lo]);
            const std::size_t mid = (lo + 1 + hi) / 2;
            std::nth_element(order_.begin() + lo + 1, order_.begin() + mid, order_.begin() + hi,
                             [&](std::uint32_t a, std::uint32_t b) {
                                 return squared_distance(points_->row(a), vp) < squared_distance(points_->row(b), vp);
                             });
            nodes_[id].threshold = distance(order_[mid], vp);
            const auto inside = lo + 1 < mid ? build(lo + 1, mid, rng) : npos;
            const auto outside = build(mid, hi, rng);
            nodes_[id].inside = inside;
            nodes_[id].outside = outside;
        }
        return id;
    }

    void search(std::size_t id, std::span<const double> q, std::size_t k, std::size_t exclude, Heap& heap) const {
        const Node& node = nodes_[id];
        const double d2 = squared_distance(points_->row(node.point), q);
        if (node.point != exclude) {
            const Candidate c{d2, node.point};
            if (heap.size() < k) {
                heap.push(c);
            } else if (c < heap.top()) {
                heap.pop();
                heap.push(c);
            }
        }
        const double d = std::sqrt(d2);
        // Slack covers rounding in the triangle inequality so exact ties are never pruned.
        auto tau = [&] {
            return heap.size() < k ? std::numeric_limits<double>::infinity()
                                   : std::sqrt(heap.top().first) * (1 + 1e-10) + 1e-300;
        };
        if (d < node.threshold) {
            if (node.inside != npos && d - tau() <= node.threshold) {
                search(node.inside, q, k, exclude, heap);
            }
            if (node.outside != npos && node.threshold - d <= tau()) {
                search(node.outside, q, k, exclude, heap);
            }
        } else {
            if (node.outside != npos && node.threshold - d <= tau()) {
                search(node.outside, q, k, exclude, heap);
            }
            if (node.inside != npos && d - tau() <= node.threshold) {
                search(node.inside, q, k, exclude, heap);
            }
        }
    }

    const Matrix* points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t root_ = npos;
};

/// Exact kNN of every row among the other rows.
inline NeighborLists knn_search(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    require(k >= 1, "k must be at least 1");
    require(k < n, "k = " + std::to_string(k) + " must be smaller than n = " + std::to_string(n));
    const VpTree tree(points);
    NeighborLists out{n, k, std::vector<std::uint32_t>(n * k), std::vector<double>(n * k)};
    parallel_for(n, [&](std::size_t i) {
        const auto found = tree.search(points.row(i), k, i);
        for (std::size_t m = 0; m < k; ++m) {
            out.sq_distances[i * k + m] = found[m].first;
            out.indices[i * k + m] = found[m].second;
        }
    });
    return out;
}

} // namespace ctsne

#endif
