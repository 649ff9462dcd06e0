#ifndef CTSNE_QUADTREE_HPP
#define CTSNE_QUADTREE_HPP

#include "data_model.hpp"

#include <array>

namespace ctsne {

/// How the summarization test scales with distance.
enum class Criterion {
    /// r_cell / |y_i - y_cell| < theta.
    standard,
    /// r_cell / |y_i - y_cell|^2 < theta.
    paper,
};

struct QuadNode {
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
    std::array<double, 2> center_of_mass{};
    std::uint32_t count = 0;
    /// Longest side of the cell's box.
    double radius = 0;
    /// Child index per quadrant, or -1 when that quadrant is empty or this is a leaf.
    std::array<std::int32_t, 4> children{-1, -1, -1, -1};
    bool leaf = true;
    /// Range of this cell's points in LabelQuadTree::order().
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    /// One past the last node of this cell's subtree (nodes are in depth-first order).
    std::uint32_t skip = 0;

    bool contains(std::span<const double> y) const {
        return y[0] >= lo[0] && y[0] <= hi[0] && y[1] >= lo[1] && y[1] <= hi[1];
    }
};

/// Compact copy of a node's traversal fields, one cache line each.
struct alignas(64) TraversalCell {
    double lo[2];
    double hi[2];
    double com[2];
    std::uint32_t count;
    std::uint32_t skip;
    std::uint32_t begin;
    std::uint32_t end;
};

/// Per-cell, per-label point count and coordinate sum.
struct LabelStat {
    double sum[2] = {0, 0};
    std::uint32_t count = 0;
};

/// A point as stored in tree order, so leaf visits read contiguous memory.
struct TreePoint {
    double x, y;
    std::uint32_t index, label;
};

/**
 * Summarize a cell iff it does not contain y and r_cell / dist^p < theta,
 * p = 1 (standard) or 2 (paper). theta = 0 never summarizes.
 */
inline bool should_summarize(const QuadNode& cell, std::span<const double> y, double theta,
                             Criterion criterion = Criterion::standard) {
    if (cell.contains(y)) {
        return false;
    }
    const double dx = y[0] - cell.center_of_mass[0], dy = y[1] - cell.center_of_mass[1];
    const double dist2 = dx * dx + dy * dy;
    const double scale = criterion == Criterion::standard ? std::sqrt(dist2) : dist2;
    return cell.radius < theta * scale;
}

/**
 * Quadtree over a 2-d embedding whose cells carry a center of mass, a point
 * count and a per-label histogram. Leaves hold either a single point or a
 * stack of coincident points.
 */
class LabelQuadTree {
public:
    static constexpr int kMaxDepth = 64;

    LabelQuadTree(const EmbeddingMatrix& y, const LabelVector& labels) : y_(&y), labels_(labels.num_classes()) {
        const std::size_t n = y.size();
        require(y.dims() == 2, "the label quadtree supports 2-d embeddings only");
        require(n >= 1, "cannot build a quadtree without points");
        require(labels.size() == n, "labels and embedding disagree on n");
        if (!y.coords.all_finite()) {
            throw Error("embedding contains non-finite coordinates");
        }
        label_of_ = labels.labels();
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            order_[i] = static_cast<std::uint32_t>(i);
        }
        std::array<double, 2> lo{y.coords(0, 0), y.coords(0, 1)}, hi = lo;
        for (std::size_t i = 1; i < n; ++i) {
            for (int k = 0; k < 2; ++k) {
                lo[k] = std::min(lo[k], y.coords(i, k));
                hi[k] = std::max(hi[k], y.coords(i, k));
            }
        }
        double side = std::max(hi[0] - lo[0], hi[1] - lo[1]);
        if (!(side > 0)) {
            side = 1;
        }
        side *= 1 + 1e-9;
        nodes_.reserve(2 * n);
        build(0, static_cast<std::uint32_t>(n), lo, {lo[0] + side, lo[1] + side}, 0);
        cells_.resize(nodes_.size());
        for (std::size_t id = 0; id < nodes_.size(); ++id) {
            const QuadNode& node = nodes_[id];
            cells_[id] = {{node.lo[0], node.lo[1]}, {node.hi[0], node.hi[1]},
                          {node.center_of_mass[0], node.center_of_mass[1]}, node.count, node.skip, node.begin,
                          node.end};
        }
        points_.resize(n);
        for (std::size_t pos = 0; pos < n; ++pos) {
            const auto i = order_[pos];
            points_[pos] = {y.coords(i, 0), y.coords(i, 1), i, label_of_[i]};
        }
    }

    const QuadNode& root() const { return nodes_.front(); }
    const QuadNode& node(std::size_t id) const { return nodes_[id]; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t num_labels() const { return labels_; }
    const std::vector<std::uint32_t>& order() const { return order_; }
    std::uint32_t label_of(std::size_t point) const { return label_of_[point]; }

    const LabelStat& label_stat(std::size_t id, std::size_t label) const { return stats_[id * labels_ + label]; }

    std::vector<std::uint32_t> histogram(std::size_t id) const {
        std::vector<std::uint32_t> out(labels_);
        for (std::size_t l = 0; l < labels_; ++l) {
            out[l] = label_stat(id, l).count;
        }
        return out;
    }

    /// Coordinate sum of the cell's points carrying label `label`.
    std::array<double, 2> label_sum(std::size_t id, std::size_t label) const {
        const auto& s = label_stat(id, label);
        return {s.sum[0], s.sum[1]};
    }

    /**
     * Depth-first traversal for target point `target`. Each cell that passes
     * the criterion goes to on_cell(node_id); every other point reached in an
     * unsummarized leaf goes to on_point(TreePoint). The target itself is skipped,
     * so exactly n - 1 points are covered.
     */
    template <typename OnCell, typename OnPoint>
    void traverse(std::size_t target, double theta, Criterion criterion, OnCell&& on_cell, OnPoint&& on_point) const {
        const auto y = y_->coords.row(target);
        const double x0 = y[0], x1 = y[1];
        const bool squared = criterion == Criterion::paper;
        // Depth-first order without a stack: descend to id + 1, or jump past the subtree.
        std::size_t id = 0;
        while (id < cells_.size()) {
            const TraversalCell& cell = cells_[id];
            const bool inside = x0 >= cell.lo[0] && x0 <= cell.hi[0] && x1 >= cell.lo[1] && x1 <= cell.hi[1];
            if (!inside) {
                const double dx = x0 - cell.com[0], dy = x1 - cell.com[1];
                const double dist2 = dx * dx + dy * dy;
                const double radius = std::max(cell.hi[0] - cell.lo[0], cell.hi[1] - cell.lo[1]);
                if (radius < theta * (squared ? dist2 : std::sqrt(dist2))) {
                    on_cell(id);
                    id = cell.skip;
                    continue;
                }
            }
            if (cell.skip == id + 1) {
                for (auto it = cell.begin; it < cell.end; ++it) {
                    if (points_[it].index != target) {
                        on_point(points_[it]);
                    }
                }
            }
            ++id;
        }
    }

    const TraversalCell& cell(std::size_t id) const { return cells_[id]; }

private:
    void build(std::uint32_t begin, std::uint32_t end, std::array<double, 2> lo, std::array<double, 2> hi,
               int depth) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();
        stats_.resize(stats_.size() + labels_);
        {
            QuadNode& node = nodes_[id];
            node.lo = lo;
            node.hi = hi;
            node.radius = std::max(hi[0] - lo[0], hi[1] - lo[1]);
            node.count = end - begin;
            node.begin = begin;
            node.end = end;
        }
        const auto& c = y_->coords;
        bool coincident = true;
        for (auto it = begin + 1; it < end && coincident; ++it) {
            coincident = c(order_[it], 0) == c(order_[begin], 0) && c(order_[it], 1) == c(order_[begin], 1);
        }
        if (end - begin == 1 || coincident || depth >= kMaxDepth) {
            std::array<double, 2> com{0, 0};
            for (auto it = begin; it < end; ++it) {
                const auto point = order_[it];
                auto& stat = stats_[id * labels_ + label_of_[point]];
                com[0] += c(point, 0);
                com[1] += c(point, 1);
                ++stat.count;
                stat.sum[0] += c(point, 0);
                stat.sum[1] += c(point, 1);
            }
            nodes_[id].center_of_mass = {com[0] / (end - begin), com[1] / (end - begin)};
            nodes_[id].skip = static_cast<std::uint32_t>(id + 1);
            return;
        }

        const std::array<double, 2> mid{(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2};
        std::array<std::uint32_t, 5> bounds{};
        {
            const auto first = order_.begin();
            auto below = [&](int axis) { return [&, axis](std::uint32_t p) { return c(p, axis) < mid[axis]; }; };
            const auto split_y = std::partition(first + begin, first + end, below(1));
            const auto split_lo = std::partition(first + begin, split_y, below(0));
            const auto split_hi = std::partition(split_y, first + end, below(0));
            bounds = {begin, static_cast<std::uint32_t>(split_lo - first), static_cast<std::uint32_t>(split_y - first),
                      static_cast<std::uint32_t>(split_hi - first), end};
        }
        nodes_[id].leaf = false;
        std::array<double, 2> com{0, 0};
        for (int q = 0; q < 4; ++q) {
            if (bounds[q] == bounds[q + 1]) {
                continue;
            }
            const std::array<double, 2> clo{q & 1 ? mid[0] : lo[0], q & 2 ? mid[1] : lo[1]};
            const std::array<double, 2> chi{q & 1 ? hi[0] : mid[0], q & 2 ? hi[1] : mid[1]};
            const auto child = static_cast<std::int32_t>(nodes_.size());
            nodes_[id].children[q] = child;
            build(bounds[q], bounds[q + 1], clo, chi, depth + 1);
            const QuadNode& cn = nodes_[child];
            com[0] += cn.count * cn.center_of_mass[0];
            com[1] += cn.count * cn.center_of_mass[1];
            for (std::size_t l = 0; l < labels_; ++l) {
                auto& parent = stats_[id * labels_ + l];
                const auto& from = stats_[child * labels_ + l];
                parent.count += from.count;
                parent.sum[0] += from.sum[0];
                parent.sum[1] += from.sum[1];
            }
        }
        nodes_[id].center_of_mass = {com[0] / nodes_[id].count, com[1] / nodes_[id].count};
        nodes_[id].skip = static_cast<std::uint32_t>(nodes_.size());
    }

    const EmbeddingMatrix* y_;
    std::size_t labels_;
    std::vector<std::uint32_t> label_of_;
    std::vector<std::uint32_t> order_;
    std::vector<QuadNode> nodes_;
    std::vector<TraversalCell> cells_;
    std::vector<LabelStat> stats_;
    std::vector<TreePoint> points_;
};

inline LabelQuadTree build_quadtree(const EmbeddingMatrix& y, const LabelVector& labels) {
    return LabelQuadTree(y, labels);
}

} // namespace ctsne

#endif
