#ifndef CTSNE_EVALUATION_HPP
#define CTSNE_EVALUATION_HPP

#include "data_model.hpp"
#include "vptree.hpp"

#include <numeric>
#include <set>

namespace ctsne {

/// Undirected, unweighted kNN graph as sorted adjacency lists.
struct KnnGraph {
    std::vector<std::vector<std::uint32_t>> adjacency;

    std::size_t size() const { return adjacency.size(); }
    std::size_t degree(std::size_t i) const { return adjacency[i].size(); }

    bool has_edge(std::size_t i, std::size_t j) const {
        const auto& a = adjacency[i];
        return std::binary_search(a.begin(), a.end(), static_cast<std::uint32_t>(j));
    }

    static KnnGraph from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
        std::vector<std::set<std::uint32_t>> sets(n);
        for (auto [a, b] : edges) {
            require(a != b, "self-loops are not allowed");
            sets[a].insert(static_cast<std::uint32_t>(b));
            sets[b].insert(static_cast<std::uint32_t>(a));
        }
        KnnGraph g;
        for (auto& s : sets) {
            g.adjacency.emplace_back(s.begin(), s.end());
        }
        return g;
    }
};

/// Directed kNN edges of the embedding (ties to the lower index), symmetrized by union.
inline KnnGraph knn_graph(const Matrix& y, std::size_t k) {
    const auto knn = knn_search(y, k);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(knn.indices.size());
    for (std::size_t i = 0; i < knn.n; ++i) {
        for (auto j : knn.neighbors(i)) {
            edges.emplace_back(i, j);
        }
    }
    return KnnGraph::from_edges(knn.n, edges);
}

inline KnnGraph knn_graph(const EmbeddingMatrix& y, std::size_t k) { return knn_graph(y.coords, k); }

/// Degree normalization of the graph Laplacian L = D - A.
enum class LaplacianNormalization {
    /// D^-1 L. Vanishes whenever no edge joins differently labeled nodes.
    random_walk,
    /// D^-1/2 L D^-1/2. Also penalizes same-label edges between nodes of unequal degree.
    symmetric,
};

/**
 * Normalized Laplacian score sum_l (n_l / n) f_l' N f_l over one-hot label
 * indicators f_l, where N is the normalized Laplacian of the graph. Small
 * means labels are locally homogeneous. Both normalizations agree on regular
 * graphs.
 */
inline double laplacian_score(const KnnGraph& graph, const LabelVector& labels,
                              LaplacianNormalization normalization = LaplacianNormalization::random_walk) {
    const std::size_t n = graph.size();
    require(labels.size() == n, "labels and graph disagree on n");
    std::vector<double> inv_degree(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (graph.degree(i) == 0) {
            throw Error("node " + std::to_string(i) + " is isolated");
        }
        inv_degree[i] = 1.0 / static_cast<double>(graph.degree(i));
    }
    // Edge-wise: f' D^-1 L f = sum_{i in l} cross(i) / d_i, and
    // f' D^-1/2 L D^-1/2 f = sum_{edges} (f_i / sqrt(d_i) - f_j / sqrt(d_j))^2.
    std::vector<double> per_label(labels.num_classes(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto j : graph.adjacency[i]) {
            if (j <= i) {
                continue;
            }
            if (labels[i] != labels[j]) {
                per_label[labels[i]] += inv_degree[i];
                per_label[labels[j]] += inv_degree[j];
            } else if (normalization == LaplacianNormalization::symmetric) {
                const double diff = std::sqrt(inv_degree[i]) - std::sqrt(inv_degree[j]);
                per_label[labels[i]] += diff * diff;
            }
        }
    }
    double score = 0;
    for (std::size_t l = 0; l < per_label.size(); ++l) {
        score += static_cast<double>(labels.class_sizes()[l]) / static_cast<double>(n) * per_label[l];
    }
    return score;
}

inline std::vector<std::size_t> default_k_range() { return {10, 20, 30, 40, 50, 60, 70, 80, 90, 100}; }

inline std::vector<std::pair<std::size_t, double>> score_curve(const EmbeddingMatrix& y, const LabelVector& labels,
                                                               const std::vector<std::size_t>& ks = default_k_range()) {
    std::vector<std::pair<std::size_t, double>> out;
    for (auto k : ks) {
        out.emplace_back(k, laplacian_score(knn_graph(y, k), labels));
    }
    return out;
}

struct FeatureWeight {
    std::size_t attribute = 0;
    std::string name;
    double weight = 0;
};

/// Attributes ordered by |weight| descending, ties by attribute index.
struct FeatureRanking {
    std::vector<FeatureWeight> ranked;
    double intercept = 0;
    int iterations = 0;
};

struct RankingOptions {
    double l2 = 1e-2;
    double tolerance = 1e-6;
    int max_iterations = 10000;
};

/**
 * Fits an L2-regularized logistic regression separating `selection` from the
 * remaining points on standardized attributes, by full-batch gradient
 * descent, and ranks attributes by |weight|. Constant attributes get weight 0.
 */
inline FeatureRanking feature_rank(const Dataset& data, const std::vector<std::size_t>& selection,
                                   const RankingOptions& options = {}) {
    const std::size_t n = data.size(), d = data.dims();
    std::vector<char> selected(n, 0);
    for (auto i : selection) {
        require(i < n, "selection index " + std::to_string(i) + " out of range");
        selected[i] = 1;
    }
    const auto chosen = static_cast<std::size_t>(std::count(selected.begin(), selected.end(), 1));
    require(chosen > 0 && chosen < n, "selection must be a non-empty proper subset of the points");

    Matrix x(n, d);
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0, var = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += data.points(i, c);
        }
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            var += (data.points(i, c) - mean) * (data.points(i, c) - mean);
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            x(i, c) = sd > 0 ? (data.points(i, c) - mean) / sd : 0.0;
        }
    }

    // Loss: mean log-loss + l2/2 |w|^2. Standardized columns bound the
    // Hessian by (d + 1) / 4 + l2, which fixes a safe step size.
    const double step = 1.0 / (0.25 * static_cast<double>(d + 1) + options.l2);
    std::vector<double> w(d, 0.0), grad(d);
    double b = 0;
    FeatureRanking out;
    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto xi = x.row(i);
            const double z = b + std::inner_product(xi.begin(), xi.end(), w.begin(), 0.0);
            const double residual = 1.0 / (1.0 + std::exp(-z)) - selected[i];
            for (std::size_t c = 0; c < d; ++c) {
                grad[c] += residual * xi[c];
            }
            grad_b += residual;
        }
        double worst = std::abs(grad_b / static_cast<double>(n));
        for (std::size_t c = 0; c < d; ++c) {
            grad[c] = grad[c] / static_cast<double>(n) + options.l2 * w[c];
            worst = std::max(worst, std::abs(grad[c]));
        }
        if (worst < options.tolerance) {
            break;
        }
        for (std::size_t c = 0; c < d; ++c) {
            w[c] -= step * grad[c];
        }
        b -= step * grad_b / static_cast<double>(n);
    }
    out.intercept = b;
    for (std::size_t c = 0; c < d; ++c) {
        out.ranked.push_back({c, data.attribute_names[c], w[c]});
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const FeatureWeight& a, const FeatureWeight& b) { return std::abs(a.weight) > std::abs(b.weight); });
    return out;
}

} // namespace ctsne

#endif
