#ifndef CTSNE_EXACT_ENGINE_HPP
#define CTSNE_EXACT_ENGINE_HPP

#include "affinity.hpp"
#include "prior.hpp"

namespace ctsne {

/**
 * Dense Student-t kernel statistics of an embedding under a prior:
 *   u_ij = (1 + |y_i - y_j|^2)^-1,  Z = sum u,  W = alpha' sum_same u + beta' sum_diff u.
 * Holds the full n x n kernel, so only meant for small n.
 */
struct QStats {
    Matrix u;
    double z = 0;
    double w = 0;

    double q(std::size_t i, std::size_t j) const { return u(i, j) / z; }
    /// O = alpha' sum_same q + beta' sum_diff q = W / Z.
    double o() const { return w / z; }
};

/// Gradient together with the global sums it was assembled from.
struct GradientResult {
    Matrix gradient;
    double z = 0;
    double w = 0;
};

struct ObjectiveTerms {
    /// KL(p || q), the plain t-SNE objective.
    double kl_pq = 0;
    /// sum p * log O.
    double log_normalizer = 0;
    /// -sum_same p log alpha' - sum_diff p log beta'.
    double prior_constant = 0;

    double prior_term() const { return log_normalizer + prior_constant; }
    double total() const { return kl_pq + log_normalizer + prior_constant; }
};

namespace detail {

inline void check_inputs(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec) {
    require(y.size() >= 2, "embedding needs at least 2 points");
    require(p.n == y.size(), "affinities and embedding disagree on n");
    require(spec.size() == y.size(), "prior and embedding disagree on n");
    if (!y.coords.all_finite()) {
        throw Error("embedding contains non-finite coordinates");
    }
}

inline double kernel(std::span<const double> a, std::span<const double> b) {
    return 1.0 / (1.0 + squared_distance(a, b));
}

} // namespace detail

inline QStats q_matrix_stats(const EmbeddingMatrix& y, const PriorSpec& spec) {
    const std::size_t n = y.size();
    require(n >= 2, "embedding needs at least 2 points");
    require(spec.size() == n, "prior and embedding disagree on n");
    if (!y.coords.all_finite()) {
        throw Error("embedding contains non-finite coordinates");
    }
    QStats stats{Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                const double u = detail::kernel(y[i], y[j]);
                stats.u(i, j) = u;
                stats.z += u;
                stats.w += spec.weight(i, j) * u;
            }
        }
    }
    return stats;
}

/// r_ij = w_ij q_ij / O.
inline double conditional_r(const QStats& stats, const PriorSpec& spec, std::size_t i, std::size_t j) {
    require(i != j, "r is undefined for i == j");
    return spec.weight(i, j) * stats.q(i, j) / stats.o();
}

/// Eq. (5) decomposition given the global sums Z and W of the embedding.
inline ObjectiveTerms objective_terms(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec,
                                      double z, double w) {
    ObjectiveTerms terms;
    const double log_alpha = std::log(spec.alpha_prime());
    const double log_beta = std::log(spec.beta_prime());
    double mass = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
        const auto cols = p.row_cols(i);
        const auto vals = p.row_vals(i);
        for (std::size_t m = 0; m < cols.size(); ++m) {
            const double pij = vals[m];
            if (pij <= 0) {
                continue;
            }
            const std::size_t j = cols[m];
            const double q = detail::kernel(y[i], y[j]) / z;
            terms.kl_pq += pij * std::log(pij / q);
            terms.prior_constant -= pij * (spec.labels()[i] == spec.labels()[j] ? log_alpha : log_beta);
            mass += pij;
        }
    }
    terms.log_normalizer = mass * std::log(w / z);
    return terms;
}

namespace detail {

/**
 * Per-point repulsion sums over all other points:
 *   Z_i = sum_j u_ij,  W_i = sum_j w_ij u_ij,  R_i = sum_j w_ij u_ij^2 (y_i - y_j).
 * O(n^2) time, O(n) memory.
 */
struct RepulsionSums {
    std::vector<double> z;
    std::vector<double> w;
    Matrix r;

    double total_z() const { return std::accumulate(z.begin(), z.end(), 0.0); }
    double total_w() const { return std::accumulate(w.begin(), w.end(), 0.0); }
};

inline RepulsionSums exact_repulsion(const EmbeddingMatrix& y, const PriorSpec& spec) {
    const std::size_t n = y.size(), dims = y.dims();
    RepulsionSums sums{std::vector<double>(n), std::vector<double>(n), Matrix(n, dims)};
    const auto& labels = spec.labels();
    const double alpha = spec.alpha_prime(), beta = spec.beta_prime();
    parallel_for(n, [&](std::size_t i) {
        const auto yi = y[i];
        auto ri = sums.r.row(i);
        double zi = 0, wi = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const auto yj = y[j];
            const double u = kernel(yi, yj);
            const double weight = labels[i] == labels[j] ? alpha : beta;
            zi += u;
            wi += weight * u;
            const double mult = weight * u * u;
            for (std::size_t k = 0; k < dims; ++k) {
                ri[k] += mult * (yi[k] - yj[k]);
            }
        }
        sums.z[i] = zi;
        sums.w[i] = wi;
    });
    return sums;
}

} // namespace detail

/// sum_j p_ij u_ij (y_i - y_j) over the sparse support of p.
inline Matrix attractive_forces(const SparseAffinities& p, const EmbeddingMatrix& y) {
    Matrix out(y.size(), y.dims());
    parallel_for(y.size(), [&](std::size_t i) {
        const auto cols = p.row_cols(i);
        const auto vals = p.row_vals(i);
        const auto yi = y[i];
        auto oi = out.row(i);
        for (std::size_t m = 0; m < cols.size(); ++m) {
            const auto yj = y[cols[m]];
            const double mult = vals[m] * detail::kernel(yi, yj);
            for (std::size_t k = 0; k < yi.size(); ++k) {
                oi[k] += mult * (yi[k] - yj[k]);
            }
        }
    });
    return out;
}

/**
 * grad_i = 4 * exaggeration * sum_j p_ij u_ij (y_i - y_j) - 4 R_i / W.
 *
 * This is 4 sum_j (p_ij - w_ij q_ij / O) u_ij (y_i - y_j) rearranged with
 * q_ij / O = u_ij / W.
 */
inline Matrix assemble_gradient(const Matrix& attraction, const Matrix& repulsion, double w, double exaggeration) {
    Matrix grad(attraction.rows(), attraction.cols());
    auto& g = grad.values();
    const auto& a = attraction.values();
    const auto& r = repulsion.values();
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = 4.0 * (exaggeration * a[k] - r[k] / w);
    }
    return grad;
}

/// Exact gradient plus the exact Z and W. `exaggeration` scales p in the attraction only.
inline GradientResult exact_gradient(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec,
                                     double exaggeration = 1.0) {
    detail::check_inputs(p, y, spec);
    const auto sums = detail::exact_repulsion(y, spec);
    const double w = sums.total_w();
    auto grad = assemble_gradient(attractive_forces(p, y), sums.r, w, exaggeration);
    if (!grad.all_finite()) {
        throw Error("non-finite gradient");
    }
    return {std::move(grad), sums.total_z(), w};
}

inline Matrix ctsne_gradient(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec) {
    return exact_gradient(p, y, spec).gradient;
}

inline ObjectiveTerms exact_objective_terms(const SparseAffinities& p, const EmbeddingMatrix& y,
                                            const PriorSpec& spec) {
    detail::check_inputs(p, y, spec);
    const auto sums = detail::exact_repulsion(y, spec);
    return objective_terms(p, y, spec, sums.total_z(), sums.total_w());
}

/// KL(p || r) for the conditional distribution r.
inline double ctsne_objective(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec) {
    return exact_objective_terms(p, y, spec).total();
}

} // namespace ctsne

#endif
