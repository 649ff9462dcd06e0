#ifndef CTSNE_BH_ENGINE_HPP
#define CTSNE_BH_ENGINE_HPP

#include "exact_engine.hpp"
#include "quadtree.hpp"

namespace ctsne {

/**
 * Barnes-Hut gradient with label histograms.
 *
 * Attraction is exact over the support of p. Repulsion and the global sums
 * Z and W come from one traversal per point. A summarized cell is split into
 * the points sharing the target's label and the rest, each placed at its own
 * center of mass and weighted by alpha' or beta'. With alpha' = beta' the
 * whole cell is one group at the cell's center of mass.
 */
inline GradientResult approx_gradient(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec,
                                      const LabelQuadTree& tree, double theta,
                                      Criterion criterion = Criterion::standard, double exaggeration = 1.0) {
    detail::check_inputs(p, y, spec);
    require(theta >= 0, "theta must be non-negative");
    const std::size_t n = y.size();
    const double alpha = spec.alpha_prime(), beta = spec.beta_prime();
    const auto& labels = spec.labels();
    const bool split = alpha != beta && labels.num_classes() > 1;
    detail::RepulsionSums sums{std::vector<double>(n), std::vector<double>(n), Matrix(n, 2)};

    // Targets in tree order, so consecutive traversals touch the same cells.
    parallel_for(n, [&](std::size_t pos) {
        const std::size_t i = tree.order()[pos];
        const auto yi = y[i];
        const auto li = labels[i];
        double zi = 0, wi = 0, rx = 0, ry = 0;
        auto add = [&](double cx, double cy, double count, double weight) {
            const double dx = yi[0] - cx, dy = yi[1] - cy;
            const double u = 1.0 / (1.0 + dx * dx + dy * dy);
            zi += count * u;
            wi += weight * u;
            const double mult = weight * u * u;
            rx += mult * dx;
            ry += mult * dy;
        };
        tree.traverse(
            i, theta, criterion,
            [&](std::size_t id) {
                const TraversalCell& cell = tree.cell(id);
                if (split) {
                    const auto& stat = tree.label_stat(id, li);
                    const double same = stat.count, other = cell.count - same;
                    if (same > 0) {
                        add(stat.sum[0] / same, stat.sum[1] / same, same, alpha * same);
                    }
                    if (other > 0) {
                        add((cell.count * cell.com[0] - stat.sum[0]) / other,
                            (cell.count * cell.com[1] - stat.sum[1]) / other, other, beta * other);
                    }
                } else {
                    add(cell.com[0], cell.com[1], cell.count, alpha * cell.count);
                }
            },
            [&](const TreePoint& pt) { add(pt.x, pt.y, 1.0, pt.label == li ? alpha : beta); });
        sums.z[i] = zi;
        sums.w[i] = wi;
        sums.r(i, 0) = rx;
        sums.r(i, 1) = ry;
    });

    const double w = sums.total_w();
    auto grad = assemble_gradient(attractive_forces(p, y), sums.r, w, exaggeration);
    if (!grad.all_finite()) {
        throw Error("non-finite gradient");
    }
    return {std::move(grad), sums.total_z(), w};
}

inline GradientResult approx_gradient(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec,
                                      double theta, Criterion criterion = Criterion::standard,
                                      double exaggeration = 1.0) {
    const LabelQuadTree tree(y, spec.labels());
    return approx_gradient(p, y, spec, tree, theta, criterion, exaggeration);
}

} // namespace ctsne

#endif
