#ifndef CTSNE_SYNTH_HPP
#define CTSNE_SYNTH_HPP

#include "data_model.hpp"
#include "random.hpp"

#include <numeric>

namespace ctsne::synth {

/// A block of consecutive dimensions holding Gaussian clusters.
struct ClusterBlock {
    std::size_t first_dim = 0;
    std::size_t dim_count = 0;
    std::size_t clusters = 1;
    double stddev = 0.5;
    /// Centers are uniform on [-center_range, center_range]^dim_count.
    double center_range = 10.0;
};

struct NoiseBlock {
    std::size_t first_dim = 0;
    std::size_t dim_count = 0;
    double stddev = 2.0;
};

struct SyntheticSpec {
    std::size_t n = 1000;
    std::vector<ClusterBlock> cluster_dims;
    std::vector<NoiseBlock> noise_dims;
    std::uint64_t seed = 0;

    std::size_t total_dims() const {
        std::size_t d = 0;
        for (const auto& b : cluster_dims) {
            d = std::max(d, b.first_dim + b.dim_count);
        }
        for (const auto& b : noise_dims) {
            d = std::max(d, b.first_dim + b.dim_count);
        }
        return d;
    }

    void validate() const {
        require(n >= 2, "synthetic data needs n >= 2");
        std::vector<int> used(total_dims(), 0);
        auto claim = [&](std::size_t first, std::size_t count) {
            for (std::size_t k = first; k < first + count; ++k) {
                require(used[k]++ == 0, "synthetic dimension ranges overlap at dimension " + std::to_string(k + 1));
            }
        };
        for (const auto& b : cluster_dims) {
            require(b.clusters >= 1 && b.clusters <= n, "cluster count must be in [1, n]");
            require(b.stddev > 0, "cluster stddev must be positive");
            claim(b.first_dim, b.dim_count);
        }
        for (const auto& b : noise_dims) {
            require(b.stddev > 0, "noise stddev must be positive");
            claim(b.first_dim, b.dim_count);
        }
    }
};

struct SyntheticData {
    Dataset data;
    /// One label vector per cluster block, in block order.
    std::vector<LabelVector> labels;
};

namespace detail {

/// Multinomial-uniform assignment, redrawn until every cluster is non-empty.
inline std::vector<std::size_t> assign_clusters(Rng& rng, std::size_t n, std::size_t clusters,
                                                std::size_t min_size = 1) {
    std::vector<std::size_t> assignment(n);
    while (true) {
        std::vector<std::size_t> counts(clusters, 0);
        for (auto& a : assignment) {
            a = rng.below(clusters);
            ++counts[a];
        }
        if (std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c >= min_size; })) {
            return assignment;
        }
    }
}

} // namespace detail

inline SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t d = spec.total_dims();
    Matrix points(spec.n, d);
    SyntheticData out;

    for (const auto& block : spec.cluster_dims) {
        Matrix centers(block.clusters, block.dim_count);
        for (auto& c : centers.values()) {
            c = rng.uniform(-block.center_range, block.center_range);
        }
        const auto assignment = detail::assign_clusters(rng, spec.n, block.clusters);
        for (std::size_t i = 0; i < spec.n; ++i) {
            for (std::size_t k = 0; k < block.dim_count; ++k) {
                points(i, block.first_dim + k) = rng.normal(centers(assignment[i], k), block.stddev);
            }
        }
        out.labels.push_back(LabelVector::encode(assignment));
    }
    for (const auto& block : spec.noise_dims) {
        for (std::size_t i = 0; i < spec.n; ++i) {
            for (std::size_t k = 0; k < block.dim_count; ++k) {
                points(i, block.first_dim + k) = rng.normal(0.0, block.stddev);
            }
        }
    }
    out.data = Dataset::from_matrix(std::move(points));
    return out;
}

/// Default calibration of the ten-dimensional demo data.
inline constexpr double kClusterStddev = 0.5;
inline constexpr double kNoiseStddev = 2.0;

inline SyntheticSpec synthetic10_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n = 1000;
    spec.seed = seed;
    spec.cluster_dims = {
        {.first_dim = 0, .dim_count = 4, .clusters = 5, .stddev = kClusterStddev},
        {.first_dim = 4, .dim_count = 2, .clusters = 4, .stddev = kClusterStddev},
    };
    spec.noise_dims = {{.first_dim = 6, .dim_count = 4, .stddev = kNoiseStddev}};
    return spec;
}

struct Synthetic10 {
    Dataset data;
    LabelVector f14;
    LabelVector f56;
};

/**
 * 1000 points in 10-d: five clusters in dims 1-4, an independent set of four
 * clusters in dims 5-6, and wider isotropic noise in dims 7-10.
 */
inline Synthetic10 gen_synthetic10(std::uint64_t seed) {
    auto generated = generate(synthetic10_spec(seed));
    return {std::move(generated.data), std::move(generated.labels[0]), std::move(generated.labels[1])};
}

struct Cca5 {
    Dataset data;
    LabelVector big;
    LabelVector small;
};

inline constexpr double kSubclusterOffset = 3.0;
inline constexpr double kSubclusterFraction = 0.2;

/**
 * 1000 points in 5-d: ten Gaussian clusters, each split into a 20% and an 80%
 * sub-cluster displaced along one randomly chosen coordinate axis.
 */
inline Cca5 gen_cca5(std::uint64_t seed) {
    constexpr std::size_t n = 1000, d = 5, clusters = 10;
    Rng rng(seed);
    Matrix centers(clusters, d);
    for (auto& c : centers.values()) {
        c = rng.uniform(-10.0, 10.0);
    }
    std::vector<std::size_t> axis(clusters);
    std::vector<double> direction(clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
        axis[c] = rng.below(d);
        direction[c] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    const auto assignment = detail::assign_clusters(rng, n, clusters, 5);

    std::vector<std::size_t> sub(n, 0);
    for (std::size_t c = 0; c < clusters; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment[i] == c) {
                members.push_back(i);
            }
        }
        for (std::size_t k = members.size(); k > 1; --k) {
            std::swap(members[k - 1], members[rng.below(k)]);
        }
        const auto small_count = static_cast<std::size_t>(std::lround(kSubclusterFraction * members.size()));
        for (std::size_t k = 0; k < small_count; ++k) {
            sub[members[k]] = 1;
        }
    }

    Matrix points(n, d);
    std::vector<std::size_t> joint(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = assignment[i];
        for (std::size_t k = 0; k < d; ++k) {
            double mean = centers(c, k);
            if (sub[i] == 1 && k == axis[c]) {
                mean += direction[c] * kSubclusterOffset;
            }
            points(i, k) = rng.normal(mean, kClusterStddev);
        }
        joint[i] = 2 * c + sub[i];
    }
    return {Dataset::from_matrix(std::move(points)), LabelVector::encode(assignment), LabelVector::encode(joint)};
}

} // namespace ctsne::synth

#endif
