#ifndef CTSNE_AFFINITY_HPP
#define CTSNE_AFFINITY_HPP

#include "data_model.hpp"
#include "vptree.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <numeric>

namespace ctsne {

/**
 * Symmetric joint distribution p over point pairs in CSR form. Rows hold
 * column indices in ascending order, and p_ij is stored bit-identically in
 * rows i and j.
 */
struct SparseAffinities {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    double sum = 0;
    /// Per-point bandwidths from calibration (empty when loaded from a cache).
    std::vector<double> sigmas;

    std::span<const std::uint32_t> row_cols(std::size_t i) const {
        return {cols.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
    }
    std::span<const double> row_vals(std::size_t i) const {
        return {vals.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
    }

    /// p_ij, or 0 off the support.
    double at(std::size_t i, std::size_t j) const {
        const auto c = row_cols(i);
        const auto it = std::lower_bound(c.begin(), c.end(), j);
        return it != c.end() && *it == j ? vals[row_ptr[i] + static_cast<std::size_t>(it - c.begin())] : 0.0;
    }
};

struct BandwidthResult {
    double sigma = 1;
    std::vector<double> row;
    double entropy_bits = 0;
};

inline constexpr double kEntropyTolerance = 1e-5;
inline constexpr int kBandwidthIterations = 200;

/**
 * Finds sigma_i such that the Gaussian conditional row over the given squared
 * distances has entropy log2(perplexity).
 *
 * The search runs on the precision beta = 1/(2 sigma^2) of distances shifted by
 * their minimum and scaled by their range, which leaves the row unchanged and
 * makes the search independent of the data's units.
 */
inline BandwidthResult calibrate_bandwidth(std::span<const double> sq_distances, double perplexity) {
    const std::size_t k = sq_distances.size();
    require(k >= 2, "bandwidth calibration needs at least 2 neighbors");
    require(perplexity > 1, "perplexity must exceed 1");
    require(perplexity <= static_cast<double>(k), "perplexity " + std::to_string(perplexity) +
                                                      " exceeds the neighbor count " + std::to_string(k));
    const auto [lo_it, hi_it] = std::minmax_element(sq_distances.begin(), sq_distances.end());
    const double shift = *lo_it;
    const double scale = *hi_it - shift;
    BandwidthResult out;
    out.row.assign(k, 1.0 / static_cast<double>(k));
    out.entropy_bits = std::log2(static_cast<double>(k));
    if (!(scale > 0)) {
        return out;
    }

    std::vector<double> scaled(k);
    for (std::size_t j = 0; j < k; ++j) {
        scaled[j] = (sq_distances[j] - shift) / scale;
    }
    const double target = std::log2(perplexity);
    double beta = 1, lo = 0, hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kBandwidthIterations; ++iter) {
        double total = 0, weighted = 0;
        for (std::size_t j = 0; j < k; ++j) {
            out.row[j] = std::exp(-beta * scaled[j]);
            total += out.row[j];
            weighted += scaled[j] * out.row[j];
        }
        out.entropy_bits = (beta * weighted / total + std::log(total)) / std::numbers::ln2;
        if (std::abs(out.entropy_bits - target) < kEntropyTolerance) {
            break;
        }
        if (out.entropy_bits > target) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2 : (lo + hi) / 2;
        } else {
            hi = beta;
            beta = (lo + hi) / 2;
        }
    }
    double total = 0;
    for (std::size_t j = 0; j < k; ++j) {
        out.row[j] = std::exp(-beta * scaled[j]);
        total += out.row[j];
    }
    for (auto& p : out.row) {
        p /= total;
    }
    out.sigma = std::sqrt(scale / (2 * beta));
    return out;
}

struct AffinityOptions {
    double perplexity = 30;
    /// When set, a single bandwidth over all pairs with joint normalization (dense, O(n^2)).
    std::optional<double> global_sigma = std::nullopt;
};

namespace detail {

/// Symmetrizes per-point conditional rows into p_ij = (p_j|i + p_i|j) / 2n.
inline SparseAffinities symmetrize(std::size_t n, std::size_t k, const std::vector<std::uint32_t>& neighbors,
                                   const std::vector<double>& conditionals) {
    struct Entry {
        std::uint64_t key;
        double value;
    };
    std::vector<Entry> entries;
    entries.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < k; ++m) {
            const std::uint64_t j = neighbors[i * k + m];
            const std::uint64_t a = std::min<std::uint64_t>(i, j), b = std::max<std::uint64_t>(i, j);
            entries.push_back({(a << 32) | b, conditionals[i * k + m]});
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.key < y.key; });

    std::vector<std::pair<std::uint64_t, double>> pairs;
    for (const auto& e : entries) {
        if (!pairs.empty() && pairs.back().first == e.key) {
            pairs.back().second += e.value;
        } else {
            pairs.emplace_back(e.key, e.value);
        }
    }

    SparseAffinities out;
    out.n = n;
    out.row_ptr.assign(n + 1, 0);
    for (const auto& [key, value] : pairs) {
        ++out.row_ptr[(key >> 32) + 1];
        ++out.row_ptr[(key & 0xffffffffu) + 1];
    }
    std::partial_sum(out.row_ptr.begin(), out.row_ptr.end(), out.row_ptr.begin());
    out.cols.resize(out.row_ptr[n]);
    out.vals.resize(out.row_ptr[n]);
    std::vector<std::size_t> cursor(out.row_ptr.begin(), out.row_ptr.end() - 1);
    double total = 0;
    for (const auto& [key, value] : pairs) {
        total += 2 * value;
    }
    for (const auto& [key, value] : pairs) {
        const auto a = static_cast<std::uint32_t>(key >> 32), b = static_cast<std::uint32_t>(key & 0xffffffffu);
        const double p = value / total;
        out.cols[cursor[a]] = b;
        out.vals[cursor[a]++] = p;
        out.cols[cursor[b]] = a;
        out.vals[cursor[b]++] = p;
    }
    out.sum = std::accumulate(out.vals.begin(), out.vals.end(), 0.0);
    return out;
}

inline SparseAffinities global_sigma_affinities(const Matrix& points, double sigma) {
    require(sigma > 0, "global sigma must be positive");
    const std::size_t n = points.rows();
    std::vector<std::uint32_t> neighbors;
    std::vector<double> weights;
    neighbors.reserve(n * (n - 1));
    weights.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                neighbors.push_back(static_cast<std::uint32_t>(j));
                weights.push_back(std::exp(-squared_distance(points.row(i), points.row(j)) / (2 * sigma * sigma)));
            }
        }
    }
    // The kernel is symmetric, so the pair sum is 2 w_ij and normalization is global.
    auto out = symmetrize(n, n - 1, neighbors, weights);
    require(out.sum > 0 && std::isfinite(out.sum), "global sigma too small: every kernel value underflows");
    out.sigmas.assign(n, sigma);
    return out;
}

} // namespace detail

/**
 * High-dimensional affinities. Default: k = floor(3 * perplexity) exact
 * nearest neighbors, per-point perplexity-calibrated Gaussian conditionals,
 * symmetrized. When k would reach n, every other point is used as a neighbor
 * and the perplexity is capped at n - 1.
 */
inline SparseAffinities build_affinities(const Dataset& data, const AffinityOptions& options = {}) {
    const std::size_t n = data.size();
    require(n >= 2, "affinities need at least 2 points");
    if (options.global_sigma) {
        return detail::global_sigma_affinities(data.points, *options.global_sigma);
    }
    require(options.perplexity >= 2, "perplexity must be at least 2");
    auto k = static_cast<std::size_t>(std::floor(3 * options.perplexity));
    double perplexity = options.perplexity;
    if (k >= n) {
        k = n - 1;
        perplexity = std::min(perplexity, static_cast<double>(k));
    }
    const auto knn = knn_search(data.points, k);
    std::vector<double> conditionals(n * k, 1.0);
    std::vector<double> sigmas(n, 1.0);
    if (k >= 2) {
        parallel_for(n, [&](std::size_t i) {
            auto calibrated = calibrate_bandwidth(knn.distances(i), perplexity);
            std::copy(calibrated.row.begin(), calibrated.row.end(), conditionals.begin() + i * k);
            sigmas[i] = calibrated.sigma;
        });
    }
    auto out = detail::symmetrize(n, k, knn.indices, conditionals);
    out.sigmas = std::move(sigmas);
    return out;
}

inline SparseAffinities build_affinities(const Dataset& data, double perplexity) {
    return build_affinities(data, AffinityOptions{.perplexity = perplexity});
}

// Binary cache: uint64 row count, then per row uint32 count, uint32 index[count],
// float64 value[count]. All little-endian.

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    }
}

inline std::uint64_t get_le(std::istream& in, int bytes) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), bytes);
    if (!in) {
        throw Error("affinity cache is truncated");
    }
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) {
        v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
    }
    return v;
}

} // namespace detail

inline void save_affinities(const SparseAffinities& p, const std::filesystem::path& path) {
    std::string out;
    detail::put_le(out, p.n, 8);
    for (std::size_t i = 0; i < p.n; ++i) {
        const auto c = p.row_cols(i);
        const auto v = p.row_vals(i);
        detail::put_le(out, c.size(), 4);
        for (auto j : c) {
            detail::put_le(out, j, 4);
        }
        for (double x : v) {
            detail::put_le(out, std::bit_cast<std::uint64_t>(x), 8);
        }
    }
    detail::write_text(path, out);
}

inline SparseAffinities load_affinities(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open affinity cache '" + path.string() + "'");
    }
    SparseAffinities p;
    p.n = detail::get_le(in, 8);
    p.row_ptr.assign(1, 0);
    for (std::size_t i = 0; i < p.n; ++i) {
        const auto count = detail::get_le(in, 4);
        for (std::size_t m = 0; m < count; ++m) {
            p.cols.push_back(static_cast<std::uint32_t>(detail::get_le(in, 4)));
        }
        for (std::size_t m = 0; m < count; ++m) {
            p.vals.push_back(std::bit_cast<double>(detail::get_le(in, 8)));
        }
        p.row_ptr.push_back(p.cols.size());
    }
    p.sum = std::accumulate(p.vals.begin(), p.vals.end(), 0.0);
    return p;
}

/// FNV-1a over the shape and the raw bits of every value.
inline std::uint64_t dataset_hash(const Dataset& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(data.size());
    mix(data.dims());
    for (double v : data.points.values()) {
        mix(std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

inline std::filesystem::path affinity_cache_path(const std::filesystem::path& dir, const Dataset& data,
                                                 const AffinityOptions& options) {
    std::ostringstream name;
    name << "affinities-" << std::hex << std::setw(16) << std::setfill('0') << dataset_hash(data) << std::dec;
    if (options.global_sigma) {
        name << "-sigma" << std::setprecision(17) << *options.global_sigma;
    } else {
        name << "-perp" << std::setprecision(17) << options.perplexity;
    }
    name << ".bin";
    return dir / name.str();
}

/// build_affinities with an on-disk cache keyed by (dataset hash, perplexity).
inline SparseAffinities cached_affinities(const Dataset& data, const AffinityOptions& options,
                                          const std::optional<std::filesystem::path>& cache_dir) {
    if (!cache_dir) {
        return build_affinities(data, options);
    }
    const auto path = affinity_cache_path(*cache_dir, data, options);
    if (std::filesystem::exists(path)) {
        auto p = load_affinities(path);
        if (p.n == data.size()) {
            return p;
        }
    }
    auto p = build_affinities(data, options);
    std::filesystem::create_directories(*cache_dir);
    save_affinities(p, path);
    return p;
}

} // namespace ctsne

#endif
