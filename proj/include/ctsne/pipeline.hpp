#ifndef CTSNE_PIPELINE_HPP
#define CTSNE_PIPELINE_HPP

#include "affinity.hpp"
#include "optimizer.hpp"

namespace ctsne {

inline constexpr double kDefaultBetaPrime = 0.01;

/// Everything one embedding run needs besides the data and the prior labels.
struct EmbedRequest {
    double perplexity = 30;
    /// Ignored without a prior; defaults to kDefaultBetaPrime with one.
    std::optional<double> beta_prime;
    std::optional<double> global_sigma;
    std::optional<std::filesystem::path> affinity_cache;
    bool deterministic = false;
    OptimizerConfig optimizer;
};

/// The prior for a run: unit weights without labels, otherwise beta' (or its default).
inline PriorSpec resolve_prior(std::size_t n, const std::optional<LabelVector>& labels,
                               std::optional<double> beta_prime) {
    if (!labels) {
        return PriorSpec::unconditioned(n);
    }
    require(labels->size() == n,
            "labels have " + std::to_string(labels->size()) + " rows but the data has " + std::to_string(n));
    return PriorSpec::from_beta(*labels, beta_prime.value_or(kDefaultBetaPrime));
}

/// Affinities, prior and optimization for one dataset; shared by the CLI and the server.
inline EmbeddingResult embed(const Dataset& data, const std::optional<LabelVector>& labels,
                             const EmbedRequest& request,
                             const std::function<void(const Snapshot&)>& progress = {}) {
    data.validate();
    require(!request.beta_prime || (*request.beta_prime > 0 && *request.beta_prime <= 1),
            "beta' must be in (0, 1]");
    request.optimizer.validate();
    const auto spec = resolve_prior(data.size(), labels, request.beta_prime);
    const AffinityOptions options{request.perplexity, request.global_sigma};
    const auto p = cached_affinities(data, options, request.affinity_cache);
    auto result = run(p, spec, request.optimizer, progress);
    auto& meta = result.metadata;
    meta.perplexity = request.perplexity;
    meta.extra["n"] = data.size();
    meta.extra["input_dims"] = data.dims();
    meta.extra["prior"] = labels.has_value();
    meta.extra["deterministic"] = request.deterministic;
    meta.extra["threads"] = thread_count();
    if (request.global_sigma) {
        meta.extra["global_sigma"] = *request.global_sigma;
    }
    const double cap = static_cast<double>(data.size() - 1);
    if (request.perplexity > cap) {
        meta.extra["effective_perplexity"] = cap;
    }
    return result;
}

} // namespace ctsne

#endif
