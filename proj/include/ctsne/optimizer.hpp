#ifndef CTSNE_OPTIMIZER_HPP
#define CTSNE_OPTIMIZER_HPP

#include "bh_engine.hpp"
#include "random.hpp"

#include <functional>
#include <limits>

namespace ctsne {

enum class Engine { exact, bh };

inline std::string to_string(Engine e) { return e == Engine::exact ? "exact" : "bh"; }
inline std::string to_string(Criterion c) { return c == Criterion::standard ? "standard" : "paper"; }

struct OptimizerConfig {
    int iterations = 1000;
    double learning_rate = 200;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double exaggeration = 12;
    int exaggeration_iterations = 250;
    int restarts = 1;
    std::uint64_t seed = 0;
    Engine engine = Engine::bh;
    double theta = 0.5;
    Criterion criterion = Criterion::standard;
    /// Stop early once the gradient's L2 norm drops below this (after exaggeration); 0 disables.
    double min_gradient_norm = 1e-7;
    std::size_t output_dims = 2;
    /// Iterations between progress callbacks.
    int snapshot_interval = 10;

    void validate() const {
        require(iterations >= 1, "iterations must be positive");
        require(learning_rate > 0, "learning rate must be positive");
        require(initial_momentum >= 0 && initial_momentum < 1, "momentum must be in [0, 1)");
        require(final_momentum >= 0 && final_momentum < 1, "momentum must be in [0, 1)");
        require(momentum_switch >= 0, "momentum switch must be non-negative");
        require(exaggeration > 0, "exaggeration must be positive");
        require(exaggeration_iterations >= 0, "exaggeration iterations must be non-negative");
        require(restarts >= 1, "restarts must be positive");
        require(theta >= 0, "theta must be non-negative");
        require(min_gradient_norm >= 0, "gradient-norm threshold must be non-negative");
        require(output_dims >= 1, "output dimension must be positive");
        require(engine == Engine::exact || output_dims == 2, "the Barnes-Hut engine supports 2-d embeddings only");
        require(snapshot_interval >= 1, "snapshot interval must be positive");
    }
};

/// Progress report handed to the optional callback of run().
struct Snapshot {
    int restart = 0;
    int iteration = 0;
    double objective = std::numeric_limits<double>::quiet_NaN();
    const EmbeddingMatrix* embedding = nullptr;
};

struct EmbeddingResult {
    EmbeddingMatrix embedding;
    RunMetadata metadata;
};

inline constexpr double kInitStddev = 1e-4;

inline EmbeddingMatrix init_embedding(std::size_t n, std::size_t dims, std::uint64_t seed) {
    require(n >= 2, "embedding needs at least 2 points");
    Rng rng(seed);
    EmbeddingMatrix y{Matrix(n, dims)};
    for (auto& v : y.coords.values()) {
        v = rng.normal(0.0, kInitStddev);
    }
    return y;
}

inline void recenter(EmbeddingMatrix& y) {
    const std::size_t n = y.size(), dims = y.dims();
    std::vector<double> mean(dims, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < dims; ++k) {
            mean[k] += y.coords(i, k);
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < dims; ++k) {
            y.coords(i, k) -= mean[k];
        }
    }
}

/// One gradient evaluation with the configured engine.
inline GradientResult evaluate_gradient(const SparseAffinities& p, const EmbeddingMatrix& y, const PriorSpec& spec,
                                        const OptimizerConfig& cfg, double exaggeration) {
    if (cfg.engine == Engine::exact) {
        return exact_gradient(p, y, spec, exaggeration);
    }
    return approx_gradient(p, y, spec, cfg.theta, cfg.criterion, exaggeration);
}

namespace detail {

struct RestartOutcome {
    EmbeddingMatrix embedding;
    double objective = std::numeric_limits<double>::quiet_NaN();
    int iterations_run = 0;
    std::vector<std::pair<int, double>> trace;
};

inline RestartOutcome run_restart(const SparseAffinities& p, const PriorSpec& spec, const OptimizerConfig& cfg,
                                  int restart, const std::function<void(const Snapshot&)>& progress) {
    const std::uint64_t seed = restart == 0 ? cfg.seed : mix_seed(cfg.seed, static_cast<std::uint64_t>(restart));
    RestartOutcome out;
    out.embedding = init_embedding(p.n, cfg.output_dims, seed);
    auto& y = out.embedding;
    std::vector<double> update(y.coords.values().size(), 0.0);
    std::vector<double> gains(update.size(), 1.0);

    auto objective_of = [&](const GradientResult& g) {
        const double obj = objective_terms(p, y, spec, g.z, g.w).total();
        if (!std::isfinite(obj)) {
            throw Error("objective diverged");
        }
        return obj;
    };

    int it = 0;
    for (; it < cfg.iterations; ++it) {
        const double exaggeration = it < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
        const auto g = evaluate_gradient(p, y, spec, cfg, exaggeration);
        double objective = std::numeric_limits<double>::quiet_NaN();
        if (it % 50 == 0) {
            objective = objective_of(g);
            out.trace.emplace_back(it, objective);
        }
        if (progress && it % cfg.snapshot_interval == 0) {
            progress({restart, it, objective, &y});
        }

        const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
        const auto& grad = g.gradient.values();
        auto& coords = y.coords.values();
        double norm2 = 0;
        for (std::size_t k = 0; k < coords.size(); ++k) {
            const bool same_sign = (grad[k] > 0) == (update[k] > 0);
            gains[k] = std::max(same_sign ? gains[k] * 0.8 : gains[k] + 0.2, 0.01);
            update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
            coords[k] += update[k];
            norm2 += grad[k] * grad[k];
        }
        recenter(y);
        // The tiny initial layout has a near-zero gradient, so only stop once exaggeration is off.
        if (it >= cfg.exaggeration_iterations && std::sqrt(norm2) < cfg.min_gradient_norm) {
            ++it;
            break;
        }
    }
    out.iterations_run = it;
    const auto final_g = evaluate_gradient(p, y, spec, cfg, 1.0);
    out.objective = objective_of(final_g);
    if (out.trace.empty() || out.trace.back().first != it) {
        out.trace.emplace_back(it, out.objective);
    }
    if (progress) {
        progress({restart, it, out.objective, &y});
    }
    return out;
}

} // namespace detail

/**
 * Gradient descent with momentum, per-coordinate gains and early
 * exaggeration, repeated over `restarts` random initializations. Returns the
 * restart with the lowest final objective (evaluated without exaggeration).
 */
inline EmbeddingResult run(const SparseAffinities& p, const PriorSpec& spec, const OptimizerConfig& cfg,
                           const std::function<void(const Snapshot&)>& progress = {}) {
    cfg.validate();
    require(p.n == spec.size(), "affinities and prior disagree on n");
    require(p.n >= 2, "embedding needs at least 2 points");

    EmbeddingResult result;
    auto& meta = result.metadata;
    meta.beta_prime = spec.beta_prime();
    meta.alpha_prime = spec.alpha_prime();
    meta.theta = cfg.theta;
    meta.iterations = cfg.iterations;
    meta.seed = cfg.seed;
    meta.restarts = cfg.restarts;
    meta.engine = to_string(cfg.engine);
    meta.extra = {{"learning_rate", cfg.learning_rate},
                  {"initial_momentum", cfg.initial_momentum},
                  {"final_momentum", cfg.final_momentum},
                  {"momentum_switch", cfg.momentum_switch},
                  {"exaggeration", cfg.exaggeration},
                  {"exaggeration_iterations", cfg.exaggeration_iterations},
                  {"criterion", to_string(cfg.criterion)},
                  {"min_gradient_norm", cfg.min_gradient_norm},
                  {"output_dims", cfg.output_dims},
                  {"num_labels", spec.labels().num_classes()}};

    std::optional<detail::RestartOutcome> best;
    std::vector<std::string> failures;
    for (int r = 0; r < cfg.restarts; ++r) {
        try {
            auto outcome = detail::run_restart(p, spec, cfg, r, progress);
            meta.restart_objectives.push_back(outcome.objective);
            if (!best || outcome.objective < best->objective) {
                best = std::move(outcome);
            }
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            meta.restart_objectives.push_back(std::numeric_limits<double>::quiet_NaN());
            failures.push_back("restart " + std::to_string(r) + ": " + e.what());
        }
    }
    if (!best) {
        throw Error("all restarts diverged (" + failures.front() + ")");
    }
    if (!failures.empty()) {
        meta.extra["failed_restarts"] = failures;
    }
    meta.final_objective = best->objective;
    meta.iterations_run = best->iterations_run;
    meta.trace = std::move(best->trace);
    result.embedding = std::move(best->embedding);
    return result;
}

} // namespace ctsne

#endif
