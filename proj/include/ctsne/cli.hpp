#ifndef CTSNE_CLI_HPP
#define CTSNE_CLI_HPP

#include "baseline_cca.hpp"
#include "server.hpp"
#include "synth.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <csignal>
#include <iostream>

namespace ctsne::cli {

inline constexpr const char* kThreadsEnv = "CTSNE_THREADS";

/// Raised for argument combinations CLI11 cannot express; maps to exit code 1.
class UsageError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// "10:100:10" (start:stop:step, inclusive) or "10,20,50".
inline std::vector<std::size_t> parse_k_range(const std::string& text) {
    std::vector<std::size_t> out;
    auto to_size = [&](std::string_view s) {
        const auto v = detail::parse_double(detail::trim(s));
        if (!v || *v < 1 || *v != std::floor(*v)) {
            throw UsageError("bad k value '" + std::string(s) + "' in --k-range");
        }
        return static_cast<std::size_t>(*v);
    };
    if (text.find(':') != std::string::npos) {
        const auto parts = detail::split(text, ':');
        if (parts.size() != 3) {
            throw UsageError("--k-range takes start:stop:step");
        }
        const auto start = to_size(parts[0]), stop = to_size(parts[1]), step = to_size(parts[2]);
        for (auto k = start; k <= stop; k += step) {
            out.push_back(k);
        }
    } else {
        for (auto part : detail::split(text, ',')) {
            out.push_back(to_size(part));
        }
    }
    if (out.empty()) {
        throw UsageError("--k-range is empty");
    }
    return out;
}

inline std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    for (auto part : detail::split(text, ',')) {
        const auto v = detail::parse_double(detail::trim(part));
        if (!v) {
            throw UsageError("bad value '" + std::string(part) + "' in --beta-prime-grid");
        }
        out.push_back(*v);
    }
    return out;
}

/// Newline-separated 0-based indices; blank lines are ignored.
inline std::vector<std::size_t> load_selection(const std::filesystem::path& path) {
    std::vector<std::size_t> out;
    const auto lines = detail::read_lines(path);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto cell = detail::trim(lines[r]);
        if (cell.empty()) {
            continue;
        }
        const auto v = detail::parse_double(cell);
        require(v && *v >= 0 && *v == std::floor(*v),
                "selection file line " + std::to_string(r + 1) + ": '" + std::string(cell) + "' is not an index");
        out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
}

/// `<out>` with `tag` inserted before the extension: e.g. e.tsv -> e.beta0.1.tsv.
inline std::filesystem::path tagged_path(const std::filesystem::path& out, const std::string& tag) {
    auto result = out;
    result.replace_filename(out.stem().string() + "." + tag + out.extension().string());
    return result;
}

inline std::string format_number(double v) {
    std::string s;
    detail::append_double(s, v);
    return s;
}

/// Shortest text that reads back as the same double.
inline std::string short_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline LabelColumn label_column(const std::string& spec) {
    if (!spec.empty() && std::all_of(spec.begin(), spec.end(), [](char c) { return std::isdigit(c); })) {
        return static_cast<std::size_t>(std::stoull(spec));
    }
    return spec;
}

inline void write_output(const std::optional<std::filesystem::path>& out, const std::string& text) {
    if (out) {
        detail::write_text(*out, text);
    } else {
        std::cout << text;
    }
}

inline void write_sidecar(const std::filesystem::path& out, const nlohmann::json& meta) {
    detail::write_text(metadata_path(out), meta.dump(2) + "\n");
}

namespace detail_cli {

struct LabelArgs {
    std::string path;
    std::string column = "0";
    bool no_header = false;

    void add(CLI::App& cmd, bool required, const std::string& what) {
        auto* opt = cmd.add_option("--labels", path, what);
        if (required) {
            opt->required()->check(CLI::ExistingFile);
        } else {
            opt->check(CLI::ExistingFile);
        }
        cmd.add_option("--label-column", column, "label column: header name or 0-based index")->capture_default_str();
        cmd.add_flag("--labels-no-header", no_header, "the label file has no header row");
    }

    LabelVector load(std::size_t n) const { return load_labels(path, label_column(column), !no_header, n); }
};

inline void apply_threads(int threads) {
    if (threads < 0) {
        throw UsageError("--threads must be non-negative");
    }
    thread_count() = threads;
}

inline int default_threads() {
    if (const char* env = std::getenv(kThreadsEnv)) {
        const auto v = detail::parse_double(env);
        if (v && *v >= 0) {
            return static_cast<int>(*v);
        }
    }
    return 0;
}

inline std::atomic<server::HttpServer*>& active_server() {
    static std::atomic<server::HttpServer*> s{nullptr};
    return s;
}

extern "C" inline void stop_on_signal(int) {
    if (auto* s = active_server().load()) {
        s->stop();
    }
}

} // namespace detail_cli

/**
 * Parses argv and runs one subcommand. Returns 0 on success, 1 on usage or
 * validation errors, 2 on runtime failures; messages go to stderr.
 */
inline int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Conditional t-SNE: embeddings that factor out known label structure"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ctsne 1.0.0");

    int threads = detail_cli::default_threads();
    bool deterministic = false;
    auto add_engine_flags = [&](CLI::App& cmd) {
        cmd.add_option("--threads", threads, std::string("worker threads, 0 = all cores (default from ") +
                                                 kThreadsEnv + ")")
            ->capture_default_str();
        cmd.add_flag("--deterministic", deterministic,
                     "force sequential-order reductions (results are already thread-count independent)");
    };

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset with its label files");
    std::string synth_kind = "synthetic10";
    std::uint64_t synth_seed = 0;
    std::string synth_dir;
    synth_cmd->add_option("--kind", synth_kind, "generator")
        ->check(CLI::IsMember({"synthetic10", "cca5"}))
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_seed, "RNG seed")->capture_default_str();
    synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "compute a t-SNE or ct-SNE embedding");
    std::string embed_data, embed_out, engine = "bh", criterion = "standard", grid, cache_dir;
    detail_cli::LabelArgs embed_labels;
    EmbedRequest req;
    double beta_prime = kDefaultBetaPrime;
    double global_sigma = 0;
    embed_cmd->add_option("--data", embed_data, "dataset TSV/CSV with a header row")
        ->required()
        ->check(CLI::ExistingFile);
    embed_labels.add(*embed_cmd, false, "prior label file; without it the run is plain t-SNE");
    embed_cmd->add_option("--beta-prime", beta_prime, "different-label weight beta' in (0, 1]")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    embed_cmd->add_option("--beta-prime-grid", grid, "comma-separated beta' values; one output per value");
    embed_cmd->add_option("--perplexity", req.perplexity, "affinity perplexity")->capture_default_str();
    embed_cmd->add_option("--global-sigma", global_sigma, "use one Gaussian bandwidth for all points");
    embed_cmd->add_option("--theta", req.optimizer.theta, "Barnes-Hut accuracy, 0 = exact")->capture_default_str();
    embed_cmd->add_option("--criterion", criterion, "Barnes-Hut cell test: r/dist or r/dist^2 against theta")
        ->check(CLI::IsMember({"standard", "paper"}))
        ->capture_default_str();
    embed_cmd->add_option("--iters", req.optimizer.iterations, "gradient-descent iterations")->capture_default_str();
    embed_cmd->add_option("--learning-rate", req.optimizer.learning_rate, "step size")->capture_default_str();
    embed_cmd->add_option("--seed", req.optimizer.seed, "RNG seed for the initial layout")->capture_default_str();
    embed_cmd->add_option("--restarts", req.optimizer.restarts, "random restarts; the best objective wins")
        ->capture_default_str();
    embed_cmd->add_option("--engine", engine, "gradient engine")
        ->check(CLI::IsMember({"bh", "exact"}))
        ->capture_default_str();
    embed_cmd->add_option("--dims", req.optimizer.output_dims, "embedding dimension (bh needs 2)")
        ->capture_default_str();
    embed_cmd->add_option("--affinity-cache", cache_dir, "directory for cached affinities");
    embed_cmd->add_option("--out", embed_out, "embedding TSV; metadata goes to <out>.meta.json")->required();
    add_engine_flags(*embed_cmd);

    // score
    auto* score_cmd = app.add_subcommand("score", "normalized Laplacian score over a range of k");
    std::string score_embedding, score_out, k_range = "10:100:10", normalization = "random-walk";
    detail_cli::LabelArgs score_labels;
    score_cmd->add_option("--embedding", score_embedding, "embedding TSV")->required()->check(CLI::ExistingFile);
    score_labels.add(*score_cmd, true, "label file to score");
    score_cmd->add_option("--k-range", k_range, "start:stop:step or a comma list")->capture_default_str();
    score_cmd->add_option("--normalization", normalization, "Laplacian normalization")
        ->check(CLI::IsMember({"random-walk", "symmetric"}))
        ->capture_default_str();
    score_cmd->add_option("--out", score_out, "output TSV (default stdout)");
    add_engine_flags(*score_cmd);

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "rank attributes separating a selection from the rest");
    std::string rank_data, rank_selection, rank_out;
    rank_cmd->add_option("--data", rank_data, "dataset TSV/CSV")->required()->check(CLI::ExistingFile);
    rank_cmd->add_option("--selection-file", rank_selection, "newline-separated 0-based point indices")
        ->required()
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--out", rank_out, "output TSV (default stdout)");

    // baseline-cca
    auto* cca_cmd = app.add_subcommand("baseline-cca", "remove label-correlated directions with CCA");
    std::string cca_data, cca_out, variant = "nullspace", cca_directions = "auto";
    detail_cli::LabelArgs cca_labels;
    std::size_t cca_keep = 2;
    cca_cmd->add_option("--data", cca_data, "dataset TSV/CSV")->required()->check(CLI::ExistingFile);
    cca_labels.add(*cca_cmd, true, "label file whose structure is removed");
    cca_cmd->add_option("--variant", variant, "projection")
        ->check(CLI::IsMember({"nullspace", "mincorr"}))
        ->capture_default_str();
    cca_cmd->add_option("--directions", cca_directions,
                        "CCA directions removed by nullspace: a count, 'all', or 'auto' = at most d - keep")
        ->capture_default_str();
    cca_cmd->add_option("--keep", cca_keep, "minimum output dimensions for nullspace")->capture_default_str();
    cca_cmd->add_option("--out", cca_out, "projected dataset TSV")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP job server");
    std::string host = "127.0.0.1", data_dir = "ctsne-data";
    int port = 8080, workers = 1;
    serve_cmd->add_option("--host", host, "listen address")->capture_default_str();
    serve_cmd->add_option("--port", port, "listen port, 0 = any free port")->capture_default_str();
    serve_cmd->add_option("--data-dir", data_dir, "registry directory")->capture_default_str();
    serve_cmd->add_option("--workers", workers, "concurrent embedding jobs")->capture_default_str();
    add_engine_flags(*serve_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        detail_cli::apply_threads(threads);

        if (synth_cmd->parsed()) {
            const std::filesystem::path dir = synth_dir;
            std::filesystem::create_directories(dir);
            nlohmann::json meta = {{"kind", synth_kind}, {"seed", synth_seed}};
            if (synth_kind == "synthetic10") {
                const auto s = synth::gen_synthetic10(synth_seed);
                save_dataset(s.data, dir / "data.tsv");
                save_labels(s.f14, dir / "f14.tsv");
                save_labels(s.f56, dir / "f56.tsv");
                meta["files"] = {"data.tsv", "f14.tsv", "f56.tsv"};
            } else {
                const auto s = synth::gen_cca5(synth_seed);
                save_dataset(s.data, dir / "data.tsv");
                save_labels(s.big, dir / "big.tsv");
                save_labels(s.small, dir / "small.tsv");
                meta["files"] = {"data.tsv", "big.tsv", "small.tsv"};
            }
            write_sidecar(dir / "data.tsv", meta);
            return 0;
        }

        if (embed_cmd->parsed()) {
            req.optimizer.engine = engine == "bh" ? Engine::bh : Engine::exact;
            req.optimizer.criterion = criterion == "standard" ? Criterion::standard : Criterion::paper;
            req.deterministic = deterministic;
            if (req.perplexity < 2) {
                throw UsageError("--perplexity must be at least 2");
            }
            if (embed_cmd->count("--global-sigma")) {
                if (!(global_sigma > 0)) {
                    throw UsageError("--global-sigma must be positive");
                }
                req.global_sigma = global_sigma;
            }
            if (!cache_dir.empty()) {
                req.affinity_cache = cache_dir;
            }
            if (beta_prime <= 0) {
                throw UsageError("--beta-prime must be in (0, 1]");
            }
            const auto data = load_dataset(embed_data);
            std::optional<LabelVector> labels;
            if (!embed_labels.path.empty()) {
                labels = embed_labels.load(data.size());
            }
            std::vector<double> betas{beta_prime};
            if (!grid.empty()) {
                if (embed_cmd->count("--beta-prime")) {
                    throw UsageError("--beta-prime and --beta-prime-grid are mutually exclusive");
                }
                betas = parse_grid(grid);
                for (double b : betas) {
                    if (!(b > 0 && b <= 1)) {
                        throw UsageError("beta' must be in (0, 1], got " + format_number(b));
                    }
                }
            }
            for (double b : betas) {
                req.beta_prime = b;
                const auto result = embed(data, labels, req);
                const std::filesystem::path out =
                    grid.empty() ? std::filesystem::path(embed_out) : tagged_path(embed_out, "beta" + short_number(b));
                save_embedding(result.embedding, out);
                auto meta = result.metadata;
                meta.extra["data"] = embed_data;
                if (labels) {
                    meta.extra["labels"] = embed_labels.path;
                }
                save_metadata(meta, out);
            }
            return 0;
        }

        if (score_cmd->parsed()) {
            const auto y = load_embedding(score_embedding);
            const auto labels = score_labels.load(y.size());
            const auto ks = parse_k_range(k_range);
            const auto norm = normalization == "symmetric" ? LaplacianNormalization::symmetric
                                                           : LaplacianNormalization::random_walk;
            std::string text = "k\tscore\n";
            nlohmann::json curve = nlohmann::json::array();
            for (auto k : ks) {
                const double s = laplacian_score(knn_graph(y, k), labels, norm);
                text += std::to_string(k) + "\t" + format_number(s) + "\n";
                curve.push_back({{"k", k}, {"score", s}});
            }
            std::optional<std::filesystem::path> out;
            if (!score_out.empty()) {
                out = score_out;
            }
            write_output(out, text);
            if (out) {
                write_sidecar(*out, {{"embedding", score_embedding},
                                     {"labels", score_labels.path},
                                     {"normalization", normalization},
                                     {"scores", curve}});
            }
            return 0;
        }

        if (rank_cmd->parsed()) {
            const auto data = load_dataset(rank_data);
            const auto ranking = feature_rank(data, load_selection(rank_selection));
            std::string text = "attribute\tweight\n";
            for (const auto& fw : ranking.ranked) {
                text += fw.name + "\t" + format_number(fw.weight) + "\n";
            }
            std::optional<std::filesystem::path> out;
            if (!rank_out.empty()) {
                out = rank_out;
            }
            write_output(out, text);
            if (out) {
                write_sidecar(*out, {{"data", rank_data},
                                     {"selection", rank_selection},
                                     {"intercept", ranking.intercept},
                                     {"iterations", ranking.iterations}});
            }
            return 0;
        }

        if (cca_cmd->parsed()) {
            const auto data = load_dataset(cca_data);
            const auto labels = cca_labels.load(data.size());
            auto model = cca::fit_cca(data, labels);
            nlohmann::json meta = {{"data", cca_data}, {"labels", cca_labels.path}, {"variant", variant},
                                   {"correlations", std::vector<double>(model.correlations.data(),
                                                                        model.correlations.data() +
                                                                            model.correlations.size())}};
            Dataset projected;
            if (variant == "nullspace") {
                if (cca_keep < 2) {
                    throw UsageError("--keep must be at least 2");
                }
                if (cca_directions == "auto") {
                    const std::size_t room = data.dims() > cca_keep ? data.dims() - cca_keep : 0;
                    model = model.truncated(std::min(model.components(), room));
                } else if (cca_directions != "all") {
                    const auto v = detail::parse_double(cca_directions);
                    if (!v || *v < 0 || *v != std::floor(*v)) {
                        throw UsageError("--directions takes a count, 'all' or 'auto'");
                    }
                    model = model.truncated(static_cast<std::size_t>(*v));
                }
                meta["directions_removed"] = model.components();
                projected = cca::nullspace_project(data, model);
            } else {
                std::string warning;
                projected = cca::mincorr_project(data, model, &warning);
                if (!warning.empty()) {
                    std::cerr << "warning: " << warning << "\n";
                    meta["warning"] = warning;
                }
            }
            save_dataset(projected, cca_out);
            write_sidecar(cca_out, meta);
            return 0;
        }

        if (serve_cmd->parsed()) {
            server::Service service(data_dir, workers);
            server::HttpServer http(service);
            const int bound = http.bind(host, port);
            detail_cli::active_server() = &http;
            std::signal(SIGINT, detail_cli::stop_on_signal);
            std::signal(SIGTERM, detail_cli::stop_on_signal);
            std::cout << "listening on http://" << host << ":" << bound << std::endl;
            http.listen();
            detail_cli::active_server() = nullptr;
            service.shutdown();
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace ctsne::cli

#endif
