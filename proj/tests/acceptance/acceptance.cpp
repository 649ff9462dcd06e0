// Acceptance checks: one PASS/FAIL line per criterion.
// Usage: ctsne_acceptance [criterion numbers...] [--expect-fail a,b,...]
// Exit status 1 if any criterion fails, or with --expect-fail, if any outcome differs from the expectation.

#include <ctsne/baseline_cca.hpp>
#include <ctsne/evaluation.hpp>
#include <ctsne/pipeline.hpp>
#include <ctsne/synth.hpp>

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace ctsne;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
};

std::string fmt(double v, const char* spec = "%.3g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.values()) {
        v = rng.normal(0.0, scale);
    }
    return m;
}

LabelVector random_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        raw[i] = i < classes ? i : rng.below(classes);
    }
    return LabelVector::encode(raw);
}

struct SmallInstance {
    SparseAffinities p;
    EmbeddingMatrix y;
    PriorSpec spec;
};

SmallInstance small_instance(std::size_t n, double beta, std::uint64_t seed) {
    const auto data = Dataset::from_matrix(random_matrix(n, 5, seed));
    return {build_affinities(data, 10), {random_matrix(n, 2, seed + 100, 1.5)},
            alpha_from_beta(random_labels(n, 2 + seed % 4, seed + 200), beta)};
}

// 1. Exact gradient against central finite differences of the objective.
Verdict gradient_correctness() {
    Verdict v;
    const auto start = Clock::now();
    const double betas[] = {0.01, 0.1, 0.5, 1.0};
    double worst = 0;
    for (std::uint64_t inst = 0; inst < 10; ++inst) {
        auto in = small_instance(50, betas[inst % 4], inst);
        const auto g = ctsne_gradient(in.p, in.y, in.spec);
        double scale = 0;
        for (double x : g.values()) {
            scale = std::max(scale, std::abs(x));
        }
        const double h = 1e-5;
        for (std::size_t k = 0; k < g.values().size(); ++k) {
            auto& c = in.y.coords.values()[k];
            const double saved = c;
            c = saved + h;
            const double up = ctsne_objective(in.p, in.y, in.spec);
            c = saved - h;
            const double down = ctsne_objective(in.p, in.y, in.spec);
            c = saved;
            const double fd = (up - down) / (2 * h);
            const double denom = std::max({std::abs(g.values()[k]), std::abs(fd), 1e-6 * scale});
            worst = std::max(worst, std::abs(g.values()[k] - fd) / denom);
        }
    }
    const double elapsed = seconds_since(start);
    v.pass = worst < 1e-4 && elapsed < 60;
    v.detail << "max relative error " << fmt(worst) << " (limit 1e-4) over 10 instances n=50, " << fmt(elapsed)
             << " s (limit 60 s)";
    return v;
}

// 2. beta' = 1 reproduces the plain t-SNE objective and gradient (dense oracle).
Verdict tsne_reduction() {
    Verdict v;
    double worst_obj = 0, worst_grad = 0;
    for (std::uint64_t inst = 0; inst < 10; ++inst) {
        const auto in = small_instance(60 + 10 * inst, 1.0, 50 + inst);
        const std::size_t n = in.y.size();
        double z = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    z += 1 / (1 + squared_distance(in.y[i], in.y[j]));
                }
            }
        }
        double kl = 0;
        Matrix g(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) {
                    continue;
                }
                const double u = 1 / (1 + squared_distance(in.y[i], in.y[j]));
                const double pij = in.p.at(i, j), qij = u / z;
                if (pij > 0) {
                    kl += pij * std::log(pij / qij);
                }
                for (std::size_t k = 0; k < 2; ++k) {
                    g(i, k) += 4 * (pij - qij) * u * (in.y.coords(i, k) - in.y.coords(j, k));
                }
            }
        }
        worst_obj = std::max(worst_obj, std::abs(ctsne_objective(in.p, in.y, in.spec) - kl));
        const auto ours = ctsne_gradient(in.p, in.y, in.spec);
        for (std::size_t k = 0; k < g.values().size(); ++k) {
            worst_grad = std::max(worst_grad, std::abs(ours.values()[k] - g.values()[k]));
        }
    }
    v.pass = worst_obj < 1e-9 && worst_grad < 1e-9;
    v.detail << "max |objective diff| " << fmt(worst_obj) << ", max |gradient diff| " << fmt(worst_grad)
             << " (limit 1e-9) over 10 instances";
    return v;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// 3. Barnes-Hut fidelity: theta = 0 is exact; theta = 0.5 on a converged embedding.
Verdict bh_fidelity() {
    Verdict v;
    const auto start = Clock::now();
    double worst_zero = 0;
    for (std::uint64_t inst = 0; inst < 5; ++inst) {
        const auto in = small_instance(200, 0.1, 300 + inst);
        const auto exact = exact_gradient(in.p, in.y, in.spec);
        const auto approx = approx_gradient(in.p, in.y, in.spec, 0.0);
        for (std::size_t k = 0; k < exact.gradient.values().size(); ++k) {
            worst_zero = std::max(worst_zero, std::abs(exact.gradient.values()[k] - approx.gradient.values()[k]));
        }
    }
    const auto s = synth::gen_synthetic10(0);
    const auto p = build_affinities(s.data, 30);
    const auto spec = alpha_from_beta(s.f14, 0.01);
    const auto converged = run(p, spec, OptimizerConfig{}).embedding;
    const auto exact = exact_gradient(p, converged, spec);
    const auto approx = approx_gradient(p, converged, spec, 0.5);
    const auto attraction = attractive_forces(p, converged);
    std::vector<double> errors, repulsion_errors;
    for (std::size_t i = 0; i < converged.size(); ++i) {
        const double ex = exact.gradient(i, 0), ey = exact.gradient(i, 1);
        const double diff = std::hypot(approx.gradient(i, 0) - ex, approx.gradient(i, 1) - ey);
        errors.push_back(diff / std::hypot(ex, ey));
        repulsion_errors.push_back(diff / std::hypot(4 * attraction(i, 0) - ex, 4 * attraction(i, 1) - ey));
    }
    const double median = median_of(errors);
    const double elapsed = seconds_since(start);

    // Reference: the same measure for plain t-SNE at its own converged layout.
    const auto plain_spec = PriorSpec::unconditioned(p.n);
    const auto plain = run(p, plain_spec, OptimizerConfig{}).embedding;
    const auto plain_exact = exact_gradient(p, plain, plain_spec);
    const auto plain_approx = approx_gradient(p, plain, plain_spec, 0.5);
    std::vector<double> plain_errors;
    for (std::size_t i = 0; i < plain.size(); ++i) {
        const double ex = plain_exact.gradient(i, 0), ey = plain_exact.gradient(i, 1);
        plain_errors.push_back(std::hypot(plain_approx.gradient(i, 0) - ex, plain_approx.gradient(i, 1) - ey) /
                               std::hypot(ex, ey));
    }

    v.pass = worst_zero < 1e-10 && median < 0.05 && elapsed < 120;
    v.detail << "theta=0 max abs diff " << fmt(worst_zero) << " (limit 1e-10); theta=0.5 median relative gradient error "
             << fmt(median) << " (limit 0.05); " << fmt(elapsed) << " s (limit 120 s); for reference: median "
             << "error relative to the repulsive force " << fmt(median_of(repulsion_errors))
             << ", plain t-SNE median relative gradient error " << fmt(median_of(plain_errors));
    return v;
}

std::vector<double> curve(const EmbeddingMatrix& y, const LabelVector& labels,
                          LaplacianNormalization norm = LaplacianNormalization::random_walk) {
    std::vector<double> out;
    for (auto k : default_k_range()) {
        out.push_back(laplacian_score(knn_graph(y, k), labels, norm));
    }
    return out;
}

EmbeddingMatrix embed_with(const SparseAffinities& p, const PriorSpec& spec, std::uint64_t seed) {
    OptimizerConfig cfg;
    cfg.seed = seed;
    return run(p, spec, cfg).embedding;
}

// 4. Score orderings on the synthetic data over three seeds.
Verdict figure3_orderings() {
    Verdict v;
    const auto start = Clock::now();
    int failures = 0, pointwise_failures = 0;
    std::array<int, 3> by_clause{};
    double worst_ratio = 0;
    std::ostringstream sym;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto s = synth::gen_synthetic10(seed);
        const auto p = build_affinities(s.data, 30);
        const auto tsne = embed_with(p, PriorSpec::unconditioned(1000), seed);
        const auto ct14 = embed_with(p, alpha_from_beta(s.f14, 0.01), seed);
        const auto ct56 = embed_with(p, alpha_from_beta(s.f56, 0.01), seed);
        for (auto norm : {LaplacianNormalization::random_walk, LaplacianNormalization::symmetric}) {
            const auto t14 = curve(tsne, s.f14, norm), t56 = curve(tsne, s.f56, norm);
            const auto c14 = curve(ct14, s.f14, norm), c56 = curve(ct56, s.f56, norm);
            const auto c14_56 = curve(ct14, s.f56, norm);
            // The band is the range of the t-SNE/f14 curve over k.
            const double band_top = *std::max_element(t14.begin(), t14.end());
            std::array<int, 3> bad{};
            int pointwise = 0;
            for (std::size_t t = 0; t < t14.size(); ++t) {
                bad[0] += !(c14[t] > t14[t]);
                bad[1] += !(c56[t] > t56[t]);
                bad[2] += !(c14_56[t] <= 2 * band_top);
                pointwise += !(c14_56[t] <= 2 * t14[t]);
            }
            const double ratio = *std::max_element(c14_56.begin(), c14_56.end()) / band_top;
            if (norm == LaplacianNormalization::random_walk) {
                for (int c = 0; c < 3; ++c) {
                    by_clause[c] += bad[c];
                    failures += bad[c];
                }
                pointwise_failures += pointwise;
                worst_ratio = std::max(worst_ratio, ratio);
                v.detail << "seed " << seed << ": k=10 scores t-SNE/f14 " << fmt(t14[0]) << ", ct-SNE(f14)/f14 "
                         << fmt(c14[0]) << ", t-SNE/f56 " << fmt(t56[0]) << ", ct-SNE(f56)/f56 " << fmt(c56[0])
                         << ", ct-SNE(f14)/f56 " << fmt(c14_56[0]) << "; ";
            } else {
                sym << " seed " << seed << ": " << bad[0] + bad[1] + bad[2] << " violations";
            }
        }
    }
    const double elapsed = seconds_since(start);
    v.pass = failures == 0 && elapsed < 900;
    v.detail << failures << " violations over 3 seeds x 10 k (ct-SNE(f14) above t-SNE on f14: " << by_clause[0]
             << ", ct-SNE(f56) above t-SNE on f56: " << by_clause[1] << ", ct-SNE(f14)/f56 within 2x of the t-SNE/f14 "
             << "band: " << by_clause[2] << "); max ratio of ct-SNE(f14)/f56 to the band top " << fmt(worst_ratio)
             << " (limit 2); same k comparison would give " << pointwise_failures
             << " violations; symmetric normalization (informational):"
             << sym.str() << "; " << fmt(elapsed) << " s (limit 900 s)";
    return v;
}

// 5. A beta' < 1 reaches a lower objective than t-SNE.
Verdict beta_sweep() {
    Verdict v;
    const auto start = Clock::now();
    const std::vector<double> grid{0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto s = synth::gen_synthetic10(seed);
        const auto p = build_affinities(s.data, 30);
        std::vector<double> objectives;
        for (double beta : grid) {
            const auto spec = alpha_from_beta(s.f14, beta);
            const auto y = embed_with(p, spec, seed);
            objectives.push_back(ctsne_objective(p, y, spec));
        }
        const auto best = std::min_element(objectives.begin(), objectives.end() - 1);
        const bool win = *best < objectives.back();
        wins += win;
        v.detail << "seed " << seed << ": min " << fmt(*best, "%.4f") << " at beta'="
                 << grid[static_cast<std::size_t>(best - objectives.begin())] << " vs beta'=1 "
                 << fmt(objectives.back(), "%.4f") << (win ? " (lower)" : " (not lower)") << "; ";
    }
    const double elapsed = seconds_since(start);
    v.pass = wins >= 2 && elapsed < 1800;
    v.detail << wins << "/3 seeds lower (need 2); " << fmt(elapsed) << " s (limit 1800 s)";
    return v;
}

// 6. Barnes-Hut per-step time scales near n log n; the exact engine is much slower.
Verdict scaling() {
    Verdict v;
    const auto start = Clock::now();
    struct Problem {
        SparseAffinities p;
        EmbeddingMatrix y;
        PriorSpec prior;
    };
    const std::array<std::size_t, 3> sizes{25000, 50000, 100000};
    std::vector<Problem> problems;
    for (std::size_t n : sizes) {
        auto spec_in = synth::synthetic10_spec(7);
        spec_in.n = n;
        const auto data = synth::generate(spec_in);
        // Clustered layout with t-SNE-like density: extent grows with sqrt(n).
        const double spread = std::sqrt(static_cast<double>(n) / 1000.0);
        EmbeddingMatrix y{Matrix(n, 2)};
        for (std::size_t i = 0; i < n; ++i) {
            y.coords(i, 0) = spread * (3 * data.data.points(i, 0) + data.data.points(i, 4));
            y.coords(i, 1) = spread * (3 * data.data.points(i, 1) + data.data.points(i, 5));
        }
        problems.push_back({build_affinities(data.data, 30), std::move(y), alpha_from_beta(data.labels[0], 0.01)});
    }
    // Rounds time every size once, so host speed drift hits all sizes alike.
    // One warm-up round, then the fastest of the rest: scheduling noise only adds time.
    constexpr int rounds = 15;
    std::array<std::vector<double>, 3> steps;
    for (int round = 0; round <= rounds; ++round) {
        for (std::size_t s = 0; s < problems.size(); ++s) {
            const auto& pr = problems[s];
            const auto t0 = Clock::now();
            const auto g = approx_gradient(pr.p, pr.y, pr.prior, 0.5);
            if (round > 0) {
                steps[s].push_back(seconds_since(t0));
            }
        }
    }
    std::vector<double> times, medians;
    for (const auto& st : steps) {
        times.push_back(*std::min_element(st.begin(), st.end()));
        medians.push_back(median_of(st));
    }
    const auto t0 = Clock::now();
    const auto g = exact_gradient(problems[0].p, problems[0].y, problems[0].prior);
    const double exact_time = seconds_since(t0);
    const double r1 = times[1] / times[0], r2 = times[2] / times[1], speedup = exact_time / times[0];
    const double elapsed = seconds_since(start);
    v.pass = r1 < 2.6 && r2 < 2.6 && speedup >= 20 && elapsed < 1800;
    v.detail << "BH step " << fmt(times[0]) << "/" << fmt(times[1]) << "/" << fmt(times[2])
             << " s at 25k/50k/100k (fastest of 15 interleaved rounds; medians " << fmt(medians[0]) << "/" << fmt(medians[1]) << "/"
             << fmt(medians[2]) << "), ratios " << fmt(r1) << ", " << fmt(r2) << " (limit 2.6); exact at 25k "
             << fmt(exact_time) << " s = " << fmt(speedup) << "x BH (need 20x); " << fmt(elapsed)
             << " s (limit 1800 s)";
    return v;
}

// Fraction of k = 50 neighbour pairs in the same big cluster that also share the sub-cluster.
double same_cluster_agreement(const EmbeddingMatrix& y, const synth::Cca5& c) {
    const auto graph = knn_graph(y, 50);
    double same = 0, total = 0;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (auto j : graph.adjacency[i]) {
            if (c.big[i] == c.big[j]) {
                ++total;
                same += c.small[i] == c.small[j];
            }
        }
    }
    return same / total;
}

// 7. ct-SNE keeps the sub-cluster structure that the null-space CCA baseline loses.
Verdict cca_contrast() {
    Verdict v;
    const auto start = Clock::now();
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto c = synth::gen_cca5(seed);
        const auto ct = embed_with(build_affinities(c.data, 30), alpha_from_beta(c.big, 0.01), seed);

        auto model = cca::fit_cca(c.data, c.big);
        model = model.truncated(std::min(model.components(), c.data.dims() - 2));
        const auto projected = cca::nullspace_project(c.data, model);
        const auto base = embed_with(build_affinities(projected, 30), PriorSpec::unconditioned(1000), seed);

        const double s_ct = laplacian_score(knn_graph(ct, 50), c.small);
        const double s_base = laplacian_score(knn_graph(base, 50), c.small);
        const double sym_ct = laplacian_score(knn_graph(ct, 50), c.small, LaplacianNormalization::symmetric);
        const double sym_base = laplacian_score(knn_graph(base, 50), c.small, LaplacianNormalization::symmetric);
        wins += s_ct < s_base;
        v.detail << "seed " << seed << ": ct-SNE " << fmt(s_ct) << " vs CCA " << fmt(s_base) << " ("
                 << projected.dims() << "-d null space; symmetric " << fmt(sym_ct) << " vs " << fmt(sym_base)
                 << "; sub-cluster agreement among same-cluster neighbours " << fmt(same_cluster_agreement(ct, c))
                 << " vs " << fmt(same_cluster_agreement(base, c)) << "); ";
    }
    const double elapsed = seconds_since(start);
    v.pass = wins >= 2 && elapsed < 600;
    v.detail << wins << "/3 seeds lower for ct-SNE (need 2); " << fmt(elapsed) << " s (limit 600 s)";
    return v;
}

// 8. Property suites over random instances.
Verdict invariants() {
    Verdict v;
    const auto start = Clock::now();
    int checked = 0, failed = 0;
    auto check = [&](bool ok) {
        ++checked;
        failed += !ok;
    };
    Rng rng(8);
    for (std::uint64_t t = 0; t < 40; ++t) {
        // sum r = 1
        const std::size_t n = 5 + rng.below(40);
        const auto labels = random_labels(n, 1 + rng.below(5), 800 + t);
        if (same_pair_fraction(labels) > 0) {
            const double beta = 0.01 + 0.99 * rng.uniform();
            const auto spec = alpha_from_beta(labels, beta);
            // alpha'-beta' relation residual
            check(std::abs(spec.residual()) < 1e-12);
            const EmbeddingMatrix y{random_matrix(n, 2, 900 + t, 3.0)};
            const auto stats = q_matrix_stats(y, spec);
            double total = 0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (i != j) {
                        total += conditional_r(stats, spec, i, j);
                    }
                }
            }
            check(std::abs(total - 1) < 1e-12);
        }
        // quadtree histogram conservation
        const std::size_t m = 50 + rng.below(500);
        const auto tree_labels = random_labels(m, 1 + rng.below(6), 1000 + t);
        const EmbeddingMatrix ty{random_matrix(m, 2, 1100 + t, 5.0)};
        const auto tree = build_quadtree(ty, tree_labels);
        bool conserved = true;
        for (std::size_t id = 0; id < tree.node_count(); ++id) {
            const auto& node = tree.node(id);
            const auto hist = tree.histogram(id);
            conserved &= std::accumulate(hist.begin(), hist.end(), 0u) == node.count;
            if (!node.leaf) {
                std::vector<std::uint32_t> sum(hist.size(), 0);
                for (auto c : node.children) {
                    if (c >= 0) {
                        const auto ch = tree.histogram(static_cast<std::size_t>(c));
                        for (std::size_t l = 0; l < sum.size(); ++l) {
                            sum[l] += ch[l];
                        }
                    }
                }
                conserved &= std::equal(sum.begin(), sum.end(), hist.begin());
            }
        }
        const auto root = tree.histogram(0);
        for (std::size_t l = 0; l < tree_labels.num_classes(); ++l) {
            conserved &= root[l] == tree_labels.class_sizes()[l];
        }
        check(conserved);
        // affinity symmetry and normalization
        const auto data = Dataset::from_matrix(random_matrix(40 + rng.below(100), 4, 1200 + t));
        const auto p = build_affinities(data, 2 + 10 * rng.uniform());
        double sum = 0;
        bool symmetric = true;
        for (std::size_t i = 0; i < p.n; ++i) {
            for (std::size_t k = 0; k < p.row_cols(i).size(); ++k) {
                const auto j = p.row_cols(i)[k];
                sum += p.row_vals(i)[k];
                symmetric &= p.at(j, i) == p.row_vals(i)[k] && j != i;
            }
        }
        check(symmetric && std::abs(sum - 1) < 1e-12);
        // constant labels score zero on any kNN graph
        const auto g = knn_graph(random_matrix(30 + rng.below(100), 2, 1300 + t), 1 + rng.below(10));
        check(laplacian_score(g, constant_labels(g.size())) == 0);
    }
    // Laplacian hand cases on the 4-cycle.
    const auto cycle = KnnGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    check(laplacian_score(cycle, constant_labels(4)) == 0);
    check(laplacian_score(cycle, LabelVector::encode(std::vector<int>{0, 1, 0, 1})) == 2.0);
    check(laplacian_score(cycle, LabelVector::encode(std::vector<int>{0, 1, 0, 1}),
                          LaplacianNormalization::symmetric) == 2.0);
    const auto two = KnnGraph::from_edges(8, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}});
    check(laplacian_score(two, LabelVector::encode(std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1})) == 0);

    const double elapsed = seconds_since(start);
    v.pass = failed == 0 && elapsed < 60;
    v.detail << checked - failed << "/" << checked << " property checks hold; " << fmt(elapsed)
             << " s (limit 60 s)";
    return v;
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        Verdict (*check)();
    };
    const Criterion all[] = {
        {1, "gradient correctness", gradient_correctness},
        {2, "t-SNE reduction", tsne_reduction},
        {3, "Barnes-Hut fidelity", bh_fidelity},
        {4, "Laplacian score orderings", figure3_orderings},
        {5, "beta' sweep objective ordering", beta_sweep},
        {6, "runtime scaling", scaling},
        {7, "CCA baseline contrast", cca_contrast},
        {8, "invariant suites", invariants},
    };
    std::vector<int> chosen, expected_failures;
    CLI::App app{"Acceptance criteria: one PASS or FAIL line per criterion"};
    app.add_option("criteria", chosen, "criterion numbers to run (default: all)");
    app.add_option("--expect-fail", expected_failures,
                   "criteria known to fail; the exit status ignores their FAIL and flags an unexpected PASS")
        ->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    const std::set<int> selected(chosen.begin(), chosen.end());
    const std::set<int> expected(expected_failures.begin(), expected_failures.end());

    int unexpected = 0;
    std::vector<int> failed;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) {
            continue;
        }
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "threw: " << e.what();
        }
        if (!v.pass) {
            failed.push_back(c.id);
        }
        unexpected += v.pass == static_cast<bool>(expected.count(c.id));
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail.str()
                  << std::endl;
    }
    std::cout << failed.size() << " failed";
    if (!expected.empty()) {
        std::cout << "; " << unexpected << " differ from the expected outcome";
    }
    std::cout << std::endl;
    return unexpected == 0 ? 0 : 1;
}
