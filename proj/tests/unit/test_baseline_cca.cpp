#include "test_util.hpp"

#include <ctsne/baseline_cca.hpp>

#include <gtest/gtest.h>

using namespace ctsne;
using ctsne::testing::random_labels;
using ctsne::testing::random_matrix;

namespace {

struct Constructed {
    Dataset data;
    LabelVector labels;
};

// Attribute 0 is bimodal around +-2 and the label is its sign; the rest is noise.
Constructed label_aligned(std::size_t n, std::size_t d, std::uint64_t seed) {
    auto m = random_matrix(n, d, seed);
    Rng rng(seed + 1000);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
        m(i, 0) = 2 * side + 0.5 * m(i, 0);
        labels[i] = m(i, 0) > 0 ? 1 : 0;
    }
    return {Dataset::from_matrix(std::move(m)), LabelVector::encode(labels)};
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> column(const Dataset& data, std::size_t c) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i] = data.points(i, c);
    }
    return out;
}

std::vector<double> indicator(const LabelVector& labels, std::size_t l) {
    std::vector<double> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = labels[i] == l ? 1.0 : 0.0;
    }
    return out;
}

/// Largest |correlation| between any output column and any label indicator.
double max_label_correlation(const Dataset& projected, const LabelVector& labels) {
    double worst = 0;
    for (std::size_t c = 0; c < projected.dims(); ++c) {
        for (std::size_t l = 0; l < labels.num_classes(); ++l) {
            worst = std::max(worst, std::abs(correlation(column(projected, c), indicator(labels, l))));
        }
    }
    return worst;
}

} // namespace

TEST(FitCca, LabelAlignedAttributeDominates) {
    const auto c = label_aligned(1000, 5, 1);
    const auto model = cca::fit_cca(c.data, c.labels);
    ASSERT_EQ(model.components(), 1u);
    EXPECT_GT(model.correlations(0), 0.9);
    Eigen::Index arg = 0;
    model.directions.col(0).cwiseAbs().maxCoeff(&arg);
    EXPECT_EQ(arg, 0);
    EXPECT_GT(std::abs(model.directions(0, 0)), 5 * model.directions.col(0).tail(4).cwiseAbs().maxCoeff());
}

TEST(FitCca, RandomLabelsHaveLowCorrelation) {
    const auto data = Dataset::from_matrix(random_matrix(1000, 5, 2));
    for (std::size_t classes : {2, 3, 5}) {
        const auto model = cca::fit_cca(data, random_labels(1000, classes, 2));
        EXPECT_EQ(model.components(), std::min<std::size_t>(5, classes - 1));
        EXPECT_LT(model.correlations.maxCoeff(), 0.2);
    }
}

TEST(FitCca, DuplicatedAttributeLeavesCorrelationsUnchanged) {
    const auto c = label_aligned(1000, 4, 3);
    Matrix m(1000, 5);
    for (std::size_t i = 0; i < 1000; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            m(i, k) = c.data.points(i, k);
        }
        m(i, 4) = c.data.points(i, 0);
    }
    const auto base = cca::fit_cca(c.data, c.labels);
    const auto augmented = cca::fit_cca(Dataset::from_matrix(std::move(m)), c.labels);
    ASSERT_EQ(base.components(), augmented.components());
    for (Eigen::Index k = 0; k < base.correlations.size(); ++k) {
        EXPECT_NEAR(base.correlations(k), augmented.correlations(k), 1e-6);
    }
}

TEST(FitCca, DirectionsAreCovarianceOrthonormal) {
    const auto data = Dataset::from_matrix(random_matrix(500, 6, 4, 2.0));
    const auto model = cca::fit_cca(data, random_labels(500, 4, 4));
    ASSERT_EQ(model.components(), 3u);
    Eigen::MatrixXd all(6, 6);
    all << model.directions, model.complement;
    const Eigen::MatrixXd gram = all.transpose() * model.covariance * all;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-9);
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_GE(model.correlations(k), 0.0);
        EXPECT_LE(model.correlations(k), 1.0);
        if (k > 0) {
            EXPECT_GE(model.correlations(k - 1), model.correlations(k));
        }
    }
}

TEST(FitCca, ValidatesInputs) {
    const auto small = Dataset::from_matrix(random_matrix(3, 5, 1));
    EXPECT_THROW(cca::fit_cca(small, random_labels(3, 2, 1)), ValidationError);
    const auto data = Dataset::from_matrix(random_matrix(50, 3, 1));
    EXPECT_THROW(cca::fit_cca(data, constant_labels(50)), ValidationError);
    EXPECT_THROW(cca::fit_cca(data, random_labels(49, 2, 1)), ValidationError);
    Matrix constant(50, 2, 1.0);
    EXPECT_NO_THROW(cca::fit_cca(Dataset::from_matrix(constant), random_labels(50, 2, 1)));
}

TEST(NullspaceProject, RemovesLabelCorrelation) {
    const auto c = label_aligned(1000, 5, 5);
    ASSERT_GT(max_label_correlation(c.data, c.labels), 0.9);
    const auto projected = cca::nullspace_project(c.data, cca::fit_cca(c.data, c.labels));
    EXPECT_EQ(projected.dims(), 4u);
    EXPECT_LT(max_label_correlation(projected, c.labels), 0.1);
    EXPECT_EQ(projected.attribute_names.front(), "null1");
}

TEST(NullspaceProject, KeepLimitsOutputDimensions) {
    const auto c = label_aligned(300, 5, 6);
    const auto model = cca::fit_cca(c.data, c.labels);
    EXPECT_EQ(cca::nullspace_project(c.data, model, 2).dims(), 2u);
    EXPECT_THROW(cca::nullspace_project(c.data, model, 1), ValidationError);
    EXPECT_THROW(cca::nullspace_project(c.data, model, 5), Error);
}

TEST(NullspaceProject, NoDirectionsMeansCentering) {
    const auto data = Dataset::from_matrix(random_matrix(100, 3, 7, 2.0));
    const auto model = cca::fit_cca(data, random_labels(100, 3, 7)).truncated(0);
    const auto projected = cca::nullspace_project(data, model);
    ASSERT_EQ(projected.dims(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto col = column(data, k);
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / 100.0;
        for (std::size_t i = 0; i < 100; ++i) {
            EXPECT_NEAR(projected.points(i, k), data.points(i, k) - mean, 1e-12);
        }
    }
}

TEST(NullspaceProject, ExhaustedWhenLabelsSpanTheData) {
    const auto data = Dataset::from_matrix(random_matrix(200, 2, 8));
    const auto model = cca::fit_cca(data, random_labels(200, 3, 8));
    try {
        cca::nullspace_project(data, model);
        FAIL() << "expected an exhausted null space";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("null space exhausted"), std::string::npos);
    }
}

TEST(NullspaceProject, UncorrelatedWithRemovedVariates) {
    const auto data = Dataset::from_matrix(random_matrix(800, 6, 9, 1.5));
    const auto labels = random_labels(800, 3, 9);
    const auto model = cca::fit_cca(data, labels);
    const auto projected = cca::nullspace_project(data, model);
    ASSERT_EQ(projected.dims(), 4u);
    Eigen::VectorXd mean;
    const Eigen::MatrixXd variates = cca::detail::centered(data, mean) * model.directions;
    for (Eigen::Index v = 0; v < variates.cols(); ++v) {
        const std::vector<double> removed(variates.col(v).data(), variates.col(v).data() + variates.rows());
        for (std::size_t c = 0; c < projected.dims(); ++c) {
            EXPECT_LT(std::abs(correlation(removed, column(projected, c))), 1e-6);
        }
    }
}

TEST(MincorrProject, SingleDirectionFallsBackWithWarning) {
    const auto data = Dataset::from_matrix(random_matrix(100, 2, 10));
    const auto model = cca::fit_cca(data, random_labels(100, 2, 10));
    std::string warning;
    const auto projected = cca::mincorr_project(data, model, &warning);
    EXPECT_EQ(projected.dims(), 2u);
    EXPECT_FALSE(warning.empty());
    EXPECT_EQ(projected.attribute_names.front(), "cca1");
}

TEST(MincorrProject, OutputIsDecorrelatedFromLabels) {
    const auto c = label_aligned(1000, 5, 11);
    std::string warning;
    const auto projected = cca::mincorr_project(c.data, cca::fit_cca(c.data, c.labels), &warning);
    EXPECT_LT(max_label_correlation(projected, c.labels), 0.15);
}

TEST(MincorrProject, UsesSmallestCorrelationDirections) {
    const auto data = Dataset::from_matrix(random_matrix(400, 5, 12));
    const auto model = cca::fit_cca(data, random_labels(400, 4, 12));
    std::string warning;
    const auto projected = cca::mincorr_project(data, model, &warning);
    EXPECT_TRUE(warning.empty());
    Eigen::VectorXd mean;
    const Eigen::MatrixXd x = cca::detail::centered(data, mean);
    const Eigen::VectorXd last = x * model.directions.col(2);
    for (Eigen::Index i = 0; i < 400; ++i) {
        EXPECT_NEAR(projected.points(static_cast<std::size_t>(i), 0), last(i), 1e-12);
    }
}

TEST(MincorrProject, IsDeterministic) {
    const auto c = label_aligned(300, 5, 13);
    const auto a = cca::mincorr_project(c.data, cca::fit_cca(c.data, c.labels));
    const auto b = cca::mincorr_project(c.data, cca::fit_cca(c.data, c.labels));
    EXPECT_EQ(a.points, b.points);
}
