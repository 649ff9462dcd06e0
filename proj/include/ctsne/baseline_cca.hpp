#ifndef CTSNE_BASELINE_CCA_HPP
#define CTSNE_BASELINE_CCA_HPP

#include "data_model.hpp"

#include <Eigen/Dense>

namespace ctsne::cca {

inline constexpr double kRidge = 1e-6;

/**
 * Canonical directions of the data view against a one-hot label view.
 * `directions` columns are orthonormal under `covariance` and ordered by
 * decreasing canonical correlation; `complement` spans the rest of the data
 * space with zero correlation.
 */
struct CcaModel {
    Eigen::MatrixXd directions;
    Eigen::VectorXd correlations;
    Eigen::MatrixXd complement;
    Eigen::VectorXd mean;
    /// Ridge-regularized data covariance.
    Eigen::MatrixXd covariance;

    std::size_t components() const { return static_cast<std::size_t>(directions.cols()); }

    /// Keeps the top `m` directions; the rest move into the complement.
    CcaModel truncated(std::size_t m) const {
        require(m <= components(), "cannot keep more CCA directions than were fitted");
        const auto keep = static_cast<Eigen::Index>(m);
        CcaModel out = *this;
        out.directions = directions.leftCols(keep);
        out.correlations = correlations.head(keep);
        out.complement.resize(directions.rows(), directions.cols() - keep + complement.cols());
        out.complement << directions.rightCols(directions.cols() - keep), complement;
        return out;
    }
};

namespace detail {

inline Eigen::MatrixXd centered(const Dataset& data, Eigen::VectorXd& mean) {
    Eigen::MatrixXd x(data.size(), data.dims());
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t c = 0; c < data.dims(); ++c) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = data.points(i, c);
        }
    }
    mean = x.colwise().mean().transpose();
    x.rowwise() -= mean.transpose();
    return x;
}

inline Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& cov, const char* which) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const auto& values = eig.eigenvalues();
    if (!(values.minCoeff() > 0) || values.maxCoeff() / values.minCoeff() > 1e12) {
        throw Error(std::string("CCA: ") + which + " covariance is rank-deficient beyond ridge repair");
    }
    return eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

inline Dataset to_dataset(const Eigen::MatrixXd& m, const std::string& prefix) {
    Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    std::vector<std::string> names;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        names.push_back(prefix + std::to_string(c + 1));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
        }
    }
    return Dataset::from_matrix(std::move(out), std::move(names));
}

/// Flips each column so its largest-magnitude entry is positive.
inline void fix_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Eigen::Index arg = 0;
        m.col(c).cwiseAbs().maxCoeff(&arg);
        if (m(arg, c) < 0) {
            m.col(c) *= -1;
        }
    }
}

} // namespace detail

/**
 * CCA between centered data and the one-hot labels (last class dropped),
 * solved by whitening both views and taking the SVD of the whitened
 * cross-covariance. At most min(d, L - 1) components.
 */
inline CcaModel fit_cca(const Dataset& data, const LabelVector& labels) {
    const std::size_t n = data.size(), d = data.dims(), classes = labels.num_classes();
    require(labels.size() == n, "labels and data disagree on n");
    require(n > d, "CCA needs more points than attributes");
    require(classes >= 2, "CCA needs at least 2 label classes");

    CcaModel model;
    const Eigen::MatrixXd x = detail::centered(data, model.mean);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(classes - 1));
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] + 1 < classes) {
            y(static_cast<Eigen::Index>(i), labels[i]) = 1;
        }
    }
    y.rowwise() -= y.colwise().mean();

    const double scale = 1.0 / static_cast<double>(n - 1);
    model.covariance = scale * x.transpose() * x;
    model.covariance.diagonal().array() += kRidge;
    Eigen::MatrixXd cyy = scale * y.transpose() * y;
    cyy.diagonal().array() += kRidge;
    const Eigen::MatrixXd cxy = scale * x.transpose() * y;

    const Eigen::MatrixXd wx = detail::inverse_sqrt(model.covariance, "data");
    const Eigen::MatrixXd wy = detail::inverse_sqrt(cyy, "label");
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(wx * cxy * wy, Eigen::ComputeFullU);

    const auto m = static_cast<Eigen::Index>(std::min(d, classes - 1));
    Eigen::MatrixXd all = wx * svd.matrixU();
    detail::fix_signs(all);
    model.directions = all.leftCols(m);
    model.complement = all.rightCols(all.cols() - m);
    model.correlations = svd.singularValues().head(m).cwiseMax(0.0).cwiseMin(1.0);
    return model;
}

/**
 * Centers the data and expresses it in an orthonormal basis of the subspace
 * whose coordinates are uncorrelated with every canonical variate of the
 * model. `keep` limits the output to the first `keep` basis vectors.
 */
inline Dataset nullspace_project(const Dataset& data, const CcaModel& model,
                                 std::optional<std::size_t> keep = std::nullopt) {
    const std::size_t d = data.dims(), used = model.components();
    require(static_cast<std::size_t>(model.mean.size()) == d, "CCA model was fitted on a different dimensionality");
    require(!keep || *keep >= 2, "the projection must keep at least 2 dimensions");
    const std::size_t available = d > used ? d - used : 0;
    if (available < keep.value_or(2)) {
        throw Error("null space exhausted: " + std::to_string(used) + " CCA directions leave " +
                    std::to_string(available) + " of " + std::to_string(d) + " dimensions");
    }

    // Gram-Schmidt over [covariance * directions, e_1, ..., e_d].
    const auto dims = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd candidates(dims, static_cast<Eigen::Index>(used + d));
    candidates << model.covariance * model.directions, Eigen::MatrixXd::Identity(dims, dims);
    std::vector<Eigen::VectorXd> basis;
    std::vector<Eigen::VectorXd> null_basis;
    for (Eigen::Index c = 0; c < candidates.cols(); ++c) {
        Eigen::VectorXd v = candidates.col(c);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                v -= b.dot(v) * b;
            }
        }
        const double norm = v.norm();
        if (norm > 1e-10 * std::max(1.0, candidates.col(c).norm())) {
            basis.push_back(v / norm);
            if (c >= static_cast<Eigen::Index>(used)) {
                null_basis.push_back(basis.back());
            }
        }
    }
    const std::size_t out_dims = std::min(keep.value_or(null_basis.size()), null_basis.size());
    Eigen::MatrixXd b(dims, static_cast<Eigen::Index>(out_dims));
    for (std::size_t c = 0; c < out_dims; ++c) {
        b.col(static_cast<Eigen::Index>(c)) = null_basis[c];
    }
    Eigen::VectorXd mean;
    const Eigen::MatrixXd x = detail::centered(data, mean);
    return detail::to_dataset(x * b, "null");
}

/**
 * Projects onto the two canonical directions with the smallest correlation.
 * With a single fitted direction, the zero-correlation complement fills in
 * first (the fitted direction is used only when d = 2), and `warning` is set.
 */
inline Dataset mincorr_project(const Dataset& data, const CcaModel& model, std::string* warning = nullptr) {
    const auto used = static_cast<Eigen::Index>(model.components());
    const auto spare = model.complement.cols();
    Eigen::MatrixXd pick(model.directions.rows(), 2);
    if (used >= 2) {
        pick << model.directions.col(used - 1), model.directions.col(used - 2);
    } else if (used + spare >= 2) {
        Eigen::MatrixXd pool(model.directions.rows(), spare + used);
        pool << model.complement, model.directions;
        pick = pool.leftCols(2);
        if (warning) {
            *warning = "only " + std::to_string(used) +
                       " CCA direction(s); completed with covariance-orthogonal complement directions";
        }
    } else {
        throw Error("mincorr projection needs at least 2 directions");
    }
    Eigen::VectorXd mean;
    const Eigen::MatrixXd x = detail::centered(data, mean);
    return detail::to_dataset(x * pick, "cca");
}

} // namespace ctsne::cca

#endif
