#ifndef CTSNE_PRIOR_HPP
#define CTSNE_PRIOR_HPP

#include "data_model.hpp"

namespace ctsne {

/// Fraction of ordered pairs i != j that share a label: sum_l n_l (n_l - 1) / (n (n - 1)).
inline double same_pair_fraction(const LabelVector& labels) {
    const auto n = static_cast<double>(labels.size());
    double same = 0;
    for (auto size : labels.class_sizes()) {
        same += static_cast<double>(size) * static_cast<double>(size - 1);
    }
    return same / (n * (n - 1));
}

/**
 * Label prior with its normalized same-label weight alpha' and
 * different-label weight beta'. The two are tied by
 *   alpha' s + beta' (1 - s) = 1,  s = same_pair_fraction,
 * so beta' is the only free parameter and alpha' is always derived.
 */
class PriorSpec {
public:
    static PriorSpec from_beta(LabelVector labels, double beta_prime) {
        require(beta_prime > 0 && beta_prime <= 1, "beta' must be in (0, 1], got " + std::to_string(beta_prime));
        require(labels.size() >= 2, "a prior needs at least 2 labeled points");
        const double s = ctsne::same_pair_fraction(labels);
        if (!(s > 0)) {
            throw ValidationError("prior vacuous: no same-label pairs");
        }
        PriorSpec spec;
        spec.same_pair_fraction_ = s;
        spec.beta_prime_ = beta_prime;
        spec.alpha_prime_ = beta_prime == 1.0 ? 1.0 : (1 - beta_prime * (1 - s)) / s;
        spec.labels_ = std::move(labels);
        return spec;
    }

    /// alpha' = beta' = 1 over a single class; reproduces plain t-SNE.
    static PriorSpec unconditioned(std::size_t n) { return from_beta(constant_labels(n), 1.0); }

    const LabelVector& labels() const { return labels_; }
    double alpha_prime() const { return alpha_prime_; }
    double beta_prime() const { return beta_prime_; }
    double same_pair_fraction() const { return same_pair_fraction_; }
    std::size_t size() const { return labels_.size(); }

    /// Weight of pair (i, j): alpha' when labels agree, beta' otherwise.
    double weight(std::size_t i, std::size_t j) const {
        return labels_[i] == labels_[j] ? alpha_prime_ : beta_prime_;
    }

    double residual() const {
        return alpha_prime_ * same_pair_fraction_ + beta_prime_ * (1 - same_pair_fraction_) - 1;
    }

private:
    LabelVector labels_;
    double beta_prime_ = 1;
    double alpha_prime_ = 1;
    double same_pair_fraction_ = 1;
};

inline PriorSpec alpha_from_beta(const LabelVector& labels, double beta_prime) {
    return PriorSpec::from_beta(labels, beta_prime);
}

inline int delta(const PriorSpec& spec, std::size_t i, std::size_t j) {
    require(i != j, "delta is undefined for i == j");
    require(i < spec.size() && j < spec.size(), "delta index out of range");
    return spec.labels()[i] == spec.labels()[j] ? 1 : 0;
}

} // namespace ctsne

#endif
