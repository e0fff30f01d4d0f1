#pragma once

#include <span>
#include <vector>

namespace evid {

// Dirichlet over class probabilities, parameterized by concentration
// alpha = evidence + 1, so alpha_k >= 1 and alpha0 >= K always hold.
// The subjective-logic quantities (belief masses, uncertainty mass)
// satisfy u + sum_k b_k = 1.
class DirichletPrediction {
public:
    // alpha = e + 1. Throws std::invalid_argument on negative or
    // non-finite evidence.
    static DirichletPrediction from_evidence(std::span<const double> evidence);

    // Direct construction from alpha; every entry must be >= 1.
    static DirichletPrediction from_alpha(std::vector<double> alpha);

    const std::vector<double>& alpha() const { return alpha_; }
    double alpha0() const { return alpha0_; }
    int num_classes() const { return static_cast<int>(alpha_.size()); }

    // u = K / alpha0, in (0, 1].
    double uncertainty() const;

    // b_k = (alpha_k - 1) / alpha0
    std::vector<double> belief_masses() const;

    // E[eta_k] = alpha_k / alpha0
    std::vector<double> expected_probs() const;

    // Shannon entropy (nats) of the expected class probabilities.
    double predictive_entropy() const;

private:
    explicit DirichletPrediction(std::vector<double> alpha);

    std::vector<double> alpha_;
    double alpha0_ = 0.0;
};

}  // namespace evid
