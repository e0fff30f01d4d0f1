#include "evid/dirichlet.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evid {

DirichletPrediction::DirichletPrediction(std::vector<double> alpha)
    : alpha_(std::move(alpha)) {
    alpha0_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
}

DirichletPrediction DirichletPrediction::from_evidence(std::span<const double> evidence) {
    if (evidence.empty()) {
        throw std::invalid_argument("DirichletPrediction: empty evidence");
    }
    std::vector<double> alpha(evidence.size());
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        if (!(evidence[i] >= 0.0) || !std::isfinite(evidence[i])) {
            throw std::invalid_argument("DirichletPrediction: evidence must be nonnegative and finite");
        }
        alpha[i] = evidence[i] + 1.0;
    }
    return DirichletPrediction(std::move(alpha));
}

DirichletPrediction DirichletPrediction::from_alpha(std::vector<double> alpha) {
    if (alpha.empty()) {
        throw std::invalid_argument("DirichletPrediction: empty alpha");
    }
    for (double a : alpha) {
        if (!(a >= 1.0) || !std::isfinite(a)) {
            throw std::invalid_argument("DirichletPrediction: alpha entries must be >= 1 and finite");
        }
    }
    return DirichletPrediction(std::move(alpha));
}

double DirichletPrediction::uncertainty() const {
    return static_cast<double>(num_classes()) / alpha0_;
}

std::vector<double> DirichletPrediction::belief_masses() const {
    std::vector<double> b(alpha_.size());
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
        b[i] = (alpha_[i] - 1.0) / alpha0_;
    }
    return b;
}

std::vector<double> DirichletPrediction::expected_probs() const {
    std::vector<double> p(alpha_.size());
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
        p[i] = alpha_[i] / alpha0_;
    }
    return p;
}

double DirichletPrediction::predictive_entropy() const {
    double h = 0.0;
    for (double a : alpha_) {
        const double p = a / alpha0_;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace evid
