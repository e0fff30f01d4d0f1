#include "evid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evid/special_math.hpp"

namespace evid {

namespace {

std::vector<double> soft_label_from_counts(std::span<const int> counts) {
    const double m = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> y_bar(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) y_bar[k] = counts[k] / m;
    return y_bar;
}

void check_class(const DirichletPrediction& p, int true_class) {
    if (true_class < 0 || true_class >= p.num_classes()) {
        throw std::invalid_argument("loss: class index out of range");
    }
}

}  // namespace

double effective_lambda(const LossSpec& spec, std::int64_t step) {
    if (spec.anneal_steps <= 0) return spec.lambda;
    const double ramp = std::min(1.0, static_cast<double>(step) / static_cast<double>(spec.anneal_steps));
    return spec.lambda * ramp;
}

LossTarget target_from_annotations(const AnnotationSet& a) {
    LossTarget t;
    t.counts = a.counts();
    const auto m = majority(a);
    t.majority_class = m.status == MajorityStatus::MA ? m.ma_class : -1;
    return t;
}

LossValueGrad edl_nll(const DirichletPrediction& p, int true_class) {
    check_class(p, true_class);
    std::vector<int> counts(p.num_classes(), 0);
    counts[true_class] = 1;
    return edl_nll_star(p, counts);
}

LossValueGrad edl_nll_star(const DirichletPrediction& p, std::span<const int> counts) {
    if (static_cast<int>(counts.size()) != p.num_classes()) {
        throw std::invalid_argument("edl_nll_star: counts dimension mismatch");
    }
    const double m = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (m <= 0.0) {
        throw std::invalid_argument("edl_nll_star: counts must not be all zero");
    }
    const auto& alpha = p.alpha();
    const double log_a0 = std::log(p.alpha0());
    LossValueGrad out;
    out.grad.resize(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (counts[k] < 0) throw std::invalid_argument("edl_nll_star: negative count");
        if (counts[k] > 0) out.value += counts[k] * (log_a0 - std::log(alpha[k]));
        out.grad[k] = m / p.alpha0() - counts[k] / alpha[k];
    }
    return out;
}

LossValueGrad kl_dirichlet_to_uniform(std::span<const double> alpha_tilde) {
    const auto k_num = alpha_tilde.size();
    if (k_num == 0) throw std::invalid_argument("kl_dirichlet_to_uniform: empty alpha");
    std::vector<double> a(alpha_tilde.begin(), alpha_tilde.end());
    for (double& v : a) {
        if (v < 1.0 - 1e-12 || !std::isfinite(v)) {
            throw std::domain_error("kl_dirichlet_to_uniform: alpha entries must be >= 1");
        }
        v = std::max(v, 1.0);
    }
    const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
    const double psi_a0 = digamma(a0);
    LossValueGrad out;
    out.grad.resize(k_num);
    double value = log_gamma(a0) - log_gamma(static_cast<double>(k_num));
    const double excess = a0 - static_cast<double>(k_num);  // sum_k (a_k - 1)
    const double tri_a0 = trigamma(a0);
    for (std::size_t k = 0; k < k_num; ++k) {
        value -= log_gamma(a[k]);
        value += (a[k] - 1.0) * (digamma(a[k]) - psi_a0);
        out.grad[k] = (a[k] - 1.0) * trigamma(a[k]) - excess * tri_a0;
    }
    out.value = value;
    return out;
}

std::vector<double> masked_alpha_classification(const DirichletPrediction& p, int true_class) {
    check_class(p, true_class);
    std::vector<double> masked = p.alpha();
    masked[true_class] = 1.0;
    return masked;
}

std::vector<double> masked_alpha_distribution(const DirichletPrediction& p,
                                              std::span<const double> y_bar) {
    if (static_cast<int>(y_bar.size()) != p.num_classes()) {
        throw std::invalid_argument("masked_alpha_distribution: soft label dimension mismatch");
    }
    const auto& alpha = p.alpha();
    std::vector<double> masked(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        masked[k] = y_bar[k] + (1.0 - y_bar[k]) * alpha[k];
    }
    return masked;
}

LossValueGrad r2_kl(std::span<const double> y_bar, const DirichletPrediction& p) {
    if (static_cast<int>(y_bar.size()) != p.num_classes()) {
        throw std::invalid_argument("r2_kl: soft label dimension mismatch");
    }
    const auto& alpha = p.alpha();
    const double a0 = p.alpha0();
    const double y_sum = std::accumulate(y_bar.begin(), y_bar.end(), 0.0);
    LossValueGrad out;
    out.grad.resize(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        // E[eta_k] = a_k / a0 > 0 since a_k >= 1, so only y_bar_k = 0
        // needs the 0 ln 0 convention.
        if (y_bar[k] > 0.0) {
            out.value += y_bar[k] * (std::log(y_bar[k]) - std::log(alpha[k] / a0));
        }
        out.grad[k] = y_sum / a0 - y_bar[k] / alpha[k];
    }
    return out;
}

LossValueGrad cross_entropy_majority(std::span<const double> logits, int true_class) {
    if (true_class < 0 || true_class >= static_cast<int>(logits.size())) {
        throw std::invalid_argument("cross_entropy_majority: class index out of range");
    }
    const double lse = log_sum_exp(logits);
    LossValueGrad out;
    out.value = lse - logits[true_class];
    out.grad = stable_softmax(logits);
    out.grad[true_class] -= 1.0;
    return out;
}

LossValueGrad kl_soft_label(std::span<const double> logits, std::span<const double> y_bar) {
    if (logits.size() != y_bar.size()) {
        throw std::invalid_argument("kl_soft_label: dimension mismatch");
    }
    const double lse = log_sum_exp(logits);
    LossValueGrad out;
    out.grad = stable_softmax(logits);
    double y_sum = 0.0;
    for (std::size_t k = 0; k < y_bar.size(); ++k) {
        if (y_bar[k] > 0.0) {
            out.value += y_bar[k] * (std::log(y_bar[k]) - (logits[k] - lse));
        }
        y_sum += y_bar[k];
    }
    for (std::size_t k = 0; k < y_bar.size(); ++k) {
        out.grad[k] = y_sum * out.grad[k] - y_bar[k];
    }
    return out;
}

bool is_edl_family(LossKind kind) {
    return kind == LossKind::EDL || kind == LossKind::EDL_STAR_R1 || kind == LossKind::EDL_STAR_R2;
}

LossValueGrad total_loss(const LossSpec& spec, const DirichletPrediction& p,
                         const LossTarget& target, std::int64_t step) {
    if (!is_edl_family(spec.kind)) {
        throw std::invalid_argument("total_loss: softmax-family loss given a Dirichlet prediction");
    }
    const double lam = effective_lambda(spec, step);

    if (spec.kind == LossKind::EDL) {
        if (target.majority_class < 0) {
            throw std::invalid_argument("total_loss: EDL needs a majority class target");
        }
        LossValueGrad out = edl_nll(p, target.majority_class);
        if (lam > 0.0) {
            const auto masked = masked_alpha_classification(p, target.majority_class);
            const auto reg = kl_dirichlet_to_uniform(masked);
            out.value += lam * reg.value;
            for (int k = 0; k < p.num_classes(); ++k) {
                if (k != target.majority_class) out.grad[k] += lam * reg.grad[k];
            }
        }
        return out;
    }

    if (target.counts.empty()) {
        throw std::invalid_argument("total_loss: EDL* needs annotation counts");
    }
    LossValueGrad out = edl_nll_star(p, target.counts);
    if (lam > 0.0) {
        const auto y_bar = soft_label_from_counts(target.counts);
        if (spec.kind == LossKind::EDL_STAR_R1) {
            const auto masked = masked_alpha_distribution(p, y_bar);
            const auto reg = kl_dirichlet_to_uniform(masked);
            out.value += lam * reg.value;
            for (std::size_t k = 0; k < y_bar.size(); ++k) {
                out.grad[k] += lam * (1.0 - y_bar[k]) * reg.grad[k];
            }
        } else {  // EDL_STAR_R2
            const auto reg = r2_kl(y_bar, p);
            out.value += lam * reg.value;
            for (std::size_t k = 0; k < y_bar.size(); ++k) {
                out.grad[k] += lam * reg.grad[k];
            }
        }
    }
    return out;
}

LossValueGrad total_loss(const LossSpec& spec, std::span<const double> logits,
                         const LossTarget& target, std::int64_t step) {
    if (is_edl_family(spec.kind)) {
        throw std::invalid_argument("total_loss: EDL-family loss given logits");
    }
    switch (spec.kind) {
        case LossKind::CE_MAJORITY:
        case LossKind::CE_MAJORITY_PLUS:
            if (target.majority_class < 0) {
                throw std::invalid_argument("total_loss: cross entropy needs a majority class target");
            }
            return cross_entropy_majority(logits, target.majority_class);
        case LossKind::KL_SOFT_LABEL: {
            if (target.counts.empty()) {
                throw std::invalid_argument("total_loss: soft-label loss needs annotation counts");
            }
            return kl_soft_label(logits, soft_label_from_counts(target.counts));
        }
        default:
            throw std::invalid_argument("total_loss: unknown loss kind");
    }
}

}  // namespace evid
