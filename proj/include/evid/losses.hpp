#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evid/annotations.hpp"
#include "evid/dirichlet.hpp"

namespace evid {

enum class LossKind {
    EDL,               // NLL on majority label + KL regularizer on masked alpha
    EDL_STAR_R1,       // NLL on annotation counts + KL regularizer on masked alpha
    EDL_STAR_R2,       // NLL on annotation counts + KL(soft label || expected probs)
    CE_MAJORITY,       // softmax cross entropy on the majority label
    CE_MAJORITY_PLUS,  // same objective, used with the extra-class relabeling
    KL_SOFT_LABEL,     // KL(soft label || softmax) on soft labels
};

struct LossSpec {
    LossKind kind = LossKind::EDL;
    double lambda = 0.0;         // regularization coefficient, >= 0
    std::int64_t anneal_steps = 0;  // 0 = fixed lambda; else linear ramp 0 -> lambda
};

// Effective coefficient at a training step under the annealing schedule.
double effective_lambda(const LossSpec& spec, std::int64_t step);

struct LossValueGrad {
    double value = 0.0;
    // d(loss)/d(alpha) for the EDL family, d(loss)/d(logits) for the
    // softmax family.
    std::vector<double> grad;
};

// Per-example training target. counts holds the per-class annotation
// votes; majority_class is -1 when the votes tie.
struct LossTarget {
    std::vector<int> counts;
    int majority_class = -1;
};

LossTarget target_from_annotations(const AnnotationSet& a);

// -log P(y | alpha) for a one-hot label: sum_k y_k (ln a0 - ln a_k).
LossValueGrad edl_nll(const DirichletPrediction& p, int true_class);

// Multinomial generalization: sum_k yhat_k (ln a0 - ln a_k). Reduces to
// edl_nll when the counts are one-hot.
LossValueGrad edl_nll_star(const DirichletPrediction& p, std::span<const int> counts);

// KL( Dir(alpha_tilde) || Dir(1) ) in closed form, with its gradient.
// Requires every entry >= 1 (within 1e-12); throws std::domain_error
// otherwise.
LossValueGrad kl_dirichlet_to_uniform(std::span<const double> alpha_tilde);

// alpha with the true-class evidence removed: a_tilde_k = 1 for the true
// class, a_k elsewhere.
std::vector<double> masked_alpha_classification(const DirichletPrediction& p, int true_class);

// Soft-label mask: a_hat = y_bar + (1 - y_bar) .* alpha. Coincides with
// the classification mask when y_bar is one-hot.
std::vector<double> masked_alpha_distribution(const DirichletPrediction& p,
                                              std::span<const double> y_bar);

// KL( y_bar || E[eta] ) with the 0 ln 0 = 0 convention, gradient wrt alpha.
LossValueGrad r2_kl(std::span<const double> y_bar, const DirichletPrediction& p);

// -ln softmax(logits)[true_class]; grad = softmax(logits) - y.
LossValueGrad cross_entropy_majority(std::span<const double> logits, int true_class);

// KL( y_bar || softmax(logits) ); grad = softmax(logits) - y_bar.
LossValueGrad kl_soft_label(std::span<const double> logits, std::span<const double> y_bar);

// Composed data term + lambda(step) * regularizer. The Dirichlet
// overload serves the EDL family, the logits overload the softmax
// family; calling the wrong one throws std::invalid_argument.
LossValueGrad total_loss(const LossSpec& spec, const DirichletPrediction& p,
                         const LossTarget& target, std::int64_t step = 0);
LossValueGrad total_loss(const LossSpec& spec, std::span<const double> logits,
                         const LossTarget& target, std::int64_t step = 0);

bool is_edl_family(LossKind kind);

}  // namespace evid
