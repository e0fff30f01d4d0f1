#include "evid/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "evid/dirichlet.hpp"
#include "evid/rng.hpp"
#include "evid/special_math.hpp"

namespace evid {

namespace {

using nlohmann::json;

constexpr double kExpClamp = 10.0;  // exp evidence clamps pre-activation to [-10, 10]

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void validate_config(const ModelConfig& cfg) {
    if (cfg.input_dim < 1) throw std::invalid_argument("ModelConfig: input_dim must be positive");
    if (cfg.num_outputs < 1) throw std::invalid_argument("ModelConfig: num_outputs must be positive");
    for (int h : cfg.hidden_dims) {
        if (h < 1) throw std::invalid_argument("ModelConfig: hidden dims must be positive");
    }
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
        throw std::invalid_argument("ModelConfig: dropout_rate must be in [0, 1)");
    }
}

}  // namespace

OutputActivation output_activation_from_string(const std::string& s) {
    if (s == "softmax") return OutputActivation::Softmax;
    if (s == "relu" || s == "relu_evidence") return OutputActivation::ReluEvidence;
    if (s == "softplus" || s == "softplus_evidence") return OutputActivation::SoftplusEvidence;
    if (s == "exp" || s == "exp_evidence") return OutputActivation::ExpEvidence;
    throw std::invalid_argument("unknown output activation: " + s);
}

std::string to_string(OutputActivation a) {
    switch (a) {
        case OutputActivation::Softmax: return "softmax";
        case OutputActivation::ReluEvidence: return "relu_evidence";
        case OutputActivation::SoftplusEvidence: return "softplus_evidence";
        case OutputActivation::ExpEvidence: return "exp_evidence";
    }
    throw std::logic_error("bad OutputActivation");
}

bool is_evidence_activation(OutputActivation a) {
    return a != OutputActivation::Softmax;
}

Model::Model(ModelConfig cfg) : config_(std::move(cfg)) {
    validate_config(config_);
    std::vector<int> dims;
    dims.push_back(config_.input_dim);
    dims.insert(dims.end(), config_.hidden_dims.begin(), config_.hidden_dims.end());
    dims.push_back(config_.num_outputs);

    std::mt19937_64 rng(config_.seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in_dim = dims[l];
        layer.out_dim = dims[l + 1];
        const double bound = std::sqrt(6.0 / (layer.in_dim + layer.out_dim));
        std::uniform_real_distribution<double> u(-bound, bound);
        layer.w.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
        for (double& v : layer.w) v = u(rng);
        layer.b.assign(layer.out_dim, 0.0);
        layers_.push_back(std::move(layer));
    }
}

ForwardCache Model::forward_cached(std::span<const double> x, bool dropout_on,
                                   std::mt19937_64* rng) const {
    if (static_cast<int>(x.size()) != config_.input_dim) {
        throw std::invalid_argument("forward: feature dimension mismatch");
    }
    const bool use_dropout = dropout_on && config_.dropout_rate > 0.0;
    if (use_dropout && rng == nullptr) {
        throw std::invalid_argument("forward: dropout requires an rng");
    }

    ForwardCache cache;
    cache.input.assign(x.begin(), x.end());
    const std::vector<double>* cur = &cache.input;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double keep = 1.0 - config_.dropout_rate;

    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        std::vector<double> z(layer.out_dim);
        for (int o = 0; o < layer.out_dim; ++o) {
            const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in_dim;
            double acc = layer.b[o];
            for (int i = 0; i < layer.in_dim; ++i) acc += row[i] * (*cur)[i];
            z[o] = acc;
        }
        cache.pre.push_back(std::move(z));
        const auto& zl = cache.pre.back();

        if (l + 1 < layers_.size()) {
            std::vector<double> a(layer.out_dim);
            for (int o = 0; o < layer.out_dim; ++o) a[o] = std::max(zl[o], 0.0);
            if (use_dropout) {
                std::vector<double> mask(layer.out_dim);
                for (int o = 0; o < layer.out_dim; ++o) {
                    mask[o] = unit(*rng) < keep ? 1.0 / keep : 0.0;
                    a[o] *= mask[o];
                }
                cache.mask.push_back(std::move(mask));
            }
            cache.act.push_back(std::move(a));
            cur = &cache.act.back();
        } else {
            switch (config_.output_activation) {
                case OutputActivation::Softmax:
                    cache.output = stable_softmax(zl);
                    break;
                case OutputActivation::ReluEvidence:
                    cache.output.resize(zl.size());
                    for (std::size_t k = 0; k < zl.size(); ++k) cache.output[k] = std::max(zl[k], 0.0);
                    break;
                case OutputActivation::SoftplusEvidence:
                    cache.output.resize(zl.size());
                    for (std::size_t k = 0; k < zl.size(); ++k) cache.output[k] = softplus(zl[k]);
                    break;
                case OutputActivation::ExpEvidence:
                    cache.output.resize(zl.size());
                    for (std::size_t k = 0; k < zl.size(); ++k) {
                        cache.output[k] = std::exp(std::clamp(zl[k], -kExpClamp, kExpClamp));
                    }
                    break;
            }
        }
    }
    return cache;
}

std::vector<double> Model::forward(std::span<const double> x) const {
    return forward_cached(x, false, nullptr).output;
}

std::vector<double> Model::forward(std::span<const double> x, std::mt19937_64& rng) const {
    return forward_cached(x, true, &rng).output;
}

std::vector<double> Model::logits(std::span<const double> x) const {
    return forward_cached(x, false, nullptr).pre.back();
}

Gradients Model::backward(const ForwardCache& cache, std::span<const double> upstream) const {
    if (cache.pre.size() != layers_.size()
        || static_cast<int>(cache.input.size()) != config_.input_dim
        || static_cast<int>(cache.output.size()) != config_.num_outputs) {
        throw std::logic_error("backward: cache does not match model shape");
    }
    if (static_cast<int>(upstream.size()) != config_.num_outputs) {
        throw std::invalid_argument("backward: upstream gradient dimension mismatch");
    }

    const auto& z_out = cache.pre.back();
    std::vector<double> g(upstream.begin(), upstream.end());
    switch (config_.output_activation) {
        case OutputActivation::Softmax:
            break;  // upstream already wrt logits
        case OutputActivation::ReluEvidence:
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (z_out[k] <= 0.0) g[k] = 0.0;
            }
            break;
        case OutputActivation::SoftplusEvidence:
            for (std::size_t k = 0; k < g.size(); ++k) g[k] *= sigmoid(z_out[k]);
            break;
        case OutputActivation::ExpEvidence:
            for (std::size_t k = 0; k < g.size(); ++k) {
                g[k] = std::abs(z_out[k]) < kExpClamp ? g[k] * cache.output[k] : 0.0;
            }
            break;
    }

    Gradients grads;
    grads.layers.resize(layers_.size());
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& layer = layers_[li];
        const std::vector<double>& below =
            li == 0 ? cache.input : cache.act[li - 1];
        if (static_cast<int>(below.size()) != layer.in_dim) {
            throw std::logic_error("backward: cache does not match model shape");
        }

        Layer& dl = grads.layers[li];
        dl.in_dim = layer.in_dim;
        dl.out_dim = layer.out_dim;
        dl.w.resize(layer.w.size());
        dl.b = g;
        for (int o = 0; o < layer.out_dim; ++o) {
            double* row = dl.w.data() + static_cast<std::size_t>(o) * layer.in_dim;
            for (int i = 0; i < layer.in_dim; ++i) row[i] = g[o] * below[i];
        }

        if (li > 0) {
            std::vector<double> gp(layer.in_dim, 0.0);
            for (int o = 0; o < layer.out_dim; ++o) {
                const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in_dim;
                for (int i = 0; i < layer.in_dim; ++i) gp[i] += row[i] * g[o];
            }
            const auto& z_hidden = cache.pre[li - 1];
            for (int i = 0; i < layer.in_dim; ++i) {
                if (z_hidden[i] <= 0.0) gp[i] = 0.0;
                else if (!cache.mask.empty()) gp[i] *= cache.mask[li - 1][i];
            }
            g = std::move(gp);
        }
    }
    return grads;
}

TrainSet train_set_from_dataset(const Dataset& d) {
    TrainSet out;
    out.num_classes = d.num_classes;
    out.feature_dim = d.feature_dim;
    out.items.reserve(d.examples.size());
    for (const auto& ex : d.examples) {
        out.items.push_back(TrainExample{ex.features, target_from_annotations(ex.annotations)});
    }
    return out;
}

namespace {

int target_class_for_sampling(const LossTarget& t) {
    if (t.majority_class >= 0) return t.majority_class;
    return static_cast<int>(std::max_element(t.counts.begin(), t.counts.end()) - t.counts.begin());
}

struct AdamState {
    std::vector<Layer> m;
    std::vector<Layer> v;
    std::int64_t t = 0;
};

std::vector<Layer> zeros_like(const std::vector<Layer>& layers) {
    std::vector<Layer> out(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        out[i].in_dim = layers[i].in_dim;
        out[i].out_dim = layers[i].out_dim;
        out[i].w.assign(layers[i].w.size(), 0.0);
        out[i].b.assign(layers[i].b.size(), 0.0);
    }
    return out;
}

// Loss value and upstream gradient for one example under the configured
// head (alpha for evidence activations, logits for softmax).
LossValueGrad example_loss(const Model& model, const ForwardCache& cache,
                           const LossSpec& spec, const LossTarget& target, std::int64_t step) {
    if (is_evidence_activation(model.config().output_activation)) {
        return total_loss(spec, DirichletPrediction::from_evidence(cache.output), target, step);
    }
    return total_loss(spec, cache.pre.back(), target, step);
}

}  // namespace

std::vector<std::size_t> balanced_sample_indices(const TrainSet& data, std::size_t n,
                                                 std::mt19937_64& rng) {
    std::vector<std::vector<std::size_t>> by_class(data.num_classes);
    for (std::size_t i = 0; i < data.items.size(); ++i) {
        by_class[target_class_for_sampling(data.items[i].target)].push_back(i);
    }
    std::vector<int> present;
    for (int c = 0; c < data.num_classes; ++c) {
        if (!by_class[c].empty()) present.push_back(c);
    }
    if (present.empty()) throw std::invalid_argument("balanced_sample_indices: empty dataset");

    std::uniform_int_distribution<std::size_t> pick_class(0, present.size() - 1);
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& bucket = by_class[present[pick_class(rng)]];
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        out.push_back(bucket[pick(rng)]);
    }
    return out;
}

TrainResult train(const Model& m, const TrainSet& data, const TrainConfig& tc,
                  const TrainSet* validation) {
    if (data.items.empty()) throw std::invalid_argument("train: empty dataset");
    if (tc.batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
    if (tc.epochs < 0) throw std::invalid_argument("train: epochs must be nonnegative");
    if (data.feature_dim != m.config().input_dim) {
        throw std::invalid_argument("train: dataset feature_dim does not match model");
    }

    TrainResult result{m, {}, {}};
    Model& model = result.model;
    std::mt19937_64 rng(tc.seed);

    AdamState adam;
    if (tc.optimizer == Optimizer::Adam) {
        adam.m = zeros_like(model.layers());
        adam.v = zeros_like(model.layers());
    }

    const bool dropout_on = model.config().dropout_rate > 0.0;
    std::int64_t step = 0;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        std::vector<std::size_t> order;
        if (tc.balanced_sampling) {
            order = balanced_sample_indices(data, data.items.size(), rng);
        } else {
            order.resize(data.items.size());
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
        }

        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end = std::min(pos + static_cast<std::size_t>(tc.batch_size),
                                                   order.size());
            const double batch_n = static_cast<double>(batch_end - pos);

            Gradients acc;
            acc.layers = zeros_like(model.layers());
            for (std::size_t bi = pos; bi < batch_end; ++bi) {
                const TrainExample& ex = data.items[order[bi]];
                const auto cache = model.forward_cached(ex.features, dropout_on, &rng);
                const auto lv = example_loss(model, cache, tc.loss, ex.target, step);
                if (!std::isfinite(lv.value)) {
                    throw std::runtime_error("train: non-finite loss at epoch "
                        + std::to_string(epoch) + ", step " + std::to_string(step)
                        + " (value " + std::to_string(lv.value) + ")");
                }
                epoch_loss += lv.value;
                const auto g = model.backward(cache, lv.grad);
                for (std::size_t li = 0; li < acc.layers.size(); ++li) {
                    for (std::size_t i = 0; i < g.layers[li].w.size(); ++i) {
                        acc.layers[li].w[i] += g.layers[li].w[i] / batch_n;
                    }
                    for (std::size_t i = 0; i < g.layers[li].b.size(); ++i) {
                        acc.layers[li].b[i] += g.layers[li].b[i] / batch_n;
                    }
                }
            }

            auto& layers = model.mutable_layers();
            if (tc.optimizer == Optimizer::Adam) {
                ++adam.t;
                const double bc1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(adam.t));
                const double bc2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(adam.t));
                for (std::size_t li = 0; li < layers.size(); ++li) {
                    auto update = [&](std::vector<double>& p, std::vector<double>& mm,
                                      std::vector<double>& vv, const std::vector<double>& gg) {
                        for (std::size_t i = 0; i < p.size(); ++i) {
                            mm[i] = tc.adam_beta1 * mm[i] + (1.0 - tc.adam_beta1) * gg[i];
                            vv[i] = tc.adam_beta2 * vv[i] + (1.0 - tc.adam_beta2) * gg[i] * gg[i];
                            const double mhat = mm[i] / bc1;
                            const double vhat = vv[i] / bc2;
                            p[i] -= tc.learning_rate * mhat / (std::sqrt(vhat) + tc.adam_eps);
                        }
                    };
                    update(layers[li].w, adam.m[li].w, adam.v[li].w, acc.layers[li].w);
                    update(layers[li].b, adam.m[li].b, adam.v[li].b, acc.layers[li].b);
                }
            } else {
                for (std::size_t li = 0; li < layers.size(); ++li) {
                    for (std::size_t i = 0; i < layers[li].w.size(); ++i) {
                        layers[li].w[i] -= tc.learning_rate * acc.layers[li].w[i];
                    }
                    for (std::size_t i = 0; i < layers[li].b.size(); ++i) {
                        layers[li].b[i] -= tc.learning_rate * acc.layers[li].b[i];
                    }
                }
            }
            ++step;
            pos = batch_end;
        }
        result.epoch_train_loss.push_back(epoch_loss / static_cast<double>(order.size()));

        if (validation != nullptr && !validation->items.empty()) {
            double val_loss = 0.0;
            for (const auto& ex : validation->items) {
                const auto cache = model.forward_cached(ex.features, false, nullptr);
                val_loss += example_loss(model, cache, tc.loss, ex.target, step).value;
            }
            result.epoch_val_loss.push_back(val_loss / static_cast<double>(validation->items.size()));
        }
    }
    return result;
}

McDropoutResult mc_dropout_predict(const Model& m, std::span<const double> x, int passes,
                                   std::uint64_t seed) {
    if (passes < 1) throw std::invalid_argument("mc_dropout_predict: passes must be >= 1");
    std::mt19937_64 rng(seed);
    McDropoutResult out;
    out.mean_probs.assign(m.config().num_outputs, 0.0);
    out.passes.reserve(passes);
    for (int t = 0; t < passes; ++t) {
        auto p = m.forward(x, rng);
        for (std::size_t k = 0; k < p.size(); ++k) out.mean_probs[k] += p[k] / passes;
        out.passes.push_back(std::move(p));
    }
    return out;
}

std::vector<Model> train_ensemble(const ModelConfig& base, const TrainSet& data,
                                  const TrainConfig& tc, int members) {
    if (members < 2) throw std::invalid_argument("train_ensemble: need at least 2 members");
    if (data.items.empty()) throw std::invalid_argument("train_ensemble: empty dataset");

    std::vector<Model> out;
    out.reserve(members);
    for (int i = 0; i < members; ++i) {
        ModelConfig cfg = base;
        cfg.seed = derive_seed(base.seed, 100 + static_cast<std::uint64_t>(i));

        std::mt19937_64 boot(derive_seed(tc.seed, 300 + static_cast<std::uint64_t>(i)));
        std::uniform_int_distribution<std::size_t> pick(0, data.items.size() - 1);
        TrainSet resample;
        resample.num_classes = data.num_classes;
        resample.feature_dim = data.feature_dim;
        resample.items.reserve(data.items.size());
        for (std::size_t j = 0; j < data.items.size(); ++j) {
            resample.items.push_back(data.items[pick(boot)]);
        }

        TrainConfig member_tc = tc;
        member_tc.seed = derive_seed(tc.seed, 200 + static_cast<std::uint64_t>(i));
        out.push_back(train(Model(cfg), resample, member_tc).model);
    }
    return out;
}

std::vector<double> ensemble_mean_probs(std::span<const Model> members,
                                        std::span<const double> x) {
    if (members.empty()) throw std::invalid_argument("ensemble_mean_probs: no members");
    std::vector<double> mean(members.front().config().num_outputs, 0.0);
    for (const Model& m : members) {
        const auto p = m.forward(x);
        for (std::size_t k = 0; k < p.size(); ++k) mean[k] += p[k] / members.size();
    }
    return mean;
}

namespace {

json config_to_json(const ModelConfig& cfg) {
    return json{{"input_dim", cfg.input_dim},
                {"hidden_dims", cfg.hidden_dims},
                {"num_outputs", cfg.num_outputs},
                {"output_activation", to_string(cfg.output_activation)},
                {"dropout_rate", cfg.dropout_rate},
                {"seed", cfg.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
    cfg.num_outputs = j.at("num_outputs").get<int>();
    cfg.output_activation = output_activation_from_string(j.at("output_activation").get<std::string>());
    cfg.dropout_rate = j.at("dropout_rate").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
    json layers = json::array();
    for (const Layer& layer : m.layers()) {
        json rows = json::array();
        for (int o = 0; o < layer.out_dim; ++o) {
            const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in_dim;
            rows.push_back(std::vector<double>(row, row + layer.in_dim));
        }
        layers.push_back(json{{"w", std::move(rows)}, {"b", layer.b}});
    }
    const json doc{{"format_version", 1},
                   {"config", config_to_json(m.config())},
                   {"layers", std::move(layers)}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt model file " + path + ": " + e.what());
    }
    if (!doc.contains("format_version") || doc.at("format_version").get<int>() != 1) {
        throw std::runtime_error("unsupported model format_version in " + path);
    }
    Model m(config_from_json(doc.at("config")));
    const auto& layers_json = doc.at("layers");
    auto& layers = m.mutable_layers();
    if (layers_json.size() != layers.size()) {
        throw std::runtime_error("model file layer count mismatch in " + path);
    }
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& lj = layers_json.at(li);
        const auto rows = lj.at("w").get<std::vector<std::vector<double>>>();
        const auto b = lj.at("b").get<std::vector<double>>();
        if (static_cast<int>(rows.size()) != layers[li].out_dim
            || static_cast<int>(b.size()) != layers[li].out_dim) {
            throw std::runtime_error("model file shape mismatch in " + path);
        }
        for (int o = 0; o < layers[li].out_dim; ++o) {
            if (static_cast<int>(rows[o].size()) != layers[li].in_dim) {
                throw std::runtime_error("model file shape mismatch in " + path);
            }
            std::copy(rows[o].begin(), rows[o].end(),
                      layers[li].w.begin() + static_cast<std::size_t>(o) * layers[li].in_dim);
        }
        layers[li].b = b;
    }
    return m;
}

}  // namespace evid
