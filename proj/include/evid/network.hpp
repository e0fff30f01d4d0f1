#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evid/annotations.hpp"
#include "evid/losses.hpp"

namespace evid {

enum class OutputActivation { Softmax, ReluEvidence, SoftplusEvidence, ExpEvidence };

OutputActivation output_activation_from_string(const std::string& s);
std::string to_string(OutputActivation a);

bool is_evidence_activation(OutputActivation a);

struct ModelConfig {
    int input_dim = 0;
    std::vector<int> hidden_dims{256};
    int num_outputs = 0;
    OutputActivation output_activation = OutputActivation::Softmax;
    double dropout_rate = 0.0;  // applied to hidden activations, in [0, 1)
    std::uint64_t seed = 0;     // weight initialization
};

struct Layer {
    std::vector<double> w;  // row-major, out_dim x in_dim
    std::vector<double> b;
    int in_dim = 0;
    int out_dim = 0;
};

// Everything backward() needs from one forward pass.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // z per layer
    std::vector<std::vector<double>> act;   // post ReLU+dropout, hidden layers only
    std::vector<std::vector<double>> mask;  // inverted-dropout masks; empty when off
    std::vector<double> output;             // evidence or probabilities
};

struct Gradients {
    std::vector<Layer> layers;  // w/b hold dL/dw, dL/db
};

// Fully-connected network with ReLU hidden layers and a selectable
// output activation. Evidence activations never emit negative values;
// exp evidence clamps the pre-activation to [-10, 10].
class Model {
public:
    explicit Model(ModelConfig cfg);  // Glorot-uniform init, seeded

    const ModelConfig& config() const { return config_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& mutable_layers() { return layers_; }

    // Deterministic forward, dropout off.
    std::vector<double> forward(std::span<const double> x) const;
    // Stochastic forward with dropout active (when dropout_rate > 0).
    std::vector<double> forward(std::span<const double> x, std::mt19937_64& rng) const;

    ForwardCache forward_cached(std::span<const double> x, bool dropout_on,
                                std::mt19937_64* rng) const;

    // upstream is dL/d(evidence) for evidence activations (identical to
    // dL/d(alpha)) and dL/d(logits) for softmax. Throws std::logic_error
    // when the cache does not match this model's shape.
    Gradients backward(const ForwardCache& cache, std::span<const double> upstream) const;

    // Output-layer pre-activation without dropout, for softmax losses.
    std::vector<double> logits(std::span<const double> x) const;

private:
    ModelConfig config_;
    std::vector<Layer> layers_;
};

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
    LossSpec loss;
    int batch_size = 64;
    int epochs = 0;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool balanced_sampling = false;
    std::uint64_t seed = 0;
};

struct TrainExample {
    std::vector<double> features;
    LossTarget target;
};

struct TrainSet {
    std::vector<TrainExample> items;
    int num_classes = 0;
    int feature_dim = 0;
};

TrainSet train_set_from_dataset(const Dataset& d);

struct TrainResult {
    Model model;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_val_loss;  // empty when no validation set given
};

// Mini-batch training; deterministic for a fixed seed. Aborts with
// std::runtime_error if the loss goes non-finite.
TrainResult train(const Model& m, const TrainSet& data, const TrainConfig& tc,
                  const TrainSet* validation = nullptr);

// n class-balanced draws (with replacement): class uniform over the
// classes present, then uniform within the class.
std::vector<std::size_t> balanced_sample_indices(const TrainSet& data, std::size_t n,
                                                 std::mt19937_64& rng);

struct McDropoutResult {
    std::vector<double> mean_probs;
    std::vector<std::vector<double>> passes;
};

// T stochastic softmax passes, averaged. Deterministic given the seed.
McDropoutResult mc_dropout_predict(const Model& m, std::span<const double> x, int passes,
                                   std::uint64_t seed);

// Bagging ensemble: each member trains on a bootstrap resample of data
// (same size, with replacement) under its own derived seed.
std::vector<Model> train_ensemble(const ModelConfig& base, const TrainSet& data,
                                  const TrainConfig& tc, int members);

std::vector<double> ensemble_mean_probs(std::span<const Model> members,
                                        std::span<const double> x);

// JSON model file, format_version 1. load(save(m)) reproduces forward
// outputs bit-identically.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace evid
