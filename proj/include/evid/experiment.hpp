#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evid/annotations.hpp"
#include "evid/datagen.hpp"
#include "evid/metrics.hpp"
#include "evid/network.hpp"

namespace evid {

enum class Method { MLE, MLE_PLUS, MLE_STAR, MCDP, ENSEMBLE, EDL, EDL_STAR_R1, EDL_STAR_R2 };

Method method_from_string(const std::string& s);
std::string to_string(Method m);
bool method_uses_evidence(Method m);
LossKind loss_kind_for(Method m);

struct EvalOptions {
    int calibration_bins = 10;
    std::vector<double> reject_thresholds;  // default: 0, 0.05, ..., 1
    int mc_passes = 100;
    int ensemble_members = 10;
};

// One of: a single dataset file (split internally), explicit
// train/val/test files, or an inline generator config.
struct DataConfig {
    std::string dataset_path;
    std::string train_path;
    std::string val_path;
    std::string test_path;
    std::optional<GenConfig> generator;
};

struct ExperimentConfig {
    Method method = Method::MLE;
    DataConfig data;
    ModelConfig model;   // input_dim / num_outputs / seed filled per run
    TrainConfig train;   // loss kind derived from method
    EvalOptions eval;
    std::string out_dir;
    std::uint64_t seed = 1;
    int seeds = 1;
};

// Parses and validates the JSON experiment config (schema_version 1).
// Method/activation pairing is rejected here, before any computation.
ExperimentConfig load_experiment_config(const std::string& path);
void validate_experiment(const ExperimentConfig& cfg);

// MA split 70/15/15 and NMA split 75/25, both by seeded shuffle.
struct DataSplits {
    Dataset ma_train;
    Dataset ma_val;
    Dataset ma_test;
    Dataset nma_all;
    Dataset nma_train;  // the 75% available to MLE_PLUS
    Dataset nma_test;   // the held-out 25%
    int num_classes = 0;
    int feature_dim = 0;
};

DataSplits make_splits(const Dataset& full, std::uint64_t ma_seed, std::uint64_t nma_seed);

// Resolves whichever data mode the config uses. run_seed feeds the
// splits and, when the generator omits a seed, the generator.
DataSplits prepare_data(const ExperimentConfig& cfg, std::uint64_t run_seed);

struct TrainedPredictor {
    Method method = Method::MLE;
    std::vector<Model> models;  // ensemble members, or a single model
};

struct TrainRunResult {
    TrainedPredictor predictor;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_val_loss;
};

// Trains the configured method. MA-only training is enforced for every
// method except MLE_PLUS, which trains on the extra-class relabeling.
TrainRunResult run_training(const ExperimentConfig& cfg, const DataSplits& splits,
                            std::uint64_t run_seed);

MetricsReport run_evaluation(const ExperimentConfig& cfg, const TrainedPredictor& predictor,
                             const DataSplits& splits, std::uint64_t run_seed);

// model.json for single models (network schema), or a manifest plus
// member_XXX.json files for ensembles.
void save_predictor(const TrainedPredictor& predictor, const std::string& dir);
TrainedPredictor load_predictor(Method method, const std::string& dir);

void write_trace_csv(const TrainRunResult& result, const std::string& path);

// Seed streams for the components of one run.
namespace seed_stream {
inline constexpr std::uint64_t kGenerator = 0;
inline constexpr std::uint64_t kMaSplit = 1;
inline constexpr std::uint64_t kNmaHoldout = 2;
inline constexpr std::uint64_t kModelInit = 3;
inline constexpr std::uint64_t kTrainer = 4;
inline constexpr std::uint64_t kMcDropout = 5;
}  // namespace seed_stream

}  // namespace evid
