#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evid/annotations.hpp"

namespace evid {

// Synthetic corpus with controllable annotation ambiguity. Features are
// a blend of class prototypes weighted by a per-example categorical
// distribution eta, plus Gaussian noise; annotator labels are draws
// from eta.
struct GenConfig {
    int num_classes = 4;
    int feature_dim = 16;
    std::vector<std::vector<double>> prototypes;  // K x D; seeded Gaussian when empty
    double noise_sigma = 0.3;
    int num_examples = 1000;
    int annotators_min = 3;  // fixed M: set min == max
    int annotators_max = 9;
    double ambiguity_mix = 0.3;   // fraction drawn with a two-class mixed mode
    double concentration = 8.0;   // sharpness of eta around its mode
    std::uint64_t seed = 0;
};

void validate(const GenConfig& cfg);  // throws std::invalid_argument

struct GeneratedData {
    Dataset dataset;
    std::vector<std::vector<double>> eta;  // ground truth, aligned with examples
};

// Deterministic for a fixed config: the same seed yields byte-identical
// datasets.
GeneratedData generate(const GenConfig& cfg);

// Ground-truth sidecar, one {"id", "eta"} JSON line per example.
void save_eta_sidecar(const Dataset& d, const std::vector<std::vector<double>>& eta,
                      const std::string& path);

}  // namespace evid
