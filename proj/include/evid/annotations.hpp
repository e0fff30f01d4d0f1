#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evid {

// Raw per-utterance annotator labels. Immutable after construction.
// The number of annotators M may differ between utterances; nothing
// here assumes a fixed M.
class AnnotationSet {
public:
    // labels: one class index in [0, K) per annotator, at least one.
    AnnotationSet(std::vector<int> labels, int num_classes);

    const std::vector<int>& labels() const { return labels_; }
    int num_classes() const { return num_classes_; }
    int num_annotators() const { return static_cast<int>(labels_.size()); }

    // Per-class vote counts y_hat; sums to M.
    std::vector<int> counts() const;

    // y_bar = counts / M; sums to 1.
    std::vector<double> soft_label() const;

private:
    std::vector<int> labels_;
    int num_classes_;
};

enum class MajorityStatus { MA, NMA };

struct MajorityOutcome {
    MajorityStatus status = MajorityStatus::NMA;
    int ma_class = -1;             // valid only when status == MA
    double majority_fraction = 0;  // max count / M
};

// MA when exactly one class attains the maximum count, NMA on any tie
// for the maximum. A plurality short of an absolute majority is still MA.
MajorityOutcome majority(const AnnotationSet& a);

struct Example {
    std::string id;
    std::vector<double> features;
    AnnotationSet annotations;
};

struct Dataset {
    std::vector<Example> examples;
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<std::string> class_names;  // optional; empty when absent

    std::size_t size() const { return examples.size(); }
};

// Partition by majority status. Example order within each part follows
// the input order.
std::pair<Dataset, Dataset> split_ma_nma(const Dataset& d);

enum class DatasetFormat { Jsonl, Csv };

// Reads a dataset file. JSONL carries a header line with num_classes /
// feature_dim / class_names; for CSV, num_classes_hint sets K (when 0,
// K is inferred as max label + 1). Throws std::runtime_error with the
// offending line number on parse, dimension, or label-range errors.
Dataset load_dataset(const std::string& path, DatasetFormat format, int num_classes_hint = 0);

// Writes the JSONL form (header line + one example per line).
void save_dataset_jsonl(const Dataset& d, const std::string& path);

// Seeded uniform shuffle of the NMA examples, then a holdout of
// round(fraction * n) examples. Returns {kept, held_out}.
std::pair<Dataset, Dataset> split_nma_holdout(const Dataset& nma, double fraction, std::uint64_t seed);

struct RelabelResult {
    Dataset train;     // K+1 classes; every annotation collapsed to a single label
    Dataset nma_test;  // held-out NMA examples, original annotations and K
};

// Builds the extra-class training view: MA examples keep their majority
// label, NMA examples become single labels of the new class K, and 25%
// of the NMA examples (seeded shuffle) are held out for testing.
RelabelResult relabel_with_extra_class(const Dataset& d, std::uint64_t seed);

}  // namespace evid
