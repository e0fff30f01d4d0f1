#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evid {

// One evaluated example. p is the predictive class distribution of the
// method under test; uncertainty is K/alpha0 for the EDL family and
// 1 - max probability for the softmax family.
struct EvalRecord {
    std::string id;
    std::optional<int> true_majority;  // absent for NMA examples
    std::vector<int> counts;           // annotation counts
    std::vector<double> p;
    double confidence = 0.0;
    double uncertainty = 0.0;
    bool is_nma = false;
};

// argmax with ties broken toward the lowest class index.
int argmax_class(std::span<const double> p);

// Throws std::invalid_argument on empty input or records without a
// ground-truth majority.
double accuracy(std::span<const EvalRecord> records);

struct UarResult {
    double value = 0.0;
    std::vector<int> absent_classes;  // excluded from the mean
};

// Unweighted average recall over the classes present in the ground truth.
UarResult uar(std::span<const EvalRecord> records);

// Expected / maximum calibration error over bins equally spaced in [0,1].
double ece(std::span<const EvalRecord> records, int bins);
double mce(std::span<const EvalRecord> records, int bins);

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    long count = 0;
    double accuracy = 0.0;   // 0 when empty
    double confidence = 0.0; // 0 when empty
};

std::vector<CalibrationBin> calibration_bins(std::span<const EvalRecord> records, int bins);

// Mann-Whitney AUROC; ties count one half. Throws std::invalid_argument
// unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> positives);

// Average precision over the descending-score step curve, ties grouped.
double auprc(std::span<const double> scores, std::span<const int> positives);

// Mean over records of -(1/M) sum_k counts_k ln max(p_k, 1e-12).
double multinomial_nll(std::span<const EvalRecord> records);

enum class RejectQuantity { Accuracy, Nll };

struct RejectPoint {
    double threshold = 0.0;
    double value = 0.0;  // meaningful only when retained > 0
    long retained = 0;
    bool has_value = false;
};

// For each threshold, the metric over records with uncertainty <= t.
// Empty retained sets are flagged rather than emitted as NaN.
std::vector<RejectPoint> reject_curve(std::span<const EvalRecord> records,
                                      RejectQuantity quantity,
                                      std::span<const double> thresholds);

// Sorted step function (x_(i), i/n). Throws on empty input.
std::vector<std::pair<double, double>> ecdf(std::span<const double> values);

// Rows = true class, columns = predicted class. Records without a
// ground-truth majority are skipped.
std::vector<std::vector<long>> confusion_matrix(std::span<const EvalRecord> records,
                                                int num_classes);

// Named numeric table; nullopt cells serialize as empty/null.
struct Curve {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;
};

struct MetricsReport {
    std::string method;
    std::uint64_t seed = 0;

    double acc = 0.0;
    double uar = 0.0;
    double ece = 0.0;
    double mce = 0.0;
    std::optional<double> auroc_all;   // NMA(all) vs MA test; absent for MLE+
    std::optional<double> auprc_all;
    std::optional<double> auroc_test;  // NMA(test) vs MA test
    std::optional<double> auprc_test;
    double nll_ma = 0.0;
    double nll_nma = 0.0;
    double mean_uncertainty_ma = 0.0;
    double mean_uncertainty_nma = 0.0;
    double mean_uncertainty = 0.0;
    double mean_entropy = 0.0;

    std::vector<int> uar_absent_classes;
    std::map<std::string, Curve> curves;
    std::vector<std::vector<long>> confusion;
    std::map<std::string, std::string> notes;
};

std::string report_to_json_string(const MetricsReport& report);

// report.json plus curves/<name>.csv under out_dir. Creates directories
// as needed; output carries no timestamps, so identical reports produce
// byte-identical files.
void write_report_files(const MetricsReport& report, const std::string& out_dir);

}  // namespace evid
