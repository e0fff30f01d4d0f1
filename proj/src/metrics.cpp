#include "evid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace evid {

namespace {

using nlohmann::json;

constexpr double kProbFloor = 1e-12;

bool is_correct(const EvalRecord& r) {
    return r.true_majority.has_value() && argmax_class(r.p) == *r.true_majority;
}

void require_truth(std::span<const EvalRecord> records, const char* fn) {
    if (records.empty()) throw std::invalid_argument(std::string(fn) + ": empty input");
    for (const auto& r : records) {
        if (!r.true_majority.has_value()) {
            throw std::invalid_argument(std::string(fn) + ": record without ground-truth majority");
        }
    }
}

}  // namespace

int argmax_class(std::span<const double> p) {
    if (p.empty()) throw std::invalid_argument("argmax_class: empty vector");
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double accuracy(std::span<const EvalRecord> records) {
    require_truth(records, "accuracy");
    std::size_t correct = 0;
    for (const auto& r : records) correct += is_correct(r) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

UarResult uar(std::span<const EvalRecord> records) {
    require_truth(records, "uar");
    const int num_classes = static_cast<int>(records.front().p.size());
    std::vector<long> support(num_classes, 0);
    std::vector<long> correct(num_classes, 0);
    for (const auto& r : records) {
        const int c = *r.true_majority;
        if (c < 0 || c >= num_classes) throw std::invalid_argument("uar: class index out of range");
        ++support[c];
        if (is_correct(r)) ++correct[c];
    }
    UarResult out;
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        if (support[c] == 0) {
            out.absent_classes.push_back(c);
        } else {
            sum += static_cast<double>(correct[c]) / static_cast<double>(support[c]);
            ++present;
        }
    }
    if (present == 0) throw std::invalid_argument("uar: no class present in ground truth");
    out.value = sum / present;
    return out;
}

std::vector<CalibrationBin> calibration_bins(std::span<const EvalRecord> records, int bins) {
    if (bins < 1) throw std::invalid_argument("calibration: bins must be >= 1");
    require_truth(records, "calibration");
    std::vector<CalibrationBin> out(bins);
    for (int q = 0; q < bins; ++q) {
        out[q].lower = static_cast<double>(q) / bins;
        out[q].upper = static_cast<double>(q + 1) / bins;
    }
    for (const auto& r : records) {
        if (r.confidence < 0.0 || r.confidence > 1.0) {
            throw std::invalid_argument("calibration: confidence outside [0, 1]");
        }
        const int q = std::min(bins - 1, static_cast<int>(r.confidence * bins));
        ++out[q].count;
        out[q].accuracy += is_correct(r) ? 1.0 : 0.0;
        out[q].confidence += r.confidence;
    }
    for (auto& b : out) {
        if (b.count > 0) {
            b.accuracy /= b.count;
            b.confidence /= b.count;
        }
    }
    return out;
}

double ece(std::span<const EvalRecord> records, int bins) {
    const auto bs = calibration_bins(records, bins);
    const double n = static_cast<double>(records.size());
    double sum = 0.0;
    for (const auto& b : bs) {
        if (b.count > 0) sum += (b.count / n) * std::abs(b.accuracy - b.confidence);
    }
    return sum;
}

double mce(std::span<const EvalRecord> records, int bins) {
    const auto bs = calibration_bins(records, bins);
    double worst = 0.0;
    for (const auto& b : bs) {
        if (b.count > 0) worst = std::max(worst, std::abs(b.accuracy - b.confidence));
    }
    return worst;
}

namespace {

void check_binary(std::span<const double> scores, std::span<const int> positives, const char* fn) {
    if (scores.size() != positives.size()) {
        throw std::invalid_argument(std::string(fn) + ": size mismatch");
    }
    long pos = 0;
    for (int v : positives) pos += v ? 1 : 0;
    if (pos == 0 || pos == static_cast<long>(positives.size())) {
        throw std::invalid_argument(std::string(fn) + ": both classes must be present");
    }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> positives) {
    check_binary(scores, positives, "auroc");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks across ties, then the Mann-Whitney statistic.
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }

    double rank_sum = 0.0;
    long num_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (positives[k]) {
            rank_sum += rank[k];
            ++num_pos;
        }
    }
    const long num_neg = static_cast<long>(n) - num_pos;
    const double u = rank_sum - 0.5 * static_cast<double>(num_pos) * (num_pos + 1);
    return u / (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

double auprc(std::span<const double> scores, std::span<const int> positives) {
    check_binary(scores, positives, "auprc");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    long total_pos = 0;
    for (int v : positives) total_pos += v ? 1 : 0;

    double ap = 0.0;
    double prev_recall = 0.0;
    long tp = 0;
    long seen = 0;
    std::size_t i = 0;
    while (i < n) {
        // Consume a whole tie group before emitting a curve point.
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            tp += positives[order[j]] ? 1 : 0;
            ++seen;
            ++j;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

double multinomial_nll(std::span<const EvalRecord> records) {
    if (records.empty()) throw std::invalid_argument("multinomial_nll: empty input");
    double sum = 0.0;
    for (const auto& r : records) {
        const double m = std::accumulate(r.counts.begin(), r.counts.end(), 0.0);
        if (m <= 0.0) throw std::invalid_argument("multinomial_nll: record without annotations");
        if (r.counts.size() > r.p.size()) {
            throw std::invalid_argument("multinomial_nll: counts/probability size mismatch");
        }
        double nll = 0.0;
        for (std::size_t k = 0; k < r.counts.size(); ++k) {
            if (r.counts[k] > 0) nll -= r.counts[k] * std::log(std::max(r.p[k], kProbFloor));
        }
        sum += nll / m;
    }
    return sum / static_cast<double>(records.size());
}

std::vector<RejectPoint> reject_curve(std::span<const EvalRecord> records,
                                      RejectQuantity quantity,
                                      std::span<const double> thresholds) {
    if (records.empty()) throw std::invalid_argument("reject_curve: empty input");
    std::vector<RejectPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        std::vector<EvalRecord> retained;
        for (const auto& r : records) {
            if (r.uncertainty <= t) retained.push_back(r);
        }
        RejectPoint pt;
        pt.threshold = t;
        pt.retained = static_cast<long>(retained.size());
        if (!retained.empty()) {
            pt.value = quantity == RejectQuantity::Accuracy ? accuracy(retained)
                                                            : multinomial_nll(retained);
            pt.has_value = true;
        }
        out.push_back(pt);
    }
    return out;
}

std::vector<std::pair<double, double>> ecdf(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("ecdf: empty input");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

std::vector<std::vector<long>> confusion_matrix(std::span<const EvalRecord> records,
                                                int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("confusion_matrix: bad num_classes");
    std::vector<std::vector<long>> m(num_classes, std::vector<long>(num_classes, 0));
    for (const auto& r : records) {
        if (!r.true_majority.has_value()) continue;
        const int t = *r.true_majority;
        const int p = argmax_class(r.p);
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
            throw std::invalid_argument("confusion_matrix: class index out of range");
        }
        ++m[t][p];
    }
    return m;
}

namespace {

json curve_to_json(const Curve& c) {
    json rows = json::array();
    for (const auto& row : c.rows) {
        json r = json::array();
        for (const auto& cell : row) {
            if (cell.has_value()) r.push_back(*cell);
            else r.push_back(nullptr);
        }
        rows.push_back(std::move(r));
    }
    return json{{"columns", c.columns}, {"rows", std::move(rows)}};
}

json report_to_json(const MetricsReport& r) {
    auto opt = [](const std::optional<double>& v) -> json {
        return v.has_value() ? json(*v) : json(nullptr);
    };
    json metrics{
        {"acc", r.acc},
        {"uar", r.uar},
        {"ece", r.ece},
        {"mce", r.mce},
        {"auroc_all", opt(r.auroc_all)},
        {"auprc_all", opt(r.auprc_all)},
        {"auroc_test", opt(r.auroc_test)},
        {"auprc_test", opt(r.auprc_test)},
        {"nll_ma", r.nll_ma},
        {"nll_nma", r.nll_nma},
        {"mean_uncertainty_ma", r.mean_uncertainty_ma},
        {"mean_uncertainty_nma", r.mean_uncertainty_nma},
        {"mean_uncertainty", r.mean_uncertainty},
        {"mean_entropy", r.mean_entropy},
    };
    json curves;
    for (const auto& [name, curve] : r.curves) curves[name] = curve_to_json(curve);
    return json{{"schema_version", 1},
                {"method", r.method},
                {"seed", r.seed},
                {"metrics", std::move(metrics)},
                {"uar_absent_classes", r.uar_absent_classes},
                {"curves", std::move(curves)},
                {"confusion", r.confusion},
                {"notes", r.notes}};
}

// Shortest round-trip decimal form, same as the JSON encoding.
std::string cell_text(double v) {
    return json(v).dump();
}

}  // namespace

std::string report_to_json_string(const MetricsReport& report) {
    return report_to_json(report).dump(2) + "\n";
}

void write_report_files(const MetricsReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "curves");

    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) throw std::runtime_error("cannot write report.json under " + out_dir);
        out << report_to_json_string(report);
    }
    for (const auto& [name, curve] : report.curves) {
        std::ofstream out(fs::path(out_dir) / "curves" / (name + ".csv"));
        if (!out) throw std::runtime_error("cannot write curve csv: " + name);
        for (std::size_t i = 0; i < curve.columns.size(); ++i) {
            out << (i ? "," : "") << curve.columns[i];
        }
        out << "\n";
        for (const auto& row : curve.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ",";
                if (row[i].has_value()) out << cell_text(*row[i]);
            }
            out << "\n";
        }
    }
}

}  // namespace evid
