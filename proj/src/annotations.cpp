#include "evid/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace evid {

namespace {

using nlohmann::json;

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

}  // namespace

AnnotationSet::AnnotationSet(std::vector<int> labels, int num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
    if (num_classes_ < 1) {
        throw std::invalid_argument("AnnotationSet: num_classes must be positive");
    }
    if (labels_.empty()) {
        throw std::invalid_argument("AnnotationSet: at least one annotator label required");
    }
    for (int y : labels_) {
        if (y < 0 || y >= num_classes_) {
            throw std::invalid_argument("AnnotationSet: label index out of range");
        }
    }
}

std::vector<int> AnnotationSet::counts() const {
    std::vector<int> c(num_classes_, 0);
    for (int y : labels_) ++c[y];
    return c;
}

std::vector<double> AnnotationSet::soft_label() const {
    const auto c = counts();
    const double m = static_cast<double>(labels_.size());
    std::vector<double> s(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) s[k] = c[k] / m;
    return s;
}

MajorityOutcome majority(const AnnotationSet& a) {
    const auto c = a.counts();
    const int max_count = *std::max_element(c.begin(), c.end());
    int arg = -1;
    int ties = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] == max_count) {
            ++ties;
            if (arg < 0) arg = static_cast<int>(k);
        }
    }
    MajorityOutcome out;
    out.majority_fraction = static_cast<double>(max_count) / a.num_annotators();
    if (ties == 1) {
        out.status = MajorityStatus::MA;
        out.ma_class = arg;
    } else {
        out.status = MajorityStatus::NMA;
        out.ma_class = -1;
    }
    return out;
}

std::pair<Dataset, Dataset> split_ma_nma(const Dataset& d) {
    Dataset ma{{}, d.num_classes, d.feature_dim, d.class_names};
    Dataset nma{{}, d.num_classes, d.feature_dim, d.class_names};
    for (const auto& ex : d.examples) {
        if (majority(ex.annotations).status == MajorityStatus::MA) {
            ma.examples.push_back(ex);
        } else {
            nma.examples.push_back(ex);
        }
    }
    return {std::move(ma), std::move(nma)};
}

namespace {

Dataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty dataset file");
    ++line_no;

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        fail_line(path, line_no, std::string("bad header: ") + e.what());
    }
    if (!header.contains("num_classes") || !header.contains("feature_dim")) {
        fail_line(path, line_no, "header must carry num_classes and feature_dim");
    }

    Dataset d;
    d.num_classes = header.at("num_classes").get<int>();
    d.feature_dim = header.at("feature_dim").get<int>();
    if (header.contains("class_names")) {
        d.class_names = header.at("class_names").get<std::vector<std::string>>();
    }
    if (d.num_classes < 1 || d.feature_dim < 1) {
        fail_line(path, line_no, "num_classes and feature_dim must be positive");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail_line(path, line_no, std::string("parse error: ") + e.what());
        }
        if (!j.contains("id") || !j.contains("features") || !j.contains("labels")) {
            fail_line(path, line_no, "example needs id, features, labels");
        }
        auto features = j.at("features").get<std::vector<double>>();
        if (static_cast<int>(features.size()) != d.feature_dim) {
            fail_line(path, line_no, "feature dimension mismatch: got "
                + std::to_string(features.size()) + ", expected " + std::to_string(d.feature_dim));
        }
        auto labels = j.at("labels").get<std::vector<int>>();
        for (int y : labels) {
            if (y < 0 || y >= d.num_classes) {
                fail_line(path, line_no, "label index " + std::to_string(y)
                    + " out of range [0, " + std::to_string(d.num_classes) + ")");
            }
        }
        if (labels.empty()) fail_line(path, line_no, "example has no annotator labels");
        d.examples.push_back(Example{j.at("id").get<std::string>(), std::move(features),
                                     AnnotationSet(std::move(labels), d.num_classes)});
    }
    return d;
}

Dataset load_csv(const std::string& path, int num_classes_hint) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty dataset file");
    ++line_no;

    const auto header = split(line, ',');
    if (header.size() < 3 || header.front() != "id" || header.back() != "labels") {
        fail_line(path, line_no, "expected header id,f0..f{D-1},labels");
    }
    const int feature_dim = static_cast<int>(header.size()) - 2;

    struct Row {
        std::string id;
        std::vector<double> features;
        std::vector<int> labels;
    };
    std::vector<Row> rows;
    int max_label = -1;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (static_cast<int>(cells.size()) != feature_dim + 2) {
            fail_line(path, line_no, "expected " + std::to_string(feature_dim + 2)
                + " cells, got " + std::to_string(cells.size()));
        }
        Row row;
        row.id = cells[0];
        row.features.reserve(feature_dim);
        for (int i = 0; i < feature_dim; ++i) {
            try {
                row.features.push_back(std::stod(cells[1 + i]));
            } catch (const std::exception&) {
                fail_line(path, line_no, "bad feature value '" + cells[1 + i] + "'");
            }
        }
        for (const auto& tok : split(cells.back(), '|')) {
            try {
                row.labels.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                fail_line(path, line_no, "bad label value '" + tok + "'");
            }
            max_label = std::max(max_label, row.labels.back());
        }
        if (row.labels.empty()) fail_line(path, line_no, "example has no annotator labels");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": dataset has no examples");

    Dataset d;
    d.feature_dim = feature_dim;
    d.num_classes = num_classes_hint > 0 ? num_classes_hint : max_label + 1;
    if (max_label >= d.num_classes) {
        throw std::runtime_error(path + ": label index " + std::to_string(max_label)
            + " out of range [0, " + std::to_string(d.num_classes) + ")");
    }
    for (auto& row : rows) {
        d.examples.push_back(Example{std::move(row.id), std::move(row.features),
                                     AnnotationSet(std::move(row.labels), d.num_classes)});
    }
    return d;
}

}  // namespace

Dataset load_dataset(const std::string& path, DatasetFormat format, int num_classes_hint) {
    return format == DatasetFormat::Jsonl ? load_jsonl(path) : load_csv(path, num_classes_hint);
}

void save_dataset_jsonl(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    json header{{"num_classes", d.num_classes}, {"feature_dim", d.feature_dim}};
    if (!d.class_names.empty()) header["class_names"] = d.class_names;
    out << header.dump() << "\n";
    for (const auto& ex : d.examples) {
        json j{{"id", ex.id}, {"features", ex.features}, {"labels", ex.annotations.labels()}};
        out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<Dataset, Dataset> split_nma_holdout(const Dataset& nma, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> order(nma.examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_hold = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(order.size())));
    std::vector<bool> held(order.size(), false);
    for (std::size_t i = 0; i < n_hold; ++i) held[order[i]] = true;

    Dataset kept{{}, nma.num_classes, nma.feature_dim, nma.class_names};
    Dataset hold{{}, nma.num_classes, nma.feature_dim, nma.class_names};
    for (std::size_t i = 0; i < nma.examples.size(); ++i) {
        (held[i] ? hold : kept).examples.push_back(nma.examples[i]);
    }
    return {std::move(kept), std::move(hold)};
}

RelabelResult relabel_with_extra_class(const Dataset& d, std::uint64_t seed) {
    auto [ma, nma] = split_ma_nma(d);
    auto [nma_train, nma_test] = split_nma_holdout(nma, 0.25, seed);

    const int k_new = d.num_classes;  // index of the extra class
    RelabelResult out;
    out.train.num_classes = d.num_classes + 1;
    out.train.feature_dim = d.feature_dim;
    out.train.class_names = d.class_names;
    if (!out.train.class_names.empty()) out.train.class_names.push_back("nma");

    for (const auto& ex : ma.examples) {
        const int y = majority(ex.annotations).ma_class;
        out.train.examples.push_back(Example{ex.id, ex.features,
                                             AnnotationSet({y}, out.train.num_classes)});
    }
    for (const auto& ex : nma_train.examples) {
        out.train.examples.push_back(Example{ex.id, ex.features,
                                             AnnotationSet({k_new}, out.train.num_classes)});
    }
    out.nma_test = std::move(nma_test);
    return out;
}

}  // namespace evid
