#include "evid/datagen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace evid {

namespace {

constexpr double kEtaFloor = 0.05;  // keeps every Dirichlet shape parameter positive

std::vector<double> sample_dirichlet(const std::vector<double>& shape, std::mt19937_64& rng) {
    std::vector<double> out(shape.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        std::gamma_distribution<double> gamma(shape[k], 1.0);
        out[k] = gamma(rng);
        sum += out[k];
    }
    for (double& v : out) v /= sum;
    return out;
}

int sample_categorical(const std::vector<double>& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        acc += p[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(p.size()) - 1;
}

}  // namespace

void validate(const GenConfig& cfg) {
    if (cfg.num_classes < 2) throw std::invalid_argument("GenConfig: num_classes must be >= 2");
    if (cfg.feature_dim < 1) throw std::invalid_argument("GenConfig: feature_dim must be >= 1");
    if (cfg.num_examples < 1) throw std::invalid_argument("GenConfig: num_examples must be >= 1");
    if (cfg.annotators_min < 1 || cfg.annotators_max < cfg.annotators_min) {
        throw std::invalid_argument("GenConfig: invalid annotator range");
    }
    if (cfg.ambiguity_mix < 0.0 || cfg.ambiguity_mix > 1.0) {
        throw std::invalid_argument("GenConfig: ambiguity_mix must be in [0, 1]");
    }
    if (!(cfg.concentration > 0.0)) {
        throw std::invalid_argument("GenConfig: concentration must be positive");
    }
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("GenConfig: noise_sigma must be >= 0");
    if (!cfg.prototypes.empty()) {
        if (static_cast<int>(cfg.prototypes.size()) != cfg.num_classes) {
            throw std::invalid_argument("GenConfig: need one prototype per class");
        }
        for (const auto& proto : cfg.prototypes) {
            if (static_cast<int>(proto.size()) != cfg.feature_dim) {
                throw std::invalid_argument("GenConfig: prototype dimension mismatch");
            }
        }
    }
}

GeneratedData generate(const GenConfig& cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> standard_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick_class(0, cfg.num_classes - 1);
    std::uniform_int_distribution<int> pick_m(cfg.annotators_min, cfg.annotators_max);

    std::vector<std::vector<double>> protos = cfg.prototypes;
    if (protos.empty()) {
        protos.assign(cfg.num_classes, std::vector<double>(cfg.feature_dim));
        for (auto& proto : protos) {
            for (double& v : proto) v = standard_normal(rng);
        }
    }

    GeneratedData out;
    out.dataset.num_classes = cfg.num_classes;
    out.dataset.feature_dim = cfg.feature_dim;
    for (int c = 0; c < cfg.num_classes; ++c) {
        out.dataset.class_names.push_back("class_" + std::to_string(c));
    }

    const int id_width = static_cast<int>(std::to_string(cfg.num_examples - 1).size());
    for (int i = 0; i < cfg.num_examples; ++i) {
        const int c = pick_class(rng);
        std::vector<double> mode(cfg.num_classes, 0.0);
        if (unit(rng) < cfg.ambiguity_mix) {
            int c2 = pick_class(rng);
            while (c2 == c) c2 = pick_class(rng);
            mode[c] = 0.5;
            mode[c2] = 0.5;
        } else {
            mode[c] = 1.0;
        }

        std::vector<double> shape(cfg.num_classes);
        for (int k = 0; k < cfg.num_classes; ++k) {
            shape[k] = cfg.concentration * mode[k] + kEtaFloor;
        }
        const auto eta = sample_dirichlet(shape, rng);

        std::vector<double> features(cfg.feature_dim, 0.0);
        for (int k = 0; k < cfg.num_classes; ++k) {
            for (int dim = 0; dim < cfg.feature_dim; ++dim) {
                features[dim] += eta[k] * protos[k][dim];
            }
        }
        if (cfg.noise_sigma > 0.0) {
            for (double& v : features) v += cfg.noise_sigma * standard_normal(rng);
        }

        const int m = pick_m(rng);
        std::vector<int> labels(m);
        for (int a = 0; a < m; ++a) labels[a] = sample_categorical(eta, rng);

        std::string id = std::to_string(i);
        id.insert(0, std::max<std::size_t>(0, id_width - id.size()), '0');
        out.dataset.examples.push_back(Example{"ex" + id, std::move(features),
                                               AnnotationSet(std::move(labels), cfg.num_classes)});
        out.eta.push_back(eta);
    }
    return out;
}

void save_eta_sidecar(const Dataset& d, const std::vector<std::vector<double>>& eta,
                      const std::string& path) {
    if (d.examples.size() != eta.size()) {
        throw std::invalid_argument("save_eta_sidecar: eta size mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sidecar file: " + path);
    for (std::size_t i = 0; i < eta.size(); ++i) {
        out << nlohmann::json{{"id", d.examples[i].id}, {"eta", eta[i]}}.dump() << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace evid
