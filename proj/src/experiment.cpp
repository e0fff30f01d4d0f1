#include "evid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "evid/dirichlet.hpp"
#include "evid/rng.hpp"

namespace evid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    return json(v).dump();
}

}  // namespace

Method method_from_string(const std::string& s) {
    if (s == "MLE") return Method::MLE;
    if (s == "MLE_PLUS") return Method::MLE_PLUS;
    if (s == "MLE_STAR") return Method::MLE_STAR;
    if (s == "MCDP") return Method::MCDP;
    if (s == "ENSEMBLE") return Method::ENSEMBLE;
    if (s == "EDL") return Method::EDL;
    if (s == "EDL_STAR_R1") return Method::EDL_STAR_R1;
    if (s == "EDL_STAR_R2") return Method::EDL_STAR_R2;
    throw std::invalid_argument("unknown method: " + s);
}

std::string to_string(Method m) {
    switch (m) {
        case Method::MLE: return "MLE";
        case Method::MLE_PLUS: return "MLE_PLUS";
        case Method::MLE_STAR: return "MLE_STAR";
        case Method::MCDP: return "MCDP";
        case Method::ENSEMBLE: return "ENSEMBLE";
        case Method::EDL: return "EDL";
        case Method::EDL_STAR_R1: return "EDL_STAR_R1";
        case Method::EDL_STAR_R2: return "EDL_STAR_R2";
    }
    throw std::logic_error("bad Method");
}

bool method_uses_evidence(Method m) {
    return m == Method::EDL || m == Method::EDL_STAR_R1 || m == Method::EDL_STAR_R2;
}

LossKind loss_kind_for(Method m) {
    switch (m) {
        case Method::MLE: return LossKind::CE_MAJORITY;
        case Method::MCDP: return LossKind::CE_MAJORITY;
        case Method::ENSEMBLE: return LossKind::CE_MAJORITY;
        case Method::MLE_PLUS: return LossKind::CE_MAJORITY_PLUS;
        case Method::MLE_STAR: return LossKind::KL_SOFT_LABEL;
        case Method::EDL: return LossKind::EDL;
        case Method::EDL_STAR_R1: return LossKind::EDL_STAR_R1;
        case Method::EDL_STAR_R2: return LossKind::EDL_STAR_R2;
    }
    throw std::logic_error("bad Method");
}

namespace {

GenConfig gen_config_from_json(const json& j) {
    GenConfig cfg;
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.feature_dim = j.value("feature_dim", cfg.feature_dim);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.num_examples = j.value("num_examples", cfg.num_examples);
    cfg.ambiguity_mix = j.value("ambiguity_mix", cfg.ambiguity_mix);
    cfg.concentration = j.value("concentration", cfg.concentration);
    if (j.contains("annotators")) {
        const auto& a = j.at("annotators");
        if (a.contains("fixed")) {
            cfg.annotators_min = cfg.annotators_max = a.at("fixed").get<int>();
        } else {
            cfg.annotators_min = a.at("min").get<int>();
            cfg.annotators_max = a.at("max").get<int>();
        }
    }
    if (j.contains("prototypes")) {
        cfg.prototypes = j.at("prototypes").get<std::vector<std::vector<double>>>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1) {
        throw std::runtime_error("config " + path + ": schema_version must be 1");
    }

    ExperimentConfig cfg;
    cfg.method = method_from_string(j.at("method").get<std::string>());

    const auto& data = j.at("data");
    if (data.contains("generator")) {
        cfg.data.generator = gen_config_from_json(data.at("generator"));
        if (!data.at("generator").contains("seed")) cfg.data.generator->seed = 0;  // filled per run
    } else if (data.contains("dataset")) {
        cfg.data.dataset_path = data.at("dataset").get<std::string>();
    } else if (data.contains("train") && data.contains("val") && data.contains("test")) {
        cfg.data.train_path = data.at("train").get<std::string>();
        cfg.data.val_path = data.at("val").get<std::string>();
        cfg.data.test_path = data.at("test").get<std::string>();
    } else {
        throw std::runtime_error("config data must give generator, dataset, or train/val/test");
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.contains("hidden_dims")) cfg.model.hidden_dims = m.at("hidden_dims").get<std::vector<int>>();
        if (m.contains("output_activation")) {
            cfg.model.output_activation =
                output_activation_from_string(m.at("output_activation").get<std::string>());
        } else {
            cfg.model.output_activation = method_uses_evidence(cfg.method)
                ? OutputActivation::ReluEvidence : OutputActivation::Softmax;
        }
        cfg.model.dropout_rate = m.value("dropout_rate",
            cfg.method == Method::MCDP ? 0.5 : 0.0);
    } else {
        cfg.model.output_activation = method_uses_evidence(cfg.method)
            ? OutputActivation::ReluEvidence : OutputActivation::Softmax;
        if (cfg.method == Method::MCDP) cfg.model.dropout_rate = 0.5;
    }

    cfg.train.loss.kind = loss_kind_for(cfg.method);
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.balanced_sampling = t.value("balanced_sampling", cfg.train.balanced_sampling);
        cfg.train.loss.lambda = t.value("lambda", 0.0);
        cfg.train.loss.anneal_steps = t.value("anneal_steps", std::int64_t{0});
        if (t.contains("optimizer")) {
            const auto opt = t.at("optimizer").get<std::string>();
            if (opt == "adam") cfg.train.optimizer = Optimizer::Adam;
            else if (opt == "sgd") cfg.train.optimizer = Optimizer::Sgd;
            else throw std::runtime_error("config: unknown optimizer " + opt);
        }
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        cfg.eval.calibration_bins = e.value("calibration_bins", cfg.eval.calibration_bins);
        cfg.eval.mc_passes = e.value("mc_passes", cfg.eval.mc_passes);
        cfg.eval.ensemble_members = e.value("ensemble_members", cfg.eval.ensemble_members);
        if (e.contains("reject_thresholds")) {
            cfg.eval.reject_thresholds = e.at("reject_thresholds").get<std::vector<double>>();
        }
    }
    if (cfg.eval.reject_thresholds.empty()) {
        for (int i = 0; i <= 20; ++i) cfg.eval.reject_thresholds.push_back(0.05 * i);
    }

    cfg.out_dir = j.value("out", std::string{});
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.seeds = j.value("seeds", 1);

    validate_experiment(cfg);
    return cfg;
}

void validate_experiment(const ExperimentConfig& cfg) {
    const bool evidence = is_evidence_activation(cfg.model.output_activation);
    if (method_uses_evidence(cfg.method) && !evidence) {
        throw std::invalid_argument(to_string(cfg.method)
            + " requires an evidence output activation, got softmax");
    }
    if (!method_uses_evidence(cfg.method) && evidence) {
        throw std::invalid_argument(to_string(cfg.method)
            + " requires the softmax output activation, got "
            + to_string(cfg.model.output_activation));
    }
    if (cfg.train.epochs < 0 || cfg.train.batch_size < 1) {
        throw std::invalid_argument("invalid training configuration");
    }
    if (cfg.train.loss.lambda < 0.0) {
        throw std::invalid_argument("lambda must be nonnegative");
    }
    if (cfg.eval.calibration_bins < 1) {
        throw std::invalid_argument("calibration_bins must be >= 1");
    }
    if (cfg.method == Method::MCDP && cfg.model.dropout_rate <= 0.0) {
        throw std::invalid_argument("MCDP requires dropout_rate > 0");
    }
    if (cfg.method == Method::ENSEMBLE && cfg.eval.ensemble_members < 2) {
        throw std::invalid_argument("ENSEMBLE requires at least 2 members");
    }
    if (cfg.seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    if (cfg.data.generator.has_value()) validate(*cfg.data.generator);
    if (!std::is_sorted(cfg.eval.reject_thresholds.begin(), cfg.eval.reject_thresholds.end())) {
        throw std::invalid_argument("reject_thresholds must be sorted");
    }
}

namespace {

Dataset take(const Dataset& d, const std::vector<std::size_t>& idx,
             std::size_t begin, std::size_t end) {
    Dataset out{{}, d.num_classes, d.feature_dim, d.class_names};
    for (std::size_t i = begin; i < end; ++i) out.examples.push_back(d.examples[idx[i]]);
    return out;
}

}  // namespace

DataSplits make_splits(const Dataset& full, std::uint64_t ma_seed, std::uint64_t nma_seed) {
    auto [ma, nma] = split_ma_nma(full);

    std::vector<std::size_t> idx(ma.examples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(ma_seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t n = idx.size();
    const std::size_t n_train = static_cast<std::size_t>(0.70 * static_cast<double>(n));
    const std::size_t n_val = static_cast<std::size_t>(0.15 * static_cast<double>(n));

    DataSplits s;
    s.num_classes = full.num_classes;
    s.feature_dim = full.feature_dim;
    s.ma_train = take(ma, idx, 0, n_train);
    s.ma_val = take(ma, idx, n_train, n_train + n_val);
    s.ma_test = take(ma, idx, n_train + n_val, n);
    s.nma_all = nma;
    std::tie(s.nma_train, s.nma_test) = split_nma_holdout(nma, 0.25, nma_seed);
    return s;
}

DataSplits prepare_data(const ExperimentConfig& cfg, std::uint64_t run_seed) {
    const std::uint64_t ma_seed = derive_seed(run_seed, seed_stream::kMaSplit);
    const std::uint64_t nma_seed = derive_seed(run_seed, seed_stream::kNmaHoldout);

    if (cfg.data.generator.has_value()) {
        GenConfig gen = *cfg.data.generator;
        if (gen.seed == 0) gen.seed = derive_seed(run_seed, seed_stream::kGenerator);
        return make_splits(generate(gen).dataset, ma_seed, nma_seed);
    }
    if (!cfg.data.dataset_path.empty()) {
        return make_splits(load_dataset(cfg.data.dataset_path, DatasetFormat::Jsonl),
                           ma_seed, nma_seed);
    }

    const Dataset train = load_dataset(cfg.data.train_path, DatasetFormat::Jsonl);
    const Dataset val = load_dataset(cfg.data.val_path, DatasetFormat::Jsonl);
    const Dataset test = load_dataset(cfg.data.test_path, DatasetFormat::Jsonl);
    if (val.num_classes != train.num_classes || test.num_classes != train.num_classes
        || val.feature_dim != train.feature_dim || test.feature_dim != train.feature_dim) {
        throw std::runtime_error("train/val/test files disagree on num_classes or feature_dim");
    }

    DataSplits s;
    s.num_classes = train.num_classes;
    s.feature_dim = train.feature_dim;
    Dataset nma_pool{{}, train.num_classes, train.feature_dim, train.class_names};
    auto absorb = [&](const Dataset& d, Dataset& ma_out) {
        auto [ma, nma] = split_ma_nma(d);
        ma_out = std::move(ma);
        for (auto& ex : nma.examples) nma_pool.examples.push_back(std::move(ex));
    };
    absorb(train, s.ma_train);
    absorb(val, s.ma_val);
    absorb(test, s.ma_test);
    s.nma_all = nma_pool;
    std::tie(s.nma_train, s.nma_test) = split_nma_holdout(nma_pool, 0.25, nma_seed);
    return s;
}

namespace {

// Single-label view over K+1 classes for the MLE_PLUS validation trace.
TrainSet extra_class_majority_set(const Dataset& ma, int num_classes_plus) {
    TrainSet out;
    out.num_classes = num_classes_plus;
    out.feature_dim = ma.feature_dim;
    for (const auto& ex : ma.examples) {
        const int y = majority(ex.annotations).ma_class;
        out.items.push_back(TrainExample{ex.features,
                                         target_from_annotations(AnnotationSet({y}, num_classes_plus))});
    }
    return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out = a;
    out.examples.insert(out.examples.end(), b.examples.begin(), b.examples.end());
    return out;
}

}  // namespace

TrainRunResult run_training(const ExperimentConfig& cfg, const DataSplits& splits,
                            std::uint64_t run_seed) {
    validate_experiment(cfg);
    if (splits.ma_train.examples.empty()) {
        throw std::runtime_error("training split is empty");
    }
    if (cfg.method == Method::MLE_PLUS && splits.nma_all.examples.empty()) {
        throw std::runtime_error("MLE_PLUS requires NMA data: the dataset has none");
    }

    ModelConfig model_cfg = cfg.model;
    model_cfg.input_dim = splits.feature_dim;
    model_cfg.num_outputs =
        cfg.method == Method::MLE_PLUS ? splits.num_classes + 1 : splits.num_classes;
    model_cfg.seed = derive_seed(run_seed, seed_stream::kModelInit);

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(run_seed, seed_stream::kTrainer);

    TrainSet train_data;
    TrainSet val_data;
    if (cfg.method == Method::MLE_PLUS) {
        const auto relabeled = relabel_with_extra_class(
            concat(splits.ma_train, splits.nma_all),
            derive_seed(run_seed, seed_stream::kNmaHoldout));
        train_data = train_set_from_dataset(relabeled.train);
        val_data = extra_class_majority_set(splits.ma_val, splits.num_classes + 1);
    } else {
        train_data = train_set_from_dataset(splits.ma_train);
        val_data = train_set_from_dataset(splits.ma_val);
    }

    TrainRunResult out;
    out.predictor.method = cfg.method;
    if (cfg.method == Method::ENSEMBLE) {
        out.predictor.models = train_ensemble(model_cfg, train_data, train_cfg,
                                              cfg.eval.ensemble_members);
    } else {
        auto result = train(Model(model_cfg), train_data, train_cfg,
                            val_data.items.empty() ? nullptr : &val_data);
        out.epoch_train_loss = std::move(result.epoch_train_loss);
        out.epoch_val_loss = std::move(result.epoch_val_loss);
        out.predictor.models.push_back(std::move(result.model));
    }
    return out;
}

namespace {

double record_entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

struct PredictorContext {
    const ExperimentConfig* cfg = nullptr;
    const TrainedPredictor* predictor = nullptr;
    std::uint64_t mc_seed = 0;
    std::size_t record_index = 0;  // stable MC-dropout stream per record
};

EvalRecord make_record(PredictorContext& ctx, const Example& ex, bool is_nma) {
    const Method method = ctx.predictor->method;
    EvalRecord r;
    r.id = ex.id;
    r.counts = ex.annotations.counts();
    r.is_nma = is_nma;
    if (!is_nma) r.true_majority = majority(ex.annotations).ma_class;

    if (method_uses_evidence(method)) {
        const auto evidence = ctx.predictor->models.front().forward(ex.features);
        const auto pred = DirichletPrediction::from_evidence(evidence);
        r.p = pred.expected_probs();
        r.confidence = r.p[argmax_class(r.p)];
        r.uncertainty = pred.uncertainty();
    } else {
        if (method == Method::MCDP) {
            r.p = mc_dropout_predict(ctx.predictor->models.front(), ex.features,
                                     ctx.cfg->eval.mc_passes,
                                     derive_seed(ctx.mc_seed, ctx.record_index)).mean_probs;
        } else if (method == Method::ENSEMBLE) {
            r.p = ensemble_mean_probs(ctx.predictor->models, ex.features);
        } else {
            r.p = ctx.predictor->models.front().forward(ex.features);
        }
        r.confidence = r.p[argmax_class(r.p)];
        r.uncertainty = 1.0 - r.confidence;
    }
    ++ctx.record_index;
    return r;
}

std::vector<EvalRecord> make_records(PredictorContext& ctx, const Dataset& d, bool is_nma) {
    std::vector<EvalRecord> out;
    out.reserve(d.examples.size());
    for (const auto& ex : d.examples) out.push_back(make_record(ctx, ex, is_nma));
    return out;
}

// Emotion-class distribution for NLL when the model carries the extra
// NMA output: renormalize the first K entries.
std::vector<EvalRecord> renormalized_for_nll(std::vector<EvalRecord> records, int num_classes) {
    for (auto& r : records) {
        r.p.resize(num_classes);
        const double z = std::accumulate(r.p.begin(), r.p.end(), 0.0);
        if (z > 0.0) {
            for (double& v : r.p) v /= z;
        } else {
            for (double& v : r.p) v = 1.0 / num_classes;
        }
    }
    return records;
}

Curve reject_points_to_curve(const std::vector<RejectPoint>& pts, const std::string& metric_name) {
    Curve c;
    c.columns = {"threshold", metric_name, "retained"};
    for (const auto& pt : pts) {
        std::vector<std::optional<double>> row(3);
        row[0] = pt.threshold;
        row[1] = pt.has_value ? std::optional<double>(pt.value) : std::nullopt;
        row[2] = static_cast<double>(pt.retained);
        c.rows.push_back(std::move(row));
    }
    return c;
}

Curve ecdf_to_curve(const std::vector<std::pair<double, double>>& steps) {
    Curve c;
    c.columns = {"x", "cdf"};
    for (const auto& [x, y] : steps) {
        c.rows.push_back({std::optional<double>(x), std::optional<double>(y)});
    }
    return c;
}

double mean_uncertainty(std::span<const EvalRecord> records) {
    double sum = 0.0;
    for (const auto& r : records) sum += r.uncertainty;
    return records.empty() ? 0.0 : sum / static_cast<double>(records.size());
}

}  // namespace

MetricsReport run_evaluation(const ExperimentConfig& cfg, const TrainedPredictor& predictor,
                             const DataSplits& splits, std::uint64_t run_seed) {
    if (splits.ma_test.examples.empty()) {
        throw std::runtime_error("evaluation: MA test split is empty");
    }
    PredictorContext ctx;
    ctx.cfg = &cfg;
    ctx.predictor = &predictor;
    ctx.mc_seed = derive_seed(run_seed, seed_stream::kMcDropout);

    const auto ma_records = make_records(ctx, splits.ma_test, false);
    const auto nma_train_records = make_records(ctx, splits.nma_train, true);
    const auto nma_test_records = make_records(ctx, splits.nma_test, true);
    std::vector<EvalRecord> nma_all_records = nma_train_records;
    nma_all_records.insert(nma_all_records.end(), nma_test_records.begin(), nma_test_records.end());

    const bool plus = predictor.method == Method::MLE_PLUS;
    const auto& nma_for_nll = plus ? nma_test_records : nma_all_records;

    MetricsReport report;
    report.method = to_string(predictor.method);
    report.seed = run_seed;
    report.acc = accuracy(ma_records);
    const auto uar_result = uar(ma_records);
    report.uar = uar_result.value;
    report.uar_absent_classes = uar_result.absent_classes;
    report.ece = ece(ma_records, cfg.eval.calibration_bins);
    report.mce = mce(ma_records, cfg.eval.calibration_bins);

    auto detection = [&](std::span<const EvalRecord> nma_records)
        -> std::pair<std::optional<double>, std::optional<double>> {
        if (nma_records.empty()) return {std::nullopt, std::nullopt};
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& r : ma_records) {
            scores.push_back(r.uncertainty);
            labels.push_back(0);
        }
        for (const auto& r : nma_records) {
            scores.push_back(r.uncertainty);
            labels.push_back(1);
        }
        return {auroc(scores, labels), auprc(scores, labels)};
    };
    if (!plus) std::tie(report.auroc_all, report.auprc_all) = detection(nma_all_records);
    std::tie(report.auroc_test, report.auprc_test) = detection(nma_test_records);

    const auto ma_nll_records =
        plus ? renormalized_for_nll(ma_records, splits.num_classes) : ma_records;
    const auto nma_nll_records =
        plus ? renormalized_for_nll(nma_for_nll, splits.num_classes) : nma_for_nll;
    report.nll_ma = multinomial_nll(ma_nll_records);
    if (!nma_nll_records.empty()) report.nll_nma = multinomial_nll(nma_nll_records);

    report.mean_uncertainty_ma = mean_uncertainty(ma_records);
    report.mean_uncertainty_nma = mean_uncertainty(nma_for_nll.empty() ? nma_all_records : nma_for_nll);

    std::vector<EvalRecord> pool = ma_records;
    const auto& nma_pool = plus ? nma_test_records : nma_all_records;
    pool.insert(pool.end(), nma_pool.begin(), nma_pool.end());
    report.mean_uncertainty = mean_uncertainty(pool);

    std::vector<double> uncertainties;
    std::vector<double> entropies;
    for (const auto& r : pool) {
        uncertainties.push_back(r.uncertainty);
        entropies.push_back(record_entropy(r.p));
    }
    report.mean_entropy = entropies.empty() ? 0.0
        : std::accumulate(entropies.begin(), entropies.end(), 0.0) / entropies.size();

    report.curves["reject_accuracy"] = reject_points_to_curve(
        reject_curve(ma_records, RejectQuantity::Accuracy, cfg.eval.reject_thresholds), "accuracy");
    report.curves["reject_nll_ma"] = reject_points_to_curve(
        reject_curve(ma_nll_records, RejectQuantity::Nll, cfg.eval.reject_thresholds), "nll");
    if (!nma_nll_records.empty()) {
        report.curves["reject_nll_nma"] = reject_points_to_curve(
            reject_curve(nma_nll_records, RejectQuantity::Nll, cfg.eval.reject_thresholds), "nll");
    }
    report.curves["ecdf_uncertainty"] = ecdf_to_curve(ecdf(uncertainties));
    report.curves["ecdf_entropy"] = ecdf_to_curve(ecdf(entropies));

    {
        Curve c;
        c.columns = {"bin_lower", "bin_upper", "count", "accuracy", "confidence"};
        for (const auto& b : calibration_bins(ma_records, cfg.eval.calibration_bins)) {
            c.rows.push_back({b.lower, b.upper, static_cast<double>(b.count),
                              b.count > 0 ? std::optional<double>(b.accuracy) : std::nullopt,
                              b.count > 0 ? std::optional<double>(b.confidence) : std::nullopt});
        }
        report.curves["calibration"] = c;
    }

    if (plus) {
        // Extra-class confusion: held-out NMA examples carry the new class.
        std::vector<EvalRecord> conf_records = ma_records;
        for (auto r : nma_test_records) {
            r.true_majority = splits.num_classes;
            conf_records.push_back(std::move(r));
        }
        report.confusion = confusion_matrix(conf_records, splits.num_classes + 1);
        report.notes["nma_detection_scope"] = "NMA (test) only; the remaining NMA data was trained on";
        report.notes["nll_probabilities"] = "emotion classes renormalized over the first K outputs";
    } else {
        report.confusion = confusion_matrix(ma_records, splits.num_classes);
    }
    report.notes["argmax_tie_rule"] = "lowest class index";
    report.notes["nll_normalization"] = "per annotation; multinomial coefficient dropped";
    report.notes["nma_holdout_seed"] =
        std::to_string(derive_seed(run_seed, seed_stream::kNmaHoldout));
    return report;
}

void save_predictor(const TrainedPredictor& predictor, const std::string& dir) {
    fs::create_directories(dir);
    if (predictor.models.size() == 1) {
        save_model(predictor.models.front(), (fs::path(dir) / "model.json").string());
        return;
    }
    json manifest{{"format_version", 1}, {"kind", "ensemble"}};
    json members = json::array();
    for (std::size_t i = 0; i < predictor.models.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%03zu.json", i);
        save_model(predictor.models[i], (fs::path(dir) / name).string());
        members.push_back(name);
    }
    manifest["members"] = std::move(members);
    std::ofstream out(fs::path(dir) / "model.json");
    if (!out) throw std::runtime_error("cannot write ensemble manifest under " + dir);
    out << manifest.dump(2) << "\n";
}

TrainedPredictor load_predictor(Method method, const std::string& dir) {
    TrainedPredictor out;
    out.method = method;
    const fs::path manifest_path = fs::path(dir) / "model.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open model file: " + manifest_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt model file " + manifest_path.string() + ": " + e.what());
    }
    if (doc.contains("kind") && doc.at("kind") == "ensemble") {
        for (const auto& name : doc.at("members")) {
            out.models.push_back(load_model((fs::path(dir) / name.get<std::string>()).string()));
        }
        if (out.models.empty()) throw std::runtime_error("ensemble manifest lists no members");
    } else {
        out.models.push_back(load_model(manifest_path.string()));
    }
    return out;
}

void write_trace_csv(const TrainRunResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    const bool has_val = !result.epoch_val_loss.empty();
    out << (has_val ? "epoch,train_loss,val_loss\n" : "epoch,train_loss\n");
    for (std::size_t e = 0; e < result.epoch_train_loss.size(); ++e) {
        out << e << "," << format_double(result.epoch_train_loss[e]);
        if (has_val) out << "," << format_double(result.epoch_val_loss[e]);
        out << "\n";
    }
}

}  // namespace evid
