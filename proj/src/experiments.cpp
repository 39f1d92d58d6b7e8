#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include <nlohmann/json.hpp>

#include "qcia/experiments.hpp"
#include "qcia/imageio.hpp"
#include "qcia/rng.hpp"

namespace qcia {

double ExperimentReport::setting(const std::string& name) const {
    for (const auto& [key, value] : settings)
        if (key == name) return value;
    raise(ErrorCode::IncompleteInputs, "report has no setting " + name);
}

bool ExperimentReport::check(const std::string& name) const {
    for (const auto& [key, value] : checks)
        if (key == name) return value;
    raise(ErrorCode::IncompleteInputs, "report has no check " + name);
}

bool ExperimentReport::equivalent(const ExperimentReport& other) const {
    return kind == other.kind && task == other.task && seed == other.seed &&
           config_json == other.config_json && settings == other.settings &&
           matrix_labels == other.matrix_labels && matrix == other.matrix &&
           checks == other.checks;
}

std::vector<EvalItem> synthetic_items(int count, const QualityTaxonomy& tax,
                                      uint64_t seed, int identities,
                                      const QualityClass* fixed_class) {
    if (count < 1)
        raise(ErrorCode::IncompleteInputs, "item count must be >= 1");
    std::vector<EvalItem> items;
    items.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(i), 0x17E3));
        EvalItem item;
        item.index = static_cast<size_t>(i);
        item.width = 96;
        item.height = 96;
        int boxes = 1 + static_cast<int>(rng.next_below(2));
        for (int b = 0; b < boxes; ++b) {
            // Boxes start at 24px so a correctly-routed model's jitter cannot
            // push a genuine hit below the 0.5 IoU match threshold.
            double w = 24.0 + rng.next_double() * 24.0;
            double h = 24.0 + rng.next_double() * 24.0;
            double x = rng.next_double() * (item.width - w);
            double y = rng.next_double() * (item.height - h);
            item.boxes.push_back({x, y, w, h});
        }
        item.identity = identities > 0 ? static_cast<int>(rng.next_below(identities)) : 0;
        item.quality = fixed_class
                           ? *fixed_class
                           : class_at(static_cast<int>(rng.next_below(tax.class_count())),
                                      tax);
        items.push_back(std::move(item));
    }
    return items;
}

namespace {

using Clock = std::chrono::steady_clock;

// Per-item analyzer outputs -> one scalar metric over the whole item set.
struct MetricAccumulator {
    bool detect;
    double iou_thresh;
    std::vector<std::vector<Detection>> detections;
    std::vector<std::vector<Box>> ground_truth;
    int correct = 0;
    int total = 0;

    void add_detect(const EvalItem& item, std::vector<Detection> dets) {
        detections.push_back(std::move(dets));
        ground_truth.push_back(item.boxes);
    }
    void add_recognize(const EvalItem& item, const IdentityScores& scores) {
        int arg = 0;
        for (size_t i = 1; i < scores.scores.size(); ++i)
            if (scores.scores[i] > scores.scores[arg]) arg = static_cast<int>(i);
        if (arg == *item.identity) ++correct;
        ++total;
    }
    double value() const {
        if (detect) return mean_ap(detections, ground_truth, iou_thresh);
        return total == 0 ? 0.0 : static_cast<double>(correct) / total;
    }
};

void check_config(const ExperimentConfig& config) {
    validate_taxonomy(config.taxonomy);
    if (config.task != "detect" && config.task != "recognize")
        raise(ErrorCode::IncompleteInputs, "task must be detect or recognize");
    if (config.identities < 1)
        raise(ErrorCode::IncompleteInputs, "identities must be >= 1");
}

AnalyzerRegistry build_registry(const ExperimentConfig& config) {
    return config.task == "detect"
               ? synthetic_detection_registry(config.taxonomy, config.profile)
               : synthetic_recognition_registry(config.taxonomy, config.profile,
                                                config.identities);
}

}  // namespace

ExperimentReport cross_quality_matrix(const ExperimentConfig& config) {
    check_config(config);
    auto start = Clock::now();
    const bool detect = config.task == "detect";
    const auto classes = enumerate_classes(config.taxonomy);
    AnalyzerRegistry registry = build_registry(config);

    ExperimentReport report;
    report.kind = "cross_quality_matrix";
    report.task = config.task;
    report.seed = config.seed;
    report.config_json = experiment_config_to_json(config);
    for (const QualityClass& cls : classes)
        report.matrix_labels.push_back(class_slug(cls));

    // Column item sets are generated per data class.
    std::vector<std::vector<EvalItem>> column_items;
    for (const QualityClass& data_class : classes)
        column_items.push_back(synthetic_items(
            config.items_per_cell, config.taxonomy,
            mix_seed(config.seed, class_index(data_class, config.taxonomy)),
            config.identities, &data_class));

    report.matrix.assign(classes.size(), std::vector<double>(classes.size(), 0.0));
    for (size_t row = 0; row < classes.size(); ++row) {
        for (size_t col = 0; col < classes.size(); ++col) {
            MetricAccumulator acc{detect, config.iou_thresh, {}, {}};
            for (const EvalItem& item : column_items[col]) {
                if (detect)
                    acc.add_detect(item, registry.detectors[row](item));
                else
                    acc.add_recognize(item, registry.recognizers[row](item));
            }
            report.matrix[row][col] = acc.value();
        }
    }

    bool dominant = true;
    for (size_t row = 0; row < classes.size(); ++row)
        for (size_t col = 0; col < classes.size(); ++col)
            if (col != row && report.matrix[row][row] <= report.matrix[row][col])
                dominant = false;
    report.checks.emplace_back("diagonal_dominance", dominant);

    report.runtime_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    return report;
}

ExperimentReport mixed_quality_experiment(const ExperimentConfig& config) {
    check_config(config);
    for (int k : config.k_values)
        if (k < 1 || k > config.taxonomy.class_count())
            raise(ErrorCode::IncompleteInputs, "K outside [1, 1+m+n]");
    auto start = Clock::now();
    const bool detect = config.task == "detect";
    AnalyzerRegistry registry = build_registry(config);
    QualityFn quality = simulated_quality_fn(config.taxonomy, config.predictor);
    std::vector<EvalItem> items =
        synthetic_items(config.items, config.taxonomy, config.seed, config.identities);

    ExperimentReport report;
    report.kind = "mixed_quality";
    report.task = config.task;
    report.seed = config.seed;
    report.config_json = experiment_config_to_json(config);

    RoutingConfig base_cfg;
    base_cfg.nms_iou = config.nms_iou;

    DetectFn mixed_det;
    RecognizeFn mixed_rec;
    if (detect)
        mixed_det = mixed_detection_analyzer(config.taxonomy, config.profile);
    else
        mixed_rec = mixed_recognition_analyzer(config.taxonomy, config.profile,
                                               config.identities);

    auto run_setting = [&](const std::string& name, auto&& produce) {
        MetricAccumulator acc{detect, config.iou_thresh, {}, {}};
        for (const EvalItem& item : items) produce(item, acc);
        report.settings.emplace_back(name, acc.value());
    };

    // (a) one G-class model everywhere ("Standard").
    run_setting("standard", [&](const EvalItem& item, MetricAccumulator& acc) {
        if (detect)
            acc.add_detect(item, fuse_detections({{1.0, registry.detectors[0](item)}},
                                                 base_cfg));
        else
            acc.add_recognize(item, registry.recognizers[0](item));
    });

    // (b) one model trained on pooled mixed data.
    run_setting("mixed_trained", [&](const EvalItem& item, MetricAccumulator& acc) {
        if (detect)
            acc.add_detect(item, fuse_detections({{1.0, mixed_det(item)}}, base_cfg));
        else
            acc.add_recognize(item, mixed_rec(item));
    });

    // (c) oracle routing by true class.
    run_setting("oracle_routed", [&](const EvalItem& item, MetricAccumulator& acc) {
        int index = class_index(item.quality, config.taxonomy);
        if (detect)
            acc.add_detect(item, fuse_detections({{1.0, registry.detectors[index](item)}},
                                                 base_cfg));
        else
            acc.add_recognize(item, registry.recognizers[index](item));
    });

    // (d) proposed routing at each K.
    for (int k : config.k_values) {
        RoutingConfig cfg = base_cfg;
        cfg.k = k;
        run_setting("proposed_k" + std::to_string(k),
                    [&](const EvalItem& item, MetricAccumulator& acc) {
                        AnalysisResult result = analyze(registry, quality, item, cfg);
                        if (detect)
                            acc.add_detect(item, std::move(result.detections));
                        else
                            acc.add_recognize(item, result.identity);
                    });
    }

    const double standard = report.setting("standard");
    const double mixed = report.setting("mixed_trained");
    const double oracle = report.setting("oracle_routed");
    report.checks.emplace_back("standard_lt_mixed", standard < mixed);
    report.checks.emplace_back("mixed_lt_oracle", mixed < oracle);

    auto has_k = [&](int k) {
        return std::find(config.k_values.begin(), config.k_values.end(), k) !=
               config.k_values.end();
    };
    if (has_k(3)) {
        double k3 = report.setting("proposed_k3");
        report.checks.emplace_back("proposed_k3_ge_mixed", k3 >= mixed);
        report.checks.emplace_back("k3_within_epsilon_of_oracle",
                                   k3 >= oracle - config.epsilon);
    }
    if (has_k(5)) {
        double k5 = report.setting("proposed_k5");
        report.checks.emplace_back("k5_within_epsilon_of_oracle",
                                   k5 >= oracle - config.epsilon);
    }
    if (has_k(1) && has_k(3) && has_k(5)) {
        double k1 = report.setting("proposed_k1");
        double k3 = report.setting("proposed_k3");
        double k5 = report.setting("proposed_k5");
        report.checks.emplace_back("k_monotone_within_tolerance",
                                   k1 <= k3 + config.mc_tolerance &&
                                       k3 <= k5 + config.mc_tolerance);
    }

    report.runtime_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    return report;
}

ExperimentReport evaluate_manifest(const DatasetManifest& manifest,
                                   const AnalyzerRegistry& registry,
                                   const QualityFn& quality, const RoutingConfig& cfg,
                                   double iou_thresh) {
    validate_manifest(manifest);
    validate_registry(registry);
    if (manifest.entries.empty())
        raise(ErrorCode::EmptyDataset, "manifest has no entries");

    auto start = Clock::now();
    const bool detect = registry.task == AnalyzerTask::Detect;
    MetricAccumulator acc{detect, iou_thresh, {}, {}};
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const ManifestEntry& entry = manifest.entries[i];
        Raster raster = load_image(entry.path);
        EvalItem item;
        item.path = entry.path;
        item.quality = entry.quality;
        item.boxes = entry.boxes;
        item.identity = entry.identity;
        item.width = raster.width;
        item.height = raster.height;
        item.raster = &raster;
        item.index = i;
        AnalysisResult result = analyze(registry, quality, item, cfg);
        if (detect)
            acc.add_detect(item, std::move(result.detections));
        else
            acc.add_recognize(item, result.identity);
    }

    ExperimentReport report;
    report.kind = "manifest_eval";
    report.task = detect ? "detect" : "recognize";
    report.seed = manifest.seed;
    report.config_json = "{}";
    report.settings.emplace_back("proposed_k" + std::to_string(cfg.k), acc.value());
    report.runtime_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json taxonomy_json(const QualityTaxonomy& tax) {
    return {{"jpeg_factors", tax.jpeg_factors},
            {"downsample_sizes", tax.downsample_sizes}};
}

QualityTaxonomy taxonomy_from(const nlohmann::json& j) {
    QualityTaxonomy tax;
    tax.jpeg_factors = j.at("jpeg_factors").get<std::vector<int>>();
    tax.downsample_sizes = j.at("downsample_sizes").get<std::vector<int>>();
    validate_taxonomy(tax);
    return tax;
}

nlohmann::json class_json(const QualityClass& c) {
    nlohmann::json j;
    j["kind"] = kind_name(c.kind);
    if (c.kind != QualityKind::G) j["level"] = c.level;
    return j;
}

QualityClass class_from(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "G") return QualityClass::good();
    int level = j.at("level").get<int>();
    if (kind == "BJ") return QualityClass::bj(level);
    if (kind == "BL") return QualityClass::bl(level);
    raise(ErrorCode::CorruptStream, "unknown class kind " + kind);
}

SyntheticProfileParams profile_from(const nlohmann::json& j) {
    SyntheticProfileParams params;
    if (j.contains("hit_base")) params.hit_base = j.at("hit_base").get<double>();
    if (j.contains("hit_slope")) params.hit_slope = j.at("hit_slope").get<double>();
    if (j.contains("hit_floor")) params.hit_floor = j.at("hit_floor").get<double>();
    if (j.contains("sigma_base")) params.sigma_base = j.at("sigma_base").get<double>();
    if (j.contains("sigma_per_level"))
        params.sigma_per_level = j.at("sigma_per_level").get<double>();
    if (j.contains("fp_per_level"))
        params.fp_per_level = j.at("fp_per_level").get<double>();
    if (j.contains("seed")) params.seed = j.at("seed").get<uint64_t>();
    return params;
}

nlohmann::json profile_json(const SyntheticProfileParams& params) {
    return {{"hit_base", params.hit_base},     {"hit_slope", params.hit_slope},
            {"hit_floor", params.hit_floor},   {"sigma_base", params.sigma_base},
            {"sigma_per_level", params.sigma_per_level},
            {"fp_per_level", params.fp_per_level},
            {"seed", params.seed}};
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    j["kind"] = config.kind;
    j["task"] = config.task;
    j["seed"] = config.seed;
    j["items"] = config.items;
    j["items_per_cell"] = config.items_per_cell;
    j["identities"] = config.identities;
    j["taxonomy"] = taxonomy_json(config.taxonomy);
    j["profile"] = profile_json(config.profile);
    j["predictor"] = {{"miss_rate", config.predictor.miss_rate},
                      {"adjacent1", config.predictor.adjacent1},
                      {"adjacent2", config.predictor.adjacent2},
                      {"cross", config.predictor.cross},
                      {"seed", config.predictor.seed}};
    j["k_values"] = config.k_values;
    j["nms_iou"] = config.nms_iou;
    j["iou_thresh"] = config.iou_thresh;
    j["epsilon"] = config.epsilon;
    j["mc_tolerance"] = config.mc_tolerance;
    return j.dump();
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "experiment config does not parse");
    }
    try {
        ExperimentConfig config;
        if (j.contains("kind")) config.kind = j.at("kind").get<std::string>();
        if (j.contains("task")) config.task = j.at("task").get<std::string>();
        if (j.contains("seed")) config.seed = j.at("seed").get<uint64_t>();
        if (j.contains("items")) config.items = j.at("items").get<int>();
        if (j.contains("items_per_cell"))
            config.items_per_cell = j.at("items_per_cell").get<int>();
        if (j.contains("identities")) config.identities = j.at("identities").get<int>();
        if (j.contains("taxonomy")) config.taxonomy = taxonomy_from(j.at("taxonomy"));
        if (j.contains("profile")) config.profile = profile_from(j.at("profile"));
        if (j.contains("predictor")) {
            const auto& p = j.at("predictor");
            if (p.contains("miss_rate"))
                config.predictor.miss_rate = p.at("miss_rate").get<double>();
            if (p.contains("adjacent1"))
                config.predictor.adjacent1 = p.at("adjacent1").get<double>();
            if (p.contains("adjacent2"))
                config.predictor.adjacent2 = p.at("adjacent2").get<double>();
            if (p.contains("cross")) config.predictor.cross = p.at("cross").get<double>();
            if (p.contains("seed")) config.predictor.seed = p.at("seed").get<uint64_t>();
        }
        if (j.contains("k_values"))
            config.k_values = j.at("k_values").get<std::vector<int>>();
        if (j.contains("nms_iou")) config.nms_iou = j.at("nms_iou").get<double>();
        if (j.contains("iou_thresh"))
            config.iou_thresh = j.at("iou_thresh").get<double>();
        if (j.contains("epsilon")) config.epsilon = j.at("epsilon").get<double>();
        if (j.contains("mc_tolerance"))
            config.mc_tolerance = j.at("mc_tolerance").get<double>();
        return config;
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "experiment config has mistyped fields");
    }
}

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["kind"] = report.kind;
    j["task"] = report.task;
    j["seed"] = report.seed;
    j["config"] = nlohmann::json::parse(report.config_json);
    j["settings"] = nlohmann::json::array();
    for (const auto& [name, metric] : report.settings)
        j["settings"].push_back({{"name", name}, {"metric", metric}});
    if (!report.matrix.empty()) {
        j["matrix"] = {{"labels", report.matrix_labels}, {"values", report.matrix}};
    }
    j["checks"] = nlohmann::json::array();
    for (const auto& [name, pass] : report.checks)
        j["checks"].push_back({{"name", name}, {"pass", pass}});
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "report JSON does not parse");
    }
    try {
        ExperimentReport report;
        report.kind = j.at("kind").get<std::string>();
        report.task = j.at("task").get<std::string>();
        report.seed = j.at("seed").get<uint64_t>();
        report.config_json = j.at("config").dump();
        for (const auto& s : j.at("settings"))
            report.settings.emplace_back(s.at("name").get<std::string>(),
                                         s.at("metric").get<double>());
        if (j.contains("matrix")) {
            report.matrix_labels =
                j.at("matrix").at("labels").get<std::vector<std::string>>();
            report.matrix =
                j.at("matrix").at("values").get<std::vector<std::vector<double>>>();
        }
        for (const auto& c : j.at("checks"))
            report.checks.emplace_back(c.at("name").get<std::string>(),
                                       c.at("pass").get<bool>());
        return report;
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "report JSON has missing fields");
    }
}

std::string report_to_csv(const ExperimentReport& report) {
    std::string csv = "setting,metric\n";
    for (const auto& [name, metric] : report.settings) {
        csv += name;
        csv += ',';
        csv += std::to_string(metric);
        csv += '\n';
    }
    if (!report.matrix.empty()) {
        csv += "\nmodel_class";
        for (const std::string& label : report.matrix_labels) csv += "," + label;
        csv += '\n';
        for (size_t row = 0; row < report.matrix.size(); ++row) {
            csv += report.matrix_labels[row];
            for (double v : report.matrix[row]) csv += "," + std::to_string(v);
            csv += '\n';
        }
    }
    return csv;
}

AnalyzerRegistry load_registry(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "registry JSON does not parse");
    }

    try {
        AnalyzerRegistry registry;
        std::string task = j.at("task").get<std::string>();
        if (task == "detect")
            registry.task = AnalyzerTask::Detect;
        else if (task == "recognize")
            registry.task = AnalyzerTask::Recognize;
        else
            raise(ErrorCode::CorruptStream, "registry task must be detect|recognize");
        if (j.contains("taxonomy")) registry.taxonomy = taxonomy_from(j.at("taxonomy"));
        if (j.contains("identities"))
            registry.identity_count = j.at("identities").get<int>();

        const QualityTaxonomy tax = registry.taxonomy;
        size_t expected = static_cast<size_t>(tax.class_count());
        registry.detectors.resize(registry.task == AnalyzerTask::Detect ? expected : 0);
        registry.recognizers.resize(registry.task == AnalyzerTask::Recognize ? expected
                                                                             : 0);
        for (const auto& model : j.at("models")) {
            QualityClass cls = class_from(model.at("class"));
            int index = class_index(cls, tax);
            if (model.contains("synthetic_profile")) {
                SyntheticAnalyzerProfile profile{cls,
                                                 profile_from(model.at("synthetic_profile"))};
                if (registry.task == AnalyzerTask::Detect) {
                    registry.detectors[index] = [profile, tax](const EvalItem& item) {
                        return simulate_detections(profile, item, tax);
                    };
                } else {
                    int identities = registry.identity_count;
                    registry.recognizers[index] = [profile, tax,
                                                   identities](const EvalItem& item) {
                        return simulate_recognition(profile, item, tax, identities);
                    };
                }
            } else if (model.contains("checkpoint")) {
                if (registry.task != AnalyzerTask::Recognize)
                    raise(ErrorCode::UnsupportedFormat,
                          "checkpoint-backed analyzers support the recognize task only");
                auto net = std::make_shared<Network>(
                    load_checkpoint(model.at("checkpoint").get<std::string>()));
                if (registry.identity_count == 0)
                    registry.identity_count = net->arch.num_classes;
                if (registry.identity_count != net->arch.num_classes)
                    raise(ErrorCode::DimensionMismatch,
                          "checkpoint classes disagree with registry identities");
                registry.recognizers[index] = [net](const EvalItem& item) {
                    if (item.raster == nullptr)
                        raise(ErrorCode::MissingGroundTruth,
                              "checkpoint analyzer needs pixels");
                    PredictorConfig cfg;
                    cfg.patch_size = net->arch.input_height;
                    cfg.patches_per_image = 4;
                    cfg.seed = 0;
                    PatchBatch patches =
                        sample_patches(*item.raster, cfg, net->arch.input_channels);
                    std::vector<double> mean = aggregate_rows(forward(*net, patches));
                    return IdentityScores{std::move(mean)};
                };
            } else {
                raise(ErrorCode::CorruptStream,
                      "registry model needs synthetic_profile or checkpoint");
            }
        }
        validate_registry(registry);
        return registry;
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "registry JSON has missing fields");
    }
}

}  // namespace qcia
