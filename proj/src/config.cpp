#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "qcia/config.hpp"
#include "qcia/imageio.hpp"

namespace qcia {

namespace {

struct ErrorList {
    std::vector<std::string> errors;

    void add(const std::string& message) { errors.push_back(message); }
    void require(bool ok, const std::string& message) {
        if (!ok) add(message);
    }
    [[noreturn]] void raise_all() {
        std::string joined;
        for (const std::string& e : errors) {
            if (!joined.empty()) joined += "; ";
            joined += e;
        }
        raise(ErrorCode::ValidationErrors, joined);
    }
};

void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                const std::string& where, ErrorList& errors) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            errors.add("unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
bool read_field(const nlohmann::json& j, const char* key, T& out, ErrorList& errors,
                const std::string& where) {
    if (!j.contains(key)) return false;
    try {
        out = j.at(key).get<T>();
        return true;
    } catch (const nlohmann::json::exception&) {
        errors.add(std::string("field \"") + key + "\" in " + where + " has wrong type");
        return false;
    }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ValidationErrors, std::string("config does not parse: ") + e.what());
    }
    if (!j.is_object())
        raise(ErrorCode::ValidationErrors, "config root must be an object");

    ErrorList errors;
    RunConfig config;

    check_keys(j,
               {"seed", "threads", "taxonomy", "predictor", "train", "routing",
                "paths", "experiment"},
               "config", errors);
    read_field(j, "seed", config.seed, errors, "config");
    read_field(j, "threads", config.threads, errors, "config");
    errors.require(config.threads >= 1, "threads must be >= 1");

    if (j.contains("taxonomy")) {
        const auto& t = j.at("taxonomy");
        check_keys(t, {"jpeg_factors", "downsample_sizes"}, "taxonomy", errors);
        read_field(t, "jpeg_factors", config.taxonomy.jpeg_factors, errors, "taxonomy");
        read_field(t, "downsample_sizes", config.taxonomy.downsample_sizes, errors,
                   "taxonomy");
        try {
            validate_taxonomy(config.taxonomy);
        } catch (const Error& e) {
            errors.add(e.what());
        }
    }

    if (j.contains("predictor")) {
        const auto& p = j.at("predictor");
        check_keys(p, {"patch_size", "patches_per_image", "seed"}, "predictor", errors);
        read_field(p, "patch_size", config.predictor.patch_size, errors, "predictor");
        read_field(p, "patches_per_image", config.predictor.patches_per_image, errors,
                   "predictor");
        read_field(p, "seed", config.predictor.seed, errors, "predictor");
        errors.require(config.predictor.patch_size >= 8, "predictor.patch_size must be >= 8");
        errors.require(config.predictor.patches_per_image >= 1,
                       "predictor.patches_per_image must be >= 1");
    }
    config.predictor.seed = config.seed;

    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, {"learning_rate", "momentum", "weight_decay", "batch_size",
                       "epochs"},
                   "train", errors);
        read_field(t, "learning_rate", config.train.learning_rate, errors, "train");
        read_field(t, "momentum", config.train.momentum, errors, "train");
        read_field(t, "weight_decay", config.train.weight_decay, errors, "train");
        read_field(t, "batch_size", config.train.batch_size, errors, "train");
        read_field(t, "epochs", config.train.epochs, errors, "train");
        errors.require(config.train.learning_rate > 0, "train.learning_rate must be > 0");
        errors.require(config.train.momentum >= 0 && config.train.momentum < 1,
                       "train.momentum must lie in [0, 1)");
        errors.require(config.train.weight_decay >= 0,
                       "train.weight_decay must be >= 0");
        errors.require(config.train.batch_size >= 1, "train.batch_size must be >= 1");
        errors.require(config.train.epochs >= 0, "train.epochs must be >= 0");
    }
    config.train.seed = config.seed;
    config.train.threads = config.threads;

    if (j.contains("routing")) {
        const auto& r = j.at("routing");
        check_keys(r, {"k", "nms_iou", "weight_detection_scores"}, "routing", errors);
        read_field(r, "k", config.routing.k, errors, "routing");
        read_field(r, "nms_iou", config.routing.nms_iou, errors, "routing");
        read_field(r, "weight_detection_scores", config.routing.weight_detection_scores,
                   errors, "routing");
        errors.require(config.routing.k >= 1 &&
                           config.routing.k <= config.taxonomy.class_count(),
                       "routing.k must lie in [1, 1+m+n]");
        errors.require(config.routing.nms_iou > 0 && config.routing.nms_iou < 1,
                       "routing.nms_iou must lie in (0, 1)");
    }

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p, {"corpus_dir", "work_dir"}, "paths", errors);
        read_field(p, "corpus_dir", config.corpus_dir, errors, "paths");
        read_field(p, "work_dir", config.work_dir, errors, "paths");
    }
    if (const char* env = std::getenv("QCIA_WORKDIR"); env != nullptr && *env != '\0')
        config.work_dir = env;
    if (!config.corpus_dir.empty() && !std::filesystem::exists(config.corpus_dir))
        errors.add("paths.corpus_dir does not exist: " + config.corpus_dir);
    if (!config.work_dir.empty() && !std::filesystem::exists(config.work_dir))
        errors.add("paths.work_dir does not exist: " + config.work_dir);

    if (j.contains("experiment")) {
        config.has_experiment = true;
        try {
            config.experiment = experiment_config_from_json(j.at("experiment").dump());
            if (!j.at("experiment").contains("taxonomy"))
                config.experiment.taxonomy = config.taxonomy;
            if (!j.at("experiment").contains("seed"))
                config.experiment.seed = config.seed;
            if (config.experiment.kind != "mixed_quality" &&
                config.experiment.kind != "cross_quality_matrix")
                errors.add("experiment.kind must be mixed_quality or cross_quality_matrix");
        } catch (const Error& e) {
            errors.add(e.what());
        }
    }

    if (!errors.errors.empty()) errors.raise_all();
    return config;
}

RunConfig parse_run_config(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    return parse_run_config_text(std::string(bytes.begin(), bytes.end()));
}

std::string run_config_to_json(const RunConfig& config) {
    nlohmann::json j;
    j["seed"] = config.seed;
    j["threads"] = config.threads;
    j["taxonomy"] = {{"jpeg_factors", config.taxonomy.jpeg_factors},
                     {"downsample_sizes", config.taxonomy.downsample_sizes}};
    j["predictor"] = {{"patch_size", config.predictor.patch_size},
                      {"patches_per_image", config.predictor.patches_per_image}};
    j["train"] = {{"learning_rate", config.train.learning_rate},
                  {"momentum", config.train.momentum},
                  {"weight_decay", config.train.weight_decay},
                  {"batch_size", config.train.batch_size},
                  {"epochs", config.train.epochs}};
    j["routing"] = {{"k", config.routing.k}, {"nms_iou", config.routing.nms_iou}};
    if (!config.corpus_dir.empty() || !config.work_dir.empty())
        j["paths"] = {{"corpus_dir", config.corpus_dir}, {"work_dir", config.work_dir}};
    if (config.has_experiment)
        j["experiment"] = nlohmann::json::parse(
            experiment_config_to_json(config.experiment));
    return j.dump(2) + "\n";
}

}  // namespace qcia
