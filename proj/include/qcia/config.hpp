#pragma once

#include <string>

#include "qcia/experiments.hpp"
#include "qcia/net.hpp"
#include "qcia/qualitynet.hpp"
#include "qcia/routing.hpp"
#include "qcia/taxonomy.hpp"

namespace qcia {

// One JSON document governing a run. Parsing is strict (unknown keys are
// errors) and reports every validation problem at once.
struct RunConfig {
    uint64_t seed = 1;
    int threads = 1;
    QualityTaxonomy taxonomy;
    PredictorConfig predictor;
    TrainConfig train;
    RoutingConfig routing;
    std::string corpus_dir;
    std::string work_dir;
    bool has_experiment = false;
    ExperimentConfig experiment;
};

RunConfig parse_run_config_text(const std::string& text);

// QCIA_WORKDIR, when set, overrides paths.work_dir.
RunConfig parse_run_config(const std::string& path);

std::string run_config_to_json(const RunConfig& config);

}  // namespace qcia
