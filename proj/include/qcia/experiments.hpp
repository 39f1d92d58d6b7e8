#pragma once

#include "qcia/degrade.hpp"
#include "qcia/metrics.hpp"
#include "qcia/synthetic.hpp"

namespace qcia {

struct ExperimentConfig {
    std::string kind = "mixed_quality";  // or "cross_quality_matrix"
    std::string task = "detect";         // or "recognize"
    uint64_t seed = 7;
    int items = 600;           // mixed-set size
    int items_per_cell = 120;  // cross-matrix cell size
    int identities = 25;
    QualityTaxonomy taxonomy;
    SyntheticProfileParams profile;
    SimulatedPredictorParams predictor;
    std::vector<int> k_values = {1, 3, 5};
    double nms_iou = 0.5;
    double iou_thresh = 0.5;    // detection metric threshold
    double epsilon = 0.05;      // allowed gap between proposed K>=3 and oracle
    double mc_tolerance = 0.01; // Monte-Carlo tolerance for K monotonicity
};

struct ExperimentReport {
    std::string kind;
    std::string task;
    uint64_t seed = 0;
    std::string config_json;  // echo of the driving configuration
    std::vector<std::pair<std::string, double>> settings;
    std::vector<std::string> matrix_labels;      // cross-matrix row/col classes
    std::vector<std::vector<double>> matrix;     // row = model class, col = data class
    std::vector<std::pair<std::string, bool>> checks;
    double runtime_seconds = 0;  // informational; excluded from serialization

    double setting(const std::string& name) const;
    bool check(const std::string& name) const;
    bool equivalent(const ExperimentReport& other) const;  // ignores runtime
};

// Deterministic abstract items (dims, boxes, identity, quality class); no
// pixels are materialized. `fixed_class` pins every item's class; otherwise
// classes are drawn uniformly.
std::vector<EvalItem> synthetic_items(int count, const QualityTaxonomy& tax,
                                      uint64_t seed, int identities,
                                      const QualityClass* fixed_class = nullptr);

// (train class x test class) metric matrix from synthetic profiles; checks
// per-row diagonal dominance.
ExperimentReport cross_quality_matrix(const ExperimentConfig& config);

// Standard / mixed-trained / oracle-routed / proposed-K settings on one
// mixed-quality item set, with the ordering checks recorded.
ExperimentReport mixed_quality_experiment(const ExperimentConfig& config);

// Routing evaluation over a materialized manifest (used by the eval CLI).
ExperimentReport evaluate_manifest(const DatasetManifest& manifest,
                                   const AnalyzerRegistry& registry,
                                   const QualityFn& quality, const RoutingConfig& cfg,
                                   double iou_thresh);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);
std::string report_to_csv(const ExperimentReport& report);

ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);

// Registry manifest: {"task": ..., "taxonomy"?: ..., "identities"?: n,
// "models": [{"class": {...}, "synthetic_profile": {...} | "checkpoint": path}]}
AnalyzerRegistry load_registry(const std::string& path);

}  // namespace qcia
