#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcia/box.hpp"
#include "qcia/qualitynet.hpp"
#include "qcia/raster.hpp"
#include "qcia/taxonomy.hpp"

namespace qcia {

struct Detection {
    Box box;
    double score = 0;  // in [0, 1]

    bool operator==(const Detection& other) const = default;
};

struct IdentityScores {
    std::vector<double> scores;

    bool operator==(const IdentityScores& other) const = default;
};

struct RoutingConfig {
    int k = 3;
    double nms_iou = 0.5;
    // The stated procedure keeps raw analyzer scores; this flag scales them by
    // the routing weight instead.
    bool weight_detection_scores = false;
};

// The K highest-probability classes (ties toward lower canonical index) with
// their P_C entries renormalized to sum to 1. Zero-probability classes are
// dropped even if fewer than K remain.
std::vector<std::pair<QualityClass, double>> select_top_k(
    const FusedQualityVector& fused, const QualityTaxonomy& tax, int k);

// Greedy: keep the highest-score remaining detection, discard others with
// IoU strictly above the threshold. Score ties keep the lower original index
// first. Output sorted by descending score.
std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_thresh);

// Union of all model outputs followed by NMS. Raw scores are preserved unless
// cfg.weight_detection_scores is set.
std::vector<Detection> fuse_detections(
    const std::vector<std::pair<double, std::vector<Detection>>>& per_model,
    const RoutingConfig& cfg);

// Elementwise convex combination; weights must sum to 1 within 1e-6.
IdentityScores fuse_recognition(
    const std::vector<std::pair<double, IdentityScores>>& per_model);

// One evaluation unit: the manifest entry plus (optionally) decoded pixels.
// Synthetic analyzers only consume the labels and dimensions.
struct EvalItem {
    std::string path;
    QualityClass quality;
    std::vector<Box> boxes;
    std::optional<int> identity;
    int width = 0, height = 0;
    const Raster* raster = nullptr;
    size_t index = 0;  // stable item number used for seeding
};

enum class AnalyzerTask { Detect, Recognize };

using DetectFn = std::function<std::vector<Detection>(const EvalItem&)>;
using RecognizeFn = std::function<IdentityScores(const EvalItem&)>;

// One analyzer per taxonomy class, indexed canonically.
struct AnalyzerRegistry {
    AnalyzerTask task = AnalyzerTask::Detect;
    QualityTaxonomy taxonomy;
    std::vector<DetectFn> detectors;
    std::vector<RecognizeFn> recognizers;
    int identity_count = 0;  // recognize task only
};

void validate_registry(const AnalyzerRegistry& registry);

// P_C provider; wraps either a trained QualityPredictor or a simulated one.
using QualityFn = std::function<FusedQualityVector(const EvalItem&)>;

QualityFn predictor_quality_fn(const QualityPredictor& predictor);

struct AnalysisResult {
    AnalyzerTask task = AnalyzerTask::Detect;
    std::vector<Detection> detections;
    IdentityScores identity;
    FusedQualityVector fused;
    std::vector<std::pair<QualityClass, double>> selected;
};

// classify -> select_top_k -> run the selected analyzers -> fuse.
AnalysisResult analyze(const AnalyzerRegistry& registry, const QualityFn& quality,
                       const EvalItem& item, const RoutingConfig& cfg);

}  // namespace qcia
