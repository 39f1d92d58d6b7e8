#pragma once

#include "qcia/routing.hpp"

namespace qcia {

// Statistical stand-in for a detector/recognizer trained on one quality
// class. Performance decays with the quality distance d between the model's
// class and the item's true class; a mismatched family (or G vs degraded)
// counts as d_max = max(m, n).
struct SyntheticProfileParams {
    double hit_base = 0.97;   // hit_rate(d) = clamp(hit_base - hit_slope*d, ...)
    double hit_slope = 0.08;
    double hit_floor = 0.2;
    double sigma_base = 1.0;  // sigma(d) = sigma_base + sigma_per_level*d, pixels
    double sigma_per_level = 1.0;
    double fp_per_level = 0.05;  // fp(d) = fp_per_level * (1 + d)
    uint64_t seed = 0;

    double hit_rate(int d) const;
    double sigma(int d) const;
    double fp_rate(int d) const;
};

struct SyntheticAnalyzerProfile {
    QualityClass model_class;
    SyntheticProfileParams params;
};

int quality_distance(const QualityClass& model, const QualityClass& truth,
                     const QualityTaxonomy& tax);

// Seeded deterministic draws keyed on (profile seed, item index, model class).
std::vector<Detection> simulate_detections(const SyntheticAnalyzerProfile& profile,
                                           const EvalItem& item,
                                           const QualityTaxonomy& tax);
IdentityScores simulate_recognition(const SyntheticAnalyzerProfile& profile,
                                    const EvalItem& item, const QualityTaxonomy& tax,
                                    int identity_count);

// Complete per-class registries backed by synthetic profiles.
AnalyzerRegistry synthetic_detection_registry(const QualityTaxonomy& tax,
                                              const SyntheticProfileParams& params);
AnalyzerRegistry synthetic_recognition_registry(const QualityTaxonomy& tax,
                                                const SyntheticProfileParams& params,
                                                int identity_count);

// The "trained on pooled mixed data" baseline: rates averaged over every
// model class for the item's true class.
DetectFn mixed_detection_analyzer(const QualityTaxonomy& tax,
                                  const SyntheticProfileParams& params);
RecognizeFn mixed_recognition_analyzer(const QualityTaxonomy& tax,
                                       const SyntheticProfileParams& params,
                                       int identity_count);

// Quality predictor stand-in with near-diagonal confusion structure: most
// mass on the true class, occasionally re-centered one level off.
struct SimulatedPredictorParams {
    double miss_rate = 0.25;   // probability the peak shifts one level
    double adjacent1 = 0.35;   // unnormalized mass at distance 1
    double adjacent2 = 0.10;   // unnormalized mass at distance 2
    double cross = 0.01;       // unnormalized mass elsewhere
    uint64_t seed = 0;
};

QualityFn simulated_quality_fn(const QualityTaxonomy& tax,
                               const SimulatedPredictorParams& params);

// Ladder distance between canonical classes: level gap within a family,
// severity level from G, large constant across families.
int class_ladder_distance(const QualityClass& a, const QualityClass& b,
                          const QualityTaxonomy& tax);

}  // namespace qcia
