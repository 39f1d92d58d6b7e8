#pragma once

#include <utility>

#include "qcia/net.hpp"
#include "qcia/raster.hpp"
#include "qcia/taxonomy.hpp"

namespace qcia {

struct TypeScores {
    double p_g = 0, p_bj = 0, p_bl = 0;
};

// probs[0] is the pristine ("uncompressed"/"unresized") class; probs[1..] are
// severity levels, so the vector has 1+m (BJ) or 1+n (BL) entries.
struct LevelScores {
    QualityKind family = QualityKind::BJ;
    std::vector<double> probs;
};

// Probability over all 1+m+n classes in enumerate_classes order.
struct FusedQualityVector {
    std::vector<double> probs;
};

struct PredictorConfig {
    int patch_size = 32;
    int patches_per_image = 8;
    uint64_t seed = 0;
};

void validate_predictor_config(const PredictorConfig& cfg);

// Seeded uniform crop positions; deterministic per (image dims, seed). Pixels
// are zero-centered to [-0.5, 0.5] and converted to luma when `channels` is 1.
PatchBatch sample_patches(const Raster& r, const PredictorConfig& cfg, int channels);

struct QualityPredictor {
    Network type_net;   // 3 classes {G, BJ, BL}
    Network bj_net;     // 1+m classes
    Network bl_net;     // 1+n classes
    PredictorConfig cfg;
    QualityTaxonomy taxonomy;
};

// Patch-mean softmax scores. The per-class mean is accumulated in sorted
// value order, so it is invariant to patch permutation bit for bit.
std::vector<double> aggregate_rows(const std::vector<std::vector<float>>& rows);

TypeScores predict_type(const QualityPredictor& predictor, const Raster& r);
LevelScores predict_level(const QualityPredictor& predictor, const Raster& r,
                          QualityKind family);

// P_C = {p(G), p(BJ)*sev_bj_i, p(BL)*sev_bl_j} where sev_* are the level
// nets' severity entries renormalized without the pristine entry (uniform
// fallback when the severity mass is zero).
FusedQualityVector fuse_quality(const TypeScores& type_scores, const LevelScores& bj,
                                const LevelScores& bl);

// Argmax class of P_C, ties broken toward the lower canonical index.
std::pair<QualityClass, FusedQualityVector> classify_quality(
    const QualityPredictor& predictor, const Raster& r);

// Bundle directory: type.ckpt, bj_level.ckpt, bl_level.ckpt, predictor.json.
void save_predictor(const QualityPredictor& predictor, const std::string& dir);
QualityPredictor load_predictor(const std::string& dir);

std::string predictor_config_to_json(const PredictorConfig& cfg,
                                     const QualityTaxonomy& tax);
std::pair<PredictorConfig, QualityTaxonomy> predictor_config_from_json(
    const std::string& text);

}  // namespace qcia
