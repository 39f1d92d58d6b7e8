#include <algorithm>
#include <cmath>

#include "qcia/rng.hpp"
#include "qcia/synthetic.hpp"

namespace qcia {

double SyntheticProfileParams::hit_rate(int d) const {
    return std::clamp(hit_base - hit_slope * d, hit_floor, 1.0);
}

double SyntheticProfileParams::sigma(int d) const {
    return sigma_base + sigma_per_level * d;
}

double SyntheticProfileParams::fp_rate(int d) const {
    return fp_per_level * (1 + d);
}

int quality_distance(const QualityClass& model, const QualityClass& truth,
                     const QualityTaxonomy& tax) {
    validate_class(model, tax);
    validate_class(truth, tax);
    const int d_max = std::max(tax.m(), tax.n());
    if (model.kind != truth.kind) return d_max;
    if (model.kind == QualityKind::G) return 0;
    return std::abs(model.level - truth.level);
}

int class_ladder_distance(const QualityClass& a, const QualityClass& b,
                          const QualityTaxonomy& tax) {
    const int cross = std::max(tax.m(), tax.n()) + 1;
    if (a.kind == b.kind)
        return a.kind == QualityKind::G ? 0 : std::abs(a.level - b.level);
    // G sits one step below the mildest level of each ladder.
    if (a.kind == QualityKind::G) return b.level;
    if (b.kind == QualityKind::G) return a.level;
    return cross;
}

namespace {

struct EffectiveRates {
    double hit = 0, sigma = 0, fp = 0;
    double score_center = 0;  // top of the hit-score band; decays with d
};

double hit_score_center(int d) { return 0.98 - 0.04 * std::min(d, 5); }

EffectiveRates rates_at(const SyntheticProfileParams& params, int d) {
    return {params.hit_rate(d), params.sigma(d), params.fp_rate(d),
            hit_score_center(d)};
}

// Averaged over all model classes: what a single model trained on the pooled
// mixed set achieves on an item of class `truth`.
EffectiveRates mixed_rates(const SyntheticProfileParams& params,
                           const QualityClass& truth, const QualityTaxonomy& tax) {
    EffectiveRates total;
    const auto classes = enumerate_classes(tax);
    for (const QualityClass& model : classes) {
        int d = quality_distance(model, truth, tax);
        total.hit += params.hit_rate(d);
        total.sigma += params.sigma(d);
        total.fp += params.fp_rate(d);
        total.score_center += hit_score_center(d);
    }
    const double count = static_cast<double>(classes.size());
    return {total.hit / count, total.sigma / count, total.fp / count,
            total.score_center / count};
}

void require_dims(const EvalItem& item) {
    if (item.width < 1 || item.height < 1)
        raise(ErrorCode::MissingGroundTruth, "item has no dimensions");
}

std::vector<Detection> emit_detections(const EffectiveRates& rates, const EvalItem& item,
                                       Rng& rng) {
    require_dims(item);
    if (item.boxes.empty())
        raise(ErrorCode::MissingGroundTruth, "item carries no ground-truth boxes");

    std::vector<Detection> detections;
    for (size_t b = 0; b < item.boxes.size(); ++b) {
        const Box& gt = item.boxes[b];
        if (rng.next_double() < rates.hit) {
            // The localization-error direction is a property of the image
            // content, shared across models; quality mismatch scales its
            // magnitude. Redundant boxes from different models therefore
            // overlap heavily and NMS can merge them.
            Rng direction(mix_seed(0xB0C5, item.index, b));
            Box jittered = gt;
            jittered.x += direction.next_gaussian() * rates.sigma;
            jittered.y += direction.next_gaussian() * rates.sigma;
            jittered.x = std::clamp(jittered.x, 0.0, std::max(0.0, item.width - jittered.w));
            jittered.y = std::clamp(jittered.y, 0.0, std::max(0.0, item.height - jittered.h));
            // Confidence tracks quality match, so NMS keeps the
            // best-matched model's box when several models agree.
            double score = rates.score_center - 0.08 * rng.next_double();
            detections.push_back({jittered, score});
        }
    }
    int spurious = rng.next_poisson(rates.fp);
    for (int s = 0; s < spurious; ++s) {
        double w = 8.0 + rng.next_double() * 16.0;
        double h = 8.0 + rng.next_double() * 16.0;
        w = std::min(w, static_cast<double>(item.width));
        h = std::min(h, static_cast<double>(item.height));
        double x = rng.next_double() * (item.width - w);
        double y = rng.next_double() * (item.height - h);
        detections.push_back({{x, y, w, h}, 0.1 + 0.4 * rng.next_double()});
    }
    return detections;
}

IdentityScores emit_recognition(const EffectiveRates& rates, const EvalItem& item,
                                Rng& rng, int identity_count) {
    if (!item.identity.has_value())
        raise(ErrorCode::MissingGroundTruth, "item carries no identity label");
    int truth = *item.identity;
    if (truth < 0 || truth >= identity_count)
        raise(ErrorCode::MissingGroundTruth, "identity outside registry gallery");

    IdentityScores scores;
    scores.scores.resize(identity_count);
    for (int i = 0; i < identity_count; ++i)
        scores.scores[i] = 0.3 * rng.next_double();
    int peak = truth;
    if (rng.next_double() >= rates.hit) {
        // Miss: peak lands on some other identity.
        peak = static_cast<int>(rng.next_below(identity_count - 1));
        if (peak >= truth) ++peak;
    }
    scores.scores[peak] = 0.6 + 0.4 * rng.next_double();
    return scores;
}

uint64_t draw_seed(const SyntheticProfileParams& params, const EvalItem& item,
                   int salt) {
    return mix_seed(params.seed, item.index, static_cast<uint64_t>(salt));
}

}  // namespace

std::vector<Detection> simulate_detections(const SyntheticAnalyzerProfile& profile,
                                           const EvalItem& item,
                                           const QualityTaxonomy& tax) {
    int d = quality_distance(profile.model_class, item.quality, tax);
    Rng rng(draw_seed(profile.params, item, class_index(profile.model_class, tax)));
    return emit_detections(rates_at(profile.params, d), item, rng);
}

IdentityScores simulate_recognition(const SyntheticAnalyzerProfile& profile,
                                    const EvalItem& item, const QualityTaxonomy& tax,
                                    int identity_count) {
    int d = quality_distance(profile.model_class, item.quality, tax);
    Rng rng(draw_seed(profile.params, item, class_index(profile.model_class, tax)));
    return emit_recognition(rates_at(profile.params, d), item, rng, identity_count);
}

AnalyzerRegistry synthetic_detection_registry(const QualityTaxonomy& tax,
                                              const SyntheticProfileParams& params) {
    AnalyzerRegistry registry;
    registry.task = AnalyzerTask::Detect;
    registry.taxonomy = tax;
    for (const QualityClass& cls : enumerate_classes(tax)) {
        SyntheticAnalyzerProfile profile{cls, params};
        registry.detectors.push_back([profile, tax](const EvalItem& item) {
            return simulate_detections(profile, item, tax);
        });
    }
    return registry;
}

AnalyzerRegistry synthetic_recognition_registry(const QualityTaxonomy& tax,
                                                const SyntheticProfileParams& params,
                                                int identity_count) {
    AnalyzerRegistry registry;
    registry.task = AnalyzerTask::Recognize;
    registry.taxonomy = tax;
    registry.identity_count = identity_count;
    for (const QualityClass& cls : enumerate_classes(tax)) {
        SyntheticAnalyzerProfile profile{cls, params};
        registry.recognizers.push_back([profile, tax, identity_count](const EvalItem& item) {
            return simulate_recognition(profile, item, tax, identity_count);
        });
    }
    return registry;
}

DetectFn mixed_detection_analyzer(const QualityTaxonomy& tax,
                                  const SyntheticProfileParams& params) {
    return [tax, params](const EvalItem& item) {
        Rng rng(mix_seed(params.seed, item.index, 0x31AED));
        return emit_detections(mixed_rates(params, item.quality, tax), item, rng);
    };
}

RecognizeFn mixed_recognition_analyzer(const QualityTaxonomy& tax,
                                       const SyntheticProfileParams& params,
                                       int identity_count) {
    return [tax, params, identity_count](const EvalItem& item) {
        Rng rng(mix_seed(params.seed, item.index, 0x31AED));
        return emit_recognition(mixed_rates(params, item.quality, tax), item, rng,
                                identity_count);
    };
}

QualityFn simulated_quality_fn(const QualityTaxonomy& tax,
                               const SimulatedPredictorParams& params) {
    return [tax, params](const EvalItem& item) {
        validate_class(item.quality, tax);
        const auto classes = enumerate_classes(tax);
        Rng rng(mix_seed(params.seed, item.index, 0x9D1C7));

        QualityClass center = item.quality;
        if (rng.next_double() < params.miss_rate) {
            std::vector<QualityClass> neighbors;
            for (const QualityClass& cls : classes)
                if (class_ladder_distance(cls, item.quality, tax) == 1)
                    neighbors.push_back(cls);
            if (!neighbors.empty())
                center = neighbors[rng.next_below(neighbors.size())];
        }

        FusedQualityVector fused;
        fused.probs.resize(classes.size());
        double total = 0.0;
        for (size_t i = 0; i < classes.size(); ++i) {
            int d = class_ladder_distance(classes[i], center, tax);
            double w = d == 0   ? 1.0
                       : d == 1 ? params.adjacent1
                       : d == 2 ? params.adjacent2
                                : params.cross;
            fused.probs[i] = w;
            total += w;
        }
        for (double& p : fused.probs) p /= total;
        return fused;
    };
}

}  // namespace qcia
