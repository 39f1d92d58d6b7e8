#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcia/routing.hpp"

namespace qcia {

double iou(const Box& a, const Box& b) {
    double ix = std::max(a.x, b.x);
    double iy = std::max(a.y, b.y);
    double ix2 = std::min(a.x + a.w, b.x + b.w);
    double iy2 = std::min(a.y + a.h, b.y + b.h);
    double iw = ix2 - ix;
    double ih = iy2 - iy;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    double inter = iw * ih;
    double uni = a.area() + b.area() - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

std::vector<std::pair<QualityClass, double>> select_top_k(
    const FusedQualityVector& fused, const QualityTaxonomy& tax, int k) {
    if (k < 1 || k > tax.class_count())
        raise(ErrorCode::InvalidK, "K must lie in [1, 1+m+n]");
    if (static_cast<int>(fused.probs.size()) != tax.class_count())
        raise(ErrorCode::ShapeMismatch, "P_C length does not match taxonomy");

    std::vector<int> order(fused.probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return fused.probs[a] > fused.probs[b];  // stable: ties keep lower index
    });

    std::vector<std::pair<QualityClass, double>> selected;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        double p = fused.probs[order[i]];
        if (p <= 0.0) break;  // order is descending; the rest are zero too
        selected.emplace_back(class_at(order[i], tax), p);
        total += p;
    }
    if (selected.empty())
        raise(ErrorCode::ShapeMismatch, "P_C carries no probability mass");
    for (auto& [cls, weight] : selected) weight /= total;
    return selected;
}

std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_thresh) {
    std::vector<int> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return detections[a].score > detections[b].score;
    });

    std::vector<Detection> kept;
    std::vector<bool> suppressed(detections.size(), false);
    for (size_t i = 0; i < order.size(); ++i) {
        if (suppressed[order[i]]) continue;
        const Detection& top = detections[order[i]];
        kept.push_back(top);
        for (size_t j = i + 1; j < order.size(); ++j) {
            if (suppressed[order[j]]) continue;
            if (iou(top.box, detections[order[j]].box) > iou_thresh)
                suppressed[order[j]] = true;
        }
    }
    return kept;
}

std::vector<Detection> fuse_detections(
    const std::vector<std::pair<double, std::vector<Detection>>>& per_model,
    const RoutingConfig& cfg) {
    std::vector<Detection> pool;
    for (const auto& [weight, detections] : per_model)
        for (const Detection& d : detections) {
            Detection merged = d;
            if (cfg.weight_detection_scores) merged.score *= weight;
            pool.push_back(merged);
        }
    // Canonical pool order (score desc, then box coordinates) so NMS
    // tie-breaking cannot depend on how the models were listed.
    std::sort(pool.begin(), pool.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.box.x != b.box.x) return a.box.x < b.box.x;
        if (a.box.y != b.box.y) return a.box.y < b.box.y;
        if (a.box.w != b.box.w) return a.box.w < b.box.w;
        return a.box.h < b.box.h;
    });
    return nms(pool, cfg.nms_iou);
}

IdentityScores fuse_recognition(
    const std::vector<std::pair<double, IdentityScores>>& per_model) {
    if (per_model.empty())
        raise(ErrorCode::BadWeights, "no models to fuse");
    double total = 0.0;
    for (const auto& [weight, scores] : per_model) {
        if (weight < 0.0 || !std::isfinite(weight))
            raise(ErrorCode::BadWeights, "weights must be finite and nonnegative");
        total += weight;
        if (scores.scores.size() != per_model.front().second.scores.size())
            raise(ErrorCode::DimensionMismatch, "identity score dims differ");
    }
    if (std::abs(total - 1.0) > 1e-6)
        raise(ErrorCode::BadWeights, "weights must sum to 1");

    IdentityScores fused;
    fused.scores.assign(per_model.front().second.scores.size(), 0.0);
    for (const auto& [weight, scores] : per_model)
        for (size_t i = 0; i < fused.scores.size(); ++i)
            fused.scores[i] += weight * scores.scores[i];
    return fused;
}

void validate_registry(const AnalyzerRegistry& registry) {
    validate_taxonomy(registry.taxonomy);
    size_t expected = static_cast<size_t>(registry.taxonomy.class_count());
    const bool detect = registry.task == AnalyzerTask::Detect;
    if ((detect ? registry.detectors.size() : registry.recognizers.size()) != expected)
        raise(ErrorCode::MissingAnalyzer, "registry must cover every taxonomy class");
    for (size_t i = 0; i < expected; ++i) {
        bool present = detect ? static_cast<bool>(registry.detectors[i])
                              : static_cast<bool>(registry.recognizers[i]);
        if (!present)
            raise(ErrorCode::MissingAnalyzer,
                  "no analyzer for class " +
                      class_slug(class_at(static_cast<int>(i), registry.taxonomy)));
    }
    if (!detect && registry.identity_count < 1)
        raise(ErrorCode::MissingAnalyzer, "recognize registry needs identity_count");
}

QualityFn predictor_quality_fn(const QualityPredictor& predictor) {
    return [&predictor](const EvalItem& item) {
        if (item.raster == nullptr)
            raise(ErrorCode::MissingGroundTruth,
                  "item has no pixels for quality prediction");
        return classify_quality(predictor, *item.raster).second;
    };
}

AnalysisResult analyze(const AnalyzerRegistry& registry, const QualityFn& quality,
                       const EvalItem& item, const RoutingConfig& cfg) {
    validate_registry(registry);
    AnalysisResult result;
    result.task = registry.task;
    result.fused = quality(item);
    result.selected = select_top_k(result.fused, registry.taxonomy, cfg.k);

    if (registry.task == AnalyzerTask::Detect) {
        std::vector<std::pair<double, std::vector<Detection>>> per_model;
        for (const auto& [cls, weight] : result.selected) {
            int index = class_index(cls, registry.taxonomy);
            per_model.emplace_back(weight, registry.detectors[index](item));
        }
        result.detections = fuse_detections(per_model, cfg);
    } else {
        std::vector<std::pair<double, IdentityScores>> per_model;
        for (const auto& [cls, weight] : result.selected) {
            int index = class_index(cls, registry.taxonomy);
            per_model.emplace_back(weight, registry.recognizers[index](item));
        }
        result.identity = fuse_recognition(per_model);
    }
    return result;
}

}  // namespace qcia
