#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcia/metrics.hpp"

namespace qcia {

int64_t ConfusionMatrix::row_sum(int truth) const {
    int64_t total = 0;
    for (int p = 0; p < label_count; ++p) total += at(truth, p);
    return total;
}

int64_t ConfusionMatrix::total() const {
    int64_t sum = 0;
    for (int64_t c : counts) sum += c;
    return sum;
}

int64_t ConfusionMatrix::trace() const {
    int64_t sum = 0;
    for (int i = 0; i < label_count; ++i) sum += at(i, i);
    return sum;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
    if (preds.size() != truth.size())
        raise(ErrorCode::LengthMismatch, "prediction and truth lengths differ");
    if (preds.empty())
        raise(ErrorCode::LengthMismatch, "empty prediction list");
    int64_t correct = 0;
    for (size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth,
                          int label_count) {
    if (preds.size() != truth.size())
        raise(ErrorCode::LengthMismatch, "prediction and truth lengths differ");
    ConfusionMatrix cm;
    cm.label_count = label_count;
    cm.counts.assign(static_cast<size_t>(label_count) * label_count, 0);
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || preds[i] >= label_count || truth[i] < 0 ||
            truth[i] >= label_count)
            raise(ErrorCode::LabelOutOfRange, "class index outside matrix");
        ++cm.at(truth[i], preds[i]);
    }
    return cm;
}

double adjacent_accuracy(const ConfusionMatrix& cm, int radius) {
    int64_t total = cm.total();
    if (total == 0) return 0.0;
    int64_t near = 0;
    for (int t = 0; t < cm.label_count; ++t)
        for (int p = 0; p < cm.label_count; ++p)
            if (std::abs(t - p) <= radius) near += cm.at(t, p);
    return static_cast<double>(near) / static_cast<double>(total);
}

double average_precision(const std::vector<ImageDetection>& detections,
                         const std::vector<ImageBox>& ground_truth, double iou_thresh) {
    const size_t gt_count = ground_truth.size();
    if (gt_count == 0) return 0.0;
    if (detections.empty()) return 0.0;

    std::vector<int> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return detections[a].detection.score > detections[b].detection.score;
    });

    std::vector<bool> matched(gt_count, false);
    std::vector<uint8_t> is_tp(detections.size(), 0);
    for (size_t rank = 0; rank < order.size(); ++rank) {
        const ImageDetection& det = detections[order[rank]];
        double best_iou = 0.0;
        int best_gt = -1;
        for (size_t g = 0; g < gt_count; ++g) {
            if (matched[g] || ground_truth[g].image != det.image) continue;
            double overlap = iou(det.detection.box, ground_truth[g].box);
            if (overlap >= iou_thresh && overlap > best_iou) {
                best_iou = overlap;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            matched[best_gt] = true;
            is_tp[rank] = 1;
        }
    }

    // Precision-envelope integration over all points. Tied scores collapse to
    // one operating point, so the curve matches exhaustive threshold
    // enumeration exactly.
    std::vector<double> recalls, precisions;
    int64_t tp = 0;
    size_t rank = 0;
    while (rank < order.size()) {
        double score = detections[order[rank]].detection.score;
        while (rank < order.size() &&
               detections[order[rank]].detection.score == score) {
            if (is_tp[rank]) ++tp;
            ++rank;
        }
        recalls.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
        precisions.push_back(static_cast<double>(tp) / static_cast<double>(rank));
    }
    // Envelope: precision at recall r is the max precision at any recall >= r.
    for (size_t i = precisions.size(); i-- > 1;)
        precisions[i - 1] = std::max(precisions[i - 1], precisions[i]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t i = 0; i < recalls.size(); ++i) {
        ap += (recalls[i] - prev_recall) * precisions[i];
        prev_recall = recalls[i];
    }
    return ap;
}

double mean_ap(const std::vector<std::vector<Detection>>& per_image_detections,
               const std::vector<std::vector<Box>>& per_image_ground_truth,
               double iou_thresh) {
    if (per_image_detections.size() != per_image_ground_truth.size())
        raise(ErrorCode::LengthMismatch, "image counts differ");
    std::vector<ImageDetection> detections;
    std::vector<ImageBox> ground_truth;
    for (size_t i = 0; i < per_image_detections.size(); ++i) {
        for (const Detection& d : per_image_detections[i])
            detections.push_back({static_cast<int>(i), d});
        for (const Box& b : per_image_ground_truth[i])
            ground_truth.push_back({static_cast<int>(i), b});
    }
    if (ground_truth.empty())
        raise(ErrorCode::EmptyTestSet, "no ground-truth boxes in test set");
    return average_precision(detections, ground_truth, iou_thresh);
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
    std::string csv = "true\\pred";
    for (int p = 0; p < cm.label_count; ++p) csv += "," + std::to_string(p);
    csv += '\n';
    for (int t = 0; t < cm.label_count; ++t) {
        csv += std::to_string(t);
        for (int p = 0; p < cm.label_count; ++p)
            csv += "," + std::to_string(cm.at(t, p));
        csv += '\n';
    }
    return csv;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        raise(ErrorCode::LengthMismatch, "spearman needs two equal-length series");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int x, int y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
            for (size_t k = i; k <= j; ++k) r[order[k]] = mean_rank;
            i = j + 1;
        }
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double mean = (static_cast<double>(a.size()) - 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace qcia
