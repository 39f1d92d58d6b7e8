#pragma once

#include <cstdint>
#include <vector>

#include "qcia/routing.hpp"

namespace qcia {

struct ConfusionMatrix {
    int label_count = 0;
    std::vector<int64_t> counts;  // row = truth, column = prediction

    int64_t at(int truth, int pred) const {
        return counts[static_cast<size_t>(truth) * label_count + pred];
    }
    int64_t& at(int truth, int pred) {
        return counts[static_cast<size_t>(truth) * label_count + pred];
    }
    int64_t row_sum(int truth) const;
    int64_t total() const;
    int64_t trace() const;
};

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth);
ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth,
                          int label_count);

// Fraction of samples with |pred - truth| <= radius.
double adjacent_accuracy(const ConfusionMatrix& cm, int radius);

// A detection or ground-truth box tagged with the test-set image it belongs to.
struct ImageDetection {
    int image = 0;
    Detection detection;
};
struct ImageBox {
    int image = 0;
    Box box;
};

// All-points interpolated AP. Detections are sorted by descending score
// (stable) and greedily matched to the unmatched ground truth with the
// highest IoU >= iou_thresh within the same image.
double average_precision(const std::vector<ImageDetection>& detections,
                         const std::vector<ImageBox>& ground_truth, double iou_thresh);

// Single-class pooled AP over the whole test set; errors on empty ground truth.
double mean_ap(const std::vector<std::vector<Detection>>& per_image_detections,
               const std::vector<std::vector<Box>>& per_image_ground_truth,
               double iou_thresh);

// Spearman rank correlation; average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// CSV grid: header row "true\pred,0,1,..." then one row of counts per class.
std::string confusion_to_csv(const ConfusionMatrix& cm);

}  // namespace qcia
