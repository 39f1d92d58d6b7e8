#include <doctest.h>

#include <cmath>

#include "qcia/metrics.hpp"
#include "qcia/rng.hpp"

using namespace qcia;

namespace {

// Threshold-sweep oracle: for every distinct score cutoff compute (recall,
// precision) from scratch, then integrate the envelope. Matching logic is
// recomputed per cutoff, making this independent of average_precision's
// single-sort implementation.
double ap_oracle(const std::vector<ImageDetection>& dets,
                 const std::vector<ImageBox>& gts, double thresh) {
    if (gts.empty() || dets.empty()) return 0.0;

    // Greedy match at full detection list order (score-desc, stable) to fix
    // each detection's TP/FP identity, as the PR curve definition requires.
    std::vector<int> order(dets.size());
    for (size_t i = 0; i < dets.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dets[a].detection.score > dets[b].detection.score;
    });
    std::vector<bool> used(gts.size(), false);
    std::vector<bool> tp(dets.size(), false);
    for (int index : order) {
        double best = 0.0;
        int best_gt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].image != dets[index].image) continue;
            double overlap = iou(dets[index].detection.box, gts[g].box);
            if (overlap >= thresh && overlap > best) {
                best = overlap;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            used[best_gt] = true;
            tp[index] = true;
        }
    }

    // Enumerate every cutoff = each distinct score (keep detections with
    // score >= cutoff), recompute precision/recall by counting.
    std::vector<double> cutoffs;
    for (const auto& d : dets) cutoffs.push_back(d.detection.score);
    std::sort(cutoffs.begin(), cutoffs.end(), std::greater<>());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());

    std::vector<std::pair<double, double>> pr;  // recall, precision
    for (double cutoff : cutoffs) {
        int tp_count = 0, kept = 0;
        for (size_t i = 0; i < dets.size(); ++i) {
            if (dets[i].detection.score < cutoff) continue;
            ++kept;
            if (tp[i]) ++tp_count;
        }
        pr.emplace_back(static_cast<double>(tp_count) / gts.size(),
                        static_cast<double>(tp_count) / kept);
    }
    std::sort(pr.begin(), pr.end());
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < pr.size(); ++i) {
        double envelope = 0.0;
        for (size_t j = i; j < pr.size(); ++j) envelope = std::max(envelope, pr[j].second);
        ap += (pr[i].first - prev_recall) * envelope;
        prev_recall = pr[i].first;
    }
    return ap;
}

}  // namespace

TEST_SUITE("accuracy") {
    TEST_CASE("exact and all-wrong") {
        CHECK(accuracy({1, 2, 0}, {1, 2, 0}) == 1.0);
        CHECK(accuracy({1, 1, 1}, {0, 0, 0}) == 0.0);
        CHECK(accuracy({0, 1, 1}, {0, 1, 0}) == doctest::Approx(2.0 / 3.0));
    }

    TEST_CASE("length mismatch is rejected") {
        CHECK_THROWS_AS(accuracy({1}, {1, 2}), Error);
    }

    TEST_CASE("confusion counts and invariants") {
        ConfusionMatrix cm = confusion({0, 1, 1}, {0, 1, 0}, 2);
        CHECK(cm.at(0, 0) == 1);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(1, 1) == 1);
        CHECK(cm.at(1, 0) == 0);
        CHECK(cm.row_sum(0) == 2);
        CHECK(cm.total() == 3);
        CHECK(static_cast<double>(cm.trace()) / cm.total() ==
              doctest::Approx(accuracy({0, 1, 1}, {0, 1, 0})));
    }
}

TEST_SUITE("adjacent") {
    TEST_CASE("diagonal matrix is perfect at radius 0") {
        ConfusionMatrix cm = confusion({0, 1, 2}, {0, 1, 2}, 3);
        CHECK(adjacent_accuracy(cm, 0) == 1.0);
    }

    TEST_CASE("radius >= L-1 is always 1") {
        ConfusionMatrix cm = confusion({2, 2, 2}, {0, 1, 2}, 3);
        CHECK(adjacent_accuracy(cm, 2) == 1.0);
    }

    TEST_CASE("printed Table II JPEG fixture concentrates near the diagonal") {
        // 11x11 confusion counts as printed for the JPEG ladder.
        const int64_t t[11][11] = {
            {2000, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
            {11, 1688, 194, 105, 0, 0, 0, 0, 0, 0, 0},
            {0, 153, 1653, 157, 37, 0, 0, 0, 0, 0, 0},
            {0, 9, 346, 1580, 65, 0, 0, 0, 0, 0, 0},
            {0, 9, 31, 102, 1649, 209, 0, 0, 0, 0, 0},
            {0, 0, 0, 11, 105, 1651, 233, 0, 0, 0, 0},
            {0, 0, 0, 0, 8, 159, 1694, 139, 0, 0, 0},
            {0, 0, 0, 0, 0, 0, 64, 1910, 26, 0, 0},
            {0, 0, 0, 0, 0, 0, 0, 35, 1798, 167, 0},
            {0, 0, 0, 0, 0, 0, 0, 21, 105, 1853, 21},
            {0, 0, 8, 4, 0, 4, 0, 1, 0, 143, 1840}};
        ConfusionMatrix cm;
        cm.label_count = 11;
        cm.counts.assign(121, 0);
        for (int r = 0; r < 11; ++r)
            for (int c = 0; c < 11; ++c) cm.at(r, c) = t[r][c];
        CHECK(cm.total() == 21998);
        // radius 0 reproduces the 87.8% JPEG accuracy figure
        CHECK(adjacent_accuracy(cm, 0) ==
              doctest::Approx(19316.0 / 21998.0).epsilon(1e-12));
        CHECK(adjacent_accuracy(cm, 0) == doctest::Approx(0.878).epsilon(1e-3));
        // printed counts put 98.87% of mass within one level, 99.88% within two
        CHECK(adjacent_accuracy(cm, 1) ==
              doctest::Approx(21750.0 / 21998.0).epsilon(1e-12));
        CHECK(adjacent_accuracy(cm, 2) >= 0.99);
    }
}

TEST_SUITE("average_precision") {
    TEST_CASE("perfect single detection") {
        std::vector<ImageDetection> dets = {{0, {{0, 0, 10, 10}, 0.9}}};
        std::vector<ImageBox> gts = {{0, {0, 0, 10, 10}}};
        CHECK(average_precision(dets, gts, 0.5) == 1.0);
    }

    TEST_CASE("trailing false positive does not hurt") {
        std::vector<ImageDetection> dets = {{0, {{0, 0, 10, 10}, 0.9}},
                                            {0, {{50, 50, 10, 10}, 0.5}}};
        std::vector<ImageBox> gts = {{0, {0, 0, 10, 10}}};
        CHECK(average_precision(dets, gts, 0.5) == 1.0);
    }

    TEST_CASE("leading false positive halves the AP") {
        std::vector<ImageDetection> dets = {{0, {{50, 50, 10, 10}, 0.9}},
                                            {0, {{0, 0, 10, 10}, 0.5}}};
        std::vector<ImageBox> gts = {{0, {0, 0, 10, 10}}};
        CHECK(average_precision(dets, gts, 0.5) == 0.5);
    }

    TEST_CASE("empty detections on nonempty truth give 0") {
        std::vector<ImageBox> gts = {{0, {0, 0, 10, 10}}};
        CHECK(average_precision({}, gts, 0.5) == 0.0);
    }

    TEST_CASE("hand-computed 3-image fixture") {
        // image 0: 1 GT, matched at rank 1 (score .9)
        // image 1: 1 GT, FP at rank 2 (.8), its GT matched at rank 4 (.6)
        // image 2: 1 GT, never matched
        // ranks: .9 TP, .8 FP, .7 FP, .6 TP
        // PR points: (1/3,1), (1/3,1/2), (1/3,1/3), (2/3,1/2)
        // envelope: precision 1 up to recall 1/3, then 1/2 to recall 2/3
        // AP = 1/3*1 + 1/3*1/2 = 0.5
        std::vector<ImageDetection> dets = {{0, {{0, 0, 10, 10}, 0.9}},
                                            {1, {{40, 40, 10, 10}, 0.8}},
                                            {2, {{40, 40, 10, 10}, 0.7}},
                                            {1, {{0, 0, 10, 10}, 0.6}}};
        std::vector<ImageBox> gts = {{0, {0, 0, 10, 10}},
                                     {1, {0, 0, 10, 10}},
                                     {2, {0, 0, 10, 10}}};
        CHECK(average_precision(dets, gts, 0.5) == doctest::Approx(0.5));
        CHECK(ap_oracle(dets, gts, 0.5) == doctest::Approx(0.5));
    }

    TEST_CASE("rank-based: monotone score transforms leave AP unchanged") {
        Rng rng(9);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<ImageDetection> dets;
            std::vector<ImageBox> gts;
            for (int i = 0; i < 3; ++i)
                gts.push_back({i, {rng.next_double() * 40, rng.next_double() * 40,
                                   10 + rng.next_double() * 10,
                                   10 + rng.next_double() * 10}});
            for (int d = 0; d < 6; ++d) {
                int image = static_cast<int>(rng.next_below(3));
                Box near = gts[image].box;
                near.x += rng.next_gaussian() * 4.0;
                near.y += rng.next_gaussian() * 4.0;
                dets.push_back({image, {near, 0.1 + 0.8 * rng.next_double()}});
            }
            double base = average_precision(dets, gts, 0.5);
            std::vector<ImageDetection> warped = dets;
            for (auto& d : warped)
                d.detection.score = std::tanh(3.0 * d.detection.score) + 2.0;
            CHECK(average_precision(warped, gts, 0.5) == doctest::Approx(base));
        }
    }

    TEST_CASE("equals the threshold-sweep oracle on random fixtures") {
        Rng rng(10);
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<ImageDetection> dets;
            std::vector<ImageBox> gts;
            int images = 1 + static_cast<int>(rng.next_below(2));
            for (int i = 0; i < images; ++i) {
                int gt_count = 1 + static_cast<int>(rng.next_below(2));
                for (int g = 0; g < gt_count; ++g)
                    gts.push_back({i, {rng.next_double() * 50, rng.next_double() * 50,
                                       8 + rng.next_double() * 12,
                                       8 + rng.next_double() * 12}});
            }
            int det_count = 1 + static_cast<int>(rng.next_below(6));
            for (int d = 0; d < det_count; ++d) {
                int image = static_cast<int>(rng.next_below(images));
                Box b{rng.next_double() * 50, rng.next_double() * 50,
                      8 + rng.next_double() * 12, 8 + rng.next_double() * 12};
                if (rng.next_double() < 0.6) {
                    size_t pick = rng.next_below(gts.size());
                    b = gts[pick].box;
                    image = gts[pick].image;
                    b.x += rng.next_gaussian() * 3.0;
                }
                double score = std::floor(rng.next_double() * 10.0) / 10.0;
                dets.push_back({image, {b, score}});
            }
            double lib = average_precision(dets, gts, 0.5);
            double oracle = ap_oracle(dets, gts, 0.5);
            CHECK(lib == doctest::Approx(oracle).epsilon(1e-12));
            CHECK(lib >= 0.0);
            CHECK(lib <= 1.0);
        }
    }

    TEST_CASE("mean_ap pools the test set and rejects empty truth") {
        std::vector<std::vector<Detection>> dets = {{{{0, 0, 10, 10}, 0.9}}, {}};
        std::vector<std::vector<Box>> gts = {{{0, 0, 10, 10}}, {{5, 5, 10, 10}}};
        CHECK(mean_ap(dets, gts, 0.5) == doctest::Approx(0.5));
        CHECK_THROWS_WITH_AS(mean_ap({{}, {}}, {{}, {}}, 0.5),
                             doctest::Contains("EmptyTestSet"), Error);
    }
}

TEST_SUITE("confusion_csv") {
    TEST_CASE("grid renders counts row-major") {
        ConfusionMatrix cm = confusion({0, 1, 1}, {0, 1, 0}, 2);
        std::string csv = confusion_to_csv(cm);
        CHECK(csv == "true\\pred,0,1\n0,1,1\n1,0,1\n");
    }
}

TEST_SUITE("spearman") {
    TEST_CASE("perfectly monotone series") {
        CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
        CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
    }

    TEST_CASE("one inversion stays high") {
        CHECK(spearman({1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                       {1, 2, 4, 3, 5, 6, 7, 8, 9, 10}) > 0.9);
    }
}
