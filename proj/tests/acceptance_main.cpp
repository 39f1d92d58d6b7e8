// Acceptance suite: one pass/fail line per criterion. Run all with no
// arguments or a single criterion with --criterion N. Exits nonzero when any
// executed criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qcia/config.hpp"
#include "qcia/corpus.hpp"
#include "qcia/experiments.hpp"
#include "qcia/gradcheck.hpp"
#include "qcia/imageio.hpp"
#include "qcia/rng.hpp"

using namespace qcia;

namespace {

struct Check {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& message) {
        if (!ok) failures.push_back(message);
    }
    void close(double actual, double expected, double tol, const std::string& what) {
        if (std::abs(actual - expected) > tol)
            failures.push_back(what + ": got " + std::to_string(actual) + ", want " +
                               std::to_string(expected) + " +/- " + std::to_string(tol));
    }
    void at_least(double actual, double bound, const std::string& what) {
        if (!(actual >= bound))
            failures.push_back(what + ": got " + std::to_string(actual) + ", need >= " +
                               std::to_string(bound));
    }
};

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness for every layer kind on 20 random nets.

void criterion_gradients(Check& check) {
    Rng meta(0xACC1);
    int nets_checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        // Random small net containing every layer kind: conv, relu, maxpool,
        // fully-connected, softmax-CE.
        int input = 8 + static_cast<int>(meta.next_below(3)) * 2;  // 8, 10, 12
        int conv_channels = 2 + static_cast<int>(meta.next_below(3));
        int fc_width = 4 + static_cast<int>(meta.next_below(8));
        int classes = 2 + static_cast<int>(meta.next_below(3));
        int pool_window = 2 + static_cast<int>(meta.next_below(2));

        ArchSpec arch;
        arch.input_height = input;
        arch.input_width = input;
        arch.input_channels = 1;
        arch.num_classes = classes;
        arch.layers = {LayerSpec::conv(conv_channels, 3, 1, 1),
                       LayerSpec::relu(),
                       LayerSpec::maxpool(pool_window, pool_window),
                       LayerSpec::fully_connected(fc_width),
                       LayerSpec::relu(),
                       LayerSpec::fully_connected(classes),
                       LayerSpec::softmax_output()};

        Network net = build_network(arch, meta.next_u64());
        Rng data_rng(meta.next_u64());
        PatchBatch batch;
        batch.count = 2;
        batch.dims = {1, input, input};
        batch.data.resize(static_cast<size_t>(batch.count) * batch.dims.count());
        for (float& v : batch.data) v = static_cast<float>(data_rng.next_double());
        std::vector<int> labels(batch.count);
        for (int& label : labels)
            label = static_cast<int>(data_rng.next_below(classes));

        double err = grad_check(net, batch, labels, 1e-5);
        check.require(err < 1e-4, "net " + std::to_string(trial) +
                                      " max relative error " + std::to_string(err));
        ++nets_checked;
    }
    check.require(nets_checked >= 20, "fewer than 20 nets checked");
}

// ---------------------------------------------------------------------------
// Criterion 2: NMS equals the exhaustive greedy oracle on 10k random inputs.

std::vector<Detection> nms_oracle(const std::vector<Detection>& dets, double thresh) {
    std::vector<bool> alive(dets.size(), true);
    std::vector<Detection> kept;
    while (true) {
        int best = -1;
        for (size_t i = 0; i < dets.size(); ++i) {
            if (!alive[i]) continue;
            if (best < 0 || dets[i].score > dets[best].score) best = static_cast<int>(i);
        }
        if (best < 0) break;
        alive[best] = false;
        kept.push_back(dets[best]);
        for (size_t i = 0; i < dets.size(); ++i)
            if (alive[i] && iou(dets[best].box, dets[i].box) > thresh) alive[i] = false;
    }
    return kept;
}

void criterion_nms(Check& check) {
    Rng rng(0xACC2);
    int mismatches = 0;
    for (int trial = 0; trial < 10'000; ++trial) {
        int count = 1 + static_cast<int>(rng.next_below(8));
        std::vector<Detection> dets;
        for (int i = 0; i < count; ++i) {
            Box b{rng.next_double() * 50.0, rng.next_double() * 50.0,
                  4.0 + rng.next_double() * 25.0, 4.0 + rng.next_double() * 25.0};
            double score = std::floor(rng.next_double() * 8.0) / 8.0;  // forces ties
            dets.push_back({b, score});
        }
        double thresh = 0.2 + rng.next_double() * 0.6;
        if (nms(dets, thresh) != nms_oracle(dets, thresh)) ++mismatches;
    }
    check.require(mismatches == 0,
                  std::to_string(mismatches) + " of 10000 trials diverged");
}

// ---------------------------------------------------------------------------
// Criterion 3: fusion arithmetic.

void criterion_fusion(Check& check) {
    Rng rng(0xACC3);
    auto simplex = [&rng](size_t n) {
        std::vector<double> v(n);
        double total = 0.0;
        for (double& x : v) {
            x = -std::log(1.0 - rng.next_double());
            total += x;
        }
        for (double& x : v) x /= total;
        return v;
    };
    for (int trial = 0; trial < 10'000; ++trial) {
        auto t = simplex(3);
        LevelScores bj{QualityKind::BJ, simplex(1 + rng.next_below(10) + 1)};
        LevelScores bl{QualityKind::BL, simplex(1 + rng.next_below(10) + 1)};
        FusedQualityVector fused = fuse_quality({t[0], t[1], t[2]}, bj, bl);
        double total = 0.0;
        bool nonneg = true;
        for (double p : fused.probs) {
            total += p;
            nonneg = nonneg && p >= 0.0;
        }
        if (std::abs(total - 1.0) > 1e-6 || !nonneg) {
            check.require(false, "trial " + std::to_string(trial) + " sum " +
                                     std::to_string(total));
            return;
        }
    }

    // Worked example 1: pure G.
    {
        LevelScores bj{QualityKind::BJ, {0.25, 0.25, 0.25, 0.25}};
        LevelScores bl{QualityKind::BL, {0.25, 0.25, 0.25, 0.25}};
        FusedQualityVector fused = fuse_quality({1.0, 0.0, 0.0}, bj, bl);
        check.require(fused.probs[0] == 1.0, "example 1: P_C(G) must be exactly 1");
        for (size_t i = 1; i < fused.probs.size(); ++i)
            check.require(fused.probs[i] == 0.0, "example 1: tail must be exactly 0");
    }
    // Worked example 2: t=(0.2, 0.8, 0), BJ uniform over 10 severities.
    {
        std::vector<double> bj(11, 0.1);
        bj[0] = 0.0;
        std::vector<double> bl(11, 0.0);
        bl[0] = 1.0;
        FusedQualityVector fused = fuse_quality({0.2, 0.8, 0.0},
                                                {QualityKind::BJ, bj},
                                                {QualityKind::BL, bl});
        check.close(fused.probs[0], 0.2, 1e-12, "example 2: P_C(G)");
        for (int i = 1; i <= 10; ++i)
            check.close(fused.probs[i], 0.08, 1e-12,
                        "example 2: P_C(BJ_" + std::to_string(i) + ")");
    }
    // Worked example 3: pristine mass renormalized away.
    {
        std::vector<double> bj(11, 0.08);
        bj[0] = 0.2;
        std::vector<double> bl(11, 0.0);
        bl[0] = 1.0;
        FusedQualityVector fused = fuse_quality({0.0, 1.0, 0.0},
                                                {QualityKind::BJ, bj},
                                                {QualityKind::BL, bl});
        for (int i = 1; i <= 10; ++i)
            check.close(fused.probs[i], 0.1, 1e-12,
                        "example 3: P_C(BJ_" + std::to_string(i) + ")");
    }
}

// ---------------------------------------------------------------------------
// Criterion 4: quantization-table law.

void criterion_quant_law(Check& check) {
    for (const QuantTable& base : {annex_k_luminance(), annex_k_chrominance()}) {
        check.require(jpeg_quant_table(base, 50) == base, "Q=50 must be the identity");
        QuantTable q100 = jpeg_quant_table(base, 100);
        for (int v : q100.values)
            check.require(v == 1, "Q=100 must be all ones");
        QuantTable prev = jpeg_quant_table(base, 1);
        for (int q = 2; q <= 100; ++q) {
            QuantTable cur = jpeg_quant_table(base, q);
            for (int i = 0; i < 64; ++i)
                if (cur.values[i] > prev.values[i]) {
                    check.require(false, "entry " + std::to_string(i) +
                                             " increased at Q=" + std::to_string(q));
                    return;
                }
            prev = cur;
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 5: degradation severity monotonicity over a 12-image corpus.

void criterion_severity(Check& check) {
    QualityTaxonomy tax;  // default full ladders
    CorpusSpec spec;
    spec.count = 12;
    spec.seed = 0xACC5;
    std::vector<CorpusItem> corpus = make_desk_corpus(spec);

    std::vector<double> bj_mae(tax.m(), 0.0), bl_mae(tax.n(), 0.0);
    for (const CorpusItem& item : corpus) {
        for (int level = 1; level <= tax.m(); ++level)
            bj_mae[level - 1] +=
                mean_abs_error(item.image, degrade(item.image, QualityClass::bj(level), tax));
        for (int level = 1; level <= tax.n(); ++level)
            bl_mae[level - 1] +=
                mean_abs_error(item.image, degrade(item.image, QualityClass::bl(level), tax));
    }
    std::vector<double> severity;
    for (int level = 1; level <= tax.m(); ++level)
        severity.push_back(static_cast<double>(level));

    double bj_rho = spearman(bj_mae, severity);
    double bl_rho = spearman(bl_mae, severity);
    check.at_least(bj_rho, 0.9, "BJ ladder Spearman");
    check.at_least(bl_rho, 0.9, "BL ladder Spearman");
    std::printf("  BJ Spearman %.4f, BL Spearman %.4f\n", bj_rho, bl_rho);
}

// ---------------------------------------------------------------------------
// Criteria 6/7 shared plumbing: in-memory degraded dataset -> patches.

struct DeskSplit {
    std::vector<CorpusItem> train, test;
};

DeskSplit split_corpus(std::vector<CorpusItem> corpus, double train_fraction,
                       uint64_t seed) {
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    DeskSplit split;
    size_t train_count = static_cast<size_t>(corpus.size() * train_fraction);
    for (size_t i = 0; i < order.size(); ++i)
        (i < train_count ? split.train : split.test).push_back(corpus[order[i]]);
    return split;
}

LabeledPatches extract_patches(const std::vector<std::pair<Raster, int>>& images,
                               int patch_size, int patches_per_image, uint64_t seed) {
    LabeledPatches data;
    data.inputs.dims = {1, patch_size, patch_size};
    PredictorConfig cfg;
    cfg.patch_size = patch_size;
    cfg.patches_per_image = patches_per_image;
    for (size_t i = 0; i < images.size(); ++i) {
        cfg.seed = mix_seed(seed, i, 0x7A7C);
        PatchBatch patches = sample_patches(images[i].first, cfg, 1);
        data.inputs.data.insert(data.inputs.data.end(), patches.data.begin(),
                                patches.data.end());
        data.inputs.count += patches.count;
        for (int p = 0; p < patches.count; ++p) data.labels.push_back(images[i].second);
    }
    return data;
}

TrainConfig desk_train_config(int epochs, uint64_t seed, double lr = 0.01) {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.momentum = 0.9;
    cfg.weight_decay = 1e-4;
    cfg.batch_size = 32;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.threads = 2;
    return cfg;
}

// Criterion 6: 3-class type network reaches 95% held-out accuracy.
void criterion_type_training(Check& check) {
    QualityTaxonomy tax;  // full ladders for degradation variety
    CorpusSpec spec;
    spec.count = 500;
    spec.seed = 0xACC6;
    DeskSplit split = split_corpus(make_desk_corpus(spec), 0.8, 0xACC6F);

    // Each source contributes G plus one random BJ and one random BL level:
    // 1500 degraded images, 1200 of them for training.
    auto degrade_set = [&tax](const std::vector<CorpusItem>& items, uint64_t seed) {
        std::vector<std::pair<Raster, int>> images;
        for (size_t i = 0; i < items.size(); ++i) {
            Rng rng(mix_seed(seed, i, 0xDE6));
            images.emplace_back(items[i].image, 0);
            int bj_level = 1 + static_cast<int>(rng.next_below(tax.m()));
            images.emplace_back(degrade(items[i].image, QualityClass::bj(bj_level), tax), 1);
            int bl_level = 1 + static_cast<int>(rng.next_below(tax.n()));
            images.emplace_back(degrade(items[i].image, QualityClass::bl(bl_level), tax), 2);
        }
        return images;
    };
    auto train_images = degrade_set(split.train, 0xAAA1);
    auto test_images = degrade_set(split.test, 0xAAA2);
    check.require(train_images.size() + test_images.size() >= 1000,
                  "degraded corpus smaller than 1000 images");

    LabeledPatches data = extract_patches(train_images, 32, 2, 0xACC61);
    Network net = build_network(desk_arch(3, 32, 1), 0xACC62);
    std::vector<EpochStats> history = train(net, data, desk_train_config(14, 0xACC63));
    std::printf("  final train loss %.4f acc %.4f over %d patches\n",
                history.back().loss, history.back().accuracy, data.inputs.count);

    // Image-level evaluation through the predictor path (8-patch mean).
    QualityPredictor predictor;
    predictor.type_net = net;
    predictor.bj_net = build_network(desk_arch(1 + tax.m(), 32, 1), 1);
    predictor.bl_net = build_network(desk_arch(1 + tax.n(), 32, 1), 2);
    predictor.taxonomy = tax;
    predictor.cfg.patch_size = 32;
    predictor.cfg.patches_per_image = 8;
    predictor.cfg.seed = 0xACC64;

    int correct = 0;
    for (const auto& [image, label] : test_images) {
        TypeScores scores = predict_type(predictor, image);
        double best = scores.p_g;
        int arg = 0;
        if (scores.p_bj > best) {
            best = scores.p_bj;
            arg = 1;
        }
        if (scores.p_bl > best) arg = 2;
        if (arg == label) ++correct;
    }
    double accuracy_value = static_cast<double>(correct) / test_images.size();
    std::printf("  held-out type accuracy %.4f on %zu images\n", accuracy_value,
                test_images.size());
    check.at_least(accuracy_value, 0.95, "held-out type accuracy");
}

// Criterion 7: 5-level ladder nets reach 90% adjacent accuracy (radius 1).
void criterion_level_training(Check& check) {
    QualityTaxonomy tax;
    tax.jpeg_factors = {27, 21, 15, 9, 3};
    tax.downsample_sizes = {80, 64, 48, 32, 16};

    CorpusSpec spec;
    spec.count = 300;
    spec.seed = 0xACC7;
    DeskSplit split = split_corpus(make_desk_corpus(spec), 0.8, 0xACC7F);

    for (QualityKind family : {QualityKind::BJ, QualityKind::BL}) {
        const int levels = family == QualityKind::BJ ? tax.m() : tax.n();
        auto degrade_set = [&](const std::vector<CorpusItem>& items) {
            std::vector<std::pair<Raster, int>> images;
            for (const CorpusItem& item : items) {
                images.emplace_back(item.image, 0);  // pristine class
                for (int level = 1; level <= levels; ++level) {
                    QualityClass cls = family == QualityKind::BJ
                                           ? QualityClass::bj(level)
                                           : QualityClass::bl(level);
                    images.emplace_back(degrade(item.image, cls, tax), level);
                }
            }
            return images;
        };
        auto train_images = degrade_set(split.train);
        auto test_images = degrade_set(split.test);

        LabeledPatches data = extract_patches(train_images, 32, 2, 0xACC71);
        Network net = build_network(desk_arch(1 + levels, 32, 1), 0xACC72);
        std::vector<EpochStats> history =
            train(net, data, desk_train_config(26, 0xACC73, 0.005));

        QualityPredictor predictor;
        predictor.taxonomy = tax;
        predictor.cfg.patch_size = 32;
        predictor.cfg.patches_per_image = 8;
        predictor.cfg.seed = 0xACC74;
        predictor.type_net = build_network(desk_arch(3, 32, 1), 3);
        if (family == QualityKind::BJ) {
            predictor.bj_net = net;
            predictor.bl_net = build_network(desk_arch(1 + tax.n(), 32, 1), 4);
        } else {
            predictor.bl_net = net;
            predictor.bj_net = build_network(desk_arch(1 + tax.m(), 32, 1), 5);
        }

        std::vector<int> preds, truth;
        for (const auto& [image, label] : test_images) {
            LevelScores scores = predict_level(predictor, image, family);
            int arg = 0;
            for (size_t i = 1; i < scores.probs.size(); ++i)
                if (scores.probs[i] > scores.probs[arg]) arg = static_cast<int>(i);
            preds.push_back(arg);
            truth.push_back(label);
        }
        ConfusionMatrix cm = confusion(preds, truth, 1 + levels);
        double adjacent = adjacent_accuracy(cm, 1);
        const char* family_name = family == QualityKind::BJ ? "BJ" : "BL";
        std::printf("  %s level net: final train acc %.4f, held-out adjacent(1) %.4f\n",
                    family_name, history.back().accuracy, adjacent);
        check.at_least(adjacent, 0.90,
                       std::string(family_name) + " adjacent accuracy radius 1");
    }
}

// ---------------------------------------------------------------------------
// Criterion 8: routing ordering on the mixed set.

void criterion_routing(Check& check) {
    for (const char* task : {"detect", "recognize"}) {
        ExperimentConfig config;
        config.kind = "mixed_quality";
        config.task = task;
        config.items = 600;
        config.seed = 0xACC8;
        ExperimentReport report = mixed_quality_experiment(config);

        double standard = report.setting("standard");
        double mixed = report.setting("mixed_trained");
        double oracle = report.setting("oracle_routed");
        double k1 = report.setting("proposed_k1");
        double k3 = report.setting("proposed_k3");
        double k5 = report.setting("proposed_k5");
        std::printf(
            "  %s: standard %.4f < mixed %.4f < oracle %.4f | K1 %.4f K3 %.4f K5 %.4f\n",
            task, standard, mixed, oracle, k1, k3, k5);

        std::string prefix = std::string(task) + ": ";
        check.require(standard < mixed, prefix + "standard must trail mixed-trained");
        check.require(mixed < oracle, prefix + "mixed-trained must trail oracle");
        check.require(k3 >= mixed, prefix + "K=3 routing must reach mixed-trained");
        check.require(k1 <= k3 + 0.01, prefix + "K=1 must not exceed K=3 beyond tolerance");
        check.require(k3 <= k5 + 0.01, prefix + "K=3 must not exceed K=5 beyond tolerance");
    }
}

// ---------------------------------------------------------------------------
// Criterion 9: cross-quality matrix diagonal dominance.

void criterion_cross_matrix(Check& check) {
    ExperimentConfig config;
    config.kind = "cross_quality_matrix";
    config.task = "detect";
    config.items_per_cell = 200;
    config.seed = 0xACC9;
    ExperimentReport report = cross_quality_matrix(config);
    check.require(report.check("diagonal_dominance"),
                  "diagonal dominance violated");
    int rows = static_cast<int>(report.matrix.size());
    int violations = 0;
    for (int row = 0; row < rows; ++row)
        for (int col = 0; col < rows; ++col)
            if (col != row && report.matrix[row][row] <= report.matrix[row][col])
                ++violations;
    check.require(violations == 0, std::to_string(violations) + " row violations");
    std::printf("  %dx%d matrix, diagonal min %.4f\n", rows, rows,
                [&] {
                    double lo = 1.0;
                    for (int i = 0; i < rows; ++i) lo = std::min(lo, report.matrix[i][i]);
                    return lo;
                }());
}

// ---------------------------------------------------------------------------
// Criterion 10: determinism and round trips.

void criterion_determinism(Check& check) {
    // Checkpoint bit-exactness and resume equivalence.
    {
        ArchSpec arch = desk_arch(3, 16, 1);
        Network net = build_network(arch, 0xACCA);
        LabeledPatches data;
        data.inputs.count = 24;
        data.inputs.dims = {1, 16, 16};
        data.inputs.data.resize(24 * 256);
        Rng rng(0xACCB);
        for (float& v : data.inputs.data) v = static_cast<float>(rng.next_double());
        for (int i = 0; i < 24; ++i)
            data.labels.push_back(static_cast<int>(rng.next_below(3)));

        TrainConfig warmup = desk_train_config(2, 0xACCC);
        train(net, data, warmup);

        std::string dir = std::filesystem::temp_directory_path().string();
        std::string path_a = dir + "/qcia_acc10_a.ckpt";
        std::string path_b = dir + "/qcia_acc10_b.ckpt";
        save_checkpoint(net, path_a);
        Network reloaded = load_checkpoint(path_a);
        save_checkpoint(reloaded, path_b);
        check.require(read_file(path_a) == read_file(path_b),
                      "checkpoint re-save must be byte-identical");

        TrainConfig more = desk_train_config(1, 0xACCD);
        Network direct = net;
        train(direct, data, more);
        train(reloaded, data, more);
        bool equal = true;
        for (size_t l = 0; l < direct.params.size(); ++l)
            equal = equal && direct.params[l].weights == reloaded.params[l].weights &&
                    direct.params[l].vel_weights == reloaded.params[l].vel_weights;
        check.require(equal, "resumed training must equal uninterrupted training");
        std::filesystem::remove(path_a);
        std::filesystem::remove(path_b);
    }

    // PGM/PPM round trips.
    {
        Rng rng(0xACCE);
        for (int trial = 0; trial < 50; ++trial) {
            int w = 1 + static_cast<int>(rng.next_below(40));
            int h = 1 + static_cast<int>(rng.next_below(40));
            int channels = rng.next_below(2) == 0 ? 1 : 3;
            Raster r(w, h, channels);
            for (auto& px : r.pixels)
                px = static_cast<uint8_t>(rng.next_below(256));
            auto bytes = pnm_encode(r, channels == 1 ? ImageFormat::PGM : ImageFormat::PPM);
            check.require(pnm_decode(bytes) == r, "PNM round trip must be exact");
        }
    }

    // Manifest round trip.
    {
        DatasetManifest manifest;
        manifest.seed = 99;
        manifest.entries.push_back(
            {"a.pgm", QualityClass::bj(3), {{1.5, 2.5, 10, 12}}, 4});
        manifest.entries.push_back({"b.pgm", QualityClass::good(), {}, std::nullopt});
        manifest.entries.push_back({"c.pgm", QualityClass::bl(10), {{0, 0, 5, 5}}, 1});
        DatasetManifest back = manifest_from_json(manifest_to_json(manifest));
        check.require(back == manifest, "manifest round trip must be structurally equal");
    }

    // CLI artifact determinism: degrade, simulate, gradcheck reruns.
    const char* cli = std::getenv("QCIA_CLI");
    if (cli == nullptr || *cli == '\0') {
        check.require(false, "QCIA_CLI is not set; cannot exercise CLI determinism");
        return;
    }
    std::string base =
        (std::filesystem::temp_directory_path() / "qcia_acc10_cli").string();
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(base);
    auto shell = [&](const std::string& command) {
        int status = std::system((command + " 2>/dev/null").c_str());
        return WEXITSTATUS(status) == 0;
    };

    check.require(shell(std::string(cli) + " make-corpus --out " + base +
                        "/corpus --count 5 --seed 4 > /dev/null"),
                  "make-corpus must succeed");
    for (const char* pass : {"one", "two"}) {
        check.require(shell(std::string(cli) + " degrade --in " + base + "/corpus" +
                            " --out " + base + "/" + pass +
                            " --mixed --seed 11 --manifest " + base + "/" + pass +
                            "/manifest.json > /dev/null"),
                      "degrade must succeed");
    }
    DatasetManifest m1 = read_manifest(base + "/one/manifest.json");
    DatasetManifest m2 = read_manifest(base + "/two/manifest.json");
    check.require(m1.entries.size() == m2.entries.size(), "degrade reruns must match");
    for (size_t i = 0; i < m1.entries.size() && i < m2.entries.size(); ++i)
        check.require(read_file(m1.entries[i].path) == read_file(m2.entries[i].path),
                      "degraded image bytes must be identical across reruns");

    std::string sim_config = base + "/sim.json";
    {
        std::string text = R"({"seed": 5, "experiment": {"kind": "mixed_quality", "task": "recognize", "items": 80}})";
        write_file(sim_config, std::vector<uint8_t>(text.begin(), text.end()));
    }
    check.require(shell(std::string(cli) + " simulate --config " + sim_config +
                        " --report " + base + "/sim1.json > /dev/null"),
                  "simulate must succeed");
    check.require(shell(std::string(cli) + " simulate --config " + sim_config +
                        " --report " + base + "/sim2.json > /dev/null"),
                  "simulate rerun must succeed");
    check.require(read_file(base + "/sim1.json") == read_file(base + "/sim2.json"),
                  "simulate reports must be byte-identical");
    check.require(read_file(base + "/sim1.csv") == read_file(base + "/sim2.csv"),
                  "simulate CSVs must be byte-identical");

    check.require(shell(std::string(cli) + " gradcheck --seed 3 > " + base + "/g1.txt") &&
                      shell(std::string(cli) + " gradcheck --seed 3 > " + base + "/g2.txt"),
                  "gradcheck must succeed");
    check.require(read_file(base + "/g1.txt") == read_file(base + "/g2.txt"),
                  "gradcheck stdout must be identical across runs");
    std::filesystem::remove_all(base);
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Check&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[i + 1]);
    }

    std::vector<Criterion> criteria = {
        {1, "gradient correctness (all layer kinds, 20 random nets, <1e-4)",
         criterion_gradients},
        {2, "NMS equals exhaustive oracle on 10k random inputs", criterion_nms},
        {3, "fusion arithmetic: simplex output and worked examples", criterion_fusion},
        {4, "quantization-table law: Q=50 identity, Q=100 ones, monotone",
         criterion_quant_law},
        {5, "degradation severity monotone (Spearman >= 0.9 both ladders)",
         criterion_severity},
        {6, "desk-scale type prediction >= 95% held out", criterion_type_training},
        {7, "desk-scale level prediction adjacent(1) >= 90% held out",
         criterion_level_training},
        {8, "routing ordering on the mixed set (Standard<Mixed<Oracle, K trend)",
         criterion_routing},
        {9, "cross-quality matrix diagonal dominance", criterion_cross_matrix},
        {10, "determinism: checkpoints, CLI artifacts, format round trips",
         criterion_determinism},
    };

    bool all_passed = true;
    for (const Criterion& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(check);
        } catch (const std::exception& e) {
            check.require(false, std::string("exception: ") + e.what());
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        if (check.failures.empty()) {
            std::printf("[PASS] criterion %d: %s (%.1fs)\n", criterion.id,
                        criterion.title, seconds);
        } else {
            all_passed = false;
            std::printf("[FAIL] criterion %d: %s (%.1fs)\n", criterion.id,
                        criterion.title, seconds);
            for (const std::string& failure : check.failures)
                std::printf("       - %s\n", failure.c_str());
        }
        std::fflush(stdout);
    }
    return all_passed ? 0 : 1;
}
