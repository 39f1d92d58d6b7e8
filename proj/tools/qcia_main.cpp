#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qcia/config.hpp"
#include "qcia/corpus.hpp"
#include "qcia/experiments.hpp"
#include "qcia/gradcheck.hpp"
#include "qcia/imageio.hpp"
#include "qcia/rng.hpp"

namespace {

using namespace qcia;

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

std::string csv_sibling(const std::string& report_path) {
    std::filesystem::path p(report_path);
    p.replace_extension(".csv");
    return p.string();
}

// ---------------------------------------------------------------------------
// degrade

int cmd_degrade(const std::string& in_dir, const std::string& out_dir,
                const std::string& class_text, bool mixed, uint64_t seed,
                std::string manifest_path, const std::string& config_path) {
    QualityTaxonomy tax;
    if (!config_path.empty()) tax = parse_run_config(config_path).taxonomy;
    std::vector<CorpusItem> corpus = load_corpus_dir(in_dir);
    if (manifest_path.empty())
        manifest_path = (std::filesystem::path(out_dir) / "manifest.json").string();

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        raise(ErrorCode::IoFailure, "cannot create " + out_dir);

    DatasetManifest manifest;
    if (mixed) {
        manifest = build_mixed_dataset(corpus, tax, seed, out_dir);
    } else {
        QualityClass cls = parse_class(class_text);
        validate_class(cls, tax);
        manifest.seed = seed;
        manifest.taxonomy = tax;
        std::filesystem::path dir = std::filesystem::path(out_dir) / class_slug(cls);
        std::filesystem::create_directories(dir, ec);
        for (const CorpusItem& item : corpus) {
            Raster degraded = degrade(item.image, cls, tax);
            std::string name =
                item.id + (degraded.channels == 1 ? ".pgm" : ".ppm");
            std::string path = (dir / name).string();
            save_image(degraded, path,
                       degraded.channels == 1 ? ImageFormat::PGM : ImageFormat::PPM);
            ManifestEntry entry;
            entry.path = path;
            entry.quality = cls;
            entry.boxes = item.boxes;
            entry.identity = item.identity;
            manifest.entries.push_back(std::move(entry));
        }
    }
    write_manifest(manifest, manifest_path);
    std::printf("wrote %zu entries to %s\n", manifest.entries.size(),
                manifest_path.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// train-quality

int net_label(const std::string& net_kind, const QualityClass& quality) {
    if (net_kind == "type") {
        switch (quality.kind) {
            case QualityKind::G: return 0;
            case QualityKind::BJ: return 1;
            case QualityKind::BL: return 2;
        }
    }
    if (net_kind == "bj-level") {
        if (quality.kind == QualityKind::G) return 0;
        if (quality.kind == QualityKind::BJ) return quality.level;
        return -1;
    }
    if (quality.kind == QualityKind::G) return 0;
    if (quality.kind == QualityKind::BL) return quality.level;
    return -1;
}

LabeledPatches patches_from_manifest(const DatasetManifest& manifest,
                                     const std::string& net_kind,
                                     const PredictorConfig& cfg, int channels) {
    LabeledPatches data;
    data.inputs.dims = {channels, cfg.patch_size, cfg.patch_size};
    size_t sample_size = static_cast<size_t>(data.inputs.dims.count());
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const ManifestEntry& entry = manifest.entries[i];
        int label = net_label(net_kind, entry.quality);
        if (label < 0) continue;  // other family; not part of this net's classes
        Raster image = load_image(entry.path);
        PredictorConfig per_image = cfg;
        per_image.seed = mix_seed(cfg.seed, i, 0x7A7C);
        PatchBatch patches = sample_patches(image, per_image, channels);
        data.inputs.data.insert(data.inputs.data.end(), patches.data.begin(),
                                patches.data.end());
        data.inputs.count += patches.count;
        for (int p = 0; p < patches.count; ++p) data.labels.push_back(label);
    }
    if (data.inputs.count == 0)
        raise(ErrorCode::EmptyDataset, "manifest yields no training patches");
    (void)sample_size;
    return data;
}

int cmd_train_quality(const std::string& manifest_path, const std::string& net_kind,
                      const std::string& config_path, const std::string& out_path,
                      const std::string& resume_path, int threads_override) {
    RunConfig config = parse_run_config(config_path);
    if (threads_override > 0) config.train.threads = threads_override;
    DatasetManifest manifest = read_manifest(manifest_path);
    const QualityTaxonomy& tax = manifest.taxonomy;

    int num_classes = net_kind == "type" ? 3
                      : net_kind == "bj-level" ? 1 + tax.m()
                                               : 1 + tax.n();
    Network net;
    if (!resume_path.empty()) {
        net = load_checkpoint(resume_path);
        if (net.arch.num_classes != num_classes)
            raise(ErrorCode::ShapeMismatch,
                  "resume checkpoint classes do not match " + net_kind);
    } else {
        net = build_network(desk_arch(num_classes, config.predictor.patch_size, 1),
                            config.seed);
    }

    PredictorConfig patch_cfg = config.predictor;
    patch_cfg.seed = config.seed;
    LabeledPatches data = patches_from_manifest(manifest, net_kind, patch_cfg, 1);
    std::printf("training %s net on %d patches (%d classes)\n", net_kind.c_str(),
                data.inputs.count, num_classes);

    std::vector<EpochStats> history = train(net, data, config.train);
    for (size_t e = 0; e < history.size(); ++e)
        std::printf("epoch %zu loss %.6f accuracy %.4f\n", e, history[e].loss,
                    history[e].accuracy);
    save_checkpoint(net, out_path);

    // Keep a bundle config next to the checkpoint so predict-quality can load
    // the directory directly.
    std::filesystem::path bundle_cfg =
        std::filesystem::path(out_path).parent_path() / "predictor.json";
    if (!std::filesystem::exists(bundle_cfg))
        write_text(bundle_cfg.string(), predictor_config_to_json(patch_cfg, tax));
    std::printf("saved %s\n", out_path.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// predict-quality

int cmd_predict_quality(const std::string& bundle_dir, const std::string& image_path,
                        int patches, bool compact) {
    QualityPredictor predictor = load_predictor(bundle_dir);
    if (patches > 0) predictor.cfg.patches_per_image = patches;
    Raster image = load_image(image_path);

    TypeScores type_scores = predict_type(predictor, image);
    LevelScores bj = predict_level(predictor, image, QualityKind::BJ);
    LevelScores bl = predict_level(predictor, image, QualityKind::BL);
    FusedQualityVector fused = fuse_quality(type_scores, bj, bl);
    int arg = 0;
    for (size_t i = 1; i < fused.probs.size(); ++i)
        if (fused.probs[i] > fused.probs[arg]) arg = static_cast<int>(i);
    QualityClass cls = class_at(arg, predictor.taxonomy);

    nlohmann::json out;
    out["P_C"] = fused.probs;
    out["argmax"]["kind"] = kind_name(cls.kind);
    if (cls.kind != QualityKind::G) out["argmax"]["level"] = cls.level;
    out["type_scores"] = {type_scores.p_g, type_scores.p_bj, type_scores.p_bl};
    out["bj_levels"] = bj.probs;
    out["bl_levels"] = bl.probs;
    std::printf("%s\n", out.dump(compact ? -1 : 2).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& task, const std::string& registry_path,
             const std::string& manifest_path, int k, const std::string& report_path,
             const std::string& bundle_dir, double nms_iou, double iou_thresh) {
    AnalyzerRegistry registry = load_registry(registry_path);
    const bool detect = task == "detect";
    if (detect != (registry.task == AnalyzerTask::Detect))
        raise(ErrorCode::IncompleteInputs, "registry task does not match --task");
    DatasetManifest manifest = read_manifest(manifest_path);

    RoutingConfig cfg;
    cfg.k = k;
    cfg.nms_iou = nms_iou;

    ExperimentReport report;
    if (!bundle_dir.empty()) {
        QualityPredictor predictor = load_predictor(bundle_dir);
        report = evaluate_manifest(manifest, registry, predictor_quality_fn(predictor),
                                   cfg, iou_thresh);
    } else {
        SimulatedPredictorParams params;
        params.seed = manifest.seed;
        report = evaluate_manifest(manifest, registry,
                                   simulated_quality_fn(manifest.taxonomy, params), cfg,
                                   iou_thresh);
    }
    write_text(report_path, report_to_json(report));
    write_text(csv_sibling(report_path), report_to_csv(report));
    for (const auto& [name, metric] : report.settings)
        std::printf("%s %.6f\n", name.c_str(), metric);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& config_path, const std::string& report_path) {
    RunConfig config = parse_run_config(config_path);
    if (!config.has_experiment)
        raise(ErrorCode::ValidationErrors, "config lacks an experiment section");

    ExperimentReport report = config.experiment.kind == "cross_quality_matrix"
                                  ? cross_quality_matrix(config.experiment)
                                  : mixed_quality_experiment(config.experiment);
    write_text(report_path, report_to_json(report));
    write_text(csv_sibling(report_path), report_to_csv(report));
    for (const auto& [name, metric] : report.settings)
        std::printf("%s %.6f\n", name.c_str(), metric);
    for (const auto& [name, pass] : report.checks)
        std::printf("check %s %s\n", name.c_str(), pass ? "pass" : "FAIL");
    std::fprintf(stderr, "simulate finished in %.2fs\n", report.runtime_seconds);
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(uint64_t seed) {
    // One fixture per layer kind mix; small enough to finish in seconds.
    struct Fixture {
        const char* name;
        ArchSpec arch;
    };
    std::vector<Fixture> fixtures;
    {
        ArchSpec conv_net;
        conv_net.input_height = 8;
        conv_net.input_width = 8;
        conv_net.input_channels = 1;
        conv_net.num_classes = 3;
        conv_net.layers = {LayerSpec::conv(4, 3, 1, 1), LayerSpec::relu(),
                           LayerSpec::conv(4, 3, 1, 1), LayerSpec::relu(),
                           LayerSpec::fully_connected(3), LayerSpec::softmax_output()};
        fixtures.push_back({"conv_relu_fc", conv_net});

        ArchSpec pool_net;
        pool_net.input_height = 9;
        pool_net.input_width = 9;
        pool_net.input_channels = 1;
        pool_net.num_classes = 4;
        pool_net.layers = {LayerSpec::conv(4, 3, 1, 1), LayerSpec::relu(),
                           LayerSpec::maxpool(3, 3), LayerSpec::fully_connected(8),
                           LayerSpec::relu(), LayerSpec::fully_connected(4),
                           LayerSpec::softmax_output()};
        fixtures.push_back({"conv_pool_fc", pool_net});
    }

    bool ok = true;
    for (const Fixture& fixture : fixtures) {
        Network net = build_network(fixture.arch, mix_seed(seed, 0xF1));
        Rng rng(mix_seed(seed, 0xDA7A));
        PatchBatch batch;
        batch.count = 3;
        batch.dims = {fixture.arch.input_channels, fixture.arch.input_height,
                      fixture.arch.input_width};
        batch.data.resize(static_cast<size_t>(batch.count) * batch.dims.count());
        for (float& v : batch.data) v = static_cast<float>(rng.next_double());
        std::vector<int> labels(batch.count);
        for (int& label : labels)
            label = static_cast<int>(rng.next_below(fixture.arch.num_classes));

        double err = grad_check(net, batch, labels, 1e-5);
        bool pass = err < 1e-4;
        ok = ok && pass;
        std::printf("%s max_rel_err %.3e %s\n", fixture.name, err,
                    pass ? "pass" : "FAIL");
    }
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// make-corpus

int cmd_make_corpus(const std::string& out_dir, int count, int size, int channels,
                    int identities, uint64_t seed) {
    CorpusSpec spec;
    spec.count = count;
    spec.width = size;
    spec.height = size;
    spec.channels = channels;
    spec.identities = identities;
    spec.seed = seed;
    write_corpus(make_desk_corpus(spec), out_dir);
    std::printf("wrote %d images to %s\n", count, out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quality-classified image analysis toolkit"};
    app.require_subcommand(1);
    int threads_override = 0;
    app.add_option("--threads", threads_override,
                   "worker thread cap (default 1 for bit-reproducibility)");

    // degrade
    auto* degrade_cmd = app.add_subcommand("degrade", "Degrade a corpus into quality classes");
    std::string in_dir, out_dir, class_text, manifest_path, config_path;
    bool mixed = false;
    uint64_t seed = 1;
    degrade_cmd->add_option("--in", in_dir, "corpus directory")->required();
    degrade_cmd->add_option("--out", out_dir, "output directory")->required();
    degrade_cmd->add_option("--class", class_text, "quality class KIND:LEVEL (e.g. BJ:3)");
    degrade_cmd->add_flag("--mixed", mixed, "assign one uniform class per image");
    degrade_cmd->add_option("--seed", seed, "random seed");
    degrade_cmd->add_option("--manifest", manifest_path, "manifest output path");
    degrade_cmd->add_option("--config", config_path, "run config (taxonomy)");

    // train-quality
    auto* train_cmd = app.add_subcommand("train-quality", "Train a quality net");
    std::string train_manifest, net_kind, train_config, train_out, resume_path;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train_cmd->add_option("--net", net_kind, "type|bj-level|bl-level")
        ->required()
        ->check(CLI::IsMember({"type", "bj-level", "bl-level"}));
    train_cmd->add_option("--config", train_config, "run config")->required();
    train_cmd->add_option("--out", train_out, "output checkpoint")->required();
    train_cmd->add_option("--resume", resume_path, "checkpoint to continue from");

    // predict-quality
    auto* predict_cmd = app.add_subcommand("predict-quality", "Predict image quality");
    std::string bundle_dir, image_path;
    int patches = 0;
    bool compact = false;
    predict_cmd->add_option("--bundle", bundle_dir, "predictor bundle dir")->required();
    predict_cmd->add_option("--image", image_path, "input image")->required();
    predict_cmd->add_option("--patches", patches, "patches per image override");
    predict_cmd->add_flag("--json", compact, "compact single-line JSON");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate routing over a manifest");
    std::string eval_task, registry_path, eval_manifest, report_path, eval_bundle;
    int k = 3;
    double nms_iou = 0.5, iou_thresh = 0.5;
    eval_cmd->add_option("--task", eval_task, "detect|recognize")
        ->required()
        ->check(CLI::IsMember({"detect", "recognize"}));
    eval_cmd->add_option("--registry", registry_path, "registry JSON")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--k", k, "top-K models");
    eval_cmd->add_option("--report", report_path, "report output path")->required();
    eval_cmd->add_option("--bundle", eval_bundle,
                         "predictor bundle (default: simulated predictor)");
    eval_cmd->add_option("--nms-iou", nms_iou, "NMS IoU threshold");
    eval_cmd->add_option("--iou-thresh", iou_thresh, "metric IoU threshold");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run a synthetic experiment");
    std::string sim_config, sim_report;
    sim_cmd->add_option("--config", sim_config, "run config with experiment section")
        ->required();
    sim_cmd->add_option("--report", sim_report, "report output path")->required();

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    uint64_t grad_seed = 1;
    grad_cmd->add_option("--seed", grad_seed, "random seed");

    // make-corpus
    auto* corpus_cmd = app.add_subcommand("make-corpus", "Generate the synthetic desk corpus");
    std::string corpus_out;
    int corpus_count = 20, corpus_size = 96, corpus_channels = 1, corpus_identities = 0;
    uint64_t corpus_seed = 1;
    corpus_cmd->add_option("--out", corpus_out, "output directory")->required();
    corpus_cmd->add_option("--count", corpus_count, "image count");
    corpus_cmd->add_option("--size", corpus_size, "square image size");
    corpus_cmd->add_option("--channels", corpus_channels, "1 or 3");
    corpus_cmd->add_option("--identities", corpus_identities, "identity label count");
    corpus_cmd->add_option("--seed", corpus_seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (degrade_cmd->parsed()) {
            if (mixed == !class_text.empty())
                raise(ErrorCode::ValidationErrors,
                      "exactly one of --class or --mixed is required");
            return cmd_degrade(in_dir, out_dir, class_text, mixed, seed, manifest_path,
                               config_path);
        }
        if (train_cmd->parsed())
            return cmd_train_quality(train_manifest, net_kind, train_config, train_out,
                                     resume_path, threads_override);
        if (predict_cmd->parsed())
            return cmd_predict_quality(bundle_dir, image_path, patches, compact);
        if (eval_cmd->parsed())
            return cmd_eval(eval_task, registry_path, eval_manifest, k, report_path,
                            eval_bundle, nms_iou, iou_thresh);
        if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_report);
        if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed);
        if (corpus_cmd->parsed())
            return cmd_make_corpus(corpus_out, corpus_count, corpus_size,
                                   corpus_channels, corpus_identities, corpus_seed);
        return 2;
    } catch (const Error& e) {
        std::cerr << "qcia-error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "qcia-error: " << e.what() << "\n";
        return 1;
    }
}
