#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "qcia/imageio.hpp"
#include "qcia/qualitynet.hpp"
#include "qcia/rng.hpp"

namespace qcia {

void validate_predictor_config(const PredictorConfig& cfg) {
    if (cfg.patch_size < 8)
        raise(ErrorCode::ShapeMismatch, "patch_size must be >= 8");
    if (cfg.patches_per_image < 1)
        raise(ErrorCode::ShapeMismatch, "patches_per_image must be >= 1");
}

namespace {

double luma(const Raster& r, int x, int y) {
    if (r.channels == 1) return r.at(x, y, 0);
    return 0.299 * r.at(x, y, 0) + 0.587 * r.at(x, y, 1) + 0.114 * r.at(x, y, 2);
}

void fill_patch(const Raster& r, int px, int py, int patch_size, int channels,
                float* dst) {
    // CHW layout, samples scaled to [-0.5, 0.5] (zero-centered).
    const int plane = patch_size * patch_size;
    for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x) {
            int i = y * patch_size + x;
            if (channels == 1) {
                dst[i] = static_cast<float>(luma(r, px + x, py + y) / 255.0 - 0.5);
            } else {
                for (int c = 0; c < 3; ++c)
                    dst[c * plane + i] =
                        static_cast<float>(r.at(px + x, py + y, c) / 255.0 - 0.5);
            }
        }
}

}  // namespace

PatchBatch sample_patches(const Raster& r, const PredictorConfig& cfg, int channels) {
    validate_raster(r);
    validate_predictor_config(cfg);
    if (channels == 3 && r.channels == 1)
        raise(ErrorCode::ChannelMismatch, "predictor expects RGB but image is luma");
    if (r.width < cfg.patch_size || r.height < cfg.patch_size)
        raise(ErrorCode::ImageTooSmall,
              "image smaller than patch size " + std::to_string(cfg.patch_size));

    PatchBatch batch;
    batch.count = cfg.patches_per_image;
    batch.dims = {channels, cfg.patch_size, cfg.patch_size};
    batch.data.resize(static_cast<size_t>(batch.count) * batch.dims.count());

    Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(r.width),
                     static_cast<uint64_t>(r.height)));
    for (int p = 0; p < cfg.patches_per_image; ++p) {
        int px = static_cast<int>(rng.next_below(r.width - cfg.patch_size + 1));
        int py = static_cast<int>(rng.next_below(r.height - cfg.patch_size + 1));
        fill_patch(r, px, py, cfg.patch_size, channels,
                   batch.data.data() + static_cast<size_t>(p) * batch.dims.count());
    }
    return batch;
}

std::vector<double> aggregate_rows(const std::vector<std::vector<float>>& rows) {
    if (rows.empty())
        raise(ErrorCode::EmptyDataset, "no rows to aggregate");
    const size_t cols = rows[0].size();
    std::vector<double> mean(cols, 0.0);
    std::vector<double> column(rows.size());
    for (size_t c = 0; c < cols; ++c) {
        for (size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][c];
        std::sort(column.begin(), column.end());
        double total = 0.0;
        for (double v : column) total += v;
        mean[c] = total / static_cast<double>(rows.size());
    }
    return mean;
}

namespace {

std::vector<double> predict_mean(const Network& net, const Raster& r,
                                 const PredictorConfig& cfg) {
    PatchBatch patches = sample_patches(r, cfg, net.arch.input_channels);
    return aggregate_rows(forward(net, patches));
}

}  // namespace

TypeScores predict_type(const QualityPredictor& predictor, const Raster& r) {
    if (predictor.type_net.arch.num_classes != 3)
        raise(ErrorCode::ShapeMismatch, "type net must have 3 classes");
    std::vector<double> mean = predict_mean(predictor.type_net, r, predictor.cfg);
    return {mean[0], mean[1], mean[2]};
}

LevelScores predict_level(const QualityPredictor& predictor, const Raster& r,
                          QualityKind family) {
    const Network& net = family == QualityKind::BJ ? predictor.bj_net : predictor.bl_net;
    int expected = 1 + (family == QualityKind::BJ ? predictor.taxonomy.m()
                                                  : predictor.taxonomy.n());
    if (family == QualityKind::G)
        raise(ErrorCode::InvalidClass, "level prediction applies to BJ or BL only");
    if (net.arch.num_classes != expected)
        raise(ErrorCode::ShapeMismatch, "level net class count does not match taxonomy");
    LevelScores scores;
    scores.family = family;
    scores.probs = predict_mean(net, r, predictor.cfg);
    return scores;
}

namespace {

void check_simplex(const std::vector<double>& probs, const char* what) {
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0 || !std::isfinite(p))
            raise(ErrorCode::ShapeMismatch, std::string(what) + " has invalid entries");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6)
        raise(ErrorCode::ShapeMismatch, std::string(what) + " does not sum to 1");
}

// Severity entries 1.. renormalized to sum to 1; pristine mass at index 0 is
// discarded. All-zero severity falls back to uniform.
std::vector<double> renormalized_severity(const LevelScores& scores) {
    const size_t levels = scores.probs.size() - 1;
    std::vector<double> severity(levels);
    double total = 0.0;
    for (size_t i = 0; i < levels; ++i) total += scores.probs[i + 1];
    if (total <= 0.0) {
        std::fill(severity.begin(), severity.end(), 1.0 / static_cast<double>(levels));
    } else {
        for (size_t i = 0; i < levels; ++i) severity[i] = scores.probs[i + 1] / total;
    }
    return severity;
}

}  // namespace

FusedQualityVector fuse_quality(const TypeScores& type_scores, const LevelScores& bj,
                                const LevelScores& bl) {
    check_simplex({type_scores.p_g, type_scores.p_bj, type_scores.p_bl}, "type scores");
    if (bj.family != QualityKind::BJ || bl.family != QualityKind::BL)
        raise(ErrorCode::ShapeMismatch, "level scores families are swapped");
    if (bj.probs.size() < 2 || bl.probs.size() < 2)
        raise(ErrorCode::ShapeMismatch, "level scores need pristine + >=1 level");
    check_simplex(bj.probs, "BJ level scores");
    check_simplex(bl.probs, "BL level scores");

    std::vector<double> bj_sev = renormalized_severity(bj);
    std::vector<double> bl_sev = renormalized_severity(bl);

    FusedQualityVector fused;
    fused.probs.reserve(1 + bj_sev.size() + bl_sev.size());
    fused.probs.push_back(type_scores.p_g);
    for (double s : bj_sev) fused.probs.push_back(type_scores.p_bj * s);
    for (double s : bl_sev) fused.probs.push_back(type_scores.p_bl * s);
    return fused;
}

std::pair<QualityClass, FusedQualityVector> classify_quality(
    const QualityPredictor& predictor, const Raster& r) {
    TypeScores type_scores = predict_type(predictor, r);
    LevelScores bj = predict_level(predictor, r, QualityKind::BJ);
    LevelScores bl = predict_level(predictor, r, QualityKind::BL);
    FusedQualityVector fused = fuse_quality(type_scores, bj, bl);
    int arg = 0;
    for (size_t i = 1; i < fused.probs.size(); ++i)
        if (fused.probs[i] > fused.probs[arg]) arg = static_cast<int>(i);
    return {class_at(arg, predictor.taxonomy), std::move(fused)};
}

std::string predictor_config_to_json(const PredictorConfig& cfg,
                                     const QualityTaxonomy& tax) {
    nlohmann::json j;
    j["patch_size"] = cfg.patch_size;
    j["patches_per_image"] = cfg.patches_per_image;
    j["seed"] = cfg.seed;
    j["taxonomy"] = {{"jpeg_factors", tax.jpeg_factors},
                     {"downsample_sizes", tax.downsample_sizes}};
    return j.dump(2) + "\n";
}

std::pair<PredictorConfig, QualityTaxonomy> predictor_config_from_json(
    const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "predictor.json does not parse");
    }
    try {
        PredictorConfig cfg;
        cfg.patch_size = j.at("patch_size").get<int>();
        cfg.patches_per_image = j.at("patches_per_image").get<int>();
        cfg.seed = j.at("seed").get<uint64_t>();
        QualityTaxonomy tax;
        tax.jpeg_factors = j.at("taxonomy").at("jpeg_factors").get<std::vector<int>>();
        tax.downsample_sizes =
            j.at("taxonomy").at("downsample_sizes").get<std::vector<int>>();
        validate_predictor_config(cfg);
        validate_taxonomy(tax);
        return {cfg, tax};
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "predictor.json has missing or mistyped fields");
    }
}

void save_predictor(const QualityPredictor& predictor, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        raise(ErrorCode::IoFailure, "cannot create " + dir);
    std::filesystem::path base(dir);
    save_checkpoint(predictor.type_net, (base / "type.ckpt").string());
    save_checkpoint(predictor.bj_net, (base / "bj_level.ckpt").string());
    save_checkpoint(predictor.bl_net, (base / "bl_level.ckpt").string());
    std::string text = predictor_config_to_json(predictor.cfg, predictor.taxonomy);
    write_file((base / "predictor.json").string(),
               std::vector<uint8_t>(text.begin(), text.end()));
}

QualityPredictor load_predictor(const std::string& dir) {
    std::filesystem::path base(dir);
    for (const char* name : {"type.ckpt", "bj_level.ckpt", "bl_level.ckpt",
                             "predictor.json"})
        if (!std::filesystem::exists(base / name))
            raise(ErrorCode::UntrainedModel,
                  "predictor bundle is missing " + std::string(name));

    QualityPredictor predictor;
    std::vector<uint8_t> cfg_bytes = read_file((base / "predictor.json").string());
    auto [cfg, tax] =
        predictor_config_from_json(std::string(cfg_bytes.begin(), cfg_bytes.end()));
    predictor.cfg = cfg;
    predictor.taxonomy = tax;
    predictor.type_net = load_checkpoint((base / "type.ckpt").string());
    predictor.bj_net = load_checkpoint((base / "bj_level.ckpt").string());
    predictor.bl_net = load_checkpoint((base / "bl_level.ckpt").string());

    if (predictor.type_net.arch.num_classes != 3 ||
        predictor.bj_net.arch.num_classes != 1 + tax.m() ||
        predictor.bl_net.arch.num_classes != 1 + tax.n())
        raise(ErrorCode::ShapeMismatch, "bundle nets do not match its taxonomy");
    return predictor;
}

}  // namespace qcia
