#include <filesystem>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "qcia/degrade.hpp"
#include "qcia/imageio.hpp"
#include "qcia/rng.hpp"

namespace qcia {

Raster degrade(const Raster& r, const QualityClass& c, const QualityTaxonomy& tax) {
    validate_raster(r);
    validate_class(c, tax);
    switch (c.kind) {
        case QualityKind::G:
            return r;
        case QualityKind::BJ: {
            int factor = tax.jpeg_factors[c.level - 1];
            int quality = std::max(1, factor);  // IJG treats factor 0 as 1
            return jpeg_decode(jpeg_encode(r, quality));
        }
        case QualityKind::BL: {
            int size = tax.downsample_sizes[c.level - 1];
            Raster small = resize_bilinear(r, size, size);
            return resize_bilinear(small, r.width, r.height);
        }
    }
    raise(ErrorCode::InvalidClass, "unreachable quality kind");
}

void validate_manifest(const DatasetManifest& manifest) {
    validate_taxonomy(manifest.taxonomy);
    std::unordered_set<std::string> seen;
    for (const ManifestEntry& entry : manifest.entries) {
        validate_class(entry.quality, manifest.taxonomy);
        if (!seen.insert(entry.path).second)
            raise(ErrorCode::InvalidClass, "duplicate manifest path: " + entry.path);
    }
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::json j;
    j["seed"] = manifest.seed;
    j["taxonomy"] = {{"jpeg_factors", manifest.taxonomy.jpeg_factors},
                     {"downsample_sizes", manifest.taxonomy.downsample_sizes}};
    j["entries"] = nlohmann::json::array();
    for (const ManifestEntry& entry : manifest.entries) {
        nlohmann::json e;
        e["path"] = entry.path;
        e["class"]["kind"] = kind_name(entry.quality.kind);
        if (entry.quality.kind != QualityKind::G)
            e["class"]["level"] = entry.quality.level;
        if (!entry.boxes.empty()) {
            nlohmann::json boxes = nlohmann::json::array();
            for (const Box& b : entry.boxes)
                boxes.push_back({b.x, b.y, b.w, b.h});
            e["boxes"] = boxes;
        }
        if (entry.identity.has_value()) e["identity"] = *entry.identity;
        j["entries"].push_back(e);
    }
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "manifest JSON does not parse");
    }
    try {
        DatasetManifest manifest;
        manifest.seed = j.at("seed").get<uint64_t>();
        manifest.taxonomy.jpeg_factors =
            j.at("taxonomy").at("jpeg_factors").get<std::vector<int>>();
        manifest.taxonomy.downsample_sizes =
            j.at("taxonomy").at("downsample_sizes").get<std::vector<int>>();
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry;
            entry.path = e.at("path").get<std::string>();
            std::string kind = e.at("class").at("kind").get<std::string>();
            if (kind == "G") {
                entry.quality = QualityClass::good();
            } else if (kind == "BJ" || kind == "BL") {
                int level = e.at("class").at("level").get<int>();
                entry.quality = kind == "BJ" ? QualityClass::bj(level)
                                             : QualityClass::bl(level);
            } else {
                raise(ErrorCode::CorruptStream, "unknown class kind " + kind);
            }
            if (e.contains("boxes"))
                for (const auto& b : e.at("boxes"))
                    entry.boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(),
                                           b.at(2).get<double>(), b.at(3).get<double>()});
            if (e.contains("identity")) entry.identity = e.at("identity").get<int>();
            manifest.entries.push_back(std::move(entry));
        }
        validate_manifest(manifest);
        return manifest;
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "manifest JSON has missing or mistyped fields");
    }
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::string text = manifest_to_json(manifest);
    write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

DatasetManifest read_manifest(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    return manifest_from_json(std::string(bytes.begin(), bytes.end()));
}

namespace {

std::string materialize(const Raster& r, const std::filesystem::path& dir,
                        const std::string& id) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        raise(ErrorCode::IoFailure, "cannot create " + dir.string());
    std::string name = id + (r.channels == 1 ? ".pgm" : ".ppm");
    std::filesystem::path path = dir / name;
    save_image(r, path.string(), r.channels == 1 ? ImageFormat::PGM : ImageFormat::PPM);
    return path.string();
}

}  // namespace

std::vector<DatasetManifest> build_per_class_datasets(
    const std::vector<CorpusItem>& corpus, const QualityTaxonomy& tax,
    const std::string& out_dir) {
    if (corpus.empty())
        raise(ErrorCode::EmptyDataset, "corpus is empty");
    validate_taxonomy(tax);

    std::vector<DatasetManifest> manifests;
    for (const QualityClass& c : enumerate_classes(tax)) {
        DatasetManifest manifest;
        manifest.taxonomy = tax;
        std::filesystem::path dir = std::filesystem::path(out_dir) / class_slug(c);
        for (const CorpusItem& item : corpus) {
            Raster degraded = degrade(item.image, c, tax);
            ManifestEntry entry;
            entry.path = materialize(degraded, dir, item.id);
            entry.quality = c;
            entry.boxes = item.boxes;
            entry.identity = item.identity;
            manifest.entries.push_back(std::move(entry));
        }
        validate_manifest(manifest);
        manifests.push_back(std::move(manifest));
    }
    return manifests;
}

DatasetManifest build_mixed_dataset(const std::vector<CorpusItem>& corpus,
                                    const QualityTaxonomy& tax, uint64_t seed,
                                    const std::string& out_dir) {
    if (corpus.empty())
        raise(ErrorCode::EmptyDataset, "corpus is empty");
    validate_taxonomy(tax);

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.taxonomy = tax;
    std::filesystem::path dir = std::filesystem::path(out_dir) / "mixed";
    for (size_t i = 0; i < corpus.size(); ++i) {
        Rng rng(mix_seed(seed, i, 0xD15E));
        QualityClass c =
            class_at(static_cast<int>(rng.next_below(tax.class_count())), tax);
        Raster degraded = degrade(corpus[i].image, c, tax);
        ManifestEntry entry;
        entry.path = materialize(degraded, dir, corpus[i].id);
        entry.quality = c;
        entry.boxes = corpus[i].boxes;
        entry.identity = corpus[i].identity;
        manifest.entries.push_back(std::move(entry));
    }
    validate_manifest(manifest);
    return manifest;
}

}  // namespace qcia
