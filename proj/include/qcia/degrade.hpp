#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcia/box.hpp"
#include "qcia/raster.hpp"
#include "qcia/taxonomy.hpp"

namespace qcia {

// G: identity. BJ(i): JPEG round trip at jpeg_factors[i-1] (factor 0 encodes
// at quality 1). BL(j): bilinear down to downsample_sizes[j-1] square and back
// up to the original canvas. Dimensions are always preserved.
Raster degrade(const Raster& r, const QualityClass& c, const QualityTaxonomy& tax);

struct ManifestEntry {
    std::string path;
    QualityClass quality;
    std::vector<Box> boxes;        // detection ground truth, may be empty
    std::optional<int> identity;   // recognition ground truth

    bool operator==(const ManifestEntry& other) const = default;
};

struct DatasetManifest {
    uint64_t seed = 0;
    QualityTaxonomy taxonomy;
    std::vector<ManifestEntry> entries;

    bool operator==(const DatasetManifest& other) const = default;
};

void validate_manifest(const DatasetManifest& manifest);
std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);
void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// One source image with its task labels.
struct CorpusItem {
    std::string id;  // output filename stem
    Raster image;
    std::vector<Box> boxes;
    std::optional<int> identity;
};

// Every corpus image degraded to every class; one manifest per class in
// canonical order. Degraded images land in <out_dir>/<class_slug>/<id>.pgm|ppm.
std::vector<DatasetManifest> build_per_class_datasets(
    const std::vector<CorpusItem>& corpus, const QualityTaxonomy& tax,
    const std::string& out_dir);

// Each image assigned one uniformly drawn class; images land in
// <out_dir>/mixed/. The per-image draw depends only on (seed, image index).
DatasetManifest build_mixed_dataset(const std::vector<CorpusItem>& corpus,
                                    const QualityTaxonomy& tax, uint64_t seed,
                                    const std::string& out_dir);

}  // namespace qcia
