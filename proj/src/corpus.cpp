#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "qcia/corpus.hpp"
#include "qcia/imageio.hpp"
#include "qcia/rng.hpp"

namespace qcia {

namespace {

constexpr double kTau = 6.28318530717958647692;

CorpusItem make_item(const CorpusSpec& spec, int index) {
    Rng rng(mix_seed(spec.seed, static_cast<uint64_t>(index), 0xC0A9));
    const int w = spec.width, h = spec.height;

    // Luma field built in double, then quantized per channel.
    std::vector<double> field(static_cast<size_t>(w) * h, 0.0);
    double base = 60.0 + rng.next_double() * 100.0;
    double gx = (rng.next_double() - 0.5) * 80.0;
    double gy = (rng.next_double() - 0.5) * 80.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            field[static_cast<size_t>(y) * w + x] =
                base + gx * (static_cast<double>(x) / w - 0.5) +
                gy * (static_cast<double>(y) / h - 0.5);

    // Gratings across several spatial frequencies give the codec and the
    // resampler something to destroy.
    int gratings = 2 + static_cast<int>(rng.next_below(3));
    for (int g = 0; g < gratings; ++g) {
        double period = 3.0 + rng.next_double() * 20.0;
        double angle = rng.next_double() * kTau;
        double phase = rng.next_double() * kTau;
        double amp = 8.0 + rng.next_double() * 22.0;
        double fx = std::cos(angle) / period;
        double fy = std::sin(angle) / period;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                field[static_cast<size_t>(y) * w + x] +=
                    amp * std::sin(kTau * (fx * x + fy * y) + phase);
    }

    CorpusItem item;
    item.id = "img" + std::to_string(index);

    int objects = 1 + static_cast<int>(rng.next_below(3));
    for (int o = 0; o < objects; ++o) {
        int bw = 16 + static_cast<int>(rng.next_below(25));
        int bh = 16 + static_cast<int>(rng.next_below(25));
        bw = std::min(bw, w - 2);
        bh = std::min(bh, h - 2);
        int bx = 1 + static_cast<int>(rng.next_below(w - bw - 1));
        int by = 1 + static_cast<int>(rng.next_below(h - bh - 1));
        double level = rng.next_double() < 0.5 ? 20.0 + rng.next_double() * 40.0
                                               : 190.0 + rng.next_double() * 45.0;
        for (int y = by; y < by + bh; ++y)
            for (int x = bx; x < bx + bw; ++x) {
                double edge = (x == bx || x == bx + bw - 1 || y == by ||
                               y == by + bh - 1)
                                  ? 0.55
                                  : 1.0;
                double& v = field[static_cast<size_t>(y) * w + x];
                v = v * (1.0 - 0.85 * edge) + level * 0.85 * edge;
            }
        item.boxes.push_back({static_cast<double>(bx), static_cast<double>(by),
                              static_cast<double>(bw), static_cast<double>(bh)});
    }

    // Fine-grained noise separates pristine images from even the mildest
    // down-sampling level.
    item.image = Raster(w, h, spec.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double noise = (rng.next_double() - 0.5) * 24.0;
            double v = field[static_cast<size_t>(y) * w + x] + noise;
            if (spec.channels == 1) {
                item.image.at(x, y, 0) =
                    static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            } else {
                double tint = (rng.next_double() - 0.5) * 18.0;
                item.image.at(x, y, 0) = static_cast<uint8_t>(
                    std::clamp(std::lround(v + tint), 0L, 255L));
                item.image.at(x, y, 1) =
                    static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                item.image.at(x, y, 2) = static_cast<uint8_t>(
                    std::clamp(std::lround(v - tint), 0L, 255L));
            }
        }

    if (spec.identities > 0)
        item.identity = index % spec.identities;
    return item;
}

}  // namespace

std::vector<CorpusItem> make_desk_corpus(const CorpusSpec& spec) {
    if (spec.count < 1 || spec.width < 8 || spec.height < 8)
        raise(ErrorCode::ZeroDimension, "corpus spec is degenerate");
    if (spec.channels != 1 && spec.channels != 3)
        raise(ErrorCode::ChannelMismatch, "corpus channels must be 1 or 3");
    std::vector<CorpusItem> corpus;
    corpus.reserve(spec.count);
    for (int i = 0; i < spec.count; ++i) corpus.push_back(make_item(spec, i));
    return corpus;
}

void write_corpus(const std::vector<CorpusItem>& corpus, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        raise(ErrorCode::IoFailure, "cannot create " + dir);

    nlohmann::json labels = nlohmann::json::array();
    for (const CorpusItem& item : corpus) {
        std::string name = item.id + (item.image.channels == 1 ? ".pgm" : ".ppm");
        std::string path = (std::filesystem::path(dir) / name).string();
        save_image(item.image, path,
                   item.image.channels == 1 ? ImageFormat::PGM : ImageFormat::PPM);
        nlohmann::json entry;
        entry["file"] = name;
        nlohmann::json boxes = nlohmann::json::array();
        for (const Box& b : item.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
        entry["boxes"] = boxes;
        if (item.identity.has_value()) entry["identity"] = *item.identity;
        labels.push_back(entry);
    }
    std::string text = labels.dump(2) + "\n";
    write_file((std::filesystem::path(dir) / "labels.json").string(),
               std::vector<uint8_t>(text.begin(), text.end()));
}

std::vector<CorpusItem> load_corpus_dir(const std::string& dir) {
    std::filesystem::path labels_path = std::filesystem::path(dir) / "labels.json";
    std::vector<CorpusItem> corpus;

    if (std::filesystem::exists(labels_path)) {
        std::vector<uint8_t> bytes = read_file(labels_path.string());
        nlohmann::json labels;
        try {
            labels = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
        } catch (const nlohmann::json::exception&) {
            raise(ErrorCode::CorruptStream, "labels.json does not parse");
        }
        for (const auto& entry : labels) {
            CorpusItem item;
            std::string file = entry.at("file").get<std::string>();
            item.id = std::filesystem::path(file).stem().string();
            item.image = load_image((std::filesystem::path(dir) / file).string());
            if (entry.contains("boxes"))
                for (const auto& b : entry.at("boxes"))
                    item.boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(),
                                          b.at(2).get<double>(), b.at(3).get<double>()});
            if (entry.contains("identity"))
                item.identity = entry.at("identity").get<int>();
            corpus.push_back(std::move(item));
        }
        return corpus;
    }

    // Bare directory of images: alphabetical order, no labels.
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm" || ext == ".jpg" || ext == ".jpeg")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        raise(ErrorCode::EmptyDataset, "no images found in " + dir);
    for (const std::string& path : files) {
        CorpusItem item;
        item.id = std::filesystem::path(path).stem().string();
        item.image = load_image(path);
        corpus.push_back(std::move(item));
    }
    return corpus;
}

}  // namespace qcia
