#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "qcia/corpus.hpp"
#include "qcia/rng.hpp"

namespace qcia::test {

// Fresh directory under the build tree; removed when the object dies.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("qcia_test_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& name = "") const {
        return name.empty() ? path_.string() : (path_ / name).string();
    }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::filesystem::path path_;
};

inline Raster textured_raster(int w, int h, int channels, uint64_t seed) {
    CorpusSpec spec;
    spec.count = 1;
    spec.width = w;
    spec.height = h;
    spec.channels = channels;
    spec.seed = seed;
    return make_desk_corpus(spec)[0].image;
}

inline Raster random_raster(int w, int h, int channels, uint64_t seed) {
    Raster r(w, h, channels);
    Rng rng(seed);
    for (auto& px : r.pixels) px = static_cast<uint8_t>(rng.next_below(256));
    return r;
}

}  // namespace qcia::test
