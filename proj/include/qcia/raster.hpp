#pragma once

#include <cstdint>
#include <vector>

#include "qcia/error.hpp"

namespace qcia {

// 8-bit raster, row-major, interleaved channels. channels is 1 (luma) or 3 (RGB).
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, int c, uint8_t fill = 0)
        : width(w), height(h), channels(c),
          pixels(static_cast<size_t>(w) * h * c, fill) {}

    size_t sample_count() const { return static_cast<size_t>(width) * height * channels; }

    uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const Raster& other) const = default;
};

inline void validate_raster(const Raster& r) {
    if (r.width < 1 || r.height < 1)
        raise(ErrorCode::ZeroDimension, "raster dimensions must be >= 1");
    if (r.channels != 1 && r.channels != 3)
        raise(ErrorCode::ChannelMismatch, "raster must have 1 or 3 channels");
    if (r.pixels.size() != r.sample_count())
        raise(ErrorCode::ShapeMismatch, "pixel array length does not match dimensions");
}

// Mean absolute per-sample difference; the degradation-severity measure.
double mean_abs_error(const Raster& a, const Raster& b);

}  // namespace qcia
