#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qcia/raster.hpp"

namespace qcia {

enum class ImageFormat { PGM, PPM, JpegBaseline };

// 8x8 quantization table, row-major, entries in [1, 255].
struct QuantTable {
    std::array<int, 64> values{};

    bool operator==(const QuantTable& other) const = default;
};

// ITU-T T.81 Annex K sample tables.
const QuantTable& annex_k_luminance();
const QuantTable& annex_k_chrominance();

// IJG quality scaling: S = 5000/Q (Q < 50) else 200 - 2Q, integer arithmetic;
// entries clamped to [1, 255]. Q must lie in [1, 100].
QuantTable jpeg_quant_table(const QuantTable& base, int quality);

// Baseline sequential JFIF, Annex K Huffman tables, 4:2:0 for 3-channel input.
std::vector<uint8_t> jpeg_encode(const Raster& r, int quality);
Raster jpeg_decode(const std::vector<uint8_t>& bytes);

// Binary PGM (P5) / PPM (P6), maxval 255.
Raster pnm_decode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> pnm_encode(const Raster& r, ImageFormat fmt);

// Bilinear resampling, half-pixel-center convention, clamped borders.
Raster resize_bilinear(const Raster& r, int out_width, int out_height);

// Format is sniffed from the file contents (PNM magic or JPEG SOI).
Raster load_image(const std::string& path);
void save_image(const Raster& r, const std::string& path, ImageFormat fmt,
                int jpeg_quality = 90);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace qcia
