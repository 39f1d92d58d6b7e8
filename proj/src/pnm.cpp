#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qcia/imageio.hpp"

namespace qcia {

std::vector<uint8_t> read_file(const std::string& path) {
    if (!std::filesystem::exists(path))
        raise(ErrorCode::FileNotFound, path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::IoFailure, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        raise(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        raise(ErrorCode::IoFailure, "short write to " + path);
}

namespace {

// Skips whitespace and '#' comments between header tokens.
int read_pnm_int(const std::vector<uint8_t>& bytes, size_t& pos) {
    while (pos < bytes.size()) {
        uint8_t c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(c)) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        raise(ErrorCode::CorruptStream, "malformed PNM header");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > 1'000'000'000)
            raise(ErrorCode::CorruptStream, "PNM header value out of range");
        ++pos;
    }
    return static_cast<int>(value);
}

}  // namespace

Raster pnm_decode(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        raise(ErrorCode::UnsupportedFormat, "not a binary PGM/PPM stream");
    int channels = bytes[1] == '5' ? 1 : 3;
    size_t pos = 2;
    int width = read_pnm_int(bytes, pos);
    int height = read_pnm_int(bytes, pos);
    int maxval = read_pnm_int(bytes, pos);
    if (width < 1 || height < 1)
        raise(ErrorCode::CorruptStream, "PNM dimensions must be positive");
    if (maxval != 255)
        raise(ErrorCode::UnsupportedFormat, "only maxval 255 PNM is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        raise(ErrorCode::CorruptStream, "missing separator after PNM maxval");
    ++pos;  // exactly one whitespace byte before the raster data

    Raster r(width, height, channels);
    if (bytes.size() - pos < r.sample_count())
        raise(ErrorCode::CorruptStream, "truncated PNM pixel data");
    std::copy(bytes.begin() + static_cast<ptrdiff_t>(pos),
              bytes.begin() + static_cast<ptrdiff_t>(pos + r.sample_count()),
              r.pixels.begin());
    return r;
}

std::vector<uint8_t> pnm_encode(const Raster& r, ImageFormat fmt) {
    validate_raster(r);
    if (fmt == ImageFormat::PGM && r.channels != 1)
        raise(ErrorCode::ChannelMismatch, "PGM requires a 1-channel raster");
    if (fmt == ImageFormat::PPM && r.channels != 3)
        raise(ErrorCode::ChannelMismatch, "PPM requires a 3-channel raster");

    char header[64];
    int n = std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n",
                          fmt == ImageFormat::PGM ? "P5" : "P6", r.width, r.height);
    std::vector<uint8_t> bytes(header, header + n);
    bytes.insert(bytes.end(), r.pixels.begin(), r.pixels.end());
    return bytes;
}

Raster load_image(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return pnm_decode(bytes);
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8)
        return jpeg_decode(bytes);
    raise(ErrorCode::UnsupportedFormat, path + " is not PGM, PPM, or JPEG");
}

void save_image(const Raster& r, const std::string& path, ImageFormat fmt,
                int jpeg_quality) {
    switch (fmt) {
        case ImageFormat::PGM:
        case ImageFormat::PPM:
            write_file(path, pnm_encode(r, fmt));
            break;
        case ImageFormat::JpegBaseline:
            write_file(path, jpeg_encode(r, jpeg_quality));
            break;
    }
}

double mean_abs_error(const Raster& a, const Raster& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        raise(ErrorCode::DimensionMismatch, "rasters differ in shape");
    double total = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i)
        total += std::abs(static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]));
    return total / static_cast<double>(a.pixels.size());
}

}  // namespace qcia
