#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "qcia/imageio.hpp"

// Baseline sequential JFIF codec: 8-bit samples, Annex K quantization and
// Huffman tables, 4:2:0 subsampling for color, no progressive modes, no
// arithmetic coding. The decoder additionally accepts 4:4:4 / 4:2:2 streams
// and restart markers so it can read output from other baseline encoders.

namespace qcia {
namespace {

// Zigzag position -> natural (row-major) coefficient index.
constexpr int kZigZag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

constexpr uint8_t kDcLumBits[16] = {0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
constexpr uint8_t kDcLumVals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
constexpr uint8_t kAcLumBits[16] = {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125};
constexpr uint8_t kAcLumVals[162] = {
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA};
constexpr uint8_t kDcChrBits[16] = {0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
constexpr uint8_t kDcChrVals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
constexpr uint8_t kAcChrBits[16] = {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 119};
constexpr uint8_t kAcChrVals[162] = {
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41,
    0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0, 0x15, 0x62, 0x72, 0xD1,
    0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44,
    0x45, 0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74,
    0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A,
    0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4,
    0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7,
    0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA};

// ---------------------------------------------------------------------------
// DCT

struct CosTable {
    double c[8][8];  // c[u][x] = cos((2x+1) u pi / 16)
    CosTable() {
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x)
                c[u][x] = std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0);
    }
};

const CosTable& cos_table() {
    static const CosTable table;
    return table;
}

void forward_dct(const double in[64], double out[64]) {
    const auto& ct = cos_table();
    double tmp[64];
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * ct.c[u][x];
            tmp[y * 8 + u] = acc;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) acc += tmp[y * 8 + u] * ct.c[v][y];
            double cu = u == 0 ? 0.70710678118654752440 : 1.0;
            double cv = v == 0 ? 0.70710678118654752440 : 1.0;
            out[v * 8 + u] = 0.25 * cu * cv * acc;
        }
}

void inverse_dct(const double in[64], double out[64]) {
    const auto& ct = cos_table();
    double tmp[64];
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) {
                double cu = u == 0 ? 0.70710678118654752440 : 1.0;
                acc += cu * in[v * 8 + u] * ct.c[u][x];
            }
            tmp[v * 8 + x] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) {
                double cv = v == 0 ? 0.70710678118654752440 : 1.0;
                acc += cv * tmp[v * 8 + x] * ct.c[v][y];
            }
            out[y * 8 + x] = 0.25 * acc;
        }
}

// ---------------------------------------------------------------------------
// Encoder

struct BitCode {
    uint16_t code = 0;
    uint8_t length = 0;
};

void build_encode_table(const uint8_t bits[16], const uint8_t* vals, BitCode table[256]) {
    uint16_t code = 0;
    int k = 0;
    for (int len = 1; len <= 16; ++len) {
        for (int i = 0; i < bits[len - 1]; ++i) {
            table[vals[k]] = {code, static_cast<uint8_t>(len)};
            ++code;
            ++k;
        }
        code <<= 1;
    }
}

class BitWriter {
public:
    explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}

    void put(uint16_t code, int length) {
        for (int i = length - 1; i >= 0; --i) {
            buffer_ = (buffer_ << 1) | ((code >> i) & 1);
            if (++count_ == 8) {
                out_.push_back(buffer_);
                if (buffer_ == 0xFF) out_.push_back(0x00);  // byte stuffing
                buffer_ = 0;
                count_ = 0;
            }
        }
    }

    // Pad the final partial byte with 1-bits.
    void flush() {
        while (count_ != 0) put(1, 1);
    }

private:
    std::vector<uint8_t>& out_;
    uint8_t buffer_ = 0;
    int count_ = 0;
};

int magnitude_bits(int v) {
    int a = std::abs(v);
    int n = 0;
    while (a) {
        a >>= 1;
        ++n;
    }
    return n;
}

void put_marker(std::vector<uint8_t>& out, uint8_t id) {
    out.push_back(0xFF);
    out.push_back(id);
}

void put_segment(std::vector<uint8_t>& out, uint8_t id, const std::vector<uint8_t>& body) {
    put_marker(out, id);
    uint16_t length = static_cast<uint16_t>(body.size() + 2);
    out.push_back(static_cast<uint8_t>(length >> 8));
    out.push_back(static_cast<uint8_t>(length & 0xFF));
    out.insert(out.end(), body.begin(), body.end());
}

using Plane = std::vector<double>;  // row-major, one component

// 8x8 block at (bx*8, by*8) with edge replication outside the plane.
void extract_block(const Plane& plane, int w, int h, int bx, int by, double block[64]) {
    for (int y = 0; y < 8; ++y) {
        int sy = std::min(by * 8 + y, h - 1);
        for (int x = 0; x < 8; ++x) {
            int sx = std::min(bx * 8 + x, w - 1);
            block[y * 8 + x] = plane[static_cast<size_t>(sy) * w + sx];
        }
    }
}

struct ComponentEncoder {
    const Plane* plane;
    int width, height;
    const QuantTable* quant;
    const BitCode* dc_table;
    const BitCode* ac_table;
    int predictor = 0;
};

void encode_block(BitWriter& writer, ComponentEncoder& comp, int bx, int by) {
    double block[64];
    extract_block(*comp.plane, comp.width, comp.height, bx, by, block);
    for (double& v : block) v -= 128.0;

    double freq[64];
    forward_dct(block, freq);

    int quantized[64];  // zigzag order, rounded half away from zero
    for (int k = 0; k < 64; ++k) {
        int natural = kZigZag[k];
        quantized[k] = static_cast<int>(
            std::lround(freq[natural] / comp.quant->values[natural]));
    }

    int diff = quantized[0] - comp.predictor;
    comp.predictor = quantized[0];
    int s = magnitude_bits(diff);
    writer.put(comp.dc_table[s].code, comp.dc_table[s].length);
    if (s > 0) {
        int bitsval = diff < 0 ? diff + (1 << s) - 1 : diff;
        writer.put(static_cast<uint16_t>(bitsval), s);
    }

    int run = 0;
    for (int k = 1; k < 64; ++k) {
        if (quantized[k] == 0) {
            ++run;
            continue;
        }
        while (run >= 16) {
            writer.put(comp.ac_table[0xF0].code, comp.ac_table[0xF0].length);  // ZRL
            run -= 16;
        }
        int sa = magnitude_bits(quantized[k]);
        int rs = (run << 4) | sa;
        writer.put(comp.ac_table[rs].code, comp.ac_table[rs].length);
        int bitsval = quantized[k] < 0 ? quantized[k] + (1 << sa) - 1 : quantized[k];
        writer.put(static_cast<uint16_t>(bitsval), sa);
        run = 0;
    }
    if (run > 0)
        writer.put(comp.ac_table[0x00].code, comp.ac_table[0x00].length);  // EOB
}

}  // namespace

const QuantTable& annex_k_luminance() {
    static const QuantTable table = {{16, 11, 10, 16, 24,  40,  51,  61,
                                      12, 12, 14, 19, 26,  58,  60,  55,
                                      14, 13, 16, 24, 40,  57,  69,  56,
                                      14, 17, 22, 29, 51,  87,  80,  62,
                                      18, 22, 37, 56, 68,  109, 103, 77,
                                      24, 35, 55, 64, 81,  104, 113, 92,
                                      49, 64, 78, 87, 103, 121, 120, 101,
                                      72, 92, 95, 98, 112, 100, 103, 99}};
    return table;
}

const QuantTable& annex_k_chrominance() {
    static const QuantTable table = {{17, 18, 24, 47, 99, 99, 99, 99,
                                      18, 21, 26, 66, 99, 99, 99, 99,
                                      24, 26, 56, 99, 99, 99, 99, 99,
                                      47, 66, 99, 99, 99, 99, 99, 99,
                                      99, 99, 99, 99, 99, 99, 99, 99,
                                      99, 99, 99, 99, 99, 99, 99, 99,
                                      99, 99, 99, 99, 99, 99, 99, 99,
                                      99, 99, 99, 99, 99, 99, 99, 99}};
    return table;
}

QuantTable jpeg_quant_table(const QuantTable& base, int quality) {
    if (quality < 1 || quality > 100)
        raise(ErrorCode::QualityOutOfRange, "JPEG quality must lie in [1, 100]");
    int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    QuantTable out;
    for (int i = 0; i < 64; ++i)
        out.values[i] = std::clamp((base.values[i] * scale + 50) / 100, 1, 255);
    return out;
}

std::vector<uint8_t> jpeg_encode(const Raster& r, int quality) {
    validate_raster(r);
    QuantTable lum = jpeg_quant_table(annex_k_luminance(), quality);
    QuantTable chr = jpeg_quant_table(annex_k_chrominance(), quality);
    const bool color = r.channels == 3;

    // Color conversion (BT.601 full range) and 2x2 chroma subsampling.
    Plane y_plane(static_cast<size_t>(r.width) * r.height);
    Plane cb_plane, cr_plane;
    int cw = 0, ch = 0;
    if (color) {
        Plane cb_full(y_plane.size()), cr_full(y_plane.size());
        for (int py = 0; py < r.height; ++py)
            for (int px = 0; px < r.width; ++px) {
                double red = r.at(px, py, 0);
                double green = r.at(px, py, 1);
                double blue = r.at(px, py, 2);
                size_t i = static_cast<size_t>(py) * r.width + px;
                y_plane[i] = 0.299 * red + 0.587 * green + 0.114 * blue;
                cb_full[i] = -0.168736 * red - 0.331264 * green + 0.5 * blue + 128.0;
                cr_full[i] = 0.5 * red - 0.418688 * green - 0.081312 * blue + 128.0;
            }
        cw = (r.width + 1) / 2;
        ch = (r.height + 1) / 2;
        cb_plane.resize(static_cast<size_t>(cw) * ch);
        cr_plane.resize(static_cast<size_t>(cw) * ch);
        for (int py = 0; py < ch; ++py)
            for (int px = 0; px < cw; ++px) {
                double cb_acc = 0.0, cr_acc = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int sy = std::min(py * 2 + dy, r.height - 1);
                        int sx = std::min(px * 2 + dx, r.width - 1);
                        size_t i = static_cast<size_t>(sy) * r.width + sx;
                        cb_acc += cb_full[i];
                        cr_acc += cr_full[i];
                    }
                cb_plane[static_cast<size_t>(py) * cw + px] = cb_acc / 4.0;
                cr_plane[static_cast<size_t>(py) * cw + px] = cr_acc / 4.0;
            }
    } else {
        for (size_t i = 0; i < r.pixels.size(); ++i) y_plane[i] = r.pixels[i];
    }

    std::vector<uint8_t> out;
    put_marker(out, 0xD8);  // SOI

    std::vector<uint8_t> app0 = {'J', 'F', 'I', 'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0};
    put_segment(out, 0xE0, app0);

    {
        std::vector<uint8_t> dqt;
        dqt.push_back(0x00);
        for (int k = 0; k < 64; ++k)
            dqt.push_back(static_cast<uint8_t>(lum.values[kZigZag[k]]));
        if (color) {
            dqt.push_back(0x01);
            for (int k = 0; k < 64; ++k)
                dqt.push_back(static_cast<uint8_t>(chr.values[kZigZag[k]]));
        }
        put_segment(out, 0xDB, dqt);
    }

    {
        std::vector<uint8_t> sof;
        sof.push_back(8);  // sample precision
        sof.push_back(static_cast<uint8_t>(r.height >> 8));
        sof.push_back(static_cast<uint8_t>(r.height & 0xFF));
        sof.push_back(static_cast<uint8_t>(r.width >> 8));
        sof.push_back(static_cast<uint8_t>(r.width & 0xFF));
        sof.push_back(color ? 3 : 1);
        sof.push_back(1);
        sof.push_back(color ? 0x22 : 0x11);  // Y sampling factors
        sof.push_back(0);
        if (color) {
            sof.push_back(2);
            sof.push_back(0x11);
            sof.push_back(1);
            sof.push_back(3);
            sof.push_back(0x11);
            sof.push_back(1);
        }
        put_segment(out, 0xC0, sof);
    }

    {
        std::vector<uint8_t> dht;
        auto append_table = [&dht](uint8_t id, const uint8_t bits[16], const uint8_t* vals) {
            dht.push_back(id);
            int total = 0;
            for (int i = 0; i < 16; ++i) {
                dht.push_back(bits[i]);
                total += bits[i];
            }
            dht.insert(dht.end(), vals, vals + total);
        };
        append_table(0x00, kDcLumBits, kDcLumVals);
        append_table(0x10, kAcLumBits, kAcLumVals);
        if (color) {
            append_table(0x01, kDcChrBits, kDcChrVals);
            append_table(0x11, kAcChrBits, kAcChrVals);
        }
        put_segment(out, 0xC4, dht);
    }

    {
        std::vector<uint8_t> sos;
        sos.push_back(color ? 3 : 1);
        sos.push_back(1);
        sos.push_back(0x00);
        if (color) {
            sos.push_back(2);
            sos.push_back(0x11);
            sos.push_back(3);
            sos.push_back(0x11);
        }
        sos.push_back(0);   // spectral selection start
        sos.push_back(63);  // spectral selection end
        sos.push_back(0);   // successive approximation
        put_segment(out, 0xDA, sos);
    }

    BitCode dc_lum[256], ac_lum[256], dc_chr[256], ac_chr[256];
    build_encode_table(kDcLumBits, kDcLumVals, dc_lum);
    build_encode_table(kAcLumBits, kAcLumVals, ac_lum);
    if (color) {
        build_encode_table(kDcChrBits, kDcChrVals, dc_chr);
        build_encode_table(kAcChrBits, kAcChrVals, ac_chr);
    }

    BitWriter writer(out);
    if (!color) {
        ComponentEncoder yc{&y_plane, r.width, r.height, &lum, dc_lum, ac_lum};
        int bx_count = (r.width + 7) / 8;
        int by_count = (r.height + 7) / 8;
        for (int by = 0; by < by_count; ++by)
            for (int bx = 0; bx < bx_count; ++bx) encode_block(writer, yc, bx, by);
    } else {
        ComponentEncoder yc{&y_plane, r.width, r.height, &lum, dc_lum, ac_lum};
        ComponentEncoder cbc{&cb_plane, cw, ch, &chr, dc_chr, ac_chr};
        ComponentEncoder crc{&cr_plane, cw, ch, &chr, dc_chr, ac_chr};
        int mcux = (r.width + 15) / 16;
        int mcuy = (r.height + 15) / 16;
        for (int my = 0; my < mcuy; ++my)
            for (int mx = 0; mx < mcux; ++mx) {
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        encode_block(writer, yc, mx * 2 + dx, my * 2 + dy);
                encode_block(writer, cbc, mx, my);
                encode_block(writer, crc, mx, my);
            }
    }
    writer.flush();

    put_marker(out, 0xD9);  // EOI
    return out;
}

// ---------------------------------------------------------------------------
// Decoder

namespace {

struct HuffTable {
    // Canonical decode: per code length, smallest/largest code and the offset
    // into the value list.
    int mincode[17] = {0};
    int maxcode[17] = {0};
    int valptr[17] = {0};
    std::vector<uint8_t> values;
    bool defined = false;
};

void build_decode_table(const uint8_t bits[16], const std::vector<uint8_t>& vals,
                        HuffTable& table) {
    table.values = vals;
    int code = 0;
    int k = 0;
    for (int len = 1; len <= 16; ++len) {
        table.valptr[len] = k;
        table.mincode[len] = code;
        code += bits[len - 1];
        k += bits[len - 1];
        table.maxcode[len] = code - 1;
        if (bits[len - 1] == 0) table.maxcode[len] = -1;
        code <<= 1;
    }
    table.defined = true;
}

class BitReader {
public:
    BitReader(const std::vector<uint8_t>& bytes, size_t pos) : bytes_(bytes), pos_(pos) {}

    int next_bit() {
        if (count_ == 0) {
            if (pos_ >= bytes_.size())
                raise(ErrorCode::CorruptStream, "entropy stream ended prematurely");
            uint8_t b = bytes_[pos_++];
            if (b == 0xFF) {
                if (pos_ >= bytes_.size())
                    raise(ErrorCode::CorruptStream, "dangling 0xFF in entropy stream");
                uint8_t follow = bytes_[pos_++];
                if (follow != 0x00)
                    raise(ErrorCode::CorruptStream, "unexpected marker inside scan");
            }
            buffer_ = b;
            count_ = 8;
        }
        --count_;
        return (buffer_ >> count_) & 1;
    }

    int receive(int n) {
        int v = 0;
        for (int i = 0; i < n; ++i) v = (v << 1) | next_bit();
        return v;
    }

    // Byte-align and consume an expected RSTn marker.
    void restart() {
        count_ = 0;
        if (pos_ + 1 >= bytes_.size() || bytes_[pos_] != 0xFF ||
            bytes_[pos_ + 1] < 0xD0 || bytes_[pos_ + 1] > 0xD7)
            raise(ErrorCode::CorruptStream, "missing restart marker");
        pos_ += 2;
    }

    size_t position() const { return pos_; }

private:
    const std::vector<uint8_t>& bytes_;
    size_t pos_;
    uint8_t buffer_ = 0;
    int count_ = 0;
};

int decode_huffman(BitReader& reader, const HuffTable& table) {
    int code = 0;
    for (int len = 1; len <= 16; ++len) {
        code = (code << 1) | reader.next_bit();
        if (table.maxcode[len] >= 0 && code <= table.maxcode[len])
            return table.values[table.valptr[len] + code - table.mincode[len]];
    }
    raise(ErrorCode::CorruptStream, "invalid Huffman code");
}

int extend(int v, int s) { return v < (1 << (s - 1)) ? v - (1 << s) + 1 : v; }

struct DecComponent {
    int id = 0;
    int h = 1, v = 1;
    int quant_id = 0;
    int dc_id = 0, ac_id = 0;
    int predictor = 0;
    int block_width = 0, block_height = 0;  // padded to full MCUs
    Plane plane;                            // padded component samples
};

uint16_t read_u16(const std::vector<uint8_t>& bytes, size_t& pos) {
    if (pos + 1 >= bytes.size())
        raise(ErrorCode::CorruptStream, "truncated segment");
    uint16_t v = static_cast<uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
    pos += 2;
    return v;
}

}  // namespace

Raster jpeg_decode(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8)
        raise(ErrorCode::CorruptStream, "missing SOI marker");

    std::array<QuantTable, 4> quant{};
    std::array<bool, 4> quant_defined{};
    std::array<HuffTable, 4> dc_tables;
    std::array<HuffTable, 4> ac_tables;
    std::vector<DecComponent> comps;
    int width = 0, height = 0;
    int restart_interval = 0;
    bool have_frame = false;

    size_t pos = 2;
    while (true) {
        if (pos + 1 >= bytes.size())
            raise(ErrorCode::CorruptStream, "stream ended before SOS");
        if (bytes[pos] != 0xFF)
            raise(ErrorCode::CorruptStream, "expected marker");
        uint8_t marker = bytes[pos + 1];
        pos += 2;
        if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7))
            continue;  // parameterless markers

        size_t seg_start = pos;
        uint16_t seg_len = read_u16(bytes, pos);
        if (seg_len < 2 || seg_start + seg_len > bytes.size())
            raise(ErrorCode::CorruptStream, "segment overruns stream");
        size_t seg_end = seg_start + seg_len;

        if (marker >= 0xE0 && marker <= 0xEF) {  // APPn
            pos = seg_end;
        } else if (marker == 0xFE) {  // COM
            pos = seg_end;
        } else if (marker == 0xDB) {  // DQT
            while (pos < seg_end) {
                uint8_t pq_tq = bytes[pos++];
                int precision = pq_tq >> 4;
                int id = pq_tq & 0x0F;
                if (precision != 0)
                    raise(ErrorCode::UnsupportedFormat, "16-bit quantization tables");
                if (pos + 64 > seg_end)
                    raise(ErrorCode::CorruptStream, "truncated DQT");
                for (int k = 0; k < 64; ++k)
                    quant[id].values[kZigZag[k]] = bytes[pos + k];
                quant_defined[id] = true;
                pos += 64;
            }
        } else if (marker == 0xC4) {  // DHT
            while (pos < seg_end) {
                uint8_t tc_th = bytes[pos++];
                int cls = tc_th >> 4;
                int id = tc_th & 0x0F;
                if (pos + 16 > seg_end)
                    raise(ErrorCode::CorruptStream, "truncated DHT");
                uint8_t counts[16];
                int total = 0;
                for (int i = 0; i < 16; ++i) {
                    counts[i] = bytes[pos + i];
                    total += counts[i];
                }
                pos += 16;
                if (pos + total > seg_end)
                    raise(ErrorCode::CorruptStream, "truncated DHT values");
                std::vector<uint8_t> vals(bytes.begin() + static_cast<ptrdiff_t>(pos),
                                          bytes.begin() + static_cast<ptrdiff_t>(pos + total));
                pos += total;
                build_decode_table(counts, vals, cls == 0 ? dc_tables[id] : ac_tables[id]);
            }
        } else if (marker == 0xC0 || marker == 0xC1) {  // SOF0 / SOF1
            if (bytes[pos] != 8)
                raise(ErrorCode::UnsupportedFormat, "only 8-bit precision supported");
            ++pos;
            height = read_u16(bytes, pos);
            width = read_u16(bytes, pos);
            int ncomp = bytes[pos++];
            if (ncomp != 1 && ncomp != 3)
                raise(ErrorCode::UnsupportedFormat, "component count must be 1 or 3");
            if (width < 1 || height < 1)
                raise(ErrorCode::CorruptStream, "frame dimensions must be positive");
            for (int i = 0; i < ncomp; ++i) {
                DecComponent c;
                c.id = bytes[pos];
                c.h = bytes[pos + 1] >> 4;
                c.v = bytes[pos + 1] & 0x0F;
                c.quant_id = bytes[pos + 2];
                pos += 3;
                if (c.h < 1 || c.h > 2 || c.v < 1 || c.v > 2)
                    raise(ErrorCode::UnsupportedFormat, "sampling factors above 2");
                comps.push_back(c);
            }
            have_frame = true;
            pos = seg_end;
        } else if (marker >= 0xC2 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                   marker != 0xCC) {
            raise(ErrorCode::UnsupportedFormat, "non-baseline SOF marker");
        } else if (marker == 0xDD) {  // DRI
            restart_interval = read_u16(bytes, pos);
            pos = seg_end;
        } else if (marker == 0xDA) {  // SOS
            if (!have_frame)
                raise(ErrorCode::CorruptStream, "SOS before SOF");
            int ncomp = bytes[pos++];
            if (ncomp != static_cast<int>(comps.size()))
                raise(ErrorCode::UnsupportedFormat, "multi-scan streams");
            for (int i = 0; i < ncomp; ++i) {
                uint8_t cid = bytes[pos];
                uint8_t tables = bytes[pos + 1];
                pos += 2;
                bool found = false;
                for (auto& c : comps)
                    if (c.id == cid) {
                        c.dc_id = tables >> 4;
                        c.ac_id = tables & 0x0F;
                        found = true;
                    }
                if (!found)
                    raise(ErrorCode::CorruptStream, "scan references unknown component");
            }
            pos = seg_end;  // skip spectral selection bytes
            break;
        } else {
            raise(ErrorCode::UnsupportedFormat, "unhandled marker in stream");
        }
    }

    int hmax = 1, vmax = 1;
    for (const auto& c : comps) {
        hmax = std::max(hmax, c.h);
        vmax = std::max(vmax, c.v);
    }
    int mcux = (width + 8 * hmax - 1) / (8 * hmax);
    int mcuy = (height + 8 * vmax - 1) / (8 * vmax);
    for (auto& c : comps) {
        c.block_width = mcux * c.h;
        c.block_height = mcuy * c.v;
        c.plane.assign(static_cast<size_t>(c.block_width) * c.block_height * 64, 0.0);
        if (!quant_defined[c.quant_id])
            raise(ErrorCode::CorruptStream, "scan uses undefined quantization table");
    }

    BitReader reader(bytes, pos);
    int mcu_index = 0;
    for (int my = 0; my < mcuy; ++my) {
        for (int mx = 0; mx < mcux; ++mx) {
            if (restart_interval > 0 && mcu_index > 0 && mcu_index % restart_interval == 0) {
                reader.restart();
                for (auto& c : comps) c.predictor = 0;
            }
            ++mcu_index;
            for (auto& c : comps) {
                const HuffTable& dc = dc_tables[c.dc_id];
                const HuffTable& ac = ac_tables[c.ac_id];
                if (!dc.defined || !ac.defined)
                    raise(ErrorCode::CorruptStream, "scan uses undefined Huffman table");
                const QuantTable& q = quant[c.quant_id];
                for (int dy = 0; dy < c.v; ++dy)
                    for (int dx = 0; dx < c.h; ++dx) {
                        double coef[64] = {0};
                        int s = decode_huffman(reader, dc);
                        if (s > 11)
                            raise(ErrorCode::CorruptStream, "DC magnitude too large");
                        int diff = s == 0 ? 0 : extend(reader.receive(s), s);
                        c.predictor += diff;
                        coef[0] = static_cast<double>(c.predictor) * q.values[0];
                        int k = 1;
                        while (k < 64) {
                            int rs = decode_huffman(reader, ac);
                            int run = rs >> 4;
                            int size = rs & 0x0F;
                            if (size == 0) {
                                if (run == 15) {
                                    k += 16;
                                    continue;
                                }
                                break;  // EOB
                            }
                            k += run;
                            if (k > 63)
                                raise(ErrorCode::CorruptStream, "AC run exceeds block");
                            int natural = kZigZag[k];
                            coef[natural] =
                                static_cast<double>(extend(reader.receive(size), size)) *
                                q.values[natural];
                            ++k;
                        }
                        double block[64];
                        inverse_dct(coef, block);
                        int bx = mx * c.h + dx;
                        int by = my * c.v + dy;
                        double* dst = &c.plane[(static_cast<size_t>(by) * c.block_width + bx) * 64];
                        std::memcpy(dst, block, sizeof(block));
                    }
            }
        }
    }

    // Reassemble planes, upsample by replication, convert color space.
    auto sample_component = [&](const DecComponent& c, int x, int y) {
        // Map full-resolution (x, y) into the component grid.
        int cx = x * c.h / hmax;
        int cy = y * c.v / vmax;
        cx = std::min(cx, c.block_width * 8 - 1);
        cy = std::min(cy, c.block_height * 8 - 1);
        int bx = cx / 8, by = cy / 8;
        int ox = cx % 8, oy = cy % 8;
        return c.plane[(static_cast<size_t>(by) * c.block_width + bx) * 64 + oy * 8 + ox] +
               128.0;
    };

    Raster out(width, height, comps.size() == 1 ? 1 : 3);
    if (comps.size() == 1) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                out.at(x, y, 0) = static_cast<uint8_t>(
                    std::clamp(std::lround(sample_component(comps[0], x, y)), 0L, 255L));
    } else {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double lum = sample_component(comps[0], x, y);
                double cb = sample_component(comps[1], x, y) - 128.0;
                double cr = sample_component(comps[2], x, y) - 128.0;
                double red = lum + 1.402 * cr;
                double green = lum - 0.344136 * cb - 0.714136 * cr;
                double blue = lum + 1.772 * cb;
                out.at(x, y, 0) = static_cast<uint8_t>(std::clamp(std::lround(red), 0L, 255L));
                out.at(x, y, 1) = static_cast<uint8_t>(std::clamp(std::lround(green), 0L, 255L));
                out.at(x, y, 2) = static_cast<uint8_t>(std::clamp(std::lround(blue), 0L, 255L));
            }
    }
    return out;
}

}  // namespace qcia
