#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "qcia/imageio.hpp"
#include "qcia/net.hpp"

namespace qcia {

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kMagic[4] = {'Q', 'C', 'I', 'A'};

uint32_t crc32_ieee(const uint8_t* data, size_t length) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < length; ++i)
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

uint32_t get_u32(const std::vector<uint8_t>& bytes, size_t pos) {
    return static_cast<uint32_t>(bytes[pos]) |
           (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
           (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
           (static_cast<uint32_t>(bytes[pos + 3]) << 24);
}

void put_f32_array(std::vector<uint8_t>& out, const std::vector<float>& values) {
    for (float v : values) put_u32(out, std::bit_cast<uint32_t>(v));
}

std::vector<float> get_f32_array(const std::vector<uint8_t>& bytes, size_t& pos,
                                 size_t count) {
    if (pos + count * 4 > bytes.size())
        raise(ErrorCode::CorruptStream, "checkpoint truncated in weight data");
    std::vector<float> values(count);
    for (size_t i = 0; i < count; ++i) {
        values[i] = std::bit_cast<float>(get_u32(bytes, pos));
        pos += 4;
    }
    return values;
}

const char* kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Relu: return "relu";
        case LayerKind::FullyConnected: return "fully_connected";
        case LayerKind::SoftmaxOutput: return "softmax_output";
    }
    return "?";
}

}  // namespace

std::string arch_to_json(const ArchSpec& arch) {
    nlohmann::json j;
    j["input"] = {{"height", arch.input_height},
                  {"width", arch.input_width},
                  {"channels", arch.input_channels}};
    j["num_classes"] = arch.num_classes;
    j["layers"] = nlohmann::json::array();
    for (const LayerSpec& spec : arch.layers) {
        nlohmann::json layer;
        layer["kind"] = kind_name(spec.kind);
        switch (spec.kind) {
            case LayerKind::Conv:
                layer["out_channels"] = spec.out_channels;
                layer["kernel"] = spec.kernel;
                layer["stride"] = spec.stride;
                layer["padding"] = spec.padding;
                break;
            case LayerKind::MaxPool:
                layer["window"] = spec.window;
                layer["stride"] = spec.stride;
                break;
            case LayerKind::FullyConnected:
                layer["width"] = spec.width;
                break;
            default:
                break;
        }
        j["layers"].push_back(layer);
    }
    return j.dump();
}

ArchSpec arch_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "arch JSON does not parse");
    }
    try {
        ArchSpec arch;
        arch.input_height = j.at("input").at("height").get<int>();
        arch.input_width = j.at("input").at("width").get<int>();
        arch.input_channels = j.at("input").at("channels").get<int>();
        arch.num_classes = j.at("num_classes").get<int>();
        for (const auto& layer : j.at("layers")) {
            std::string kind = layer.at("kind").get<std::string>();
            if (kind == "conv") {
                arch.layers.push_back(LayerSpec::conv(
                    layer.at("out_channels").get<int>(), layer.at("kernel").get<int>(),
                    layer.at("stride").get<int>(), layer.at("padding").get<int>()));
            } else if (kind == "maxpool") {
                arch.layers.push_back(LayerSpec::maxpool(layer.at("window").get<int>(),
                                                         layer.at("stride").get<int>()));
            } else if (kind == "relu") {
                arch.layers.push_back(LayerSpec::relu());
            } else if (kind == "fully_connected") {
                arch.layers.push_back(
                    LayerSpec::fully_connected(layer.at("width").get<int>()));
            } else if (kind == "softmax_output") {
                arch.layers.push_back(LayerSpec::softmax_output());
            } else {
                raise(ErrorCode::CorruptStream, "unknown layer kind: " + kind);
            }
        }
        return arch;
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "arch JSON has missing or mistyped fields");
    }
}

void save_checkpoint(const Network& net, const std::string& path) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kCheckpointVersion);

    nlohmann::json header;
    header["arch"] = nlohmann::json::parse(arch_to_json(net.arch));
    header["rng_seed"] = net.rng_seed;
    std::string header_text = header.dump();
    put_u32(out, static_cast<uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());

    // Momentum state rides along so that load + continue-training is
    // equivalent to uninterrupted training.
    for (const LayerParams& p : net.params) {
        put_f32_array(out, p.weights);
        put_f32_array(out, p.bias);
        put_f32_array(out, p.vel_weights);
        put_f32_array(out, p.vel_bias);
    }

    put_u32(out, crc32_ieee(out.data(), out.size()));
    write_file(path, out);
}

Network load_checkpoint(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 16)
        raise(ErrorCode::CorruptStream, "checkpoint too short");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        raise(ErrorCode::CorruptStream, "bad checkpoint magic");
    uint32_t version = get_u32(bytes, 4);
    if (version != kCheckpointVersion)
        raise(ErrorCode::VersionMismatch,
              "checkpoint version " + std::to_string(version));

    uint32_t stored_crc = get_u32(bytes, bytes.size() - 4);
    uint32_t actual_crc = crc32_ieee(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc)
        raise(ErrorCode::ChecksumMismatch, "checkpoint CRC32 does not match");

    size_t pos = 8;
    uint32_t header_len = get_u32(bytes, pos);
    pos += 4;
    if (pos + header_len + 4 > bytes.size())
        raise(ErrorCode::CorruptStream, "checkpoint header overruns file");
    std::string header_text(bytes.begin() + static_cast<ptrdiff_t>(pos),
                            bytes.begin() + static_cast<ptrdiff_t>(pos + header_len));
    pos += header_len;

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "checkpoint header JSON does not parse");
    }
    uint64_t seed = 0;
    try {
        seed = header.at("rng_seed").get<uint64_t>();
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::CorruptStream, "checkpoint header missing rng_seed");
    }

    // Rebuild via build_network to get validated shapes, then overwrite.
    ArchSpec arch = arch_from_json(header.at("arch").dump());
    Network net = build_network(arch, seed);
    for (LayerParams& p : net.params) {
        p.weights = get_f32_array(bytes, pos, p.weights.size());
        p.bias = get_f32_array(bytes, pos, p.bias.size());
        p.vel_weights = get_f32_array(bytes, pos, p.vel_weights.size());
        p.vel_bias = get_f32_array(bytes, pos, p.vel_bias.size());
    }
    if (pos + 4 != bytes.size())
        raise(ErrorCode::CorruptStream, "checkpoint has trailing bytes");
    return net;
}

}  // namespace qcia
