#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qcia/error.hpp"

namespace qcia {

enum class LayerKind { Conv, MaxPool, Relu, FullyConnected, SoftmaxOutput };

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int out_channels = 0;  // conv
    int kernel = 0;        // conv
    int stride = 1;        // conv, maxpool
    int padding = 0;       // conv
    int window = 0;        // maxpool
    int width = 0;         // fully connected

    static LayerSpec conv(int out_channels, int kernel, int stride, int padding) {
        LayerSpec s;
        s.kind = LayerKind::Conv;
        s.out_channels = out_channels;
        s.kernel = kernel;
        s.stride = stride;
        s.padding = padding;
        return s;
    }
    static LayerSpec maxpool(int window, int stride) {
        LayerSpec s;
        s.kind = LayerKind::MaxPool;
        s.window = window;
        s.stride = stride;
        return s;
    }
    static LayerSpec relu() {
        LayerSpec s;
        s.kind = LayerKind::Relu;
        return s;
    }
    static LayerSpec fully_connected(int width) {
        LayerSpec s;
        s.kind = LayerKind::FullyConnected;
        s.width = width;
        return s;
    }
    static LayerSpec softmax_output() {
        LayerSpec s;
        s.kind = LayerKind::SoftmaxOutput;
        return s;
    }

    bool operator==(const LayerSpec& other) const = default;
};

// Feature-map dimensions; fully connected outputs use c = width, h = w = 1.
struct TensorDims {
    int c = 0, h = 0, w = 0;
    int count() const { return c * h * w; }
    bool operator==(const TensorDims& other) const = default;
};

struct ArchSpec {
    int input_height = 0;
    int input_width = 0;
    int input_channels = 0;
    std::vector<LayerSpec> layers;
    int num_classes = 0;

    bool operator==(const ArchSpec& other) const = default;
};

// Output dims of every layer in order; throws ShapeMismatch on inconsistency
// (non-positive feature maps, wrong logit count before softmax, softmax not
// last, missing softmax).
std::vector<TensorDims> propagate_shapes(const ArchSpec& arch);

// Five conv + two 1000-wide fc layers on 157x157x3 patches, pools after the
// second and fifth conv.
ArchSpec full_scale_arch(int num_classes);
// Same topology scaled down to 32x32x1 patches for CPU training.
ArchSpec desk_arch(int num_classes, int patch_size = 32, int channels = 1);

struct LayerParams {
    std::vector<float> weights;
    std::vector<float> bias;
    std::vector<float> vel_weights;  // SGD momentum state
    std::vector<float> vel_bias;
};

struct Network {
    ArchSpec arch;
    std::vector<LayerParams> params;  // one per layer; empty for non-parametric kinds
    uint64_t rng_seed = 0;

    size_t parameter_count() const;
    bool all_finite() const;
};

// He fan-in initialization, deterministic per seed.
Network build_network(const ArchSpec& arch, uint64_t seed);

// A batch of input patches, row-major [count][c*h*w], samples scaled to [0,1].
struct PatchBatch {
    int count = 0;
    TensorDims dims;
    std::vector<float> data;
};

struct LabeledPatches {
    PatchBatch inputs;
    std::vector<int> labels;
};

// Per-sample class probability rows.
std::vector<std::vector<float>> forward(const Network& net, const PatchBatch& batch);

struct Gradients {
    std::vector<std::vector<float>> weights;  // one per layer, shapes match params
    std::vector<std::vector<float>> bias;
};

// Mean cross-entropy over the batch plus exact gradients.
std::pair<double, Gradients> loss_and_grad(const Network& net, const PatchBatch& batch,
                                           const std::vector<int>& labels, int threads = 1);

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 32;
    int epochs = 0;
    uint64_t seed = 0;
    int threads = 1;
};

// v <- momentum*v + g ; w <- w - lr*(v + weight_decay*w)
void sgd_step(Network& net, const Gradients& grads, const TrainConfig& cfg);

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Seeded shuffling and batching; history has one entry per epoch.
std::vector<EpochStats> train(Network& net, const LabeledPatches& data,
                              const TrainConfig& cfg);

// Checkpoint layout: "QCIA" magic, u32 format version, length-prefixed JSON
// header (arch + seed), per-layer weight/bias/velocity arrays as
// little-endian f32, CRC32 of everything preceding.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

std::string arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const std::string& text);

}  // namespace qcia
