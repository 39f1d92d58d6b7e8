#include <atomic>
#include <cmath>
#include <thread>

#include "qcia/net.hpp"
#include "qcia/net_engine.hpp"
#include "qcia/rng.hpp"

namespace qcia {

std::vector<TensorDims> propagate_shapes(const ArchSpec& arch) {
    if (arch.input_height < 1 || arch.input_width < 1 ||
        (arch.input_channels != 1 && arch.input_channels != 3))
        raise(ErrorCode::ShapeMismatch, "invalid input dimensions");
    if (arch.num_classes < 1)
        raise(ErrorCode::ShapeMismatch, "num_classes must be >= 1");
    if (arch.layers.size() < 2)
        raise(ErrorCode::ShapeMismatch, "arch needs at least one layer plus softmax_output");

    std::vector<TensorDims> dims;
    TensorDims cur{arch.input_channels, arch.input_height, arch.input_width};
    for (size_t l = 0; l < arch.layers.size(); ++l) {
        const LayerSpec& spec = arch.layers[l];
        const bool is_last = l + 1 == arch.layers.size();
        switch (spec.kind) {
            case LayerKind::Conv: {
                if (spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1 ||
                    spec.padding < 0)
                    raise(ErrorCode::ShapeMismatch, "invalid conv parameters");
                int span_h = cur.h + 2 * spec.padding - spec.kernel;
                int span_w = cur.w + 2 * spec.padding - spec.kernel;
                if (span_h < 0 || span_w < 0)
                    raise(ErrorCode::ShapeMismatch, "conv kernel larger than padded input");
                cur = {spec.out_channels, span_h / spec.stride + 1, span_w / spec.stride + 1};
                break;
            }
            case LayerKind::MaxPool: {
                if (spec.window < 1 || spec.stride < 1)
                    raise(ErrorCode::ShapeMismatch, "invalid maxpool parameters");
                if (cur.h < spec.window || cur.w < spec.window)
                    raise(ErrorCode::ShapeMismatch, "maxpool window larger than input");
                cur = {cur.c, (cur.h - spec.window) / spec.stride + 1,
                       (cur.w - spec.window) / spec.stride + 1};
                break;
            }
            case LayerKind::Relu:
                break;
            case LayerKind::FullyConnected:
                if (spec.width < 1)
                    raise(ErrorCode::ShapeMismatch, "fully_connected width must be >= 1");
                cur = {spec.width, 1, 1};
                break;
            case LayerKind::SoftmaxOutput:
                if (!is_last)
                    raise(ErrorCode::ShapeMismatch, "softmax_output must be the final layer");
                if (cur.count() != arch.num_classes)
                    raise(ErrorCode::ShapeMismatch,
                          "layer before softmax_output must emit num_classes logits");
                break;
        }
        dims.push_back(cur);
    }
    if (arch.layers.back().kind != LayerKind::SoftmaxOutput)
        raise(ErrorCode::ShapeMismatch, "final layer must be softmax_output");
    return dims;
}

ArchSpec full_scale_arch(int num_classes) {
    ArchSpec arch;
    arch.input_height = 157;
    arch.input_width = 157;
    arch.input_channels = 3;
    arch.num_classes = num_classes;
    arch.layers = {
        LayerSpec::conv(32, 5, 1, 2),  LayerSpec::relu(),
        LayerSpec::conv(64, 3, 1, 1),  LayerSpec::relu(),
        LayerSpec::maxpool(3, 3),
        LayerSpec::conv(96, 3, 1, 1),  LayerSpec::relu(),
        LayerSpec::conv(96, 3, 1, 1),  LayerSpec::relu(),
        LayerSpec::conv(64, 3, 1, 1),  LayerSpec::relu(),
        LayerSpec::maxpool(3, 3),
        LayerSpec::fully_connected(1000), LayerSpec::relu(),
        LayerSpec::fully_connected(1000), LayerSpec::relu(),
        LayerSpec::fully_connected(num_classes), LayerSpec::softmax_output(),
    };
    return arch;
}

ArchSpec desk_arch(int num_classes, int patch_size, int channels) {
    ArchSpec arch;
    arch.input_height = patch_size;
    arch.input_width = patch_size;
    arch.input_channels = channels;
    arch.num_classes = num_classes;
    arch.layers = {
        LayerSpec::conv(16, 3, 1, 1), LayerSpec::relu(),
        LayerSpec::conv(32, 3, 1, 1), LayerSpec::relu(),
        LayerSpec::maxpool(3, 3),
        LayerSpec::conv(32, 3, 1, 1), LayerSpec::relu(),
        LayerSpec::conv(32, 3, 1, 1), LayerSpec::relu(),
        LayerSpec::conv(32, 3, 1, 1), LayerSpec::relu(),
        LayerSpec::maxpool(3, 3),
        LayerSpec::fully_connected(128), LayerSpec::relu(),
        LayerSpec::fully_connected(128), LayerSpec::relu(),
        LayerSpec::fully_connected(num_classes), LayerSpec::softmax_output(),
    };
    return arch;
}

size_t Network::parameter_count() const {
    size_t n = 0;
    for (const auto& p : params) n += p.weights.size() + p.bias.size();
    return n;
}

bool Network::all_finite() const {
    auto finite = [](const std::vector<float>& v) {
        for (float x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    for (const auto& p : params)
        if (!finite(p.weights) || !finite(p.bias) || !finite(p.vel_weights) ||
            !finite(p.vel_bias))
            return false;
    return true;
}

namespace {

// Weight/bias array sizes per layer, zero for non-parametric layers.
struct ParamShape {
    size_t weights = 0;
    size_t bias = 0;
};

std::vector<ParamShape> param_shapes(const ArchSpec& arch,
                                     const std::vector<TensorDims>& dims) {
    std::vector<ParamShape> shapes(arch.layers.size());
    TensorDims cur{arch.input_channels, arch.input_height, arch.input_width};
    for (size_t l = 0; l < arch.layers.size(); ++l) {
        const LayerSpec& spec = arch.layers[l];
        if (spec.kind == LayerKind::Conv) {
            shapes[l].weights = static_cast<size_t>(spec.out_channels) * cur.c *
                                spec.kernel * spec.kernel;
            shapes[l].bias = static_cast<size_t>(spec.out_channels);
        } else if (spec.kind == LayerKind::FullyConnected) {
            shapes[l].weights = static_cast<size_t>(spec.width) * cur.count();
            shapes[l].bias = static_cast<size_t>(spec.width);
        }
        cur = dims[l];
    }
    return shapes;
}

}  // namespace

Network build_network(const ArchSpec& arch, uint64_t seed) {
    std::vector<TensorDims> dims = propagate_shapes(arch);
    std::vector<ParamShape> shapes = param_shapes(arch, dims);

    Network net;
    net.arch = arch;
    net.rng_seed = seed;
    net.params.resize(arch.layers.size());
    Rng rng(mix_seed(seed, 0x1B17));
    TensorDims cur{arch.input_channels, arch.input_height, arch.input_width};
    for (size_t l = 0; l < arch.layers.size(); ++l) {
        const LayerSpec& spec = arch.layers[l];
        LayerParams& p = net.params[l];
        if (shapes[l].weights > 0) {
            int fan_in = spec.kind == LayerKind::Conv
                             ? cur.c * spec.kernel * spec.kernel
                             : cur.count();
            float scale = static_cast<float>(std::sqrt(2.0 / fan_in));
            p.weights.resize(shapes[l].weights);
            for (float& w : p.weights)
                w = static_cast<float>(rng.next_gaussian()) * scale;
            p.bias.assign(shapes[l].bias, 0.0f);
            p.vel_weights.assign(shapes[l].weights, 0.0f);
            p.vel_bias.assign(shapes[l].bias, 0.0f);
        }
        cur = dims[l];
    }
    return net;
}

namespace {

void check_batch(const Network& net, const PatchBatch& batch) {
    TensorDims expected{net.arch.input_channels, net.arch.input_height,
                        net.arch.input_width};
    if (batch.dims != expected)
        raise(ErrorCode::ShapeMismatch, "batch dims do not match arch input");
    if (batch.data.size() != static_cast<size_t>(batch.count) * batch.dims.count())
        raise(ErrorCode::ShapeMismatch, "batch data length inconsistent");
}

struct BatchPassResult {
    double loss_sum = 0.0;
    int correct = 0;
    std::vector<std::vector<float>> grad_w, grad_b;  // raw sums over samples
};

// Per-sample forward (and optionally backward), parallelized over fixed
// 8-sample chunks. Chunk boundaries are independent of the thread count and
// partial results are reduced in chunk order, so the result is bit-identical
// for any `threads`.
BatchPassResult batch_pass(const engine::NetView<float>& view, const PatchBatch& batch,
                           const std::vector<int>* labels, int threads,
                           bool want_grads) {
    constexpr int kChunk = 8;
    const int count = batch.count;
    const int chunks = (count + kChunk - 1) / kChunk;
    const size_t layer_count = view.arch->layers.size();

    std::vector<double> losses(count, 0.0);
    std::vector<uint8_t> hits(count, 0);
    std::vector<std::vector<std::vector<float>>> chunk_w, chunk_b;
    if (want_grads) {
        chunk_w.resize(chunks);
        chunk_b.resize(chunks);
        for (int c = 0; c < chunks; ++c) {
            chunk_w[c].resize(layer_count);
            chunk_b[c].resize(layer_count);
            for (size_t l = 0; l < layer_count; ++l) {
                chunk_w[c][l].assign(view.weights[l].size(), 0.0f);
                chunk_b[c][l].assign(view.bias[l].size(), 0.0f);
            }
        }
    }

    const int sample_size = view.input_dims().count();
    std::atomic<int> next_chunk{0};
    auto worker = [&]() {
        engine::SampleScratch<float> scratch;
        scratch.prepare(view);
        while (true) {
            int c = next_chunk.fetch_add(1);
            if (c >= chunks) break;
            int begin = c * kChunk;
            int end = std::min(begin + kChunk, count);
            for (int i = begin; i < end; ++i) {
                const float* x = batch.data.data() + static_cast<size_t>(i) * sample_size;
                engine::forward_sample(view, x, scratch);
                const std::vector<float>& probs = scratch.acts.back();
                if (labels) {
                    int label = (*labels)[i];
                    losses[i] = engine::sample_loss(view, scratch, label);
                    int arg = 0;
                    for (size_t k = 1; k < probs.size(); ++k)
                        if (probs[k] > probs[arg]) arg = static_cast<int>(k);
                    hits[i] = arg == label ? 1 : 0;
                    if (want_grads)
                        engine::backward_sample(view, x, scratch, label, chunk_w[c],
                                                chunk_b[c]);
                }
            }
        }
    };

    int worker_count = std::max(1, std::min(threads, chunks));
    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(worker_count);
        for (int t = 0; t < worker_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    BatchPassResult result;
    for (int i = 0; i < count; ++i) {
        result.loss_sum += losses[i];
        result.correct += hits[i];
    }
    if (want_grads) {
        result.grad_w.resize(layer_count);
        result.grad_b.resize(layer_count);
        for (size_t l = 0; l < layer_count; ++l) {
            result.grad_w[l].assign(view.weights[l].size(), 0.0f);
            result.grad_b[l].assign(view.bias[l].size(), 0.0f);
        }
        for (int c = 0; c < chunks; ++c)
            for (size_t l = 0; l < layer_count; ++l) {
                for (size_t i = 0; i < chunk_w[c][l].size(); ++i)
                    result.grad_w[l][i] += chunk_w[c][l][i];
                for (size_t i = 0; i < chunk_b[c][l].size(); ++i)
                    result.grad_b[l][i] += chunk_b[c][l][i];
            }
    }
    return result;
}

void check_labels(const std::vector<int>& labels, int count, int num_classes) {
    if (static_cast<int>(labels.size()) != count)
        raise(ErrorCode::ShapeMismatch, "label count does not match batch count");
    for (int label : labels)
        if (label < 0 || label >= num_classes)
            raise(ErrorCode::LabelOutOfRange, "label outside [0, num_classes)");
}

}  // namespace

std::vector<std::vector<float>> forward(const Network& net, const PatchBatch& batch) {
    check_batch(net, batch);
    auto view = engine::make_view<float>(net);
    engine::SampleScratch<float> scratch;
    scratch.prepare(view);
    std::vector<std::vector<float>> rows;
    rows.reserve(batch.count);
    const int sample_size = batch.dims.count();
    for (int i = 0; i < batch.count; ++i) {
        engine::forward_sample(view, batch.data.data() + static_cast<size_t>(i) * sample_size,
                               scratch);
        rows.push_back(scratch.acts.back());
    }
    return rows;
}

std::pair<double, Gradients> loss_and_grad(const Network& net, const PatchBatch& batch,
                                           const std::vector<int>& labels, int threads) {
    check_batch(net, batch);
    check_labels(labels, batch.count, net.arch.num_classes);
    if (batch.count == 0)
        raise(ErrorCode::EmptyDataset, "batch is empty");
    auto view = engine::make_view<float>(net);
    BatchPassResult pass = batch_pass(view, batch, &labels, threads, true);
    Gradients grads;
    grads.weights = std::move(pass.grad_w);
    grads.bias = std::move(pass.grad_b);
    const float inv = 1.0f / static_cast<float>(batch.count);
    for (auto& layer : grads.weights)
        for (float& g : layer) g *= inv;
    for (auto& layer : grads.bias)
        for (float& g : layer) g *= inv;
    return {pass.loss_sum / batch.count, std::move(grads)};
}

void sgd_step(Network& net, const Gradients& grads, const TrainConfig& cfg) {
    if (grads.weights.size() != net.params.size() || grads.bias.size() != net.params.size())
        raise(ErrorCode::ShapeMismatch, "gradient layer count mismatch");
    const float lr = static_cast<float>(cfg.learning_rate);
    const float momentum = static_cast<float>(cfg.momentum);
    const float decay = static_cast<float>(cfg.weight_decay);
    for (size_t l = 0; l < net.params.size(); ++l) {
        LayerParams& p = net.params[l];
        if (grads.weights[l].size() != p.weights.size() ||
            grads.bias[l].size() != p.bias.size())
            raise(ErrorCode::ShapeMismatch, "gradient array shape mismatch");
        for (size_t i = 0; i < p.weights.size(); ++i) {
            p.vel_weights[i] = momentum * p.vel_weights[i] + grads.weights[l][i];
            p.weights[i] -= lr * (p.vel_weights[i] + decay * p.weights[i]);
        }
        for (size_t i = 0; i < p.bias.size(); ++i) {
            p.vel_bias[i] = momentum * p.vel_bias[i] + grads.bias[l][i];
            p.bias[i] -= lr * (p.vel_bias[i] + decay * p.bias[i]);
        }
    }
}

std::vector<EpochStats> train(Network& net, const LabeledPatches& data,
                              const TrainConfig& cfg) {
    check_batch(net, data.inputs);
    if (data.inputs.count == 0)
        raise(ErrorCode::EmptyDataset, "training set is empty");
    check_labels(data.labels, data.inputs.count, net.arch.num_classes);
    if (cfg.batch_size < 1)
        raise(ErrorCode::ShapeMismatch, "batch_size must be >= 1");

    const int count = data.inputs.count;
    const int sample_size = data.inputs.dims.count();
    std::vector<EpochStats> history;
    history.reserve(cfg.epochs);

    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;

    PatchBatch minibatch;
    minibatch.dims = data.inputs.dims;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch), 0x5467));
        for (int i = 0; i < count; ++i) order[i] = i;
        rng.shuffle(order);

        double loss_sum = 0.0;
        int correct = 0;
        for (int start = 0; start < count; start += cfg.batch_size) {
            int end = std::min(start + cfg.batch_size, count);
            int n = end - start;
            minibatch.count = n;
            minibatch.data.resize(static_cast<size_t>(n) * sample_size);
            std::vector<int> labels(n);
            for (int i = 0; i < n; ++i) {
                int src = order[start + i];
                std::copy_n(data.inputs.data.data() + static_cast<size_t>(src) * sample_size,
                            sample_size,
                            minibatch.data.data() + static_cast<size_t>(i) * sample_size);
                labels[i] = data.labels[src];
            }
            auto view = engine::make_view<float>(net);
            BatchPassResult pass = batch_pass(view, minibatch, &labels, cfg.threads, true);
            Gradients grads;
            grads.weights = std::move(pass.grad_w);
            grads.bias = std::move(pass.grad_b);
            const float inv = 1.0f / static_cast<float>(n);
            for (auto& layer : grads.weights)
                for (float& g : layer) g *= inv;
            for (auto& layer : grads.bias)
                for (float& g : layer) g *= inv;
            sgd_step(net, grads, cfg);
            loss_sum += pass.loss_sum;
            correct += pass.correct;
        }
        if (!net.all_finite())
            raise(ErrorCode::ValidationErrors,
                  "non-finite weight after epoch " + std::to_string(epoch));
        history.push_back({loss_sum / count, static_cast<double>(correct) / count});
    }
    return history;
}

}  // namespace qcia
