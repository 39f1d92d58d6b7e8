#pragma once

// Templated layer kernels shared by the float training path and the
// double-precision finite-difference verification path. Loop orders are
// fixed, so results are reproducible bit for bit.

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcia/net.hpp"

namespace qcia::engine {

// Parameter mirror of a Network in scalar type T.
template <typename T>
struct NetView {
    const ArchSpec* arch = nullptr;
    std::vector<TensorDims> dims;               // output dims per layer
    std::vector<std::vector<T>> weights, bias;  // per layer

    TensorDims input_dims() const {
        return {arch->input_channels, arch->input_height, arch->input_width};
    }
    TensorDims dims_before(size_t layer) const {
        return layer == 0 ? input_dims() : dims[layer - 1];
    }
};

template <typename T>
NetView<T> make_view(const Network& net) {
    NetView<T> view;
    view.arch = &net.arch;
    view.dims = propagate_shapes(net.arch);
    view.weights.resize(net.params.size());
    view.bias.resize(net.params.size());
    for (size_t i = 0; i < net.params.size(); ++i) {
        view.weights[i].assign(net.params[i].weights.begin(), net.params[i].weights.end());
        view.bias[i].assign(net.params[i].bias.begin(), net.params[i].bias.end());
    }
    return view;
}

// ---------------------------------------------------------------------------
// Layer kernels. All tensors are row-major CHW per sample.

template <typename T>
void im2col(const T* x, TensorDims in, int kernel, int stride, int padding,
            TensorDims out, T* col) {
    const int span = out.h * out.w;
    int row = 0;
    for (int c = 0; c < in.c; ++c)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx, ++row) {
                T* dst = col + static_cast<size_t>(row) * span;
                for (int oy = 0; oy < out.h; ++oy) {
                    int sy = oy * stride + ky - padding;
                    for (int ox = 0; ox < out.w; ++ox) {
                        int sx = ox * stride + kx - padding;
                        bool inside = sy >= 0 && sy < in.h && sx >= 0 && sx < in.w;
                        dst[oy * out.w + ox] =
                            inside ? x[(static_cast<size_t>(c) * in.h + sy) * in.w + sx]
                                   : T(0);
                    }
                }
            }
}

template <typename T>
void col2im(const T* col, TensorDims in, int kernel, int stride, int padding,
            TensorDims out, T* dx) {
    const int span = out.h * out.w;
    std::fill(dx, dx + in.count(), T(0));
    int row = 0;
    for (int c = 0; c < in.c; ++c)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx, ++row) {
                const T* src = col + static_cast<size_t>(row) * span;
                for (int oy = 0; oy < out.h; ++oy) {
                    int sy = oy * stride + ky - padding;
                    if (sy < 0 || sy >= in.h) continue;
                    for (int ox = 0; ox < out.w; ++ox) {
                        int sx = ox * stride + kx - padding;
                        if (sx < 0 || sx >= in.w) continue;
                        dx[(static_cast<size_t>(c) * in.h + sy) * in.w + sx] +=
                            src[oy * out.w + ox];
                    }
                }
            }
}

// y[M x N] = a[M x K] * b[K x N] (+= when accumulate)
template <typename T>
void gemm(int m_rows, int k_inner, int n_cols, const T* a, const T* b, T* y,
          bool accumulate) {
    if (!accumulate) std::fill(y, y + static_cast<size_t>(m_rows) * n_cols, T(0));
    for (int m = 0; m < m_rows; ++m) {
        T* yrow = y + static_cast<size_t>(m) * n_cols;
        const T* arow = a + static_cast<size_t>(m) * k_inner;
        for (int k = 0; k < k_inner; ++k) {
            T av = arow[k];
            if (av == T(0)) continue;
            const T* brow = b + static_cast<size_t>(k) * n_cols;
            for (int n = 0; n < n_cols; ++n) yrow[n] += av * brow[n];
        }
    }
}

template <typename T>
void conv_forward(const LayerSpec& spec, TensorDims in, TensorDims out, const T* x,
                  const T* w, const T* b, T* col_scratch, T* y) {
    const int span = out.h * out.w;
    const int k_inner = in.c * spec.kernel * spec.kernel;
    im2col(x, in, spec.kernel, spec.stride, spec.padding, out, col_scratch);
    gemm(out.c, k_inner, span, w, col_scratch, y, false);
    for (int oc = 0; oc < out.c; ++oc) {
        T* row = y + static_cast<size_t>(oc) * span;
        for (int i = 0; i < span; ++i) row[i] += b[oc];
    }
}

// col_scratch must still hold im2col(x) from the forward pass.
template <typename T>
void conv_backward(const LayerSpec& spec, TensorDims in, TensorDims out, const T* dy,
                   const T* w, const T* col_scratch, T* dcol_scratch, T* dx, T* dw,
                   T* db) {
    const int span = out.h * out.w;
    const int k_inner = in.c * spec.kernel * spec.kernel;
    // dW[oc][k] += sum_s dy[oc][s] * col[k][s]
    for (int oc = 0; oc < out.c; ++oc) {
        const T* dyrow = dy + static_cast<size_t>(oc) * span;
        for (int k = 0; k < k_inner; ++k) {
            const T* crow = col_scratch + static_cast<size_t>(k) * span;
            T acc = T(0);
            for (int s = 0; s < span; ++s) acc += dyrow[s] * crow[s];
            dw[static_cast<size_t>(oc) * k_inner + k] += acc;
        }
        T acc = T(0);
        for (int s = 0; s < span; ++s) acc += dyrow[s];
        db[oc] += acc;
    }
    // dcol[k][s] = sum_oc w[oc][k] * dy[oc][s]
    std::fill(dcol_scratch, dcol_scratch + static_cast<size_t>(k_inner) * span, T(0));
    for (int k = 0; k < k_inner; ++k) {
        T* drow = dcol_scratch + static_cast<size_t>(k) * span;
        for (int oc = 0; oc < out.c; ++oc) {
            T wv = w[static_cast<size_t>(oc) * k_inner + k];
            if (wv == T(0)) continue;
            const T* dyrow = dy + static_cast<size_t>(oc) * span;
            for (int s = 0; s < span; ++s) drow[s] += wv * dyrow[s];
        }
    }
    col2im(dcol_scratch, in, spec.kernel, spec.stride, spec.padding, out, dx);
}

// Ties route to the first (lowest-index) maximum, matching the backward pass.
template <typename T>
void maxpool_forward(const LayerSpec& spec, TensorDims in, TensorDims out, const T* x,
                     T* y, int* argmax) {
    for (int c = 0; c < in.c; ++c)
        for (int oy = 0; oy < out.h; ++oy)
            for (int ox = 0; ox < out.w; ++ox) {
                T best = -std::numeric_limits<T>::infinity();
                int best_index = -1;
                for (int ky = 0; ky < spec.window; ++ky)
                    for (int kx = 0; kx < spec.window; ++kx) {
                        int sy = oy * spec.stride + ky;
                        int sx = ox * spec.stride + kx;
                        int index = (c * in.h + sy) * in.w + sx;
                        if (x[index] > best) {
                            best = x[index];
                            best_index = index;
                        }
                    }
                int out_index = (c * out.h + oy) * out.w + ox;
                y[out_index] = best;
                argmax[out_index] = best_index;
            }
}

template <typename T>
void maxpool_backward(TensorDims in, TensorDims out, const T* dy, const int* argmax,
                      T* dx) {
    std::fill(dx, dx + in.count(), T(0));
    for (int i = 0; i < out.count(); ++i) dx[argmax[i]] += dy[i];
}

template <typename T>
void relu_forward(const T* x, int n, T* y) {
    for (int i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* x, const T* dy, int n, T* dx) {
    for (int i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void fc_forward(TensorDims in, int width, const T* x, const T* w, const T* b, T* y) {
    const int n = in.count();
    for (int o = 0; o < width; ++o) {
        const T* wrow = w + static_cast<size_t>(o) * n;
        T acc = b[o];
        for (int i = 0; i < n; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
}

template <typename T>
void fc_backward(TensorDims in, int width, const T* x, const T* dy, const T* w, T* dx,
                 T* dw, T* db) {
    const int n = in.count();
    for (int o = 0; o < width; ++o) {
        T g = dy[o];
        T* dwrow = dw + static_cast<size_t>(o) * n;
        for (int i = 0; i < n; ++i) dwrow[i] += g * x[i];
        db[o] += g;
    }
    for (int i = 0; i < n; ++i) {
        T acc = T(0);
        for (int o = 0; o < width; ++o) acc += w[static_cast<size_t>(o) * n + i] * dy[o];
        dx[i] = acc;
    }
}

template <typename T>
void softmax_row(const T* logits, int n, T* probs) {
    T peak = logits[0];
    for (int i = 1; i < n; ++i) peak = std::max(peak, logits[i]);
    T total = T(0);
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - peak);
        total += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= total;
}

// ---------------------------------------------------------------------------
// Whole-net drivers (single sample).

template <typename T>
struct SampleScratch {
    std::vector<std::vector<T>> acts;      // acts[l] = output of layer l
    std::vector<std::vector<int>> argmax;  // per layer; used by maxpool
    std::vector<std::vector<T>> col;       // per layer; im2col buffers for conv
    std::vector<std::vector<T>> dacts;     // backward buffers, one per layer
    std::vector<T> dinput;
    std::vector<T> dcol;

    void prepare(const NetView<T>& view) {
        const auto& layers = view.arch->layers;
        acts.resize(layers.size());
        argmax.resize(layers.size());
        col.resize(layers.size());
        dacts.resize(layers.size());
        size_t max_col = 1;
        for (size_t l = 0; l < layers.size(); ++l) {
            acts[l].resize(view.dims[l].count());
            dacts[l].resize(view.dims[l].count());
            if (layers[l].kind == LayerKind::MaxPool)
                argmax[l].resize(view.dims[l].count());
            if (layers[l].kind == LayerKind::Conv) {
                TensorDims in = view.dims_before(l);
                size_t c = static_cast<size_t>(in.c) * layers[l].kernel *
                           layers[l].kernel * view.dims[l].h * view.dims[l].w;
                col[l].resize(c);
                max_col = std::max(max_col, c);
            }
        }
        dinput.resize(view.input_dims().count());
        dcol.resize(max_col);
    }
};

// Returns the index of the softmax layer's input (the logits).
template <typename T>
void forward_sample(const NetView<T>& view, const T* input, SampleScratch<T>& scratch) {
    const auto& layers = view.arch->layers;
    const T* x = input;
    for (size_t l = 0; l < layers.size(); ++l) {
        const LayerSpec& spec = layers[l];
        TensorDims in = view.dims_before(l);
        TensorDims out = view.dims[l];
        T* y = scratch.acts[l].data();
        switch (spec.kind) {
            case LayerKind::Conv:
                conv_forward(spec, in, out, x, view.weights[l].data(),
                             view.bias[l].data(), scratch.col[l].data(), y);
                break;
            case LayerKind::MaxPool:
                maxpool_forward(spec, in, out, x, y, scratch.argmax[l].data());
                break;
            case LayerKind::Relu:
                relu_forward(x, in.count(), y);
                break;
            case LayerKind::FullyConnected:
                fc_forward(in, spec.width, x, view.weights[l].data(),
                           view.bias[l].data(), y);
                break;
            case LayerKind::SoftmaxOutput:
                softmax_row(x, in.count(), y);
                break;
        }
        x = y;
    }
}

// Cross-entropy of the most recent forward pass, computed from the logits via
// log-sum-exp.
template <typename T>
double sample_loss(const NetView<T>& view, const SampleScratch<T>& scratch, int label) {
    size_t softmax_layer = view.arch->layers.size() - 1;
    const std::vector<T>& logits = softmax_layer == 0
                                       ? scratch.acts[softmax_layer]  // unreachable for valid archs
                                       : scratch.acts[softmax_layer - 1];
    T peak = logits[0];
    for (size_t i = 1; i < logits.size(); ++i) peak = std::max(peak, logits[i]);
    double total = 0.0;
    for (size_t i = 0; i < logits.size(); ++i)
        total += std::exp(static_cast<double>(logits[i] - peak));
    return std::log(total) + static_cast<double>(peak) - static_cast<double>(logits[label]);
}

// Accumulates raw (unnormalized) parameter gradients for one sample into
// grad_w / grad_b; caller divides by the batch size.
template <typename T>
void backward_sample(const NetView<T>& view, const T* input, SampleScratch<T>& scratch,
                     int label, std::vector<std::vector<T>>& grad_w,
                     std::vector<std::vector<T>>& grad_b) {
    const auto& layers = view.arch->layers;
    const size_t last = layers.size() - 1;

    // Softmax + cross-entropy combined: dlogits = probs - onehot.
    {
        const std::vector<T>& probs = scratch.acts[last];
        std::vector<T>& dlogits = scratch.dacts[last - 1];
        for (size_t i = 0; i < probs.size(); ++i) dlogits[i] = probs[i];
        dlogits[label] -= T(1);
    }

    for (size_t l = last - 1; l != static_cast<size_t>(-1); --l) {
        const LayerSpec& spec = layers[l];
        TensorDims in = view.dims_before(l);
        TensorDims out = view.dims[l];
        const T* x = l == 0 ? input : scratch.acts[l - 1].data();
        const T* dy = scratch.dacts[l].data();
        T* dx = l == 0 ? scratch.dinput.data() : scratch.dacts[l - 1].data();
        switch (spec.kind) {
            case LayerKind::Conv:
                conv_backward(spec, in, out, dy, view.weights[l].data(),
                              scratch.col[l].data(), scratch.dcol.data(), dx,
                              grad_w[l].data(), grad_b[l].data());
                break;
            case LayerKind::MaxPool:
                maxpool_backward(in, out, dy, scratch.argmax[l].data(), dx);
                break;
            case LayerKind::Relu:
                relu_backward(x, dy, in.count(), dx);
                break;
            case LayerKind::FullyConnected:
                fc_backward(in, spec.width, x, dy, view.weights[l].data(), dx,
                            grad_w[l].data(), grad_b[l].data());
                break;
            case LayerKind::SoftmaxOutput:
                break;  // handled above
        }
    }
}

}  // namespace qcia::engine
