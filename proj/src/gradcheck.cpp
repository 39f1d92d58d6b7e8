#include <cmath>

#include "qcia/gradcheck.hpp"
#include "qcia/net_engine.hpp"

namespace qcia {

namespace {

std::vector<double> to_double_batch(const PatchBatch& batch) {
    return std::vector<double>(batch.data.begin(), batch.data.end());
}

double mean_loss(const engine::NetView<double>& view, const std::vector<double>& data,
                 int count, const std::vector<int>& labels,
                 engine::SampleScratch<double>& scratch) {
    const int sample_size = view.input_dims().count();
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        engine::forward_sample(view, data.data() + static_cast<size_t>(i) * sample_size,
                               scratch);
        total += engine::sample_loss(view, scratch, labels[i]);
    }
    return total / count;
}

void check_inputs(const Network& net, const PatchBatch& batch,
                  const std::vector<int>& labels) {
    TensorDims expected{net.arch.input_channels, net.arch.input_height,
                        net.arch.input_width};
    if (batch.dims != expected || batch.count < 1)
        raise(ErrorCode::ShapeMismatch, "batch does not match arch input");
    if (labels.size() != static_cast<size_t>(batch.count))
        raise(ErrorCode::ShapeMismatch, "label count mismatch");
    for (int label : labels)
        if (label < 0 || label >= net.arch.num_classes)
            raise(ErrorCode::LabelOutOfRange, "label outside [0, num_classes)");
}

}  // namespace

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
analytic_gradients(const Network& net, const PatchBatch& batch,
                   const std::vector<int>& labels) {
    check_inputs(net, batch, labels);
    auto view = engine::make_view<double>(net);
    std::vector<double> data = to_double_batch(batch);
    const int sample_size = view.input_dims().count();

    std::vector<std::vector<double>> grad_w(view.weights.size()),
        grad_b(view.bias.size());
    for (size_t l = 0; l < view.weights.size(); ++l) {
        grad_w[l].assign(view.weights[l].size(), 0.0);
        grad_b[l].assign(view.bias[l].size(), 0.0);
    }

    engine::SampleScratch<double> scratch;
    scratch.prepare(view);
    for (int i = 0; i < batch.count; ++i) {
        const double* x = data.data() + static_cast<size_t>(i) * sample_size;
        engine::forward_sample(view, x, scratch);
        engine::backward_sample(view, x, scratch, labels[i], grad_w, grad_b);
    }
    for (auto& layer : grad_w)
        for (double& g : layer) g /= batch.count;
    for (auto& layer : grad_b)
        for (double& g : layer) g /= batch.count;
    return {std::move(grad_w), std::move(grad_b)};
}

double grad_check_against(const Network& net, const PatchBatch& batch,
                          const std::vector<int>& labels, double step,
                          const std::vector<std::vector<double>>& analytic_w,
                          const std::vector<std::vector<double>>& analytic_b) {
    check_inputs(net, batch, labels);
    if (net.parameter_count() > 50'000)
        raise(ErrorCode::TooManyParameters,
              "grad_check is limited to nets with <= 50k parameters");

    auto view = engine::make_view<double>(net);
    std::vector<double> data = to_double_batch(batch);
    engine::SampleScratch<double> scratch;
    scratch.prepare(view);

    double worst = 0.0;
    auto compare = [&](std::vector<double>& params, size_t i, double analytic) {
        double original = params[i];
        params[i] = original + step;
        double up = mean_loss(view, data, batch.count, labels, scratch);
        params[i] = original - step;
        double down = mean_loss(view, data, batch.count, labels, scratch);
        params[i] = original;
        double numeric = (up - down) / (2.0 * step);
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };

    for (size_t l = 0; l < view.weights.size(); ++l) {
        if (analytic_w[l].size() != view.weights[l].size() ||
            analytic_b[l].size() != view.bias[l].size())
            raise(ErrorCode::ShapeMismatch, "analytic gradient shape mismatch");
        for (size_t i = 0; i < view.weights[l].size(); ++i)
            compare(view.weights[l], i, analytic_w[l][i]);
        for (size_t i = 0; i < view.bias[l].size(); ++i)
            compare(view.bias[l], i, analytic_b[l][i]);
    }
    return worst;
}

double grad_check(const Network& net, const PatchBatch& batch,
                  const std::vector<int>& labels, double step) {
    auto [grad_w, grad_b] = analytic_gradients(net, batch, labels);
    return grad_check_against(net, batch, labels, step, grad_w, grad_b);
}

}  // namespace qcia
