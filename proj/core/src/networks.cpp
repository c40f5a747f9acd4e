#include "expand/networks.hpp"

#include <stdexcept>
#include <string>

namespace expand {

QNetworkSpec QNetworkSpec::tiny(int actions) {
    QNetworkSpec spec;
    spec.channels = {2, 2, 2};
    spec.hidden = 8;
    spec.actions = actions;
    return spec;
}

int QNetworkSpec::side_after(int layer) const {
    int side = input_side;
    for (int l = 0; l <= layer; ++l) {
        side = (side - kernels[static_cast<std::size_t>(l)]) / strides[static_cast<std::size_t>(l)] + 1;
    }
    return side;
}

int QNetworkSpec::flat_features() const {
    const int side = side_after(2);
    return channels[2] * side * side;
}

ConvTrunkImpl::ConvTrunkImpl(const QNetworkSpec& spec) {
    namespace nn = torch::nn;
    conv1 = register_module(
        "conv1", nn::Conv2d(nn::Conv2dOptions(spec.in_channels, spec.channels[0], spec.kernels[0]).stride(spec.strides[0])));
    conv2 = register_module(
        "conv2", nn::Conv2d(nn::Conv2dOptions(spec.channels[0], spec.channels[1], spec.kernels[1]).stride(spec.strides[1])));
    conv3 = register_module(
        "conv3", nn::Conv2d(nn::Conv2dOptions(spec.channels[1], spec.channels[2], spec.kernels[2]).stride(spec.strides[2])));
}

std::array<torch::Tensor, 3> ConvTrunkImpl::forward_all(const torch::Tensor& x) {
    auto h1 = torch::relu(conv1->forward(x));
    auto h2 = torch::relu(conv2->forward(h1));
    auto h3 = torch::relu(conv3->forward(h2));
    return {h1, h2, h3};
}

QNetwork::QNetwork(const QNetworkSpec& spec) : spec_(spec) {
    if (spec.actions < 1) {
        throw std::invalid_argument("QNetwork: need at least one action");
    }
    if (spec.side_after(2) < 1) {
        throw std::invalid_argument("QNetwork: input too small for the conv stack");
    }
    trunk_ = register_module("trunk", ConvTrunk(spec));
    fc1_ = register_module("fc1", torch::nn::Linear(spec.flat_features(), spec.hidden));
    fc2_ = register_module("fc2", torch::nn::Linear(spec.hidden, spec.actions));
}

torch::Tensor QNetwork::forward(const torch::Tensor& states) {
    auto h = trunk_->forward(states).flatten(1);
    return fc2_->forward(torch::relu(fc1_->forward(h)));
}

torch::Tensor to_batch(std::span<const StackedState> states) {
    auto batch = torch::empty({static_cast<std::int64_t>(states.size()), kStackDepth, kFrameSide, kFrameSide});
    float* data = batch.data_ptr<float>();
    const std::size_t stride = static_cast<std::size_t>(kStackDepth) * kFramePixels;
    for (std::size_t i = 0; i < states.size(); ++i) {
        states[i].copy_to(std::span<float>(data + i * stride, stride));
    }
    return batch;
}

torch::Tensor to_batch(const StackedState& state) { return to_batch(std::span<const StackedState>(&state, 1)); }

void soft_update(torch::nn::Module& target, const torch::nn::Module& online, double tau) {
    const auto dst = target.named_parameters(true);
    const auto src = online.named_parameters(true);
    if (dst.size() != src.size()) {
        throw std::invalid_argument("soft_update: parameter count mismatch");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const auto& d = dst[i];
        const auto& s = src[i];
        if (d.key() != s.key() || d.value().sizes() != s.value().sizes()) {
            throw std::invalid_argument("soft_update: parameter '" + d.key() + "' does not match '" + s.key() + "'");
        }
    }
    torch::NoGradGuard no_grad;
    for (std::size_t i = 0; i < dst.size(); ++i) {
        auto t = dst[i].value();
        const auto& o = src[i].value();
        if (tau >= 1.0) {
            t.copy_(o);
        } else if (tau > 0.0) {
            t.mul_(1.0 - tau).add_(o, tau);
        }
    }
}

}  // namespace expand
