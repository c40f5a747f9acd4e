#include "expand/baselines.hpp"

#include <stdexcept>

namespace expand {

namespace nn = torch::nn;

AttentionNetImpl::AttentionNetImpl(const QNetworkSpec& spec) {
    trunk_ = register_module("trunk", ConvTrunk(spec));
    up3_ = register_module("up3", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(spec.channels[2], spec.channels[1],
                                                                                   spec.kernels[2])
                                                          .stride(spec.strides[2])));
    up2_ = register_module("up2", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(spec.channels[1], spec.channels[0],
                                                                                   spec.kernels[1])
                                                          .stride(spec.strides[1])));
    up1_ = register_module(
        "up1", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(spec.channels[0], 1, spec.kernels[0]).stride(spec.strides[0])));
}

torch::Tensor AttentionNetImpl::forward(const torch::Tensor& states) {
    const auto f = trunk_->forward_all(states);
    auto h = torch::relu(up3_->forward(f[2], f[1].sizes().slice(2))) + f[1];
    h = torch::relu(up2_->forward(h, f[0].sizes().slice(2))) + f[0];
    return torch::sigmoid(up1_->forward(h, states.sizes().slice(2))).squeeze(1);
}

torch::Tensor ex_agil_input(const torch::Tensor& states, const torch::Tensor& attention) {
    return 0.5 * (states + states * attention.unsqueeze(1));
}

ExAgilQ::ExAgilQ(const QNetworkSpec& spec) {
    attention_ = register_module("attention", AttentionNet(spec));
    policy_ = register_module("policy", std::make_shared<QNetwork>(spec));
}

torch::Tensor ExAgilQ::forward(const torch::Tensor& states) {
    const auto map = attention_->forward(states).detach();
    return policy_->forward(ex_agil_input(states, map));
}

GatedQNetwork::GatedQNetwork(const QNetworkSpec& spec) : spec_(spec) {
    conv1_ = register_module(
        "conv1", nn::Conv2d(nn::Conv2dOptions(spec.in_channels, spec.channels[0], spec.kernels[0]).stride(spec.strides[0])));
    conv2_ = register_module(
        "conv2", nn::Conv2d(nn::Conv2dOptions(spec.channels[0], spec.channels[1], spec.kernels[1]).stride(spec.strides[1])));
    gate_ = register_module("gate", nn::Conv2d(nn::Conv2dOptions(spec.channels[1], 1, 1)));
    conv3_ = register_module(
        "conv3", nn::Conv2d(nn::Conv2dOptions(spec.channels[1], spec.channels[2], spec.kernels[2]).stride(spec.strides[2])));
    fc1_ = register_module("fc1", nn::Linear(spec.flat_features(), spec.hidden));
    fc2_ = register_module("fc2", nn::Linear(spec.hidden, spec.actions));
    read2_ = register_module(
        "read2", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(1, spec.channels[0], spec.kernels[1]).stride(spec.strides[1])));
    read1_ = register_module(
        "read1", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(spec.channels[0], 1, spec.kernels[0]).stride(spec.strides[0])));
}

GatedOutput GatedQNetwork::forward_with_saliency(const torch::Tensor& states) {
    auto h = torch::relu(conv1_->forward(states));
    h = torch::relu(conv2_->forward(h));
    auto gate = torch::sigmoid(gate_->forward(h));
    h = torch::relu(conv3_->forward(h * gate));
    auto q = fc2_->forward(torch::relu(fc1_->forward(h.flatten(1))));
    auto saliency = torch::sigmoid(read1_->forward(torch::relu(read2_->forward(gate)))).squeeze(1);
    return {q, saliency, gate};
}

torch::Tensor explanation_loss(const torch::Tensor& predicted, const torch::Tensor& human_mask) {
    if (predicted.sizes() != human_mask.sizes()) {
        throw std::invalid_argument("explanation_loss: prediction and mask shapes differ");
    }
    return (predicted - human_mask.to(predicted.dtype())).pow(2).mean();
}

}  // namespace expand
