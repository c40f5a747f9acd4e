#pragma once

#include <array>
#include <memory>
#include <span>

#include <torch/torch.h>

#include "expand/frame.hpp"

namespace expand {

/// DQN trunk: three valid convolutions, one hidden layer, one Q output per action.
struct QNetworkSpec {
    int in_channels = kStackDepth;
    int input_side = kFrameSide;
    std::array<int, 3> channels{32, 64, 64};
    std::array<int, 3> kernels{8, 4, 3};
    std::array<int, 3> strides{4, 2, 1};
    int hidden = 512;
    int actions = 6;

    /// 2 conv channels and 8 hidden units, for gradient checks.
    static QNetworkSpec tiny(int actions);

    /// Spatial side after conv layer `layer` (0-based).
    int side_after(int layer) const;
    int flat_features() const;
};

/// Anything that maps a [B, 4, 84, 84] batch to [B, |A|] Q-values.
class QFunction : public torch::nn::Module {
public:
    virtual torch::Tensor forward(const torch::Tensor& states) = 0;
    virtual int action_count() const = 0;
};

class ConvTrunkImpl : public torch::nn::Module {
public:
    explicit ConvTrunkImpl(const QNetworkSpec& spec);

    /// Returns the activations after every conv layer (post-ReLU).
    std::array<torch::Tensor, 3> forward_all(const torch::Tensor& x);
    torch::Tensor forward(const torch::Tensor& x) { return forward_all(x)[2]; }

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
};
TORCH_MODULE(ConvTrunk);

class QNetwork final : public QFunction {
public:
    explicit QNetwork(const QNetworkSpec& spec);

    torch::Tensor forward(const torch::Tensor& states) override;
    int action_count() const override { return spec_.actions; }
    const QNetworkSpec& spec() const { return spec_; }

private:
    QNetworkSpec spec_;
    ConvTrunk trunk_{nullptr};
    torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};

/// Packs states into a contiguous float batch [B, 4, 84, 84].
torch::Tensor to_batch(std::span<const StackedState> states);
torch::Tensor to_batch(const StackedState& state);

/// target <- (1 - tau) target + tau online over every parameter and buffer.
/// Throws std::invalid_argument when the parameter lists do not line up.
void soft_update(torch::nn::Module& target, const torch::nn::Module& online, double tau);

}  // namespace expand
