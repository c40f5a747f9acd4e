#pragma once

#include <memory>

#include <torch/torch.h>

#include "expand/networks.hpp"

namespace expand {

/// Attention prediction network used by Ex-AGIL: the Q trunk followed by
/// transposed convolutions that mirror it back to an 84x84 map in (0, 1), with
/// the trunk features added back at each matching resolution.
class AttentionNetImpl : public torch::nn::Module {
public:
    explicit AttentionNetImpl(const QNetworkSpec& spec);

    /// [B, 4, 84, 84] -> [B, 84, 84]
    torch::Tensor forward(const torch::Tensor& states);

private:
    ConvTrunk trunk_{nullptr};
    torch::nn::ConvTranspose2d up3_{nullptr}, up2_{nullptr}, up1_{nullptr};
};
TORCH_MODULE(AttentionNet);

/// Policy input for Ex-AGIL: the average of the raw and the attention-masked state.
torch::Tensor ex_agil_input(const torch::Tensor& states, const torch::Tensor& attention);

/// Ex-AGIL Q-function. The attention map is detached on the way into the
/// policy, so Q losses never reach the attention network; that network learns
/// from the explanation loss alone.
class ExAgilQ final : public QFunction {
public:
    explicit ExAgilQ(const QNetworkSpec& spec);

    torch::Tensor forward(const torch::Tensor& states) override;
    int action_count() const override { return policy_->action_count(); }

    AttentionNet& attention() { return attention_; }
    QNetwork& policy() { return *policy_; }

private:
    AttentionNet attention_{nullptr};
    std::shared_ptr<QNetwork> policy_;
};

struct GatedOutput {
    torch::Tensor q;         // [B, |A|]
    torch::Tensor saliency;  // [B, 84, 84] in (0, 1)
    torch::Tensor gate;      // [B, 1, side, side] in (0, 1)
};

/// Q-network with a logistic self-attention gate after the second convolution.
/// The gate scales every feature map; two transposed convolutions read the
/// gate activations back out to an 84x84 agent saliency map.
class GatedQNetwork final : public QFunction {
public:
    explicit GatedQNetwork(const QNetworkSpec& spec);

    torch::Tensor forward(const torch::Tensor& states) override { return forward_with_saliency(states).q; }
    GatedOutput forward_with_saliency(const torch::Tensor& states);
    int action_count() const override { return spec_.actions; }

private:
    QNetworkSpec spec_;
    torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, gate_{nullptr}, conv3_{nullptr};
    torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
    torch::nn::ConvTranspose2d read2_{nullptr}, read1_{nullptr};
};

/// Mean squared per-pixel error between a predicted map and the binary human
/// mask. Throws std::invalid_argument on a shape mismatch.
torch::Tensor explanation_loss(const torch::Tensor& predicted, const torch::Tensor& human_mask);

}  // namespace expand
