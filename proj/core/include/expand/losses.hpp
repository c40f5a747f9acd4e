#pragma once

#include <torch/torch.h>

namespace expand {

/// Batched advantage loss, one value per row.
///   q:       [B, |A|]
///   actions: [B] int64
///   labels:  [B] holding +1 / -1
/// Greedy rows are detected with argmax (lowest index wins ties).
torch::Tensor advantage_loss(const torch::Tensor& q, const torch::Tensor& actions, const torch::Tensor& labels,
                             double margin);

/// Per-row invariance loss between q [B, |A|] and g augmented copies [g, B, |A|].
torch::Tensor invariance_loss(const torch::Tensor& q, const torch::Tensor& q_augmented);

/// Importance-weighted mean squared TD error.
torch::Tensor weighted_td_loss(const torch::Tensor& q_taken, const torch::Tensor& targets, const torch::Tensor& weights);

}  // namespace expand
