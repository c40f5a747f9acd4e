#include "expand/losses.hpp"

#include <limits>
#include <stdexcept>

namespace expand {

torch::Tensor advantage_loss(const torch::Tensor& q, const torch::Tensor& actions, const torch::Tensor& labels,
                             double margin) {
    if (q.dim() != 2 || actions.dim() != 1 || labels.dim() != 1 || q.size(0) != actions.size(0) ||
        q.size(0) != labels.size(0)) {
        throw std::invalid_argument("advantage_loss: expected q [B, A], actions [B], labels [B]");
    }
    if (!(margin > 0.0)) {
        throw std::invalid_argument("advantage_loss: margin must be positive");
    }
    const auto idx = actions.to(torch::kLong);
    const auto good = labels.to(q.dtype()) > 0;
    const auto greedy = q.argmax(1) == idx;
    if (q.size(1) < 2 && (greedy & ~good).any().item<bool>()) {
        throw std::invalid_argument("advantage_loss: bad feedback on the only action");
    }

    const auto q_taken = q.gather(1, idx.unsqueeze(1)).squeeze(1);
    const auto q_best = std::get<0>(q.max(1));
    const auto taken_mask = torch::zeros_like(q, torch::kBool).scatter_(1, idx.unsqueeze(1), true);
    const auto q_second = std::get<0>(q.masked_fill(taken_mask, -std::numeric_limits<double>::infinity()).max(1));

    const auto zero = torch::zeros_like(q_taken);
    const auto good_loss = torch::where(greedy, zero, q_best - q_taken);
    const auto bad_loss = torch::where(greedy, q_taken - (q_second - margin), zero);
    return torch::where(good, good_loss, bad_loss);
}

torch::Tensor invariance_loss(const torch::Tensor& q, const torch::Tensor& q_augmented) {
    if (q.dim() != 2 || q_augmented.dim() != 3 || q_augmented.size(1) != q.size(0) ||
        q_augmented.size(2) != q.size(1)) {
        throw std::invalid_argument("invariance_loss: expected q [B, A] and q_augmented [g, B, A]");
    }
    return (q.unsqueeze(0) - q_augmented).abs().mean(2).mean(0);
}

torch::Tensor weighted_td_loss(const torch::Tensor& q_taken, const torch::Tensor& targets, const torch::Tensor& weights) {
    return (weights * (targets - q_taken).pow(2)).mean();
}

}  // namespace expand
