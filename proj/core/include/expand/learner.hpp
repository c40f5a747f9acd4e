#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "expand/exploration.hpp"
#include "expand/networks.hpp"
#include "expand/replay.hpp"

namespace expand {

struct DqnHyperparameters {
    double gamma = 0.99;
    int n_step = 5;
    double learning_rate = 1e-4;
    double tau = 0.01;
    int batch_size = 64;
    double alpha = 0.6;
    double beta = 0.4;
    double priority_epsilon = 1e-6;
    std::size_t replay_capacity = 50'000;
};

struct DqnUpdateStats {
    double loss = 0.0;
    std::vector<double> td_errors;
};

/// DQN learner with n-step targets, prioritized replay and soft target
/// updates. Owns the online/target pair and the optimizer; the optimizer
/// covers every online parameter, so auxiliary losses computed on the same
/// network can reuse it.
class EfficientDqn {
public:
    EfficientDqn(std::shared_ptr<QFunction> online, std::shared_ptr<QFunction> target, DqnHyperparameters hp);

    std::vector<float> q_values(const StackedState& state);
    int act(const StackedState& state, const EpsilonSchedule& schedule, std::mt19937_64& rng);

    /// Weighted TD loss of a batch and its TD errors (target - Q).
    torch::Tensor td_loss(const SampledBatch& batch, std::vector<double>* td_errors);

    /// One optimizer step on the batch; no priority bookkeeping.
    DqnUpdateStats update_on(const SampledBatch& batch);

    /// Samples from `replay`, steps the optimizer, refreshes priorities.
    DqnUpdateStats update(PrioritizedReplay& replay, std::mt19937_64& rng);

    /// zero_grad, backward, step. Throws std::runtime_error on a non-finite loss.
    void step(const torch::Tensor& loss);

    void soft_update_target() { soft_update(*target_, *online_, hp_.tau); }

    QFunction& online() { return *online_; }
    QFunction& target() { return *target_; }
    const std::shared_ptr<QFunction>& online_ptr() const { return online_; }
    torch::optim::Adam& optimizer() { return *optimizer_; }
    const DqnHyperparameters& hyperparameters() const { return hp_; }

private:
    std::shared_ptr<QFunction> online_;
    std::shared_ptr<QFunction> target_;
    DqnHyperparameters hp_;
    std::unique_ptr<torch::optim::Adam> optimizer_;
};

}  // namespace expand
