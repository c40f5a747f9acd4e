#include "expand/learner.hpp"

#include <cmath>
#include <stdexcept>

#include "expand/losses.hpp"

namespace expand {

EfficientDqn::EfficientDqn(std::shared_ptr<QFunction> online, std::shared_ptr<QFunction> target, DqnHyperparameters hp)
    : online_(std::move(online)), target_(std::move(target)), hp_(hp) {
    if (!online_ || !target_) {
        throw std::invalid_argument("EfficientDqn: null network");
    }
    soft_update(*target_, *online_, 1.0);
    for (auto& p : target_->parameters()) {
        p.set_requires_grad(false);
    }
    optimizer_ = std::make_unique<torch::optim::Adam>(online_->parameters(),
                                                      torch::optim::AdamOptions(hp_.learning_rate));
}

std::vector<float> EfficientDqn::q_values(const StackedState& state) {
    torch::NoGradGuard no_grad;
    const auto q = online_->forward(to_batch(state)).contiguous();
    const float* p = q.data_ptr<float>();
    return {p, p + q.size(1)};
}

int EfficientDqn::act(const StackedState& state, const EpsilonSchedule& schedule, std::mt19937_64& rng) {
    const auto q = q_values(state);
    return select_action(q, schedule, rng);
}

torch::Tensor EfficientDqn::td_loss(const SampledBatch& batch, std::vector<double>* td_errors) {
    const auto n = static_cast<std::int64_t>(batch.transitions.size());
    if (n == 0) {
        throw std::invalid_argument("td_loss: empty batch");
    }
    std::vector<StackedState> states, next_states;
    states.reserve(static_cast<std::size_t>(n));
    next_states.reserve(static_cast<std::size_t>(n));
    auto actions = torch::empty({n}, torch::kLong);
    auto returns = torch::empty({n});
    auto discounts = torch::empty({n});
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& t = batch.transitions[static_cast<std::size_t>(i)];
        states.push_back(t.state);
        next_states.push_back(t.bootstrap_state);
        actions[i] = t.action;
        returns[i] = static_cast<float>(t.n_step_return);
        discounts[i] = static_cast<float>(t.bootstrap_valid ? t.bootstrap_discount : 0.0);
    }
    auto weights = torch::tensor(std::vector<float>(batch.weights.begin(), batch.weights.end()));
    const auto dtype = online_->parameters().front().scalar_type();
    returns = returns.to(dtype);
    discounts = discounts.to(dtype);
    weights = weights.to(dtype);

    torch::Tensor targets;
    {
        torch::NoGradGuard no_grad;
        const auto bootstrap = std::get<0>(target_->forward(to_batch(next_states).to(dtype)).max(1));
        targets = returns + discounts * bootstrap;
    }
    const auto q_taken = online_->forward(to_batch(states).to(dtype)).gather(1, actions.unsqueeze(1)).squeeze(1);
    if (td_errors) {
        const auto td = (targets - q_taken.detach()).to(torch::kDouble).contiguous();
        td_errors->assign(td.data_ptr<double>(), td.data_ptr<double>() + n);
    }
    return weighted_td_loss(q_taken, targets, weights);
}

void EfficientDqn::step(const torch::Tensor& loss) {
    const double value = loss.item<double>();
    if (!std::isfinite(value)) {
        throw std::runtime_error("EfficientDqn: non-finite loss " + std::to_string(value) + "; aborting run");
    }
    optimizer_->zero_grad();
    loss.backward();
    optimizer_->step();
}

DqnUpdateStats EfficientDqn::update_on(const SampledBatch& batch) {
    DqnUpdateStats stats;
    const auto loss = td_loss(batch, &stats.td_errors);
    stats.loss = loss.item<double>();
    step(loss);
    return stats;
}

DqnUpdateStats EfficientDqn::update(PrioritizedReplay& replay, std::mt19937_64& rng) {
    const auto batch = replay.sample(static_cast<std::size_t>(hp_.batch_size), hp_.beta, rng);
    auto stats = update_on(batch);
    replay.update_priorities(batch.indices, stats.td_errors);
    return stats;
}

}  // namespace expand
