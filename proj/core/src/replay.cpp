#include "expand/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace expand {

double clip_reward(double r) { return std::clamp(r, -1.0, 1.0); }

double n_step_return(std::span<const double> rewards, double bootstrap_q, bool bootstrap_valid, double gamma) {
    if (rewards.empty()) {
        throw std::invalid_argument("n_step_return: empty reward sequence");
    }
    double total = 0.0;
    double discount = 1.0;
    for (double r : rewards) {
        total += discount * r;
        discount *= gamma;
    }
    if (bootstrap_valid) {
        total += discount * bootstrap_q;
    }
    return total;
}

NStepAccumulator::NStepAccumulator(int n, double gamma) : n_(n), gamma_(gamma) {
    if (n < 1) {
        throw std::invalid_argument("NStepAccumulator: n must be >= 1");
    }
}

Transition NStepAccumulator::make(std::size_t first, const StackedState& bootstrap, bool valid) const {
    Transition t;
    t.state = pending_[first].state;
    t.action = pending_[first].action;
    double discount = 1.0;
    for (std::size_t i = first; i < pending_.size(); ++i) {
        t.n_step_return += discount * pending_[i].reward;
        discount *= gamma_;
    }
    t.bootstrap_state = bootstrap;
    t.bootstrap_valid = valid;
    t.bootstrap_discount = valid ? discount : 0.0;
    return t;
}

std::vector<Transition> NStepAccumulator::push(const StackedState& state, int action, double reward,
                                               const StackedState& next_state, bool terminal, bool truncated) {
    pending_.push_back({state, action, clip_reward(reward)});
    std::vector<Transition> out;
    if (terminal || truncated) {
        const bool bootstrap = truncated && !terminal;
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            out.push_back(make(i, next_state, bootstrap));
        }
        pending_.clear();
        return out;
    }
    if (static_cast<int>(pending_.size()) == n_) {
        out.push_back(make(0, next_state, true));
        pending_.pop_front();
    }
    return out;
}

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("SumTree: capacity must be positive");
    }
    base_ = 1;
    while (base_ < capacity) {
        base_ <<= 1;
    }
    sums_.assign(2 * base_, 0.0);
    maxes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value) {
    std::size_t i = leaf + base_;
    sums_[i] = value;
    maxes_[i] = value;
    for (i >>= 1; i >= 1; i >>= 1) {
        sums_[i] = sums_[2 * i] + sums_[2 * i + 1];
        maxes_[i] = std::max(maxes_[2 * i], maxes_[2 * i + 1]);
    }
}

std::size_t SumTree::find(double mass) const {
    std::size_t i = 1;
    while (i < base_) {
        const double left = sums_[2 * i];
        if (mass < left || sums_[2 * i + 1] <= 0.0) {
            i = 2 * i;
        } else {
            mass -= left;
            i = 2 * i + 1;
        }
    }
    return std::min(i - base_, capacity_ - 1);
}

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double alpha, double priority_epsilon)
    : capacity_(capacity), alpha_(alpha), priority_epsilon_(priority_epsilon), tree_(capacity) {
    items_.resize(capacity);
    priorities_.assign(capacity, 0.0);
}

double PrioritizedReplay::max_priority() const {
    if (size_ == 0) {
        return 1.0;
    }
    // The tree holds p^alpha; invert to report the raw priority.
    return std::pow(tree_.max(), 1.0 / alpha_);
}

void PrioritizedReplay::add(Transition t) {
    const double p = max_priority();
    items_[next_] = std::move(t);
    priorities_[next_] = p;
    tree_.set(next_, std::pow(p, alpha_));
    next_ = (next_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

double PrioritizedReplay::probability(std::size_t index) const { return tree_.get(index) / tree_.total(); }

SampledBatch PrioritizedReplay::sample(std::size_t batch_size, double beta, std::mt19937_64& rng) const {
    if (size_ == 0) {
        throw std::logic_error("PrioritizedReplay::sample: buffer is empty");
    }
    SampledBatch batch;
    batch.transitions.reserve(batch_size);
    batch.weights.reserve(batch_size);
    batch.indices.reserve(batch_size);

    const double total = tree_.total();
    std::uniform_real_distribution<double> draw(0.0, total);
    double max_weight = 0.0;
    for (std::size_t k = 0; k < batch_size; ++k) {
        std::size_t idx = tree_.find(draw(rng));
        if (idx >= size_) {
            idx = size_ - 1;
        }
        const double p = tree_.get(idx) / total;
        const double w = std::pow(static_cast<double>(size_) * p, -beta);
        max_weight = std::max(max_weight, w);
        batch.indices.push_back(idx);
        batch.weights.push_back(w);
        batch.transitions.push_back(items_[idx]);
    }
    for (auto& w : batch.weights) {
        w /= max_weight;
    }
    return batch;
}

void PrioritizedReplay::update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) {
    if (indices.size() != td_errors.size()) {
        throw std::invalid_argument("update_priorities: size mismatch");
    }
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const double p = std::abs(td_errors[k]) + priority_epsilon_;
        priorities_[indices[k]] = p;
        tree_.set(indices[k], std::pow(p, alpha_));
    }
}

}  // namespace expand
