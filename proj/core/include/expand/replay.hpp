#pragma once

#include <cstddef>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "expand/frame.hpp"

namespace expand {

/// Discounted sum of (already clipped) rewards plus gamma^len * bootstrap_q
/// when the bootstrap state is valid. Throws on an empty reward sequence.
double n_step_return(std::span<const double> rewards, double bootstrap_q, bool bootstrap_valid, double gamma);

double clip_reward(double r);

struct Transition {
    StackedState state;
    int action = 0;
    double n_step_return = 0.0;  // discounted clipped rewards only, no bootstrap term
    StackedState bootstrap_state;
    bool bootstrap_valid = false;
    double bootstrap_discount = 0.0;  // gamma^len, 0 when not bootstrapping
};

/// Turns a stream of one-step experience into n-step transitions.
class NStepAccumulator {
public:
    NStepAccumulator(int n, double gamma);

    /// Feeds (s, a, r, s'). Returns the transitions that became complete.
    /// `terminal` ends the episode without bootstrapping; `truncated` ends it
    /// but keeps bootstrapping from s'.
    std::vector<Transition> push(const StackedState& state, int action, double reward, const StackedState& next_state,
                                 bool terminal, bool truncated);

    void clear() { pending_.clear(); }
    std::size_t pending() const { return pending_.size(); }

private:
    struct Pending {
        StackedState state;
        int action;
        double reward;
    };

    Transition make(std::size_t first, const StackedState& bootstrap, bool valid) const;

    int n_;
    double gamma_;
    std::deque<Pending> pending_;
};

/// Binary sum tree over leaf priorities; supports O(log N) update and
/// prefix-sum lookup. Also tracks the maximum leaf.
class SumTree {
public:
    explicit SumTree(std::size_t capacity);

    void set(std::size_t leaf, double value);
    double get(std::size_t leaf) const { return sums_[leaf + base_]; }
    double total() const { return sums_[1]; }
    double max() const { return maxes_[1]; }
    std::size_t capacity() const { return capacity_; }

    /// Leaf i with prefix(i) <= mass < prefix(i + 1).
    std::size_t find(double mass) const;

private:
    std::size_t capacity_;
    std::size_t base_;
    std::vector<double> sums_;
    std::vector<double> maxes_;
};

struct SampledBatch {
    std::vector<Transition> transitions;
    std::vector<double> weights;      // (N P(i))^-beta / max over the batch
    std::vector<std::size_t> indices;
};

/// Proportional prioritized replay with FIFO eviction.
class PrioritizedReplay {
public:
    PrioritizedReplay(std::size_t capacity, double alpha, double priority_epsilon = 1e-6);

    /// New items enter with the current maximum priority (1 for the first).
    /// Priorities are kept raw; the tree stores priority^alpha.
    void add(Transition t);

    /// Independent draws, so a batch larger than the buffer repeats items.
    /// Throws std::logic_error on an empty buffer.
    SampledBatch sample(std::size_t batch_size, double beta, std::mt19937_64& rng) const;

    /// priority = |td| + priority_epsilon.
    void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

    /// P(i) for diagnostics and tests.
    double probability(std::size_t index) const;
    double priority(std::size_t index) const { return priorities_[index]; }
    /// Largest priority currently stored (1 while empty).
    double max_priority() const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    double alpha() const { return alpha_; }
    const Transition& at(std::size_t index) const { return items_[index]; }

private:
    std::size_t capacity_;
    double alpha_;
    double priority_epsilon_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
    std::vector<Transition> items_;
    std::vector<double> priorities_;
    SumTree tree_;
};

}  // namespace expand
