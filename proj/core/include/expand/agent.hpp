#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "expand/feedback.hpp"
#include "expand/learner.hpp"
#include "expand/saliency_augment.hpp"

namespace expand {

enum class Algo {
    kExpand,
    kExpandNoInvariance,
    kExpandNoAugAdvantage,
    kDqnFeedback,
    kExAgil,
    kAttentionAlign,
    kAugCrop,
    kAugBlur,
    kDqnOnly,
};

/// Throws std::invalid_argument for an unknown name.
Algo parse_algo(std::string_view name);
std::string_view algo_name(Algo algo);
std::vector<Algo> all_algos();

enum class AugmentationKind { kNone, kSaliencyBlur, kRandomCrop, kRandomBlur };

/// What each algorithm does on a feedback tick.
struct AlgoTraits {
    bool uses_feedback = true;
    AugmentationKind augmentation = AugmentationKind::kNone;
    bool advantage_on_augmented = false;
    bool invariance = false;
    bool explanation = false;
};

AlgoTraits traits_of(Algo algo);

struct AgentConfig {
    Algo algo = Algo::kExpand;
    QNetworkSpec network;
    DqnHyperparameters dqn;
    int feedback_batch_size = 64;
    double advantage_margin = 0.05;
    LossWeights loss_weights;
    std::string augmentation_preset = "aug5";
    /// Copies per record for the context-agnostic augmentations.
    int agnostic_augmentations = 5;
    double explanation_weight = 0.1;
};

struct FeedbackStepStats {
    double advantage = 0.0;
    double invariance = 0.0;
    double explanation = 0.0;
    double total = 0.0;
    int records = 0;
};

/// One training agent: an Efficient DQN plus the feedback objective of its
/// algorithm. Networks are built from a single config so every algorithm
/// shares replay, exploration and optimizer settings.
class Agent {
public:
    Agent(const AgentConfig& config, std::uint64_t seed);

    int act(const StackedState& state, const EpsilonSchedule& schedule, std::mt19937_64& rng) {
        return dqn_.act(state, schedule, rng);
    }
    std::vector<float> q_values(const StackedState& state) { return dqn_.q_values(state); }

    DqnUpdateStats env_update(PrioritizedReplay& replay, std::mt19937_64& rng) { return dqn_.update(replay, rng); }

    /// One optimizer step on a feedback mini-batch. Returns nullopt when the
    /// algorithm ignores feedback or the buffer is empty.
    std::optional<FeedbackStepStats> feedback_update(const FeedbackBuffer& buffer, std::mt19937_64& rng);

    /// Loss terms for a fixed batch, differentiable.
    struct FeedbackLoss {
        torch::Tensor total;
        FeedbackStepStats stats;
    };
    FeedbackLoss feedback_loss(const std::vector<FeedbackSample>& batch, std::mt19937_64& rng);

    /// Augmented copies of one record's state for this algorithm.
    std::vector<StackedState> augment(const FeedbackSample& sample, std::mt19937_64& rng);

    void soft_update_target() { dqn_.soft_update_target(); }

    const AgentConfig& config() const { return config_; }
    const AlgoTraits& traits() const { return traits_; }
    EfficientDqn& dqn() { return dqn_; }
    /// Number of augmentation calls so far.
    std::size_t augmentation_calls() const { return augmentation_calls_; }

    void save(const std::string& path);
    void load(const std::string& path);

private:
    AgentConfig config_;
    AlgoTraits traits_;
    AugmentationPreset preset_;
    EfficientDqn dqn_;
    std::size_t augmentation_calls_ = 0;
};

}  // namespace expand
