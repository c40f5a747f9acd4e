#include "expand/agent.hpp"

#include <stdexcept>

#include "expand/baselines.hpp"
#include "expand/losses.hpp"

namespace expand {

namespace {

struct AlgoEntry {
    Algo algo;
    std::string_view name;
};

constexpr AlgoEntry kAlgos[] = {
    {Algo::kExpand, "expand"},
    {Algo::kExpandNoInvariance, "expand-no-invariance"},
    {Algo::kExpandNoAugAdvantage, "expand-no-aug-advantage"},
    {Algo::kDqnFeedback, "dqn-feedback"},
    {Algo::kExAgil, "ex-agil"},
    {Algo::kAttentionAlign, "attention-align"},
    {Algo::kAugCrop, "aug-crop"},
    {Algo::kAugBlur, "aug-blur"},
    {Algo::kDqnOnly, "dqn-only"},
};

std::shared_ptr<QFunction> make_network(Algo algo, const QNetworkSpec& spec) {
    switch (algo) {
        case Algo::kExAgil: return std::make_shared<ExAgilQ>(spec);
        case Algo::kAttentionAlign: return std::make_shared<GatedQNetwork>(spec);
        default: return std::make_shared<QNetwork>(spec);
    }
}

EfficientDqn make_dqn(const AgentConfig& config, std::uint64_t seed) {
    torch::manual_seed(seed);
    auto online = make_network(config.algo, config.network);
    auto target = make_network(config.algo, config.network);
    return EfficientDqn(std::move(online), std::move(target), config.dqn);
}

torch::Tensor mask_batch(const std::vector<FeedbackSample>& batch) {
    auto masks = torch::empty({static_cast<std::int64_t>(batch.size()), kFrameSide, kFrameSide});
    float* data = masks.data_ptr<float>();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto bits = batch[i].mask->bits();
        for (std::size_t p = 0; p < bits.size(); ++p) {
            data[i * kFramePixels + p] = bits[p] ? 1.0f : 0.0f;
        }
    }
    return masks;
}

}  // namespace

Algo parse_algo(std::string_view name) {
    for (const auto& e : kAlgos) {
        if (e.name == name) {
            return e.algo;
        }
    }
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

std::string_view algo_name(Algo algo) {
    for (const auto& e : kAlgos) {
        if (e.algo == algo) {
            return e.name;
        }
    }
    return "?";
}

std::vector<Algo> all_algos() {
    std::vector<Algo> out;
    for (const auto& e : kAlgos) {
        out.push_back(e.algo);
    }
    return out;
}

AlgoTraits traits_of(Algo algo) {
    AlgoTraits t;
    switch (algo) {
        case Algo::kExpand:
            t.augmentation = AugmentationKind::kSaliencyBlur;
            t.advantage_on_augmented = true;
            t.invariance = true;
            break;
        case Algo::kExpandNoInvariance:
            t.augmentation = AugmentationKind::kSaliencyBlur;
            t.advantage_on_augmented = true;
            break;
        case Algo::kExpandNoAugAdvantage:
            t.augmentation = AugmentationKind::kSaliencyBlur;
            t.invariance = true;
            break;
        case Algo::kDqnFeedback: break;
        case Algo::kExAgil: t.explanation = true; break;
        case Algo::kAttentionAlign: t.explanation = true; break;
        case Algo::kAugCrop:
            t.augmentation = AugmentationKind::kRandomCrop;
            t.advantage_on_augmented = true;
            t.invariance = true;
            break;
        case Algo::kAugBlur:
            t.augmentation = AugmentationKind::kRandomBlur;
            t.advantage_on_augmented = true;
            t.invariance = true;
            break;
        case Algo::kDqnOnly: t.uses_feedback = false; break;
    }
    return t;
}

Agent::Agent(const AgentConfig& config, std::uint64_t seed)
    : config_(config),
      traits_(traits_of(config.algo)),
      preset_(preset_bank(config.augmentation_preset)),
      dqn_(make_dqn(config, seed)) {}

std::vector<StackedState> Agent::augment(const FeedbackSample& sample, std::mt19937_64& rng) {
    std::vector<StackedState> out;
    const auto& state = sample.record->state;
    switch (traits_.augmentation) {
        case AugmentationKind::kNone: return out;
        case AugmentationKind::kSaliencyBlur:
            for (const auto& filter : preset_) {
                out.push_back(perturb_state(state, *sample.mask, filter));
            }
            break;
        case AugmentationKind::kRandomCrop:
            for (int i = 0; i < config_.agnostic_augmentations; ++i) {
                out.push_back(random_crop(state, rng));
            }
            break;
        case AugmentationKind::kRandomBlur:
            for (int i = 0; i < config_.agnostic_augmentations; ++i) {
                out.push_back(random_blur(state, rng));
            }
            break;
    }
    ++augmentation_calls_;
    return out;
}

Agent::FeedbackLoss Agent::feedback_loss(const std::vector<FeedbackSample>& batch, std::mt19937_64& rng) {
    const auto b = static_cast<std::int64_t>(batch.size());
    if (b == 0) {
        throw std::invalid_argument("feedback_loss: empty batch");
    }
    std::vector<StackedState> states;
    states.reserve(batch.size());
    auto actions = torch::empty({b}, torch::kLong);
    auto labels = torch::empty({b});
    for (std::int64_t i = 0; i < b; ++i) {
        const auto& r = *batch[static_cast<std::size_t>(i)].record;
        states.push_back(r.state);
        actions[i] = r.action;
        labels[i] = static_cast<float>(r.label);
    }

    // Augmented copies laid out copy-major: [g][B].
    std::int64_t g = 0;
    if (traits_.augmentation != AugmentationKind::kNone) {
        std::vector<std::vector<StackedState>> per_record;
        per_record.reserve(batch.size());
        for (const auto& s : batch) {
            per_record.push_back(augment(s, rng));
        }
        g = static_cast<std::int64_t>(per_record.front().size());
        for (std::int64_t k = 0; k < g; ++k) {
            for (std::int64_t i = 0; i < b; ++i) {
                states.push_back(per_record[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            }
        }
    }

    const auto input = to_batch(states);
    torch::Tensor q_all;
    torch::Tensor saliency;
    if (config_.algo == Algo::kAttentionAlign) {
        auto& gated = dynamic_cast<GatedQNetwork&>(dqn_.online());
        auto out = gated.forward_with_saliency(input);
        q_all = out.q;
        saliency = out.saliency.slice(0, 0, b);
    } else {
        q_all = dqn_.online().forward(input);
    }
    const auto q = q_all.slice(0, 0, b);

    FeedbackLoss result;
    auto& stats = result.stats;
    stats.records = static_cast<int>(b);

    torch::Tensor l_adv;
    if (traits_.advantage_on_augmented && g > 0) {
        l_adv = advantage_loss(q_all, actions.repeat({g + 1}), labels.repeat({g + 1}), config_.advantage_margin).mean();
    } else {
        l_adv = advantage_loss(q, actions, labels, config_.advantage_margin).mean();
    }
    torch::Tensor total = config_.loss_weights.advantage * l_adv;
    stats.advantage = l_adv.item<double>();

    if (traits_.invariance && g > 0) {
        const auto q_aug = q_all.slice(0, b).view({g, b, q.size(1)});
        const auto l_inv = invariance_loss(q, q_aug).mean();
        total = total + config_.loss_weights.invariance * l_inv;
        stats.invariance = l_inv.item<double>();
    }

    if (traits_.explanation) {
        const auto masks = mask_batch(batch);
        torch::Tensor l_exp;
        if (config_.algo == Algo::kExAgil) {
            auto& exagil = dynamic_cast<ExAgilQ&>(dqn_.online());
            // Separate parameter sets: this term only trains the attention net.
            l_exp = explanation_loss(exagil.attention()->forward(input.slice(0, 0, b)), masks);
            total = total + l_exp;
        } else {
            l_exp = explanation_loss(saliency, masks);
            total = total + config_.explanation_weight * l_exp;
        }
        stats.explanation = l_exp.item<double>();
    }
    stats.total = total.item<double>();
    result.total = total;
    return result;
}

std::optional<FeedbackStepStats> Agent::feedback_update(const FeedbackBuffer& buffer, std::mt19937_64& rng) {
    if (!traits_.uses_feedback) {
        return std::nullopt;
    }
    const auto batch = buffer.sample(static_cast<std::size_t>(config_.feedback_batch_size), rng);
    if (batch.empty()) {
        return std::nullopt;
    }
    auto loss = feedback_loss(batch, rng);
    dqn_.step(loss.total);
    return loss.stats;
}

void Agent::save(const std::string& path) {
    torch::serialize::OutputArchive archive;
    torch::serialize::OutputArchive online, target, optimizer;
    dqn_.online().save(online);
    dqn_.target().save(target);
    dqn_.optimizer().save(optimizer);
    archive.write("online", online);
    archive.write("target", target);
    archive.write("optimizer", optimizer);
    archive.save_to(path);
}

void Agent::load(const std::string& path) {
    torch::serialize::InputArchive archive;
    archive.load_from(path);
    torch::serialize::InputArchive online, target, optimizer;
    archive.read("online", online);
    archive.read("target", target);
    archive.read("optimizer", optimizer);
    dqn_.online().load(online);
    dqn_.target().load(target);
    dqn_.optimizer().load(optimizer);
}

}  // namespace expand
