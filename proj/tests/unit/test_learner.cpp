#include "testing.hpp"

#include <cmath>

#include "expand/exploration.hpp"
#include "expand/learner.hpp"
#include "expand/networks.hpp"
#include "expand/replay.hpp"
#include "oracles.hpp"

using namespace expand;

namespace {

StackedState random_state(std::mt19937_64& rng) {
    std::array<StackedState::FramePtr, kStackDepth> frames;
    for (auto& f : frames) f = std::make_shared<const Frame>(oracle_ref::random_frame(rng));
    return StackedState(frames);
}

Transition tagged(int action) {
    Transition t;
    t.action = action;
    return t;
}

// Q(s, .) = bias, whatever the state.
class ConstantQ final : public QFunction {
public:
    explicit ConstantQ(int actions) : actions_(actions) { bias = register_parameter("bias", torch::zeros({actions})); }
    torch::Tensor forward(const torch::Tensor& states) override { return bias.unsqueeze(0).expand({states.size(0), actions_}); }
    int action_count() const override { return actions_; }
    torch::Tensor bias;

private:
    int actions_;
};

std::vector<Transition> random_transitions(std::mt19937_64& rng, int n, int actions) {
    std::uniform_int_distribution<int> act(0, actions - 1);
    std::uniform_real_distribution<double> ret(-1.0, 1.0);
    std::vector<Transition> out;
    for (int i = 0; i < n; ++i) {
        Transition t;
        t.state = random_state(rng);
        t.action = act(rng);
        t.n_step_return = ret(rng);
        t.bootstrap_state = random_state(rng);
        t.bootstrap_valid = i % 3 != 0;
        t.bootstrap_discount = t.bootstrap_valid ? std::pow(0.99, 5) : 0.0;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

TEST_CASE("greedy selection and tie-break") {
    std::mt19937_64 rng(1);
    const EpsilonSchedule greedy{0.0, 0.01, 0.99};
    CHECK(select_action(std::vector<float>{1.0f, 2.0f}, greedy, rng) == 1);
    CHECK(select_action(std::vector<float>{2.0f, 2.0f}, greedy, rng) == 0);
    CHECK(argmax(std::vector<float>{0.5f, 3.0f, 3.0f}) == 1);
    CHECK_THROWS_AS(select_action(std::vector<float>{}, greedy, rng), std::invalid_argument);
}

TEST_CASE("epsilon 1 picks actions uniformly") {
    std::mt19937_64 rng(21);
    const EpsilonSchedule explore{1.0, 0.01, 0.99};
    const std::vector<float> q{0.0f, 5.0f, 1.0f, 2.0f, 3.0f, 4.0f};
    std::vector<long> counts(6, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(select_action(q, explore, rng))];
    CHECK(oracle_ref::chi_square_uniform_p(counts) > 0.01);
}

TEST_CASE("epsilon floor keeps every action reachable") {
    std::mt19937_64 rng(3);
    const EpsilonSchedule floor{0.01, 0.01, 0.99};
    const std::vector<float> q{0.0f, 5.0f, 1.0f, 2.0f, 3.0f, 4.0f};
    std::vector<long> counts(6, 0);
    const int n = 600000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(select_action(q, floor, rng))];
    // greedy gets 1 - eps + eps/|A|, the rest eps/|A|
    std::vector<double> expected(6, n * 0.01 / 6.0);
    expected[1] = n * (0.99 + 0.01 / 6.0);
    CHECK(oracle_ref::chi_square_p(counts, expected) > 0.01);
}

TEST_CASE("epsilon decay") {
    CHECK(decay_epsilon({1.0, 0.01, 0.99}).epsilon == doctest::Approx(0.99));
    CHECK(decay_epsilon({0.0100001, 0.01, 0.99}).epsilon == 0.01);
    CHECK(decay_epsilon(decay_epsilon({1.0, 0.01, 0.9})).epsilon == doctest::Approx(0.81));
    EpsilonSchedule s{1.0, 0.01, 0.99};
    for (int i = 0; i < 2000; ++i) s = decay_epsilon(s);
    CHECK(s.epsilon == 0.01);
}

TEST_CASE("n-step return examples") {
    CHECK(n_step_return(std::vector<double>{0, 0, 0, 0, 0}, 1.0, true, 0.99) == doctest::Approx(std::pow(0.99, 5)));
    CHECK(n_step_return(std::vector<double>{0, 0, 0, 0, 0}, 1.0, true, 0.99) == doctest::Approx(0.95099).epsilon(1e-5));
    CHECK(n_step_return(std::vector<double>{0, 1}, 123.0, false, 0.99) == doctest::Approx(0.99));
    CHECK(n_step_return(std::vector<double>{0.5}, 2.0, true, 0.99) == doctest::Approx(0.5 + 0.99 * 2.0));
    CHECK_THROWS_AS(n_step_return(std::vector<double>{}, 0.0, true, 0.99), std::invalid_argument);
    CHECK(clip_reward(5.0) == 1.0);
    CHECK(clip_reward(-0.1) == -0.1);
    CHECK(clip_reward(-3.0) == -1.0);
}

TEST_CASE("n-step accumulator") {
    std::mt19937_64 rng(4);
    std::vector<StackedState> s;
    for (int i = 0; i < 8; ++i) s.push_back(random_state(rng));
    NStepAccumulator acc(3, 0.5);
    CHECK(acc.push(s[0], 0, 1.0, s[1], false, false).empty());
    CHECK(acc.push(s[1], 1, 7.0, s[2], false, false).empty());
    auto out = acc.push(s[2], 2, 0.0, s[3], false, false);
    REQUIRE(out.size() == 1);
    CHECK(out[0].action == 0);
    CHECK(out[0].n_step_return == doctest::Approx(1.0 + 0.5 * 1.0));  // 7 clipped to 1
    CHECK(out[0].bootstrap_valid);
    CHECK(out[0].bootstrap_discount == doctest::Approx(0.125));
    CHECK(out[0].bootstrap_state.frame_ptr(0) == s[3].frame_ptr(0));

    // terminal flushes everything without bootstrap
    out = acc.push(s[3], 3, 1.0, s[4], true, false);
    REQUIRE(out.size() == 3);
    CHECK(out[0].action == 1);
    CHECK(out[0].n_step_return == doctest::Approx(1.0 + 0.0 + 0.25 * 1.0));
    CHECK(out[2].action == 3);
    CHECK(out[2].n_step_return == doctest::Approx(1.0));
    for (const auto& t : out) {
        CHECK_FALSE(t.bootstrap_valid);
        CHECK(t.bootstrap_discount == 0.0);
    }
    CHECK(acc.pending() == 0);

    // truncation flushes but keeps bootstrapping
    acc.push(s[4], 4, 0.0, s[5], false, false);
    out = acc.push(s[5], 5, 0.0, s[6], false, true);
    REQUIRE(out.size() == 2);
    CHECK(out[0].bootstrap_valid);
    CHECK(out[0].bootstrap_discount == doctest::Approx(0.25));
    CHECK(out[1].bootstrap_discount == doctest::Approx(0.5));
    CHECK(out[1].bootstrap_state.frame_ptr(0) == s[6].frame_ptr(0));
    CHECK_THROWS_AS(NStepAccumulator(0, 0.99), std::invalid_argument);
}

TEST_CASE("sum tree matches brute-force prefix sums") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    SumTree tree(13);
    std::vector<double> leaves(13, 0.0);
    for (int round = 0; round < 200; ++round) {
        const auto leaf = static_cast<std::size_t>(rng() % 13);
        leaves[leaf] = u(rng);
        tree.set(leaf, leaves[leaf]);
        double total = 0.0;
        for (double v : leaves) total += v;
        CHECK(tree.total() == doctest::Approx(total));
        CHECK(tree.max() == *std::max_element(leaves.begin(), leaves.end()));
        const double mass = std::uniform_real_distribution<double>(0.0, total)(rng);
        double prefix = 0.0;
        std::size_t expected = 0;
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            if (mass < prefix + leaves[i]) {
                expected = i;
                break;
            }
            prefix += leaves[i];
        }
        CHECK(tree.find(mass) == expected);
    }
}

TEST_CASE("prioritized replay: closed-form probability") {
    PrioritizedReplay replay(10, 0.6);
    replay.add(tagged(0));
    replay.add(tagged(1));
    const std::vector<std::size_t> idx{1};
    const std::vector<double> td{0.0};
    replay.update_priorities(idx, td);
    CHECK(replay.priority(1) == doctest::Approx(1e-6));
    const double expected = 1.0 / (1.0 + std::pow(1e-6, 0.6));
    CHECK(replay.probability(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(replay.probability(0) == doctest::Approx(0.99975).epsilon(1e-5));
}

TEST_CASE("prioritized replay: equal priorities sample uniformly with unit weights") {
    std::mt19937_64 rng(6);
    PrioritizedReplay replay(100, 0.6);
    for (int i = 0; i < 10; ++i) replay.add(tagged(i));
    std::vector<long> counts(10, 0);
    const auto batch = replay.sample(10000, 0.4, rng);
    for (std::size_t k = 0; k < batch.indices.size(); ++k) {
        ++counts[static_cast<std::size_t>(batch.transitions[k].action)];
        CHECK(batch.weights[k] == doctest::Approx(1.0));
    }
    CHECK(oracle_ref::chi_square_uniform_p(counts) > 0.01);
}

TEST_CASE("prioritized replay: sampling follows p^alpha and weights follow (N P)^-beta") {
    std::mt19937_64 rng(7);
    PrioritizedReplay replay(16, 0.6);
    for (int i = 0; i < 4; ++i) replay.add(tagged(i));
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    const std::vector<double> td{1.0, -2.0, 3.0, 4.0};
    replay.update_priorities(idx, td);

    std::vector<double> p(4);
    double z = 0.0;
    for (int i = 0; i < 4; ++i) z += p[static_cast<std::size_t>(i)] = std::pow(std::fabs(td[static_cast<std::size_t>(i)]) + 1e-6, 0.6);
    for (auto& v : p) v /= z;
    for (std::size_t i = 0; i < 4; ++i) CHECK(replay.probability(i) == doctest::Approx(p[i]).epsilon(1e-12));

    const int n = 10000;
    const auto batch = replay.sample(n, 0.4, rng);
    std::vector<long> counts(4, 0);
    for (auto i : batch.indices) ++counts[i];
    std::vector<double> expected(4);
    for (std::size_t i = 0; i < 4; ++i) expected[i] = n * p[i];
    CHECK(oracle_ref::chi_square_p(counts, expected) > 0.01);

    double wmax = 0.0;
    for (auto i : batch.indices) wmax = std::max(wmax, std::pow(4.0 * p[i], -0.4));
    for (std::size_t k = 0; k < batch.indices.size(); ++k)
        CHECK(batch.weights[k] == doctest::Approx(std::pow(4.0 * p[batch.indices[k]], -0.4) / wmax).epsilon(1e-9));
}

TEST_CASE("prioritized replay: FIFO capacity and max-priority insertion") {
    std::mt19937_64 rng(8);
    PrioritizedReplay replay(3, 0.6);
    CHECK(replay.max_priority() == 1.0);
    CHECK_THROWS_AS(replay.sample(1, 0.4, rng), std::logic_error);
    for (int i = 0; i < 5; ++i) replay.add(tagged(i));
    CHECK(replay.size() == 3);
    std::vector<int> actions;
    for (std::size_t i = 0; i < 3; ++i) actions.push_back(replay.at(i).action);
    std::sort(actions.begin(), actions.end());
    CHECK(actions == std::vector<int>{2, 3, 4});

    const std::vector<std::size_t> idx{0};
    const std::vector<double> td{5.0};
    replay.update_priorities(idx, td);
    replay.add(tagged(9));
    // slot 2 was next in line
    CHECK(replay.at(2).action == 9);
    CHECK(replay.priority(2) == doctest::Approx(5.0 + 1e-6));
    for (std::size_t i = 0; i < 3; ++i) CHECK(replay.priority(i) > 0.0);

    // oversized batches repeat items
    CHECK(replay.sample(20, 0.4, rng).transitions.size() == 20);
}

TEST_CASE("soft update") {
    auto make = [](double v) {
        auto l = torch::nn::Linear(torch::nn::LinearOptions(1, 1).bias(false));
        torch::NoGradGuard g;
        l->weight.fill_(v);
        return l;
    };
    auto target = make(0.0);
    auto online = make(1.0);
    soft_update(*target, *online, 0.01);
    CHECK(target->weight.item<double>() == doctest::Approx(0.01));
    soft_update(*target, *online, 0.0);
    CHECK(target->weight.item<double>() == doctest::Approx(0.01));
    soft_update(*target, *online, 1.0);
    CHECK(target->weight.item<double>() == 1.0);

    auto other = torch::nn::Linear(2, 1);
    CHECK_THROWS_AS(soft_update(*target, *other, 0.5), std::invalid_argument);
}

TEST_CASE("network shapes") {
    const QNetworkSpec spec;
    CHECK(spec.side_after(0) == 20);
    CHECK(spec.side_after(1) == 9);
    CHECK(spec.side_after(2) == 7);
    CHECK(spec.flat_features() == 64 * 7 * 7);
    torch::manual_seed(0);
    QNetwork net(spec);
    CHECK(net.forward(torch::zeros({3, 4, 84, 84})).sizes() == std::vector<int64_t>{3, 6});
    CHECK(net.action_count() == 6);
}

TEST_CASE("single transition with Q 0 and target 1 has loss 1") {
    auto online = std::make_shared<ConstantQ>(2);
    auto target = std::make_shared<ConstantQ>(2);
    EfficientDqn dqn(online, target, {});
    SampledBatch batch;
    Transition t;
    t.n_step_return = 1.0;
    batch.transitions.push_back(t);
    batch.weights.push_back(1.0);
    batch.indices.push_back(0);
    std::vector<double> td;
    CHECK(dqn.td_loss(batch, &td).item<double>() == doctest::Approx(1.0));
    CHECK(td == std::vector<double>{1.0});

    // already at the target: zero loss, nothing moves
    {
        torch::NoGradGuard g;
        online->bias[0] = 1.0;
    }
    const auto before = online->bias.clone();
    const auto stats = dqn.update_on(batch);
    CHECK(stats.loss == 0.0);
    CHECK(torch::equal(before, online->bias));
}

TEST_CASE("non-finite loss aborts the update") {
    auto online = std::make_shared<ConstantQ>(2);
    EfficientDqn dqn(online, std::make_shared<ConstantQ>(2), {});
    CHECK_THROWS_AS(dqn.step(online->bias.sum() * std::numeric_limits<float>::quiet_NaN()), std::runtime_error);
    CHECK_THROWS_AS(dqn.step(online->bias.sum() + std::numeric_limits<float>::infinity()), std::runtime_error);
}

TEST_CASE("td loss gradients match central finite differences on the tiny network") {
    torch::manual_seed(11);
    std::mt19937_64 rng(11);
    const auto spec = QNetworkSpec::tiny(6);
    auto online = std::make_shared<QNetwork>(spec);
    auto target = std::make_shared<QNetwork>(spec);
    online->to(torch::kDouble);
    target->to(torch::kDouble);
    EfficientDqn dqn(online, target, {});
    {
        // decouple target from online so bootstrap values are not trivially equal
        torch::NoGradGuard g;
        for (auto& p : target->parameters()) p.add_(torch::randn_like(p) * 0.1);
    }

    SampledBatch batch;
    batch.transitions = random_transitions(rng, 4, 6);
    batch.weights = {1.0, 0.5, 0.75, 0.25};
    batch.indices = {0, 1, 2, 3};

    online->zero_grad();
    dqn.td_loss(batch, nullptr).backward();

    const double h = 1e-6;
    double worst = 0.0;
    long checked = 0;
    for (auto& p : online->parameters()) {
        auto flat = p.detach().view({-1});
        const auto grad = p.grad().view({-1});
        for (long i = 0; i < flat.numel(); ++i) {
            const double orig = flat[i].item<double>();
            double plus, minus;
            {
                torch::NoGradGuard g;
                flat[i] = orig + h;
                plus = dqn.td_loss(batch, nullptr).item<double>();
                flat[i] = orig - h;
                minus = dqn.td_loss(batch, nullptr).item<double>();
                flat[i] = orig;
            }
            const double fd = (plus - minus) / (2 * h);
            const double an = grad[i].item<double>();
            const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-6});
            worst = std::max(worst, std::fabs(fd - an) / scale);
            ++checked;
        }
    }
    MESSAGE("checked " << checked << " parameters, worst relative error " << worst);
    CHECK(checked > 1000);
    CHECK(worst < 1e-3);
}

TEST_CASE("repeated updates on one batch overfit it") {
    torch::manual_seed(13);
    std::mt19937_64 rng(13);
    const auto spec = QNetworkSpec::tiny(6);
    DqnHyperparameters hp;
    hp.learning_rate = 1e-3;
    EfficientDqn dqn(std::make_shared<QNetwork>(spec), std::make_shared<QNetwork>(spec), hp);
    SampledBatch batch;
    batch.transitions = random_transitions(rng, 8, 6);
    for (auto& t : batch.transitions) t.bootstrap_valid = false;
    batch.weights.assign(8, 1.0);
    batch.indices = {0, 1, 2, 3, 4, 5, 6, 7};
    double loss = 1.0;
    int steps = 0;
    for (; steps < 500 && loss >= 1e-3; ++steps) loss = dqn.update_on(batch).loss;
    MESSAGE("loss " << loss << " after " << steps << " steps");
    CHECK(loss < 1e-3);
}

TEST_CASE("update refreshes the sampled priorities") {
    torch::manual_seed(17);
    std::mt19937_64 rng(17);
    const auto spec = QNetworkSpec::tiny(6);
    DqnHyperparameters hp;
    hp.batch_size = 4;
    EfficientDqn dqn(std::make_shared<QNetwork>(spec), std::make_shared<QNetwork>(spec), hp);
    PrioritizedReplay replay(32, hp.alpha, hp.priority_epsilon);
    for (auto& t : random_transitions(rng, 6, 6)) replay.add(t);
    const auto stats = dqn.update(replay, rng);
    REQUIRE(stats.td_errors.size() == 4);
    bool changed = false;
    for (std::size_t i = 0; i < replay.size(); ++i) changed |= replay.priority(i) != 1.0;
    CHECK(changed);
}
