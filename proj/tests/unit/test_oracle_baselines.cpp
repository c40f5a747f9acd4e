#include "testing.hpp"

#include <set>

#include "expand/agent.hpp"
#include "expand/baselines.hpp"
#include "expand/oracle.hpp"
#include "expand/pixel_taxi.hpp"
#include "oracles.hpp"

using namespace expand;
using taxi::Action;
using taxi::Cell;

namespace {

using BoxSet = std::set<std::tuple<int, int, int, int>>;

BoxSet as_set(const std::vector<BoundingBox>& boxes) {
    BoxSet s;
    for (const auto& b : boxes) s.insert({b.x, b.y, b.w, b.h});
    return s;
}

bool pixel_is(const RawFrame& f, int x, int y, const taxi::Color& c) {
    const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(f.width) + static_cast<std::size_t>(x));
    return f.rgb[i] == c[0] && f.rgb[i + 1] == c[1] && f.rgb[i + 2] == c[2];
}

// Finds the relevant cells by looking at rendered pixels only.
BoxSet locate_cells(const taxi::TaxiConfig& c, const RawFrame& frame) {
    BoxSet out;
    for (int cy = 0; cy < c.grid_size; ++cy)
        for (int cx = 0; cx < c.grid_size; ++cx) {
            bool hit = false;
            for (int y = cy * c.cell_px; y < (cy + 1) * c.cell_px && !hit; ++y)
                for (int x = cx * c.cell_px; x < (cx + 1) * c.cell_px && !hit; ++x)
                    hit = pixel_is(frame, x, y, taxi::kTaxiGray) || pixel_is(frame, x, y, taxi::kDestinationBlack) ||
                          pixel_is(frame, x, y, taxi::kPassengerPalette[0]);
            if (hit) out.insert({cx * c.cell_px, cy * c.cell_px, c.cell_px, c.cell_px});
        }
    return out;
}

// Random reachable states, roughly half of them with something carried.
std::vector<taxi::TaxiState> sample_states(const taxi::TaxiConfig& c, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> act(0, taxi::kActionCount - 1);
    std::uniform_int_distribution<int> len(0, 25);
    std::vector<taxi::TaxiState> out;
    while (static_cast<int>(out.size()) < n) {
        auto [s, frame] = taxi::reset(c, rng());
        const int steps = len(rng);
        for (int i = 0; i < steps && !s.terminal; ++i) {
            const auto a = rng() % 2 ? oracle::scripted_action(c, s) : static_cast<Action>(act(rng));
            auto next = taxi::step(c, s, a).first;
            if (next.terminal) break;
            s = next;
        }
        out.push_back(s);
    }
    return out;
}

StackedState state_of(const taxi::TaxiConfig& c, const taxi::TaxiState& s) {
    return StackedState::from_first_frame(preprocess(taxi::render(c, s)));
}

torch::Tensor mask_tensor(const std::vector<BoundingBox>& boxes) {
    const auto m = build_mask(boxes);
    auto t = torch::zeros({kFrameSide, kFrameSide});
    auto a = t.accessor<float, 2>();
    for (int r = 0; r < kFrameSide; ++r)
        for (int col = 0; col < kFrameSide; ++col) a[r][col] = m.at(r, col) ? 1.0f : 0.0f;
    return t;
}

AgentConfig tiny_config(Algo algo) {
    AgentConfig cfg;
    cfg.algo = algo;
    cfg.network = QNetworkSpec::tiny(taxi::kActionCount);
    cfg.feedback_batch_size = 8;
    return cfg;
}

void fill_oracle_buffer(FeedbackBuffer& buffer, const taxi::TaxiConfig& c, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<oracle::TrajectoryStep> traj;
    for (const auto& s : sample_states(c, n, seed))
        traj.push_back({s, state_of(c, s), static_cast<int>(rng() % taxi::kActionCount)});
    buffer.store_all(oracle::oracle_feedback(c, traj));
}

std::vector<double> row(const torch::Tensor& q, long i) {
    const auto r = q[i].to(torch::kDouble).contiguous();
    return {r.data_ptr<double>(), r.data_ptr<double>() + r.numel()};
}

}  // namespace

TEST_CASE("oracle labels follow the scripted action") {
    const taxi::TaxiConfig c;
    auto s = taxi::reset(c, 5).first;
    s.taxi = {3, 3};
    s.passengers = {{0, Cell{2, 3}}, {1, Cell{5, 5}}, {2, Cell{0, 6}}};
    s.carried.reset();
    s.destination = {6, 6};
    REQUIRE_FALSE(taxi::check_state(c, s));
    CHECK(oracle::scripted_action(c, s) == Action::kLeft);

    const auto st = state_of(c, s);
    const std::vector<oracle::TrajectoryStep> traj{{s, st, static_cast<int>(Action::kRight)},
                                                   {s, st, static_cast<int>(Action::kLeft)}};
    const auto records = oracle::oracle_feedback(c, traj);
    REQUIRE(records.size() == 2);
    CHECK(records[0].label == kBadLabel);
    CHECK(records[1].label == kGoodLabel);
    CHECK(records[0].frame_index == 0);
    CHECK(records[1].frame_index == 1);
    CHECK(records[1].source == "oracle");
}

TEST_CASE("scripted paths move vertically first") {
    const taxi::TaxiConfig c;
    auto s = taxi::reset(c, 9).first;
    s.taxi = {0, 0};
    s.passengers = {{0, Cell{3, 4}}, {1, Cell{6, 0}}, {2, Cell{0, 6}}};
    s.carried.reset();
    CHECK(oracle::scripted_action(c, s) == Action::kDown);
    s.taxi = {0, 4};
    CHECK(oracle::scripted_action(c, s) == Action::kRight);
    s.taxi = {3, 4};
    CHECK(oracle::scripted_action(c, s) == Action::kPickup);
}

TEST_CASE("oracle boxes cover exactly the taxi, red passenger and destination cells") {
    const taxi::TaxiConfig c;
    int carrying = 0, distinct = 0;
    for (const auto& s : sample_states(c, 1000, 101)) {
        const auto boxes = oracle::saliency_boxes(c, s);
        const auto expected = locate_cells(c, taxi::render(c, s));
        REQUIRE((as_set(boxes) == expected));
        const bool red_carried = s.carried && s.passengers[static_cast<std::size_t>(*s.carried)].color == 0;
        carrying += red_carried;
        std::set<std::pair<int, int>> cells{{s.taxi.x, s.taxi.y}, {s.destination.x, s.destination.y}};
        if (!red_carried) {
            const auto& red = s.passengers[static_cast<std::size_t>(s.target_passenger)];
            cells.insert({red.cell->x, red.cell->y});
        }
        CHECK(boxes.size() == cells.size());
        if (cells.size() == (red_carried ? 2u : 3u)) ++distinct;
        for (const auto& b : boxes) {
            CHECK_FALSE(validate_box(b));
            CHECK(b.x % c.cell_px == 0);
            CHECK(b.y % c.cell_px == 0);
            CHECK(b.w == c.cell_px);
            CHECK(b.h == c.cell_px);
        }
    }
    CHECK(carrying > 50);
    CHECK(distinct > 800);
}

TEST_CASE("oracle feedback is deterministic and approves its own policy") {
    const taxi::TaxiConfig c;
    taxi::PixelTaxiEnv env(c);
    auto st = StackedState::from_first_frame(preprocess(env.reset(77)));
    std::vector<oracle::TrajectoryStep> traj;
    for (int t = 0; t < 100; ++t) {
        const auto a = static_cast<int>(oracle::scripted_action(c, env.state()));
        traj.push_back({env.state(), st, a});
        const auto res = env.step(a);
        if (res.terminal || res.truncated) break;
        st = push_frame(st, preprocess(res.frame));
    }
    const auto first = oracle::oracle_feedback(c, traj);
    const auto second = oracle::oracle_feedback(c, traj);
    REQUIRE(first.size() == traj.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].label == kGoodLabel);
        CHECK(first[i].label == second[i].label);
        CHECK((first[i].boxes == second[i].boxes));
        CHECK(first[i].action == second[i].action);
    }
}

TEST_CASE("oracle density thins the labels") {
    const taxi::TaxiConfig c;
    const auto states = sample_states(c, 400, 7);
    std::vector<oracle::TrajectoryStep> traj;
    for (const auto& s : states) traj.push_back({s, StackedState{}, 0});
    std::mt19937_64 rng(3);
    const auto sparse = oracle::oracle_feedback(c, traj, {0.25}, &rng);
    CHECK(sparse.size() > 60);
    CHECK(sparse.size() < 140);
}

TEST_CASE("explanation loss examples") {
    const auto mask = mask_tensor({{10, 10, 12, 12}});
    CHECK(explanation_loss(mask.clone(), mask).item<double>() == 0.0);
    CHECK(explanation_loss(torch::full({kFrameSide, kFrameSide}, 0.5), mask).item<double>() == doctest::Approx(0.25));

    const auto pred = torch::tensor({{0.2, 0.9}, {0.4, 0.1}}, torch::kDouble);
    const auto toy = torch::tensor({{0.0, 1.0}, {1.0, 0.0}}, torch::kDouble);
    // (0.04 + 0.01 + 0.36 + 0.01) / 4
    CHECK(explanation_loss(pred, toy).item<double>() == doctest::Approx(0.105).epsilon(1e-12));
    CHECK(0.1 * explanation_loss(pred, toy).item<double>() == doctest::Approx(0.0105).epsilon(1e-12));
    const auto perm = torch::tensor({3, 1, 0, 2});
    CHECK(explanation_loss(pred.view({-1}).index({perm}), toy.view({-1}).index({perm})).item<double>() ==
          doctest::Approx(0.105).epsilon(1e-12));
    CHECK_THROWS_AS(explanation_loss(pred, torch::zeros({3, 3})), std::invalid_argument);
}

TEST_CASE("Ex-AGIL masking rule") {
    const auto x = torch::rand({2, 4, 84, 84});
    CHECK(torch::allclose(ex_agil_input(x, torch::ones({2, 84, 84})), x));
    CHECK(torch::allclose(ex_agil_input(x, torch::zeros({2, 84, 84})), x / 2));
}

TEST_CASE("Ex-AGIL: explanation gradients stay in the attention net, Q gradients stay in the policy") {
    torch::manual_seed(19);
    ExAgilQ net(QNetworkSpec::tiny(6));
    net.to(torch::kDouble);
    const auto x = torch::rand({2, 4, 84, 84}, torch::kDouble);
    const auto mask = torch::zeros({2, 84, 84}, torch::kDouble).index_put_({torch::indexing::Slice(), torch::indexing::Slice(10, 30), torch::indexing::Slice(10, 30)}, 1.0);

    net.zero_grad();
    explanation_loss(net.attention()->forward(x), mask).backward();
    double attention_grad = 0.0;
    for (const auto& p : net.attention()->parameters())
        if (p.grad().defined()) attention_grad += p.grad().abs().sum().item<double>();
    CHECK(attention_grad > 0.0);
    for (const auto& p : net.policy().parameters()) CHECK((!p.grad().defined() || p.grad().abs().sum().item<double>() == 0.0));

    // finite-difference probe: nudging a policy weight leaves the explanation loss unchanged
    auto probe = net.policy().parameters().front();
    const double before = explanation_loss(net.attention()->forward(x), mask).item<double>();
    {
        torch::NoGradGuard g;
        probe.view({-1})[0] += 1e-3;
    }
    CHECK(explanation_loss(net.attention()->forward(x), mask).item<double>() == before);

    net.zero_grad();
    net.forward(x).sum().backward();
    for (const auto& p : net.attention()->parameters()) CHECK((!p.grad().defined() || p.grad().abs().sum().item<double>() == 0.0));
    double policy_grad = 0.0;
    for (const auto& p : net.policy().parameters())
        if (p.grad().defined()) policy_grad += p.grad().abs().sum().item<double>();
    CHECK(policy_grad > 0.0);
}

TEST_CASE("Ex-AGIL attention learns oracle masks") {
    torch::manual_seed(23);
    const taxi::TaxiConfig c;
    const auto states = sample_states(c, 1200, 202);
    std::vector<torch::Tensor> xs, ms;
    for (const auto& s : states) {
        xs.push_back(to_batch(state_of(c, s)));
        ms.push_back(mask_tensor(oracle::saliency_boxes(c, s)).unsqueeze(0));
    }
    const auto x_train = torch::cat(std::vector<torch::Tensor>(xs.begin(), xs.begin() + 1000));
    const auto m_train = torch::cat(std::vector<torch::Tensor>(ms.begin(), ms.begin() + 1000));
    const auto x_test = torch::cat(std::vector<torch::Tensor>(xs.begin() + 1000, xs.end()));
    const auto m_test = torch::cat(std::vector<torch::Tensor>(ms.begin() + 1000, ms.end()));

    AttentionNet net(QNetworkSpec{});
    torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(1e-3));
    const long batch = 16;
    auto iou_of = [&](const torch::Tensor& x, const torch::Tensor& m) {
        torch::NoGradGuard g;
        const auto p = net->forward(x) > 0.5;
        const auto t = m > 0.5;
        return (p & t).sum().item<double>() / (p | t).sum().item<double>();
    };
    for (int epoch = 0; epoch < 40; ++epoch) {
        const auto perm = torch::randperm(1000);
        for (long i = 0; i < 1000; i += batch) {
            const auto idx = perm.slice(0, i, i + batch);
            const auto loss = explanation_loss(net->forward(x_train.index({idx})), m_train.index({idx}));
            opt.zero_grad();
            loss.backward();
            opt.step();
        }
        if (iou_of(x_train.slice(0, 0, 200), m_train.slice(0, 0, 200)) >= 0.97) break;
    }
    torch::NoGradGuard g;
    const auto pred = net->forward(x_test) > 0.5;
    const auto truth = m_test > 0.5;
    const double inter = (pred & truth).sum().item<double>();
    const double uni = (pred | truth).sum().item<double>();
    const double iou = inter / uni;
    MESSAGE("held-out IoU " << iou);
    CHECK(iou >= 0.9);
}

TEST_CASE("gated network outputs") {
    torch::manual_seed(29);
    const QNetworkSpec spec;
    GatedQNetwork net(spec);
    const auto out = net.forward_with_saliency(torch::rand({3, 4, 84, 84}));
    CHECK(out.q.sizes() == std::vector<int64_t>{3, 6});
    CHECK(out.saliency.sizes() == std::vector<int64_t>{3, 84, 84});
    CHECK(out.gate.sizes() == std::vector<int64_t>{3, 1, spec.side_after(1), spec.side_after(1)});
    CHECK(out.saliency.min().item<double>() > 0.0);
    CHECK(out.saliency.max().item<double>() < 1.0);
    CHECK(out.gate.min().item<double>() > 0.0);
    CHECK(out.gate.max().item<double>() < 1.0);
}

TEST_CASE("DQN-Feedback never augments, EXPAND does") {
    const taxi::TaxiConfig c;
    FeedbackBuffer buffer;
    fill_oracle_buffer(buffer, c, 20, 31);
    std::mt19937_64 rng(31);

    Agent plain(tiny_config(Algo::kDqnFeedback), 1);
    for (int i = 0; i < 3; ++i) REQUIRE(plain.feedback_update(buffer, rng));
    CHECK(plain.augmentation_calls() == 0);

    Agent expand_agent(tiny_config(Algo::kExpand), 1);
    REQUIRE(expand_agent.feedback_update(buffer, rng));
    CHECK(expand_agent.augmentation_calls() == 8);

    Agent none(tiny_config(Algo::kDqnOnly), 1);
    CHECK_FALSE(none.feedback_update(buffer, rng));
    CHECK_FALSE(expand_agent.feedback_update(FeedbackBuffer{}, rng));
}

TEST_CASE("every algorithm shares replay, exploration and optimizer settings") {
    AgentConfig base = tiny_config(Algo::kExpand);
    base.dqn.learning_rate = 3e-4;
    base.dqn.batch_size = 32;
    for (auto algo : all_algos()) {
        auto cfg = base;
        cfg.algo = algo;
        Agent agent(cfg, 7);
        const auto& hp = agent.dqn().hyperparameters();
        CHECK(hp.learning_rate == 3e-4);
        CHECK(hp.batch_size == 32);
        CHECK(hp.gamma == base.dqn.gamma);
        CHECK(hp.n_step == base.dqn.n_step);
        CHECK(hp.alpha == base.dqn.alpha);
        CHECK(hp.beta == base.dqn.beta);
        CHECK(hp.tau == base.dqn.tau);
        CHECK(hp.replay_capacity == base.dqn.replay_capacity);
        const auto& opts = static_cast<const torch::optim::AdamOptions&>(agent.dqn().optimizer().param_groups()[0].options());
        CHECK(opts.lr() == 3e-4);
        CHECK(agent.dqn().online().action_count() == 6);
        CHECK(algo_name(parse_algo(algo_name(algo))) == algo_name(algo));
    }
    CHECK(all_algos().size() == 9);
    CHECK_THROWS_AS(parse_algo("dqn"), std::invalid_argument);
}

TEST_CASE("EXPAND feedback loss composes advantage and invariance terms") {
    torch::manual_seed(37);
    const taxi::TaxiConfig c;
    FeedbackBuffer buffer;
    fill_oracle_buffer(buffer, c, 12, 37);
    std::mt19937_64 rng(37);
    const auto batch = buffer.sample(8, rng);

    for (auto algo : {Algo::kExpand, Algo::kExpandNoInvariance, Algo::kExpandNoAugAdvantage, Algo::kDqnFeedback}) {
        Agent agent(tiny_config(algo), 3);
        const auto traits = agent.traits();
        const auto out = agent.feedback_loss(batch, rng);

        torch::NoGradGuard g;
        double adv = 0.0, inv = 0.0;
        long adv_rows = 0;
        const auto preset = preset_bank("aug5");
        for (const auto& s : batch) {
            const auto& r = *s.record;
            const auto q = row(agent.dqn().online().forward(to_batch(r.state)), 0);
            adv += oracle_ref::advantage_loss(q, r.action, r.label, 0.05);
            ++adv_rows;
            if (traits.augmentation == AugmentationKind::kNone) continue;
            std::vector<std::vector<double>> copies;
            for (const auto& f : preset) {
                copies.push_back(row(agent.dqn().online().forward(to_batch(perturb_state(r.state, *s.mask, f))), 0));
                if (traits.advantage_on_augmented) {
                    adv += oracle_ref::advantage_loss(copies.back(), r.action, r.label, 0.05);
                    ++adv_rows;
                }
            }
            inv += oracle_ref::invariance_loss(q, copies);
        }
        adv /= static_cast<double>(adv_rows);
        inv /= static_cast<double>(batch.size());
        CHECK(out.stats.advantage == doctest::Approx(adv).epsilon(1e-5));
        const double expected_total = adv + (traits.invariance ? 0.1 * inv : 0.0);
        if (traits.invariance) CHECK(out.stats.invariance == doctest::Approx(inv).epsilon(1e-5));
        CHECK(out.stats.total == doctest::Approx(expected_total).epsilon(1e-5));
    }
}

TEST_CASE("attention-align loss adds the weighted explanation term") {
    torch::manual_seed(41);
    const taxi::TaxiConfig c;
    FeedbackBuffer buffer;
    fill_oracle_buffer(buffer, c, 6, 41);
    std::mt19937_64 rng(41);
    const auto batch = buffer.sample(4, rng);
    Agent agent(tiny_config(Algo::kAttentionAlign), 5);
    const auto out = agent.feedback_loss(batch, rng);

    torch::NoGradGuard g;
    auto& gated = dynamic_cast<GatedQNetwork&>(agent.dqn().online());
    double adv = 0.0, mse = 0.0;
    for (const auto& s : batch) {
        const auto o = gated.forward_with_saliency(to_batch(s.record->state));
        adv += oracle_ref::advantage_loss(row(o.q, 0), s.record->action, s.record->label, 0.05);
        mse += (o.saliency[0] - mask_tensor(s.record->boxes)).pow(2).mean().item<double>();
    }
    adv /= 4.0;
    mse /= 4.0;
    CHECK(out.stats.explanation == doctest::Approx(mse).epsilon(1e-5));
    CHECK(out.stats.total == doctest::Approx(adv + 0.1 * mse).epsilon(1e-5));
}
