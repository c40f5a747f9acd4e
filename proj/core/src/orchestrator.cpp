#include "expand/orchestrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <chrono>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "expand/image_io.hpp"
#include "expand/log.hpp"

namespace expand {

std::vector<FeedbackRecord> OracleProvider::query(const taxi::TaxiConfig& config,
                                                  const std::vector<oracle::TrajectoryStep>& trajectory, int) {
    return oracle::oracle_feedback(config, trajectory, options_, &rng_);
}

namespace {

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(episode), 0x7a78u};
    std::uint64_t out = 0;
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return out;
}

struct Mean {
    double sum = 0.0;
    int count = 0;
    void add(double v) {
        sum += v;
        ++count;
    }
    double value() const { return count ? sum / count : 0.0; }
};

}  // namespace

RunResult run_experiment(const RunConfig& config, std::uint64_t seed, const RunHooks& hooks) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    Agent agent(config.agent, seed);
    const auto& hp = config.agent.dqn;
    PrioritizedReplay replay(hp.replay_capacity, hp.alpha, hp.priority_epsilon);
    FeedbackBuffer feedback(config.feedback_buffer_size);
    NStepAccumulator accumulator(hp.n_step, hp.gamma);
    EpsilonSchedule epsilon = config.epsilon;
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);

    std::unique_ptr<FeedbackProvider> own_provider;
    FeedbackProvider* provider = hooks.provider;
    if (!provider) {
        if (config.feedback == FeedbackSource::kHuman) {
            throw std::invalid_argument("human feedback needs a provider backed by the feedback service");
        }
        own_provider = std::make_unique<OracleProvider>(oracle::OracleOptions{config.oracle_density}, seed + 1);
        provider = own_provider.get();
    }

    const bool wants_feedback = agent.traits().uses_feedback;
    const int feedback_every = config.effective_feedback_frequency();
    const std::size_t learning_starts = config.effective_learning_starts();

    RunResult result;
    std::vector<oracle::TrajectoryStep> trajectory;
    std::vector<double> returns;
    long total_steps = 0;

    auto checkpoint = [&](int episode) {
        if (hooks.checkpoint_dir.empty()) return;
        CheckpointManifest m;
        m.algo = std::string(algo_name(config.agent.algo));
        m.seed = seed;
        m.episode = episode;
        m.total_steps = total_steps;
        m.epsilon = epsilon.epsilon;
        m.replay_size = replay.size();
        m.replay_capacity = replay.capacity();
        m.replay_max_priority = replay.max_priority();
        m.feedback_size = feedback.size();
        m.feedback_capacity = feedback.capacity();
        write_checkpoint(hooks.checkpoint_dir, agent, m);
    };

    for (int episode = 1; episode <= config.episodes; ++episode) {
        taxi::PixelTaxiEnv env(config.taxi);
        StackedState state = StackedState::from_first_frame(preprocess(env.reset(episode_seed(seed, episode))));
        accumulator.clear();
        trajectory.clear();

        EpisodeMetrics m;
        m.episode = episode;
        m.epsilon = epsilon.epsilon;
        Mean dqn_loss, adv_loss, inv_loss, expl_loss;

        while (true) {
            const int action = agent.act(state, epsilon, rng);
            trajectory.push_back({env.state(), state, action});
            const auto res = env.step(action);
            StackedState next = push_frame(state, preprocess(res.frame));
            for (auto& t : accumulator.push(state, action, res.reward, next, res.terminal && !res.truncated,
                                            res.truncated)) {
                replay.add(std::move(t));
            }
            ++total_steps;
            ++m.steps;
            m.episode_return += res.reward;

            if (total_steps % config.update_interval == 0 && replay.size() >= learning_starts) {
                dqn_loss.add(agent.env_update(replay, rng).loss);
                if (wants_feedback) {
                    if (const auto fs = agent.feedback_update(feedback, rng)) {
                        adv_loss.add(fs->advantage);
                        inv_loss.add(fs->invariance);
                        expl_loss.add(fs->explanation);
                    }
                }
                agent.soft_update_target();
                ++m.updates;
            }

            state = std::move(next);
            if (res.terminal) break;
            if (config.max_total_steps > 0 && total_steps >= config.max_total_steps) break;
        }

        epsilon = decay_epsilon(epsilon);

        if (wants_feedback && episode % feedback_every == 0) {
            auto records = provider->query(config.taxi, trajectory, episode);
            m.new_feedback = static_cast<int>(records.size());
            feedback.store_all(std::move(records));
            ++result.feedback_queries;
            if (hooks.on_query) hooks.on_query(episode, m.new_feedback);
        }

        m.total_steps = total_steps;
        m.dqn_loss = dqn_loss.value();
        m.advantage_loss = adv_loss.value();
        m.invariance_loss = inv_loss.value();
        m.explanation_loss = expl_loss.value();
        m.feedback_records = static_cast<long>(feedback.size());
        m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.episodes.push_back(m);
        if (hooks.on_episode) hooks.on_episode(m);
        returns.push_back(m.episode_return);

        if (config.checkpoint_every > 0 && episode % config.checkpoint_every == 0) checkpoint(episode);

        const bool capped = config.max_total_steps > 0 && total_steps >= config.max_total_steps;
        bool solved = false;
        if (config.stop_at_running_return > 0.0 && returns.size() >= 20) {
            solved = running_average(returns, 20).back() >= config.stop_at_running_return;
        }
        if (capped || solved || episode == config.episodes) {
            if (config.checkpoint_every <= 0 || episode % config.checkpoint_every != 0) checkpoint(episode);
            break;
        }
    }

    result.total_steps = total_steps;
    result.steps_to_threshold = steps_to_threshold(result.episodes);
    return result;
}

std::vector<RunResult> run_seeds(const RunConfig& config, FeedbackProvider* provider) {
    config.validate();
    std::vector<RunResult> results;
    for (const auto seed : config.seeds) {
        const auto dir = std::filesystem::path(config.out_dir) / std::string(algo_name(config.agent.algo)) /
                         ("seed" + std::to_string(seed));
        std::filesystem::create_directories(dir);
        RunConfig single = config;
        single.seeds = {seed};
        write_file(dir / "config.toml", to_config_text(single));

        std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
        if (!metrics) throw std::runtime_error("cannot write " + (dir / "metrics.jsonl").string());

        RunHooks hooks;
        hooks.provider = provider;
        if (config.write_checkpoints) hooks.checkpoint_dir = dir / "checkpoint";
        hooks.on_episode = [&](const EpisodeMetrics& m) {
            metrics << nlohmann::json(m).dump() << '\n';
            metrics.flush();
        };
        log::info("{} seed {}: starting ({} episodes)", algo_name(config.agent.algo), seed, config.episodes);
        auto result = run_experiment(config, seed, hooks);
        if (result.steps_to_threshold) {
            log::info("{} seed {}: reached 0.9 after {} steps", algo_name(config.agent.algo), seed,
                         *result.steps_to_threshold);
        } else {
            log::info("{} seed {}: did not reach 0.9 in {} steps", algo_name(config.agent.algo), seed,
                         result.total_steps);
        }
        results.push_back(std::move(result));
    }
    return results;
}

std::vector<AlgoSummary> summarize_sweep(const std::filesystem::path& dir, double threshold, bool finished_only) {
    std::vector<AlgoSummary> out;
    if (!std::filesystem::is_directory(dir)) return out;
    std::vector<std::filesystem::path> algo_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory()) algo_dirs.push_back(entry.path());
    }
    std::sort(algo_dirs.begin(), algo_dirs.end());
    for (const auto& algo_dir : algo_dirs) {
        std::vector<std::filesystem::path> seed_files;
        for (const auto& entry : std::filesystem::directory_iterator(algo_dir)) {
            const auto metrics = entry.path() / "metrics.jsonl";
            if (entry.is_directory() && entry.path().filename().string().rfind("seed", 0) == 0 &&
                std::filesystem::exists(metrics) && (!finished_only || std::filesystem::exists(entry.path() / "done"))) {
                seed_files.push_back(metrics);
            }
        }
        if (seed_files.empty()) continue;
        std::sort(seed_files.begin(), seed_files.end());
        AlgoSummary summary;
        summary.algo = algo_dir.filename().string();
        std::vector<double> steps;
        for (const auto& file : seed_files) {
            const auto episodes = read_metrics_jsonl(file);
            if (episodes.empty()) continue;
            const auto reached = steps_to_threshold(episodes, threshold);
            summary.per_seed.push_back(reached);
            summary.total_steps.push_back(episodes.back().total_steps);
            steps.push_back(static_cast<double>(reached ? *reached : episodes.back().total_steps));
            if (reached) ++summary.reached;
        }
        summary.seeds = static_cast<int>(steps.size());
        if (steps.empty()) continue;
        double sum = 0.0;
        for (double v : steps) sum += v;
        summary.mean_steps = sum / static_cast<double>(steps.size());
        if (steps.size() > 1) {
            double ss = 0.0;
            for (double v : steps) ss += (v - summary.mean_steps) * (v - summary.mean_steps);
            summary.sem_steps = std::sqrt(ss / static_cast<double>(steps.size() - 1)) /
                                std::sqrt(static_cast<double>(steps.size()));
        }
        out.push_back(std::move(summary));
    }
    return out;
}

void to_json(nlohmann::json& j, const CheckpointManifest& m) {
    j = nlohmann::json{{"format_version", m.format_version},
                       {"algo", m.algo},
                       {"seed", m.seed},
                       {"episode", m.episode},
                       {"total_steps", m.total_steps},
                       {"epsilon", m.epsilon},
                       {"replay_size", m.replay_size},
                       {"replay_capacity", m.replay_capacity},
                       {"replay_max_priority", m.replay_max_priority},
                       {"feedback_size", m.feedback_size},
                       {"feedback_capacity", m.feedback_capacity}};
}

void from_json(const nlohmann::json& j, CheckpointManifest& m) {
    j.at("format_version").get_to(m.format_version);
    j.at("algo").get_to(m.algo);
    j.at("seed").get_to(m.seed);
    j.at("episode").get_to(m.episode);
    j.at("total_steps").get_to(m.total_steps);
    j.at("epsilon").get_to(m.epsilon);
    j.at("replay_size").get_to(m.replay_size);
    j.at("replay_capacity").get_to(m.replay_capacity);
    j.at("replay_max_priority").get_to(m.replay_max_priority);
    j.at("feedback_size").get_to(m.feedback_size);
    j.at("feedback_capacity").get_to(m.feedback_capacity);
}

void write_checkpoint(const std::filesystem::path& dir, Agent& agent, const CheckpointManifest& manifest) {
    std::filesystem::create_directories(dir);
    const auto tmp = dir / "model.pt.tmp";
    agent.save(tmp.string());
    std::filesystem::rename(tmp, dir / "model.pt");
    write_file(dir / "manifest.json", nlohmann::json(manifest).dump(2) + "\n");
}

CheckpointManifest read_checkpoint(const std::filesystem::path& dir, Agent& agent) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no checkpoint manifest in " + dir.string());
    const auto manifest = nlohmann::json::parse(in).get<CheckpointManifest>();
    if (manifest.format_version != 1) {
        throw std::runtime_error("unsupported checkpoint format " + std::to_string(manifest.format_version));
    }
    if (manifest.algo != algo_name(agent.config().algo)) {
        throw std::runtime_error("checkpoint is for algo '" + manifest.algo + "'");
    }
    agent.load((dir / "model.pt").string());
    return manifest;
}

}  // namespace expand
