#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "expand/metrics.hpp"
#include "expand/oracle.hpp"
#include "expand/run_config.hpp"

namespace expand {

/// Source of labels for a queried trajectory.
class FeedbackProvider {
public:
    virtual ~FeedbackProvider() = default;
    virtual std::vector<FeedbackRecord> query(const taxi::TaxiConfig& config,
                                              const std::vector<oracle::TrajectoryStep>& trajectory, int episode) = 0;
};

/// Scripted trainer, in-process.
class OracleProvider final : public FeedbackProvider {
public:
    OracleProvider(oracle::OracleOptions options, std::uint64_t seed) : options_(options), rng_(seed) {}
    std::vector<FeedbackRecord> query(const taxi::TaxiConfig& config,
                                      const std::vector<oracle::TrajectoryStep>& trajectory, int episode) override;

private:
    oracle::OracleOptions options_;
    std::mt19937_64 rng_;
};

struct RunHooks {
    std::function<void(const EpisodeMetrics&)> on_episode;
    /// Defaults to an OracleProvider when null.
    FeedbackProvider* provider = nullptr;
    /// Checkpoint directory; empty disables checkpoints.
    std::filesystem::path checkpoint_dir;
    /// Called after each feedback query with the number of new records.
    std::function<void(int episode, int records)> on_query;
};

struct RunResult {
    std::vector<EpisodeMetrics> episodes;
    std::optional<long> steps_to_threshold;
    long total_steps = 0;
    int feedback_queries = 0;
};

/// Train-interaction loop: epsilon-greedy interaction with n-step storage;
/// every `update_interval` environment steps one DQN update and, when the
/// feedback buffer has data, one feedback update, followed by a soft target
/// update; every N_f episodes the last trajectory is queried for feedback.
RunResult run_experiment(const RunConfig& config, std::uint64_t seed, const RunHooks& hooks = {});

/// Runs every configured seed and writes
/// <out>/<algo>/seed<k>/{metrics.jsonl, config.toml, checkpoint/}.
/// Human feedback needs a provider; oracle runs build their own.
std::vector<RunResult> run_seeds(const RunConfig& config, FeedbackProvider* provider = nullptr);

/// Steps-to-threshold statistics of one algorithm across the seeds of a sweep.
struct AlgoSummary {
    std::string algo;
    int seeds = 0;
    int reached = 0;
    /// Mean steps to the 0.9 running average; seeds that never got there
    /// contribute the steps they consumed (a lower bound).
    double mean_steps = 0.0;
    double sem_steps = 0.0;
    std::vector<std::optional<long>> per_seed;
    std::vector<long> total_steps;
};

/// Reads <dir>/<algo>/seed*/metrics.jsonl for every algorithm directory present.
/// With `finished_only`, seed directories without a `done` marker are skipped.
std::vector<AlgoSummary> summarize_sweep(const std::filesystem::path& dir, double threshold = 0.9,
                                         bool finished_only = false);

/// Contents of a checkpoint directory (model.pt holds the networks and optimizer).
struct CheckpointManifest {
    int format_version = 1;
    std::string algo;
    std::uint64_t seed = 0;
    int episode = 0;
    long total_steps = 0;
    double epsilon = 1.0;
    std::size_t replay_size = 0;
    std::size_t replay_capacity = 0;
    double replay_max_priority = 1.0;
    std::size_t feedback_size = 0;
    std::size_t feedback_capacity = 0;
};

/// Writes model.pt and manifest.json into `dir`.
void write_checkpoint(const std::filesystem::path& dir, Agent& agent, const CheckpointManifest& manifest);
/// Restores network and optimizer state; returns the manifest.
CheckpointManifest read_checkpoint(const std::filesystem::path& dir, Agent& agent);

}  // namespace expand
