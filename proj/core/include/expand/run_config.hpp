#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "expand/agent.hpp"
#include "expand/exploration.hpp"
#include "expand/pixel_taxi.hpp"

namespace expand {

enum class FeedbackSource { kOracle, kHuman };

std::string_view feedback_source_name(FeedbackSource s);
FeedbackSource parse_feedback_source(std::string_view name);

/// Everything needed to reproduce one training run (minus the seed).
struct RunConfig {
    AgentConfig agent;
    std::string env = "pixel-taxi";
    taxi::TaxiConfig taxi;
    int episodes = 600;
    /// 0 picks the default for the feedback source: 4 for the oracle, 10 for a human.
    int feedback_frequency = 0;
    int update_interval = 4;
    FeedbackSource feedback = FeedbackSource::kOracle;
    std::vector<std::uint64_t> seeds{0};
    EpsilonSchedule epsilon{1.0, 0.01, 0.99};
    std::size_t feedback_buffer_size = 50'000;
    double oracle_density = 1.0;
    /// Updates begin once replay holds this many transitions; 0 means one batch.
    std::size_t learning_starts = 0;
    int checkpoint_every = 50;
    bool write_checkpoints = true;
    double human_session_timeout = 300.0;
    /// Ends a run once the 20-episode running average reaches this value; 0 disables.
    double stop_at_running_return = 0.0;
    /// Hard cap on environment steps; 0 disables.
    long max_total_steps = 0;
    std::string out_dir = "runs";

    int effective_feedback_frequency() const;
    std::size_t effective_learning_starts() const;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// Flat `key = value` text; `#` starts a comment, `[section]` lines are
/// ignored, strings may be quoted, lists are `[a, b, c]`. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Inverse of parse_run_config for the keys it understands.
std::string to_config_text(const RunConfig& config);

}  // namespace expand
