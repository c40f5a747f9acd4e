#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace expand {

struct EpisodeMetrics {
    int episode = 0;
    int steps = 0;
    long total_steps = 0;
    double episode_return = 0.0;
    double epsilon = 0.0;
    double dqn_loss = 0.0;
    double advantage_loss = 0.0;
    double invariance_loss = 0.0;
    double explanation_loss = 0.0;
    int updates = 0;
    int new_feedback = 0;
    long feedback_records = 0;
    double wall_clock = 0.0;

    bool operator==(const EpisodeMetrics&) const = default;
};

void to_json(nlohmann::json& j, const EpisodeMetrics& m);
void from_json(const nlohmann::json& j, EpisodeMetrics& m);

std::vector<EpisodeMetrics> read_metrics_jsonl(const std::filesystem::path& path);

/// Mean of up to the last `window` values at each index.
std::vector<double> running_average(std::span<const double> values, int window = 20);

struct SeedCurve {
    std::vector<double> mean;
    std::vector<double> sem;  // sample sd / sqrt(n); 0 for a single run
};

/// Pointwise mean and standard error; shorter runs are padded with their last value.
SeedCurve aggregate_seeds(std::span<const std::vector<double>> runs);

/// Environment steps consumed when the running average of returns first
/// reaches `threshold` with a full window behind it.
std::optional<long> steps_to_threshold(std::span<const EpisodeMetrics> episodes, double threshold = 0.9,
                                       int window = 20);

}  // namespace expand
