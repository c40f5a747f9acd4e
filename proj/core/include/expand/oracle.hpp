#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "expand/feedback.hpp"
#include "expand/pixel_taxi.hpp"

namespace expand::oracle {

/// Scripted optimal taxi policy: shortest path to the red passenger, pick it
/// up, shortest path to the destination, drop off. Paths move vertically
/// before horizontally. A wrongly carried passenger is set down first.
taxi::Action scripted_action(const taxi::TaxiConfig& config, const taxi::TaxiState& state);

/// Cell-aligned boxes over the taxi, the red passenger (unless carried) and
/// the destination. Duplicated cells appear once.
std::vector<BoundingBox> saliency_boxes(const taxi::TaxiConfig& config, const taxi::TaxiState& state);

struct TrajectoryStep {
    taxi::TaxiState env_state;
    StackedState state;
    int action = 0;
};

struct OracleOptions {
    /// Fraction of queried steps that receive a label.
    double density = 1.0;
};

/// One record per labeled step: +1 when the action matches the scripted
/// action, -1 otherwise. Deterministic when density is 1; `rng` is only
/// consulted for sparser feedback.
std::vector<FeedbackRecord> oracle_feedback(const taxi::TaxiConfig& config, std::span<const TrajectoryStep> trajectory,
                                            const OracleOptions& options = {}, std::mt19937_64* rng = nullptr);

}  // namespace expand::oracle
