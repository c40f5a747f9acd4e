#pragma once

#include <random>
#include <span>

namespace expand {

/// Episodic epsilon-greedy schedule: epsilon shrinks by `decay` after every
/// episode and never drops below `floor`.
struct EpsilonSchedule {
    double epsilon = 1.0;
    double floor = 0.01;
    double decay = 0.99;
};

EpsilonSchedule decay_epsilon(EpsilonSchedule schedule);

/// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const float> values);

/// Uniform action with probability epsilon, greedy otherwise.
/// Throws std::invalid_argument on an empty value vector.
int select_action(std::span<const float> q_values, const EpsilonSchedule& schedule, std::mt19937_64& rng);

}  // namespace expand
