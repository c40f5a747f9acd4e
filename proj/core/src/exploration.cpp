#include "expand/exploration.hpp"

#include <algorithm>
#include <stdexcept>

namespace expand {

EpsilonSchedule decay_epsilon(EpsilonSchedule schedule) {
    schedule.epsilon = std::max(schedule.floor, schedule.decay * schedule.epsilon);
    return schedule;
}

int argmax(std::span<const float> values) {
    if (values.empty()) {
        throw std::invalid_argument("argmax: empty vector");
    }
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

int select_action(std::span<const float> q_values, const EpsilonSchedule& schedule, std::mt19937_64& rng) {
    if (q_values.empty()) {
        throw std::invalid_argument("select_action: no actions");
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < schedule.epsilon) {
        std::uniform_int_distribution<int> any(0, static_cast<int>(q_values.size()) - 1);
        return any(rng);
    }
    return argmax(q_values);
}

}  // namespace expand
