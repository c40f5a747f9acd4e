#include "expand/oracle.hpp"

#include <algorithm>

#include "expand/log.hpp"

namespace expand::oracle {

using taxi::Action;
using taxi::Cell;

namespace {

Action toward(Cell from, Cell to) {
    if (to.y < from.y) return Action::kUp;
    if (to.y > from.y) return Action::kDown;
    if (to.x < from.x) return Action::kLeft;
    return Action::kRight;
}

}  // namespace

Action scripted_action(const taxi::TaxiConfig& config, const taxi::TaxiState& s) {
    if (s.carried && *s.carried != s.target_passenger) {
        if (!s.passenger_at(s.taxi)) {
            return Action::kDropoff;
        }
        // Cell occupied: step somewhere else before setting the passenger down.
        return s.taxi.y + 1 < config.grid_size ? Action::kDown : Action::kUp;
    }
    if (s.carried) {
        return s.taxi == s.destination ? Action::kDropoff : toward(s.taxi, s.destination);
    }
    const auto& target = s.passengers[static_cast<std::size_t>(s.target_passenger)];
    const Cell goal = *target.cell;
    return s.taxi == goal ? Action::kPickup : toward(s.taxi, goal);
}

std::vector<BoundingBox> saliency_boxes(const taxi::TaxiConfig& config, const taxi::TaxiState& s) {
    std::vector<Cell> cells{s.taxi};
    const auto& target = s.passengers[static_cast<std::size_t>(s.target_passenger)];
    if (target.cell) {
        cells.push_back(*target.cell);
    }
    cells.push_back(s.destination);

    std::vector<BoundingBox> boxes;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (std::find(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(i), cells[i]) !=
            cells.begin() + static_cast<std::ptrdiff_t>(i)) {
            continue;
        }
        boxes.push_back(taxi::cell_box(config, cells[i]));
    }
    return boxes;
}

std::vector<FeedbackRecord> oracle_feedback(const taxi::TaxiConfig& config, std::span<const TrajectoryStep> trajectory,
                                            const OracleOptions& options, std::mt19937_64* rng) {
    std::vector<FeedbackRecord> records;
    records.reserve(trajectory.size());
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const auto& step = trajectory[i];
        if (const auto problem = taxi::check_state(config, step.env_state)) {
            log::warn("oracle: skipping malformed state at step {}: {}", i, *problem);
            continue;
        }
        if (options.density < 1.0 && rng && coin(*rng) >= options.density) {
            continue;
        }
        FeedbackRecord r;
        r.boxes = saliency_boxes(config, step.env_state);
        r.label = static_cast<int>(scripted_action(config, step.env_state)) == step.action ? kGoodLabel : kBadLabel;
        r.action = step.action;
        r.state = step.state;
        r.frame_index = static_cast<int>(i);
        r.source = "oracle";
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace expand::oracle
