#include "expand/pixel_taxi.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace expand::taxi {

std::string_view action_name(Action a) {
    switch (a) {
        case Action::kUp: return "up";
        case Action::kDown: return "down";
        case Action::kLeft: return "left";
        case Action::kRight: return "right";
        case Action::kPickup: return "pickup";
        case Action::kDropoff: return "dropoff";
    }
    return "?";
}

void TaxiConfig::validate() const {
    if (grid_size < 3) {
        throw std::invalid_argument("TaxiConfig: grid_size must be >= 3");
    }
    if (n_passengers < 1) {
        throw std::invalid_argument("TaxiConfig: n_passengers must be >= 1");
    }
    if (n_passengers > static_cast<int>(kPassengerPalette.size())) {
        throw std::invalid_argument("TaxiConfig: at most " + std::to_string(kPassengerPalette.size()) +
                                    " passenger colors are available");
    }
    if (grid_size * cell_px != kFrameSide) {
        throw std::invalid_argument("TaxiConfig: grid_size * cell_px must equal 84");
    }
    if (max_steps < 1) {
        throw std::invalid_argument("TaxiConfig: max_steps must be >= 1");
    }
    if (n_passengers + 2 > grid_size * grid_size) {
        throw std::invalid_argument("TaxiConfig: grid too small to place the taxi, destination and passengers");
    }
}

std::optional<int> TaxiState::passenger_at(Cell c) const {
    for (std::size_t i = 0; i < passengers.size(); ++i) {
        if (passengers[i].cell && *passengers[i].cell == c) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

namespace {

bool in_grid(const TaxiConfig& config, Cell c) {
    return c.x >= 0 && c.y >= 0 && c.x < config.grid_size && c.y < config.grid_size;
}

}  // namespace

std::pair<TaxiState, RawFrame> reset(const TaxiConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);

    std::vector<Cell> cells;
    for (int y = 0; y < config.grid_size; ++y) {
        for (int x = 0; x < config.grid_size; ++x) {
            cells.push_back({x, y});
        }
    }
    // Draws a cell uniformly from `cells` and removes it.
    auto take = [&](std::vector<Cell>& pool) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const auto i = pick(rng);
        const Cell c = pool[i];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
        return c;
    };
    auto remove = [](std::vector<Cell>& pool, Cell c) { std::erase(pool, c); };

    TaxiState state;
    const Cell fixed_taxi{0, 0};
    const Cell fixed_destination{config.grid_size - 1, config.grid_size - 1};
    if (config.randomize_destination) {
        state.destination = take(cells);
    } else {
        state.destination = fixed_destination;
        remove(cells, fixed_destination);
    }
    if (config.randomize_taxi) {
        state.taxi = take(cells);
    } else {
        state.taxi = fixed_taxi;
        remove(cells, fixed_taxi);
    }
    if (state.taxi == state.destination) {
        throw std::invalid_argument("TaxiConfig: taxi start and destination coincide");
    }
    for (int p = 0; p < config.n_passengers; ++p) {
        state.passengers.push_back({p, take(cells)});
    }
    state.target_passenger = 0;
    return {state, render(config, state)};
}

std::pair<TaxiState, EnvStepResult> step(const TaxiConfig& config, const TaxiState& state, Action action) {
    if (state.terminal) {
        throw std::logic_error("taxi::step: episode already terminal");
    }
    TaxiState next = state;
    EnvStepResult result;

    auto move = [&](int dx, int dy) {
        const Cell c{next.taxi.x + dx, next.taxi.y + dy};
        if (in_grid(config, c)) {
            next.taxi = c;
        }
    };

    switch (action) {
        case Action::kUp: move(0, -1); break;
        case Action::kDown: move(0, 1); break;
        case Action::kLeft: move(-1, 0); break;
        case Action::kRight: move(1, 0); break;
        case Action::kPickup:
            if (!next.carried) {
                if (const auto p = next.passenger_at(next.taxi)) {
                    next.carried = *p;
                    next.passengers[static_cast<std::size_t>(*p)].cell.reset();
                }
            }
            break;
        case Action::kDropoff:
            if (next.carried) {
                const int p = *next.carried;
                if (p == next.target_passenger && next.taxi == next.destination) {
                    // Delivered; the passenger stays in the taxi for the final frame.
                    result.reward = 1.0;
                    next.terminal = true;
                } else if (!next.passenger_at(next.taxi)) {
                    next.passengers[static_cast<std::size_t>(p)].cell = next.taxi;
                    next.carried.reset();
                }
            }
            break;
    }

    next.steps_elapsed += 1;
    if (!next.terminal && next.steps_elapsed >= config.max_steps) {
        next.terminal = true;
        result.truncated = true;
    }
    result.terminal = next.terminal;
    result.frame = render(config, next);
    return {next, result};
}

RawFrame render(const TaxiConfig& config, const TaxiState& state) {
    const int px = config.cell_px;
    RawFrame frame(kFrameSide, kFrameSide, kBackground);

    frame.fill_rect(state.destination.x * px, state.destination.y * px, px, px, kDestinationBlack);
    frame.fill_rect(state.taxi.x * px + kTaxiInset, state.taxi.y * px + kTaxiInset, px - 2 * kTaxiInset,
                    px - 2 * kTaxiInset, kTaxiGray);

    const int dot_offset = (px - kPassengerDot) / 2;
    for (const auto& p : state.passengers) {
        if (p.cell) {
            frame.fill_rect(p.cell->x * px + dot_offset, p.cell->y * px + dot_offset, kPassengerDot, kPassengerDot,
                            kPassengerPalette[static_cast<std::size_t>(p.color)]);
        }
    }
    if (state.carried) {
        const auto& p = state.passengers[static_cast<std::size_t>(*state.carried)];
        frame.fill_rect(state.taxi.x * px + dot_offset, state.taxi.y * px + dot_offset, kPassengerDot, kPassengerDot,
                        kPassengerPalette[static_cast<std::size_t>(p.color)]);
    }
    return frame;
}

BoundingBox cell_box(const TaxiConfig& config, Cell c) {
    return {c.x * config.cell_px, c.y * config.cell_px, config.cell_px, config.cell_px};
}

std::optional<std::string> check_state(const TaxiConfig& config, const TaxiState& state) {
    if (!in_grid(config, state.taxi)) return "taxi outside grid";
    if (!in_grid(config, state.destination)) return "destination outside grid";
    if (state.target_passenger < 0 || state.target_passenger >= static_cast<int>(state.passengers.size())) {
        return "target passenger out of range";
    }
    for (std::size_t i = 0; i < state.passengers.size(); ++i) {
        const auto& p = state.passengers[i];
        const bool is_carried = state.carried && *state.carried == static_cast<int>(i);
        if (is_carried && p.cell) return "carried passenger still has a cell";
        if (!is_carried && !p.cell) return "uncarried passenger has no cell";
        if (p.cell && !in_grid(config, *p.cell)) return "passenger outside grid";
        for (std::size_t j = i + 1; j < state.passengers.size(); ++j) {
            if (p.cell && state.passengers[j].cell && *p.cell == *state.passengers[j].cell) {
                return "two passengers share a cell";
            }
        }
    }
    if (state.steps_elapsed < 0 || state.steps_elapsed > config.max_steps) return "step counter out of range";
    return std::nullopt;
}

PixelTaxiEnv::PixelTaxiEnv(TaxiConfig config) : config_(config) { config_.validate(); }

RawFrame PixelTaxiEnv::reset(std::uint64_t seed) {
    auto [state, frame] = taxi::reset(config_, seed);
    state_ = std::move(state);
    return frame;
}

EnvStepResult PixelTaxiEnv::step(int action) {
    if (action < 0 || action >= kActionCount) {
        throw std::invalid_argument("PixelTaxiEnv::step: action out of range");
    }
    auto [next, result] = taxi::step(config_, state_, static_cast<Action>(action));
    state_ = std::move(next);
    return result;
}

}  // namespace expand::taxi
