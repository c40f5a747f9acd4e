#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "expand/bounding_box.hpp"
#include "expand/environment.hpp"
#include "expand/frame.hpp"

namespace expand::taxi {

enum class Action : int { kUp = 0, kDown, kLeft, kRight, kPickup, kDropoff };
inline constexpr int kActionCount = 6;

std::string_view action_name(Action a);

/// Grid coordinate: x is the column, y the row, (0, 0) top-left.
struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

struct TaxiConfig {
    int grid_size = 7;
    int n_passengers = 3;
    int max_steps = 100;
    int cell_px = 12;
    /// Taxi starts top-left and the destination sits bottom-right unless these are set.
    bool randomize_taxi = false;
    bool randomize_destination = false;

    /// Throws std::invalid_argument on a broken config.
    void validate() const;
};

struct Passenger {
    int color = 0;               // palette index; 0 is red
    std::optional<Cell> cell;    // empty while carried
    bool operator==(const Passenger&) const = default;
};

struct TaxiState {
    Cell taxi;
    Cell destination;
    std::vector<Passenger> passengers;
    std::optional<int> carried;  // index into passengers
    int target_passenger = 0;
    int steps_elapsed = 0;
    bool terminal = false;

    bool operator==(const TaxiState&) const = default;

    /// Index of the passenger standing on `c`, if any.
    std::optional<int> passenger_at(Cell c) const;
};

using Color = std::array<std::uint8_t, 3>;

inline constexpr Color kBackground{255, 255, 255};
inline constexpr Color kTaxiGray{128, 128, 128};
inline constexpr Color kDestinationBlack{0, 0, 0};
inline constexpr std::array<Color, 5> kPassengerPalette{{
    {255, 0, 0},    // red, always the target
    {0, 0, 255},    // blue
    {255, 255, 0},  // yellow
    {0, 160, 0},    // green
    {255, 0, 255},  // magenta
}};
/// Gray taxi square is inset this many pixels inside its cell so a destination
/// underneath stays visible as a black ring.
inline constexpr int kTaxiInset = 2;
inline constexpr int kPassengerDot = 6;

/// Throws std::invalid_argument when the grid cannot hold every entity.
std::pair<TaxiState, RawFrame> reset(const TaxiConfig& config, std::uint64_t seed);

/// Throws std::logic_error when stepping a finished episode.
std::pair<TaxiState, EnvStepResult> step(const TaxiConfig& config, const TaxiState& state, Action action);

RawFrame render(const TaxiConfig& config, const TaxiState& state);

/// Pixel box covering a whole grid cell.
BoundingBox cell_box(const TaxiConfig& config, Cell c);

/// Checks the TaxiState invariants; returns a diagnostic on violation.
std::optional<std::string> check_state(const TaxiConfig& config, const TaxiState& state);

/// Environment adapter so generic training code can drive the taxi.
class PixelTaxiEnv final : public Environment {
public:
    explicit PixelTaxiEnv(TaxiConfig config);

    int action_count() const override { return kActionCount; }
    RawFrame reset(std::uint64_t seed) override;
    EnvStepResult step(int action) override;

    const TaxiConfig& config() const { return config_; }
    const TaxiState& state() const { return state_; }

private:
    TaxiConfig config_;
    TaxiState state_;
};

}  // namespace expand::taxi
