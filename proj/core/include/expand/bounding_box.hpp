#pragma once

#include <optional>
#include <string>

#include "expand/frame.hpp"

namespace expand {

/// Axis-aligned pixel box in 84x84 frame coordinates. Covers columns
/// [x, x + w) and rows [y, y + h).
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    bool operator==(const BoundingBox&) const = default;

    bool contains(int col, int row) const { return col >= x && col < x + w && row >= y && row < y + h; }
};

/// Empty when the box is valid, otherwise a diagnostic naming the bad field.
std::optional<std::string> validate_box(const BoundingBox& box);

/// Intersection with the frame; nullopt when nothing is left.
std::optional<BoundingBox> clip_to_frame(const BoundingBox& box);

}  // namespace expand
