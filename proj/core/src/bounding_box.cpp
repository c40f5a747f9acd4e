#include "expand/bounding_box.hpp"

#include <algorithm>

namespace expand {

std::optional<std::string> validate_box(const BoundingBox& box) {
    if (box.x < 0) return "x: must be >= 0";
    if (box.y < 0) return "y: must be >= 0";
    if (box.w < 1) return "w: must be >= 1";
    if (box.h < 1) return "h: must be >= 1";
    if (box.x >= kFrameSide) return "x: box starts right of the 84x84 frame";
    if (box.y >= kFrameSide) return "y: box starts below the 84x84 frame";
    return std::nullopt;
}

std::optional<BoundingBox> clip_to_frame(const BoundingBox& box) {
    const int x0 = std::max(0, box.x);
    const int y0 = std::max(0, box.y);
    const int x1 = std::min(kFrameSide, box.x + box.w);
    const int y1 = std::min(kFrameSide, box.y + box.h);
    if (x1 <= x0 || y1 <= y0) {
        return std::nullopt;
    }
    return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace expand
