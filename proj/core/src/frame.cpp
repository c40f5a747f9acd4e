#include "expand/frame.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace expand {

RawFrame::RawFrame(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
    if (w < 1 || h < 1) {
        throw std::invalid_argument("RawFrame: width and height must be >= 1");
    }
    rgb.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill[0];
        rgb[i + 1] = fill[1];
        rgb[i + 2] = fill[2];
    }
}

std::array<std::uint8_t, 3> RawFrame::pixel(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void RawFrame::set_pixel(int x, int y, std::array<std::uint8_t, 3> color) {
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    rgb[i] = color[0];
    rgb[i + 1] = color[1];
    rgb[i + 2] = color[2];
}

void RawFrame::fill_rect(int x, int y, int w, int h, std::array<std::uint8_t, 3> color) {
    const int x0 = std::max(0, x), y0 = std::max(0, y);
    const int x1 = std::min(width, x + w), y1 = std::min(height, y + h);
    for (int yy = y0; yy < y1; ++yy) {
        for (int xx = x0; xx < x1; ++xx) {
            set_pixel(xx, yy, color);
        }
    }
}

Frame::Frame() : pixels_(kFramePixels, 0.0f) {}

Frame::Frame(std::vector<float> pixels) : pixels_(std::move(pixels)) {
    if (pixels_.size() != static_cast<std::size_t>(kFramePixels)) {
        throw std::invalid_argument("Frame: expected " + std::to_string(kFramePixels) + " pixels, got " +
                                    std::to_string(pixels_.size()));
    }
}

StackedState::StackedState() {
    static const auto blank = std::make_shared<const Frame>();
    frames_.fill(blank);
}

StackedState::StackedState(std::array<FramePtr, kStackDepth> frames) : frames_(std::move(frames)) {
    for (const auto& f : frames_) {
        if (!f) {
            throw std::invalid_argument("StackedState: null frame");
        }
    }
}

StackedState StackedState::from_first_frame(Frame first) {
    auto shared = std::make_shared<const Frame>(std::move(first));
    std::array<FramePtr, kStackDepth> frames;
    frames.fill(shared);
    return StackedState(std::move(frames));
}

void StackedState::copy_to(std::span<float> out) const {
    if (out.size() < static_cast<std::size_t>(kStackDepth * kFramePixels)) {
        throw std::invalid_argument("StackedState::copy_to: output too small");
    }
    for (int i = 0; i < kStackDepth; ++i) {
        const auto px = frames_[static_cast<std::size_t>(i)]->pixels();
        std::copy(px.begin(), px.end(), out.begin() + static_cast<std::ptrdiff_t>(i) * kFramePixels);
    }
}

bool operator==(const StackedState& a, const StackedState& b) {
    for (int i = 0; i < kStackDepth; ++i) {
        if (a.frames_[static_cast<std::size_t>(i)] != b.frames_[static_cast<std::size_t>(i)] &&
            !(*a.frames_[static_cast<std::size_t>(i)] == *b.frames_[static_cast<std::size_t>(i)])) {
            return false;
        }
    }
    return true;
}

namespace {

struct Tap {
    int source;
    double weight;
};

// Overlap of each output interval with the source pixels along one axis,
// weights normalised to sum to 1.
std::vector<std::vector<Tap>> area_taps(int source_len, int target_len) {
    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(target_len));
    const double scale = static_cast<double>(source_len) / target_len;
    for (int o = 0; o < target_len; ++o) {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        auto& row = taps[static_cast<std::size_t>(o)];
        for (int s = static_cast<int>(lo); s < source_len && s < hi; ++s) {
            const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
            if (overlap > 1e-12) {
                row.push_back({s, overlap / scale});
            }
        }
    }
    return taps;
}

}  // namespace

Frame preprocess(const RawFrame& raw) {
    if (raw.width < 1 || raw.height < 1) {
        throw std::invalid_argument("preprocess: frame dimensions must be >= 1, got " + std::to_string(raw.width) +
                                    "x" + std::to_string(raw.height));
    }
    const auto expected = static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height) * 3;
    if (raw.rgb.size() != expected) {
        throw std::invalid_argument("preprocess: " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                                    " frame needs " + std::to_string(expected) + " bytes, got " +
                                    std::to_string(raw.rgb.size()));
    }

    std::vector<double> luma(static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height));
    for (std::size_t i = 0; i < luma.size(); ++i) {
        luma[i] = 0.299 * raw.rgb[3 * i] + 0.587 * raw.rgb[3 * i + 1] + 0.114 * raw.rgb[3 * i + 2];
    }

    const auto col_taps = area_taps(raw.width, kFrameSide);
    const auto row_taps = area_taps(raw.height, kFrameSide);

    Frame out;
    for (int r = 0; r < kFrameSide; ++r) {
        for (int c = 0; c < kFrameSide; ++c) {
            double acc = 0.0;
            for (const auto& ry : row_taps[static_cast<std::size_t>(r)]) {
                const auto base = static_cast<std::size_t>(ry.source) * static_cast<std::size_t>(raw.width);
                for (const auto& cx : col_taps[static_cast<std::size_t>(c)]) {
                    acc += ry.weight * cx.weight * luma[base + static_cast<std::size_t>(cx.source)];
                }
            }
            out.at(r, c) = static_cast<float>(std::clamp(acc / 255.0, 0.0, 1.0));
        }
    }
    return out;
}

StackedState push_frame(const StackedState& state, StackedState::FramePtr f) {
    std::array<StackedState::FramePtr, kStackDepth> frames;
    for (int i = 0; i + 1 < kStackDepth; ++i) {
        frames[static_cast<std::size_t>(i)] = state.frame_ptr(i + 1);
    }
    frames[kStackDepth - 1] = std::move(f);
    return StackedState(std::move(frames));
}

StackedState push_frame(const StackedState& state, Frame f) {
    return push_frame(state, std::make_shared<const Frame>(std::move(f)));
}

}  // namespace expand
