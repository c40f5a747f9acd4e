#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace expand {

inline constexpr int kFrameSide = 84;
inline constexpr int kFramePixels = kFrameSide * kFrameSide;
inline constexpr int kStackDepth = 4;

/// An RGB render straight from an environment, row-major, 3 bytes per pixel.
struct RawFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    RawFrame() = default;
    RawFrame(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    std::array<std::uint8_t, 3> pixel(int x, int y) const;
    void set_pixel(int x, int y, std::array<std::uint8_t, 3> color);
    void fill_rect(int x, int y, int w, int h, std::array<std::uint8_t, 3> color);

    bool operator==(const RawFrame&) const = default;
};

/// 84x84 grayscale intensities in [0, 1], row-major.
class Frame {
public:
    Frame();
    explicit Frame(std::vector<float> pixels);

    float at(int row, int col) const { return pixels_[static_cast<std::size_t>(row * kFrameSide + col)]; }
    float& at(int row, int col) { return pixels_[static_cast<std::size_t>(row * kFrameSide + col)]; }

    std::span<const float> pixels() const { return pixels_; }
    std::span<float> pixels() { return pixels_; }

    bool operator==(const Frame&) const = default;

private:
    std::vector<float> pixels_;
};

/// Four frames, oldest first. Frames are immutable and shared, so copying a
/// state is four reference-count bumps; replay and feedback buffers that hold
/// overlapping stacks store each frame once.
class StackedState {
public:
    using FramePtr = std::shared_ptr<const Frame>;

    StackedState();
    explicit StackedState(std::array<FramePtr, kStackDepth> frames);

    /// State at episode start: the first frame repeated in every slot.
    static StackedState from_first_frame(Frame first);

    const Frame& frame(int slot) const { return *frames_[static_cast<std::size_t>(slot)]; }
    const FramePtr& frame_ptr(int slot) const { return frames_[static_cast<std::size_t>(slot)]; }
    const Frame& newest() const { return frame(kStackDepth - 1); }

    /// Copies all pixels into `out` as [kStackDepth][84][84].
    void copy_to(std::span<float> out) const;

    /// Pixel-wise equality (not pointer identity).
    friend bool operator==(const StackedState& a, const StackedState& b);

private:
    std::array<FramePtr, kStackDepth> frames_;
};

/// Luminance (ITU-R 601), area-average resize to 84x84, scale to [0, 1].
/// Throws std::invalid_argument when the buffer does not match width*height*3.
Frame preprocess(const RawFrame& raw);

/// Drops the oldest frame and appends `f` as the newest.
StackedState push_frame(const StackedState& state, Frame f);
StackedState push_frame(const StackedState& state, StackedState::FramePtr f);

}  // namespace expand
