#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "expand/bounding_box.hpp"
#include "expand/frame.hpp"

namespace expand {

/// Per-pixel relevance: 1 inside at least one explanation box.
class SaliencyMask {
public:
    SaliencyMask() : bits_(kFramePixels, 0) {}

    static SaliencyMask all_ones();

    bool at(int row, int col) const { return bits_[static_cast<std::size_t>(row * kFrameSide + col)] != 0; }
    void set(int row, int col, bool v) { bits_[static_cast<std::size_t>(row * kFrameSide + col)] = v ? 1 : 0; }
    std::span<const std::uint8_t> bits() const { return bits_; }
    int count() const;

    bool operator==(const SaliencyMask&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Boxes are clipped to the frame; boxes entirely outside contribute nothing.
SaliencyMask build_mask(std::span<const BoundingBox> boxes);

/// One Gaussian filter of the perturbation bank.
struct BlurFilter {
    int size = 5;       // odd, >= 3
    double sigma = 2.0; // > 0
    bool operator==(const BlurFilter&) const = default;
};

using AugmentationPreset = std::vector<BlurFilter>;

/// "aug1", "aug5" or "aug12". Throws std::invalid_argument otherwise.
AugmentationPreset preset_bank(std::string_view name);
void validate_filter(const BlurFilter& filter);

/// Gaussian taps truncated to `size` and renormalized to sum to 1.
std::vector<double> gaussian_kernel_1d(const BlurFilter& filter);

/// Mirror index into [0, n) without repeating the edge sample (...2 1 |0 1 2...).
int reflect_index(int i, int n);

/// Separable Gaussian blur with reflective borders.
Frame gaussian_blur(const Frame& frame, const BlurFilter& filter);

/// Keeps masked (relevant) pixels and blurs the rest.
Frame perturb_frame(const Frame& frame, const SaliencyMask& mask, const BlurFilter& filter);
StackedState perturb_state(const StackedState& state, const SaliencyMask& mask, const BlurFilter& filter);

/// Mean over augmentations of the mean per-action absolute Q difference.
/// Throws std::invalid_argument on a length mismatch or empty augmentation list.
double invariance_loss(std::span<const double> q_original, std::span<const std::vector<double>> q_augmented);

struct LossWeights {
    double advantage = 1.0;
    double invariance = 0.1;
};

double combined_feedback_loss(double advantage_loss, double invariance_loss, const LossWeights& weights);

// Context-agnostic baselines.

inline constexpr int kCropPad = 4;
inline constexpr int kRandomBlurSize = 23;
inline constexpr double kRandomBlurSigmaMin = 2.0;
inline constexpr double kRandomBlurSigmaMax = 10.0;

/// Offset of the crop window relative to the centred one, each in [-4, 4].
struct CropShift {
    int dx = 0;
    int dy = 0;
    bool operator==(const CropShift&) const = default;
};

/// Zero-pads by 4 and reads the 84x84 window shifted by `shift`.
StackedState crop_shift(const StackedState& state, CropShift shift);

/// One uniformly drawn shift applied to every stacked frame.
StackedState random_crop(const StackedState& state, std::mt19937_64& rng, CropShift* drawn = nullptr);

/// One sigma ~ U(2, 10) per call, 23x23 kernel over every stacked frame.
StackedState random_blur(const StackedState& state, std::mt19937_64& rng, double* drawn_sigma = nullptr);

}  // namespace expand
