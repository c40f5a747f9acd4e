#include "expand/saliency_augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace expand {

SaliencyMask SaliencyMask::all_ones() {
    SaliencyMask m;
    std::fill(m.bits_.begin(), m.bits_.end(), std::uint8_t{1});
    return m;
}

int SaliencyMask::count() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1})); }

SaliencyMask build_mask(std::span<const BoundingBox> boxes) {
    SaliencyMask mask;
    for (const auto& raw : boxes) {
        const auto box = clip_to_frame(raw);
        if (!box) {
            continue;
        }
        for (int row = box->y; row < box->y + box->h; ++row) {
            for (int col = box->x; col < box->x + box->w; ++col) {
                mask.set(row, col, true);
            }
        }
    }
    return mask;
}

AugmentationPreset preset_bank(std::string_view name) {
    if (name == "aug1") {
        return {{5, 5.0}};
    }
    if (name == "aug5") {
        return {{5, 2.0}, {5, 5.0}, {5, 10.0}, {11, 5.0}, {11, 10.0}};
    }
    if (name == "aug12") {
        return {{5, 2.0}, {5, 5.0}, {5, 10.0}, {7, 3.0},  {7, 5.0},  {7, 10.0},
                {9, 3.0}, {9, 5.0}, {9, 10.0}, {11, 3.0}, {11, 5.0}, {11, 10.0}};
    }
    throw std::invalid_argument("unknown augmentation preset '" + std::string(name) + "' (expected aug1, aug5, aug12)");
}

void validate_filter(const BlurFilter& filter) {
    if (filter.size < 3 || filter.size % 2 == 0) {
        throw std::invalid_argument("blur filter size must be odd and >= 3");
    }
    if (!(filter.sigma > 0.0)) {
        throw std::invalid_argument("blur sigma must be positive");
    }
    if (filter.size / 2 >= kFrameSide) {
        throw std::invalid_argument("blur filter larger than the frame");
    }
}

std::vector<double> gaussian_kernel_1d(const BlurFilter& filter) {
    validate_filter(filter);
    const int radius = filter.size / 2;
    std::vector<double> taps(static_cast<std::size_t>(filter.size));
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * filter.sigma * filter.sigma));
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (auto& t : taps) {
        t /= sum;
    }
    return taps;
}

int reflect_index(int i, int n) {
    if (n == 1) {
        return 0;
    }
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) {
        i += period;
    }
    return i < n ? i : period - i;
}

Frame gaussian_blur(const Frame& frame, const BlurFilter& filter) {
    const auto taps = gaussian_kernel_1d(filter);
    const int radius = filter.size / 2;
    const int taps_n = static_cast<int>(taps.size());

    // Horizontal pass over reflect-padded rows, then a row-wise vertical pass.
    std::vector<double> padded(static_cast<std::size_t>(kFrameSide + 2 * radius));
    std::vector<double> tmp(kFramePixels);
    for (int r = 0; r < kFrameSide; ++r) {
        for (int c = -radius; c < kFrameSide + radius; ++c) {
            padded[static_cast<std::size_t>(c + radius)] = frame.at(r, reflect_index(c, kFrameSide));
        }
        double* row = tmp.data() + static_cast<std::ptrdiff_t>(r) * kFrameSide;
        for (int c = 0; c < kFrameSide; ++c) {
            const double* src = padded.data() + c;
            double acc = 0.0;
            for (int k = 0; k < taps_n; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * src[k];
            }
            row[c] = acc;
        }
    }
    Frame out;
    std::array<double, kFrameSide> acc{};
    for (int r = 0; r < kFrameSide; ++r) {
        acc.fill(0.0);
        for (int k = 0; k < taps_n; ++k) {
            const double w = taps[static_cast<std::size_t>(k)];
            const double* src = tmp.data() + static_cast<std::ptrdiff_t>(reflect_index(r + k - radius, kFrameSide)) * kFrameSide;
            for (int c = 0; c < kFrameSide; ++c) {
                acc[static_cast<std::size_t>(c)] += w * src[c];
            }
        }
        for (int c = 0; c < kFrameSide; ++c) {
            out.at(r, c) = static_cast<float>(acc[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

Frame perturb_frame(const Frame& frame, const SaliencyMask& mask, const BlurFilter& filter) {
    Frame out = gaussian_blur(frame, filter);
    for (int r = 0; r < kFrameSide; ++r) {
        for (int c = 0; c < kFrameSide; ++c) {
            if (mask.at(r, c)) {
                out.at(r, c) = frame.at(r, c);
            }
        }
    }
    return out;
}

StackedState perturb_state(const StackedState& state, const SaliencyMask& mask, const BlurFilter& filter) {
    std::array<StackedState::FramePtr, kStackDepth> frames;
    for (int i = 0; i < kStackDepth; ++i) {
        // Stacks often repeat a frame; perturb each distinct frame once.
        StackedState::FramePtr reused;
        for (int j = 0; j < i; ++j) {
            if (state.frame_ptr(j) == state.frame_ptr(i)) {
                reused = frames[static_cast<std::size_t>(j)];
                break;
            }
        }
        frames[static_cast<std::size_t>(i)] =
            reused ? reused : std::make_shared<const Frame>(perturb_frame(state.frame(i), mask, filter));
    }
    return StackedState(std::move(frames));
}

double invariance_loss(std::span<const double> q_original, std::span<const std::vector<double>> q_augmented) {
    if (q_augmented.empty()) {
        throw std::invalid_argument("invariance_loss: no augmented Q-vectors");
    }
    if (q_original.empty()) {
        throw std::invalid_argument("invariance_loss: empty Q-vector");
    }
    double total = 0.0;
    for (const auto& q_aug : q_augmented) {
        if (q_aug.size() != q_original.size()) {
            throw std::invalid_argument("invariance_loss: Q-vector length mismatch");
        }
        double per_action = 0.0;
        for (std::size_t a = 0; a < q_original.size(); ++a) {
            per_action += std::abs(q_original[a] - q_aug[a]);
        }
        total += per_action / static_cast<double>(q_original.size());
    }
    return total / static_cast<double>(q_augmented.size());
}

double combined_feedback_loss(double advantage_loss, double invariance_loss, const LossWeights& weights) {
    return weights.advantage * advantage_loss + weights.invariance * invariance_loss;
}

StackedState crop_shift(const StackedState& state, CropShift shift) {
    if (std::abs(shift.dx) > kCropPad || std::abs(shift.dy) > kCropPad) {
        throw std::invalid_argument("crop_shift: shift exceeds the 4-pixel padding");
    }
    std::array<StackedState::FramePtr, kStackDepth> frames;
    for (int i = 0; i < kStackDepth; ++i) {
        Frame out;
        const Frame& in = state.frame(i);
        for (int r = 0; r < kFrameSide; ++r) {
            const int sr = r + shift.dy;
            if (sr < 0 || sr >= kFrameSide) {
                continue;
            }
            for (int c = 0; c < kFrameSide; ++c) {
                const int sc = c + shift.dx;
                if (sc >= 0 && sc < kFrameSide) {
                    out.at(r, c) = in.at(sr, sc);
                }
            }
        }
        frames[static_cast<std::size_t>(i)] = std::make_shared<const Frame>(std::move(out));
    }
    return StackedState(std::move(frames));
}

StackedState random_crop(const StackedState& state, std::mt19937_64& rng, CropShift* drawn) {
    std::uniform_int_distribution<int> offset(-kCropPad, kCropPad);
    CropShift shift;
    shift.dx = offset(rng);
    shift.dy = offset(rng);
    if (drawn) {
        *drawn = shift;
    }
    return crop_shift(state, shift);
}

StackedState random_blur(const StackedState& state, std::mt19937_64& rng, double* drawn_sigma) {
    std::uniform_real_distribution<double> sigma_dist(kRandomBlurSigmaMin, kRandomBlurSigmaMax);
    const BlurFilter filter{kRandomBlurSize, sigma_dist(rng)};
    if (drawn_sigma) {
        *drawn_sigma = filter.sigma;
    }
    std::array<StackedState::FramePtr, kStackDepth> frames;
    for (int i = 0; i < kStackDepth; ++i) {
        frames[static_cast<std::size_t>(i)] = std::make_shared<const Frame>(gaussian_blur(state.frame(i), filter));
    }
    return StackedState(std::move(frames));
}

}  // namespace expand
