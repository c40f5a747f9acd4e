#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "expand/bounding_box.hpp"
#include "expand/frame.hpp"
#include "expand/saliency_augment.hpp"

namespace expand {

inline constexpr int kGoodLabel = 1;
inline constexpr int kBadLabel = -1;

/// One evaluated state-action pair with its visual explanation. The boxes are
/// drawn on the newest frame and apply to every frame of the stack.
struct FeedbackRecord {
    std::vector<BoundingBox> boxes;
    int label = kGoodLabel;
    int action = 0;
    StackedState state;
    int frame_index = -1;      // step within the queried trajectory
    double timestamp = 0.0;    // epoch seconds; human signals only
    std::string source = "oracle";
};

/// Q(s, a) - max_a' Q(s, a').
double advantage(std::span<const double> q_values, int action);

/// Hinge-style feedback loss. "Greedy" means `action` is the argmax under the
/// lowest-index tie-break. Throws std::invalid_argument for an out-of-range
/// action, a label other than +-1, a non-positive margin, or a bad label on a
/// single-action vector.
double advantage_loss(std::span<const double> q_values, int action, int label, double margin);

struct FeedbackSample {
    std::shared_ptr<const FeedbackRecord> record;
    std::shared_ptr<const SaliencyMask> mask;
};

/// FIFO store of feedback records with their cached saliency masks. Appends
/// and samples may come from different threads.
class FeedbackBuffer {
public:
    explicit FeedbackBuffer(std::size_t capacity = 50'000);

    void store(FeedbackRecord record);
    void store_all(std::vector<FeedbackRecord> records);

    /// Uniform draws with replacement; empty when the buffer is empty.
    std::vector<FeedbackSample> sample(std::size_t batch_size, std::mt19937_64& rng) const;

    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    std::vector<FeedbackSample> snapshot() const;

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::deque<FeedbackSample> entries_;
};

// Credit assignment for human signals.

struct HumanSignal {
    double timestamp = 0.0;
    int label = kGoodLabel;
    std::vector<BoundingBox> boxes;
};

struct DisplayEvent {
    int frame_index = 0;
    double time = 0.0;
};

struct CreditWindow {
    double earliest = 2.0;  // seconds before the signal
    double latest = 0.2;
};

struct QueriedStep {
    StackedState state;
    int action = 0;
};

/// Attaches each signal to every frame displayed within the closed interval
/// [T - earliest, T - latest]. Signals with no frame in range are dropped with
/// a warning. A frame shown several times inside the window is credited once.
std::vector<FeedbackRecord> apply_credit_window(std::span<const HumanSignal> signals,
                                                std::span<const DisplayEvent> display_log,
                                                std::span<const QueriedStep> trajectory,
                                                const CreditWindow& window = {});

}  // namespace expand
