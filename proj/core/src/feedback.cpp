#include "expand/feedback.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "expand/log.hpp"

namespace expand {

namespace {

void check_action(std::span<const double> q_values, int action) {
    if (q_values.empty()) {
        throw std::invalid_argument("empty Q-vector");
    }
    if (action < 0 || action >= static_cast<int>(q_values.size())) {
        throw std::invalid_argument("action index out of range");
    }
}

int greedy_action(std::span<const double> q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i) {
        if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

}  // namespace

double advantage(std::span<const double> q_values, int action) {
    check_action(q_values, action);
    const double best = *std::max_element(q_values.begin(), q_values.end());
    return q_values[static_cast<std::size_t>(action)] - best;
}

double advantage_loss(std::span<const double> q_values, int action, int label, double margin) {
    check_action(q_values, action);
    if (label != kGoodLabel && label != kBadLabel) {
        throw std::invalid_argument("feedback label must be +1 or -1");
    }
    if (!(margin > 0.0)) {
        throw std::invalid_argument("advantage margin must be positive");
    }
    const bool greedy = greedy_action(q_values) == action;
    const double q_a = q_values[static_cast<std::size_t>(action)];
    if (label == kGoodLabel) {
        if (greedy) {
            return 0.0;
        }
        return *std::max_element(q_values.begin(), q_values.end()) - q_a;
    }
    if (!greedy) {
        return 0.0;
    }
    if (q_values.size() < 2) {
        throw std::invalid_argument("bad feedback on the only action: second-best Q is undefined");
    }
    double second = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(q_values.size()); ++i) {
        if (i != action) {
            second = std::max(second, q_values[static_cast<std::size_t>(i)]);
        }
    }
    return q_a - (second - margin);
}

FeedbackBuffer::FeedbackBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("FeedbackBuffer: capacity must be positive");
    }
}

void FeedbackBuffer::store(FeedbackRecord record) {
    if (record.label != kGoodLabel && record.label != kBadLabel) {
        throw std::invalid_argument("FeedbackBuffer::store: label must be +1 or -1");
    }
    for (std::size_t i = 0; i < record.boxes.size(); ++i) {
        if (auto err = validate_box(record.boxes[i])) {
            throw std::invalid_argument("FeedbackBuffer::store: boxes[" + std::to_string(i) + "]." + *err);
        }
    }
    auto mask = std::make_shared<const SaliencyMask>(build_mask(record.boxes));
    FeedbackSample entry{std::make_shared<const FeedbackRecord>(std::move(record)), std::move(mask)};
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(entry));
    while (entries_.size() > capacity_) {
        entries_.pop_front();
    }
}

void FeedbackBuffer::store_all(std::vector<FeedbackRecord> records) {
    for (auto& r : records) {
        store(std::move(r));
    }
}

std::vector<FeedbackSample> FeedbackBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
    std::lock_guard lock(mutex_);
    std::vector<FeedbackSample> out;
    if (entries_.empty()) {
        return out;
    }
    std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 1);
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        out.push_back(entries_[pick(rng)]);
    }
    return out;
}

std::size_t FeedbackBuffer::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::vector<FeedbackSample> FeedbackBuffer::snapshot() const {
    std::lock_guard lock(mutex_);
    return {entries_.begin(), entries_.end()};
}

std::vector<FeedbackRecord> apply_credit_window(std::span<const HumanSignal> signals,
                                                std::span<const DisplayEvent> display_log,
                                                std::span<const QueriedStep> trajectory, const CreditWindow& window) {
    std::vector<FeedbackRecord> records;
    for (const auto& signal : signals) {
        const double lo = signal.timestamp - window.earliest;
        const double hi = signal.timestamp - window.latest;
        std::set<int> frames;
        for (const auto& ev : display_log) {
            if (ev.time >= lo && ev.time <= hi && ev.frame_index >= 0 &&
                ev.frame_index < static_cast<int>(trajectory.size())) {
                frames.insert(ev.frame_index);
            }
        }
        if (frames.empty()) {
            log::warn("credit window: no frame displayed in [{:.3f}, {:.3f}]; signal at {:.3f} dropped", lo, hi,
                         signal.timestamp);
            continue;
        }
        for (int f : frames) {
            FeedbackRecord r;
            r.boxes = signal.boxes;
            r.label = signal.label;
            r.action = trajectory[static_cast<std::size_t>(f)].action;
            r.state = trajectory[static_cast<std::size_t>(f)].state;
            r.frame_index = f;
            r.timestamp = signal.timestamp;
            r.source = "human";
            records.push_back(std::move(r));
        }
    }
    return records;
}

}  // namespace expand
