#pragma once

#include <cstdint>

#include "expand/frame.hpp"

namespace expand {

struct EnvStepResult {
    RawFrame frame;
    double reward = 0.0;
    bool terminal = false;
    /// Terminal because the step limit was hit rather than the task ending.
    /// Learners keep bootstrapping through these.
    bool truncated = false;
};

/// Episodic image-observation environment.
class Environment {
public:
    virtual ~Environment() = default;

    virtual int action_count() const = 0;
    virtual RawFrame reset(std::uint64_t seed) = 0;
    virtual EnvStepResult step(int action) = 0;
};

}  // namespace expand
