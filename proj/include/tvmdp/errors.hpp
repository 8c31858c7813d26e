#pragma once

#include <stdexcept>
#include <string>

namespace tvmdp {

// Estimation is requested for a (state, action) pair with no usable
// observations; callers are expected to fall back to the uniform completion.
struct NoVisits : std::runtime_error {
    explicit NoVisits(const std::string& what) : std::runtime_error(what) {}
};

// Iteration limit reached before meeting the objective tolerance.
struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Dimension or combinatorial guard tripped (oracle solver, vertex enumeration).
struct InstanceTooLarge : std::runtime_error {
    explicit InstanceTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Anchors handed to the polytope builder admit no feasible chain. Anchors from
// a valid solve are always jointly feasible, so this signals an internal bug.
struct InfeasibleAnchors : std::logic_error {
    explicit InfeasibleAnchors(const std::string& what) : std::logic_error(what) {}
};

// Experiment configuration failed validation; message names the field.
struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Series passed to compare_runs disagree in length or layout.
struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tvmdp
