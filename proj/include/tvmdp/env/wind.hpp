#pragma once

#include <array>

#include "tvmdp/rng.hpp"

namespace tvmdp {

// Wind direction drifting clockwise by 3 degrees per step plus up to a degree
// of noise. The observation each step is the wind angle perturbed by N(0, 1/2)
// noise and rounded to the nearest axis direction (0 east, 1 north, 2 west,
// 3 south as multiples of pi/2).
struct WindScenario {
    static constexpr int num_outcomes = 4;

    // P(outcome | true direction d), wrapped normal integrated over the
    // quarter-circle arc around each axis.
    std::array<double, num_outcomes> outcome_probs(double d) const;

    double initial_direction(CounterRng& rng) const;
    double step_direction(double d, CounterRng& rng) const;
    int sample_outcome(double d, CounterRng& rng) const;
};

}  // namespace tvmdp
