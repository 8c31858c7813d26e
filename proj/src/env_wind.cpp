#include "tvmdp/env/wind.hpp"

#include <cmath>

namespace tvmdp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Integral of the N(0, 1/2) density (1/sqrt(pi)) e^{-w^2} over [a, b].
double normal_mass(double a, double b) { return 0.5 * (std::erf(b) - std::erf(a)); }

}  // namespace

std::array<double, WindScenario::num_outcomes> WindScenario::outcome_probs(double d) const {
    std::array<double, num_outcomes> probs{};
    for (int o = 0; o < num_outcomes; ++o) {
        const double center = o * kPi / 2.0;
        double p = 0.0;
        for (int wrap = -3; wrap <= 3; ++wrap) {
            const double lo = 2.0 * wrap * kPi + center - kPi / 4.0 - d;
            const double hi = 2.0 * wrap * kPi + center + kPi / 4.0 - d;
            p += normal_mass(lo, hi);
        }
        probs[o] = p;
    }
    return probs;
}

double WindScenario::initial_direction(CounterRng& rng) const {
    return rng.uniform(0.0, 2.0 * kPi);
}

double WindScenario::step_direction(double d, CounterRng& rng) const {
    const double noise = rng.uniform(-kPi / 180.0, kPi / 180.0);
    double next = d - 3.0 * kPi / 180.0 + noise;
    next = std::fmod(next, 2.0 * kPi);
    if (next < 0.0) next += 2.0 * kPi;
    return next;
}

int WindScenario::sample_outcome(double d, CounterRng& rng) const {
    const auto probs = outcome_probs(d);
    const double u = rng.next_double();
    double acc = 0.0;
    for (int o = 0; o < num_outcomes; ++o) {
        acc += probs[o];
        if (u < acc) return o;
    }
    return num_outcomes - 1;
}

}  // namespace tvmdp
