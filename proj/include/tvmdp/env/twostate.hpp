#pragma once

#include <cmath>

namespace tvmdp {

// Two states with a sinusoidal switch probability. In the plain phase the
// walk has no choices: state 0 switches to state 1 with probability p(t) and
// state 1 always returns. The actions phase adds the choice at state 0
// between staying put for reward 1 (blue) and attempting the switch for the
// delayed reward 3 collected on the deterministic return (black); blue and
// black are known to be deterministic, so only the switch outcome is ever
// estimated.
struct TwoStateScenario {
    bool with_actions = false;

    static constexpr int kBlue = 0;
    static constexpr int kRed = 1;
    static constexpr int kBlack = 2;

    double switch_prob(int t) const { return 0.5 * (1.0 + std::sin(t * 0.01)); }

    // Per-step bound on the change of the switch probability.
    double drift_eps() const {
        return 0.5 * (1.0 - std::cos(0.01) + std::sin(0.01));
    }

    int num_states() const { return 2; }
    int num_actions() const { return with_actions ? 3 : 1; }

    bool action_allowed(int s, int a) const {
        if (!with_actions) return a == 0;
        return s == 0 ? (a == kBlue || a == kRed) : a == kBlack;
    }

    double reward(int s, int a) const {
        if (!with_actions) return 0.0;
        if (s == 0) return a == kBlue ? 1.0 : 0.0;
        return 3.0;
    }

    double kernel(int s, int a, int s2, int t) const {
        if (!with_actions) {
            if (s == 1) return s2 == 0 ? 1.0 : 0.0;
            const double p = switch_prob(t);
            return s2 == 1 ? p : 1.0 - p;
        }
        if (s == 1) return s2 == 0 ? 1.0 : 0.0;  // black
        if (a == kBlue) return s2 == 0 ? 1.0 : 0.0;
        const double p = switch_prob(t);
        return s2 == 1 ? p : 1.0 - p;
    }
};

}  // namespace tvmdp
