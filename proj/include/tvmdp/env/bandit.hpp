#pragma once

#include <cmath>
#include <vector>

#include "tvmdp/rng.hpp"

namespace tvmdp {

// Arms with periodically varying success probability, compressed into one
// TVMDP step per pull: state 0 is the hub, pulling arm i (1-based) lands in
// success state i with the arm's probability and otherwise in the shared
// failure state, collecting reward i on success; the return to the hub is
// folded into the same step.
struct BanditScenario {
    int arms = 5;
    std::vector<double> gamma;  // per arm, arm 1 entries unused
    std::vector<double> delta;

    static BanditScenario sample(int arms, CounterRng& rng) {
        BanditScenario scenario;
        scenario.arms = arms;
        scenario.gamma.assign(arms + 1, 0.0);
        scenario.delta.assign(arms + 1, 0.0);
        for (int i = 2; i <= arms; ++i) {
            scenario.gamma[i] = rng.uniform(0.0, 0.2);
            scenario.delta[i] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        }
        return scenario;
    }

    int num_states() const { return arms + 2; }
    int failure_state() const { return arms + 1; }

    // Success probability of the 1-based arm at time t.
    double success_prob(int arm, int t) const {
        if (arm == 1) return 1.0;
        return 0.95 * (std::sin(gamma[arm] * t + delta[arm]) + 1.0) / arm;
    }

    double arm_reward(int arm) const { return static_cast<double>(arm); }
};

}  // namespace tvmdp
