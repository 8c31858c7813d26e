#include "tvmdp/env/gridworld.hpp"

#include <algorithm>
#include <cassert>

namespace tvmdp {

namespace {
// Wall blocks in state order after the interior: north, east, south, west.
enum WallBlock { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
}  // namespace

int GridworldScenario::wall_side(int s) const {
    if (is_interior(s)) return -1;
    switch ((s - num_interior()) / side) {
        case kNorth: return 3;
        case kEast: return 0;
        case kSouth: return 1;
        default: return 2;
    }
}

double GridworldScenario::swap_weight(int t) const {
    if (instant_switch_time) return t < *instant_switch_time ? 0.0 : 1.0;
    return std::min(1.0, t / switch_duration);
}

double GridworldScenario::direction_prob(int action, int direction, int t) const {
    if (action == 4) return direction == 4 ? 1.0 : 0.0;
    const double w = swap_weight(t);
    if (direction == action) return 1.0 - w;
    if (direction == (action + 2) % 4) return w;
    return 0.0;
}

int GridworldScenario::move(int s, int direction) const {
    assert(is_interior(s));
    const int row = s / side;
    const int col = s % side;
    const int base = num_interior();
    switch (direction) {
        case 0: return row == 0 ? base + kNorth * side + col : s - side;
        case 1: return col == side - 1 ? base + kEast * side + row : s + 1;
        case 2: return row == side - 1 ? base + kSouth * side + col : s + side;
        case 3: return col == 0 ? base + kWest * side + row : s - 1;
        default: return s;
    }
}

int GridworldScenario::bounce_target(int s) const {
    assert(!is_interior(s));
    const int offset = (s - num_interior()) % side;
    switch ((s - num_interior()) / side) {
        case kNorth: return interior_state(0, offset);
        case kEast: return interior_state(offset, side - 1);
        case kSouth: return interior_state(side - 1, offset);
        default: return interior_state(offset, 0);
    }
}

int GridworldScenario::direction_of(int s, int s2) const {
    for (int d = 0; d < num_directions; ++d)
        if (move(s, d) == s2) return d;
    return -1;
}

double GridworldScenario::kernel(int s, int a, int s2, int t) const {
    if (!is_interior(s)) return s2 == bounce_target(s) ? 1.0 : 0.0;
    double p = 0.0;
    for (int d = 0; d < num_directions; ++d)
        if (move(s, d) == s2) p += direction_prob(a, d, t);
    return p;
}

}  // namespace tvmdp
