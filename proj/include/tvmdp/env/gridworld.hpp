#pragma once

#include <optional>

namespace tvmdp {

// Square grid with a wall ring. Interior cells share one direction kernel:
// action d initially moves in direction d (0 north, 1 east, 2 south, 3 west,
// 4 stay), and opposite actions swap outcomes over the switch duration (or in
// one step, when an instant switch time is set). Wall cells bounce straight
// back to the nearest interior cell.
struct GridworldScenario {
    int side = 5;
    double switch_duration = 100.0;
    std::optional<int> instant_switch_time;

    int num_interior() const { return side * side; }
    int num_states() const { return side * side + 4 * side; }
    static constexpr int num_actions = 5;
    static constexpr int num_directions = 5;

    bool is_interior(int s) const { return s < num_interior(); }
    int interior_state(int row, int col) const { return row * side + col; }

    // Side of a wall state: 0 east, 1 south, 2 west, 3 north; -1 for interior.
    int wall_side(int s) const;

    // Fraction of the outcome swap completed at time t.
    double swap_weight(int t) const;

    // P(direction outcome | action) for an interior cell at time t.
    double direction_prob(int action, int direction, int t) const;

    // State reached from an interior cell by a direction outcome.
    int move(int s, int direction) const;

    // Interior cell a wall state bounces back to.
    int bounce_target(int s) const;

    // Direction outcome that produced the interior transition s -> s2.
    int direction_of(int s, int s2) const;

    // Full transition kernel over all states.
    double kernel(int s, int a, int s2, int t) const;
};

// Cyclic patrol objective east -> south -> west -> north. Feed every state
// the agent occupies; the count advances when it stands on the target wall.
class PatrolTracker {
  public:
    int target_side() const { return target_; }
    int walls_reached() const { return reached_; }

    void update(int state, const GridworldScenario& grid) {
        if (grid.wall_side(state) == target_) {
            ++reached_;
            target_ = (target_ + 1) % 4;
        }
    }

    double reward(int state, const GridworldScenario& grid) const {
        return grid.wall_side(state) == target_ ? 1.0 : 0.0;
    }

  private:
    int target_ = 0;
    int reached_ = 0;
};

}  // namespace tvmdp
