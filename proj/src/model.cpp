#include "tvmdp/model.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace tvmdp {

DriftBound DriftBound::constant(double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("drift bound outside [0,1]");
    DriftBound b;
    b.const_ = eps;
    return b;
}

DriftBound DriftBound::sequence(std::vector<double> eps) {
    if (eps.empty()) throw std::invalid_argument("empty drift sequence");
    for (double e : eps)
        if (e < 0.0 || e > 1.0) throw std::invalid_argument("drift bound outside [0,1]");
    DriftBound b;
    b.seq_ = std::move(eps);
    b.prefix_.resize(b.seq_.size() + 1, 0.0);
    for (std::size_t i = 0; i < b.seq_.size(); ++i)
        b.prefix_[i + 1] = b.prefix_[i] + b.seq_[i];
    return b;
}

double DriftBound::at(int t) const {
    if (seq_.empty()) return const_;
    if (t < 0) t = 0;
    std::size_t i = std::min<std::size_t>(t, seq_.size() - 1);
    return seq_[i];
}

double DriftBound::total(int t0, int t1) const {
    assert(t0 <= t1);
    if (seq_.empty()) return const_ * (t1 - t0);
    double sum = 0.0;
    // Prefix sums cover the stored range; the clamped tail repeats the last value.
    const int stored = static_cast<int>(seq_.size());
    const int a = std::min(t0, stored);
    const int b = std::min(t1, stored);
    sum += prefix_[b] - prefix_[a];
    if (t1 > stored) sum += seq_.back() * (t1 - std::max(t0, stored));
    return sum;
}

int PairVisits::count_to(int successor) const {
    return static_cast<int>(std::count(successors.begin(), successors.end(), successor));
}

int VisitIndex::action_use_count(int a) const {
    int total = 0;
    for (int s = 0; s < num_states_; ++s) total += at(s, a).count();
    return total;
}

VisitIndex build_visit_index(const Trajectory& traj, int num_states, int num_actions) {
    assert(traj.states.size() == traj.actions.size() + 1);
    VisitIndex index(num_states, num_actions);
    for (int t = 0; t < traj.horizon(); ++t) {
        PairVisits& pv = index.at(traj.states[t], traj.actions[t]);
        pv.times.push_back(t);
        pv.successors.push_back(traj.states[t + 1]);
    }
    return index;
}

int sample_categorical(const std::vector<double>& dist, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(dist.size()) - 1;
}

}  // namespace tvmdp
