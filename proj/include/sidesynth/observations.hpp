#pragma once

#include <span>
#include <vector>

#include "sidesynth/constraint.hpp"

namespace sidesynth {

// One symbolic execution path over (h, l) with its side-channel cost
// (instruction count).
struct PathConstraint {
    Constraint constraint;
    long long cost = 0;
};

// Disjunction of the paths whose costs an attacker cannot tell apart.
struct ObservationConstraint {
    int id = 0;
    long long representative_cost = 0;
    long long cost_min = 0;
    long long cost_max = 0;
    std::vector<long long> member_costs;
    Constraint constraint;
};

// Merges paths into observation classes. Distinct costs are sorted and a new
// class starts whenever the gap to the previous cost is >= delta; the
// |o - o'| < delta relation is not transitive, so this greedy chaining is the
// deterministic, order-independent reading of it.
std::vector<ObservationConstraint> generate_constraints(std::span<const PathConstraint> paths,
                                                        long long delta);

}  // namespace sidesynth
