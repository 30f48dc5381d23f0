// Executable certification of the two completeness conditions (offline
// free-area condition, online capacity condition) and of environment
// well-formedness.
#pragma once

#include "envopt/geometry.hpp"

namespace envopt {

struct ConditionReport {
  bool satisfied = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // lhs - rhs

  static ConditionReport from_terms(double lhs, double rhs) {
    return {lhs >= rhs, lhs, rhs, lhs - rhs};
  }
};

// Maximal distance between the starting and destination regions:
// max over z_S in S, z_D in D of |z_S - z_D| (exact over disk unions).
// Throws when S or D is empty.
double max_region_distance(const EnvironmentLayout& layout);

// Offline condition: area(E \ (Delta u S u D)) >= 2 * n * d_max * r_hat.
ConditionReport offline_condition(const EnvironmentLayout& layout, int n, double r_hat);

// Same comparison from precomputed terms (free area and d_max supplied).
ConditionReport offline_condition_from_terms(double free_area, int n, double d_max,
                                             double r_hat);

// Online condition: capacity delta_dot >= 2 * n * r_hat * v_hat.
ConditionReport online_capacity_condition(int n, double r_hat, double v_hat, double delta_dot);

// True iff every agent's start connects to its goal with clearance >= radius
// w.r.t. the obstacle region and all other agents' start/goal disks.
// Decided on an 8-connected roadmap; `resolution` <= radius/2 by default.
bool well_formed(const EnvironmentLayout& layout, double radius, double resolution = 0.0);

}  // namespace envopt
