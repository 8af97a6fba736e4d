#pragma once

#include <functional>
#include <vector>

#include "bdtp/reward_model.hpp"

namespace bdtp {

// Knobs of the projected gradient ascent over per-level sampling
// probabilities.
struct GradientConfig {
    double fd_step = 1e-7;          // finite-difference step per coordinate
    double learning_rate = 1e-3;    // ascent step multiplier
    long long max_iterations = 1000000;
    double value_tolerance = 1e-9;  // stop when the improvement drops below this
    long long renormalize_depth_threshold = 50;  // passed through to the PMF recursion
};

struct OptimizationResult {
    long long b_star = 1;
    std::vector<double> q_star;  // reverse-indexed, q_star[0] = deepest level
    double value = 0.0;
    long long iterations_used = 0;
    bool converged = true;
};

// Observer invoked with every accepted iterate (iteration 0 is the initial
// point); used by tests to watch trajectories.
using AscentObserver = std::function<void(long long iteration, const std::vector<double>& q, double value)>;

// Component of g orthogonal to the capacity normal w: g - (<w,g>/<w,w>) w.
std::vector<double> project_gradient(const std::vector<double>& g, const std::vector<double>& w);

// Restores feasibility after an ascent step: clips out-of-box components to
// the nearest bound (freezing them), then re-projects the free components
// onto the capacity plane; repeats until both constraints hold within 1e-9.
// Throws ConvergenceError after max_rounds (the budget is infeasible for the
// current active set).
std::vector<double> clip_and_reproject(std::vector<double> q, long long b, double C, int max_rounds = 100);

// Value of the homogeneous policy at (b, C); the b = 1 tree has no choices,
// so its value is 0 analytically.
double homogeneous_value(const RewardModel& model, long long b, double C);

// Projected gradient ascent on V_{d,b,q} from the feasible start q0:
// forward-difference gradient (backward at the upper box bound), projection,
// step, clip-and-reproject, until the improvement falls below the tolerance
// or the iteration cap is hit.
OptimizationResult optimize_q(const RewardModel& model, long long b, long long d, double C,
                              const GradientConfig& config, const std::vector<double>& q0,
                              const AscentObserver& observer = {});

// Grid search over b in {1..b_max} of homogeneous-policy values; smallest b
// wins exact ties.
OptimizationResult optimize_homogeneous(const RewardModel& model, double C, long long b_max);

// For each b in {2..b_max}, ascends q at depth heterogeneous_depth(b, C)
// starting from the zero-padded homogeneous policy; b = 1 enters as the
// analytic value 0.  Smallest b wins exact ties.
OptimizationResult optimize_heterogeneous(const RewardModel& model, double C, long long b_max,
                                          const GradientConfig& config);

}  // namespace bdtp
