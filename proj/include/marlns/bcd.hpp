#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "marlns/core.hpp"

namespace marlns::bcd {

// Smooth objective with an analytic gradient and optional box bounds.
// Minimization convention throughout: reward-maximization results map in
// through a single sign flip.
struct SmoothObjective {
    int dim = 0;
    std::function<double(std::span<const double>)> evaluate;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::optional<Vec> lower, upper;  // box bounds, both or neither

    bool feasible(std::span<const double> x) const;
};

// Central-difference probe of the analytic gradient; returns the max
// relative error over n_probes random feasible points.
double gradient_probe_error(const SmoothObjective& obj, uint64_t seed, int n_probes = 10,
                            double fd_eps = 1e-6);

// Norm of the gradient, with components pointing out of active box bounds
// zeroed. Zero exactly at stationary points of the constrained problem.
double stationarity_gap(const SmoothObjective& obj, std::span<const double> x);

struct BcdTrace {
    std::vector<Vec> iterates;          // after each block step
    std::vector<int> block_ids;
    std::vector<double> step_bounds;    // w_k per block step
    std::vector<double> objective_values;
    std::vector<double> gaps;
    bool aborted = false;
    std::string abort_reason;
};

// Contiguous partition of [0, dim) into n_blocks near-equal blocks, visited
// cyclically.
std::vector<std::pair<int, int>> partition_blocks(int dim, int n_blocks);

// One block move. Receives the full iterate, the block range and the step
// bound w_k; must only change coordinates inside the block and keep the
// move's norm within w_k when bounded (exact rules may ignore w_k).
using StepRule = std::function<void(const SmoothObjective&, std::span<double> x, int lo, int hi,
                                    double w_k, int sweep)>;

// Runs `iterations` block steps (cyclic over the partition), recording the
// iterate, objective, w_k and stationarity gap after each step. A non-finite
// objective stops the run and returns the trace so far with aborted set.
BcdTrace bcd_run(const SmoothObjective& obj, const std::vector<std::pair<int, int>>& blocks,
                 const StepRule& step, std::span<const double> x0, int iterations,
                 const std::function<double(int)>& step_bound_schedule);

struct RateBoundResult {
    double fitted_c = 0.0;
    bool pass = false;
    std::vector<double> bound_products;  // min_{k<=i} gap_k * sum_{k<=i} w_k
};

// Fits the smallest c with min_{k<=i} gap_k <= c / sum_{k<=i} w_k for all i
// and checks that the product sequence does not diverge at the tail.
RateBoundResult check_rate_bound(const BcdTrace& trace);

// --- test families -------------------------------------------------------

// Separable quadratic sum_i (x_i - c_i)^2.
SmoothObjective separable_quadratic(Vec center);

// 0.5 x^T Q x - b^T x with Q symmetric positive definite, spectrum in
// [1/cond, 1], random rotation. Carries the data needed for exact block
// minimization and the direct-solve oracle.
struct QuadraticObjective {
    SmoothObjective objective;
    std::vector<double> q;  // dim x dim row-major
    Vec b;
    Vec solve() const;      // x* = Q^{-1} b by Gaussian elimination

    // Exact block minimization: solve Q_BB x_B = b_B - Q_B,rest x_rest.
    StepRule exact_block_rule() const;
    // Exact-line-search gradient step on the block, length capped at w_k.
    StepRule bounded_step_rule() const;
};

QuadraticObjective make_spd_quadratic(int dim, double condition_number, uint64_t seed);

// The repo's fixed SPD verification family: condition numbers {1, 10, 100}
// crossed with dims {8, 16, 64}, pinned instance seeds and start points.
struct FamilyMember {
    int dim;
    double condition_number;
    uint64_t seed;
    int n_blocks;
};
std::vector<FamilyMember> spd_test_family();
QuadraticObjective make_family_instance(const FamilyMember& member);
Vec family_start_point(const FamilyMember& member);

// Smooth non-convex test objective: sum_i cos(x_i + x_{i+1}) + 0.05 ||x||^2.
SmoothObjective cosine_objective(int dim);
// Gradient step with length capped at w_k (no line search).
StepRule cosine_bounded_step_rule(double base_step = 0.5);

}  // namespace marlns::bcd
