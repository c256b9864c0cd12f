#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sglq/model.hpp"
#include "sglq/solver.hpp"

namespace sglq {

/// Smallest lambda_common (under the alpha parameterization) at which the zero coefficient
/// vector is guaranteed optimal. Zero residuals are those with |r_i| <= 1e-12 max(1, ||y||_inf).
double lambda_max(const QuantileProblem& problem, double alpha, const Vector& d, const Vector& w);

/// Log-spaced descending grid from lambda_max_value down to min_ratio * lambda_max_value.
Vector lambda_grid(double lambda_max_value, std::size_t count, double min_ratio);

/// 0.05 when p > n, otherwise 0.001.
double default_min_ratio(Index n, Index p);

struct SolutionPath {
    double alpha = 0.0;
    Vector lambdas;
    std::vector<FittedModel> models;
    std::vector<ConvergenceReport> reports;
    double wall_time_s = 0.0;
};

/// Warm-started fits along a strictly decreasing grid; one factorization for the whole path.
SolutionPath solve_path(const QuantileProblem& problem, double alpha, const Vector& d,
                        const Vector& w, const Vector& grid, const SolverConfig& config);

/// d_j = (|pilot_j| + floor)^-power, w_l = sqrt(|G_l|) (||pilot_{G_l}|| + floor)^-power.
std::pair<Vector, Vector> adaptive_weights(const Vector& pilot_beta, const GroupPartition& partition,
                                           double power, double floor);

} // namespace sglq
