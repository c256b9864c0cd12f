#pragma once

#include <cstddef>
#include <optional>

#include "sglq/linalg.hpp"
#include "sglq/model.hpp"
#include "sglq/prox.hpp"

namespace sglq {

/// Iterates stronger than this in any block abort the solve.
inline constexpr double kDivergenceBound = 1e12;

struct SolverConfig {
    double varpi = 1.0;   // augmented Lagrangian parameter
    double gamma = 1.0;   // multiplier relaxation, in (0, (1 + sqrt 5) / 2)
    double eps1 = 1e-3;
    double eps2 = 1e-3;
    std::size_t max_iters = 20000;
    std::size_t check_every = 10;
    std::optional<LinearStrategy> linalg_strategy_hint;
    CgParams cg;
    StrategyThresholds thresholds;

    void validate() const;
};

/// Dual iterates (theta, u, v) and the multipliers, which are the primal variables:
/// beta for X^T theta + u = 0, z for theta - v = 0, beta0 for 1^T theta = 0.
struct SolverState {
    Vector theta;
    Vector u;
    Vector v;
    Vector beta;
    Vector z;
    double beta0 = 0.0;
    std::size_t iter = 0;

    static SolverState zeros(Index n, Index p);
    /// Zero state with beta0 at the type-1 tau sample quantile of y.
    static SolverState initial(const QuantileProblem& problem);
    /// Primal-dual optimum of the intercept-only fit: beta = 0, z the residuals, theta = v at
    /// the matching box corners with ties filled so that 1^T theta = 0, u = -X^T theta.
    /// A fixed point of the iteration whenever beta = 0 is optimal. Cold solves start here.
    static SolverState intercept_only(const QuantileProblem& problem);
    void check_dimensions(Index n, Index p) const;
};

struct ResidualReport {
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double eps_pri = 0.0;
    double eps_dual = 0.0;

    bool converged() const noexcept
    {
        return primal_residual <= eps_pri && dual_residual <= eps_dual;
    }
};

/// The ADMM runs on the summed check loss, whose dual box is [-tau, 1 - tau]. The mean loss
/// objective has the same minimizer once the penalty is multiplied by n; this is that factor.
double internal_penalty_scale(const QuantileProblem& problem);

/// One pass of theta, u, v, beta, z, beta0 updates.
SolverState iterate_once(const SolverState& state, const QuantileProblem& problem,
                         const PenaltySpec& penalty, const SolverConfig& config,
                         const SystemOperator& op);

/// Stopping quantities between consecutive states.
ResidualReport residuals(const SolverState& state_prev, const SolverState& state,
                         const QuantileProblem& problem, const SolverConfig& config);

/// Largest violation among the six blocks of the optimality system.
double kkt_residual(const SolverState& state, const QuantileProblem& problem,
                    const PenaltySpec& penalty);

/// ||X^T theta + u||^2 + ||theta - v||^2 + (1^T theta)^2.
double constraint_residual_sq(const SolverState& state, const QuantileProblem& problem);

/// Lyapunov-type merit (gamma varpi)^{-1} ||Lambda - Lambda*||^2 + varpi ||B(xi - xi*)||^2
/// + (1 - min(gamma, 1/gamma)) varpi ||A theta + B xi||^2, non-increasing along the iteration.
double merit_value(const SolverState& state, const SolverState& optimum,
                   const QuantileProblem& problem, const SolverConfig& config);

/// Coefficients with exact zeros: the state's beta when gamma == 1, otherwise
/// prox_h(beta - varpi X^T theta).
Vector reported_beta(const SolverState& state, const QuantileProblem& problem,
                     const PenaltySpec& penalty, const SolverConfig& config);

struct SolveResult {
    FittedModel model;
    ConvergenceReport report;
    SolverState state;
};

/// Runs the dual ADMM until both residual tests pass or max_iters is reached.
/// `op` may be supplied to reuse a factorization across calls.
SolveResult sgl_dadmm_solve(const QuantileProblem& problem, const PenaltySpec& penalty,
                            const SolverConfig& config,
                            const std::optional<SolverState>& warm_start = std::nullopt,
                            const SystemOperator* op = nullptr);

} // namespace sglq
