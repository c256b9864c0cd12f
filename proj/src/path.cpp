#include "sglq/path.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "sglq/errors.hpp"

namespace sglq {

double lambda_max(const QuantileProblem& problem, double alpha, const Vector& d, const Vector& w)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
    const GroupPartition& groups = problem.groups();
    if (static_cast<std::size_t>(d.size()) != groups.p() ||
        static_cast<std::size_t>(w.size()) != groups.count()) {
        throw InvalidInput("weight vectors do not match the problem dimensions");
    }
    if ((d.array() < 0.0).any() || (w.array() < 0.0).any()) {
        throw InvalidInput("weights must be nonnegative");
    }

    const Matrix& X = problem.X();
    const Vector& y = problem.y();
    const double tau = problem.tau();
    const auto n = static_cast<double>(problem.n());

    const Vector r = y.array() - sample_quantile(y, tau);
    const double zero_tol = 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff());

    // Per row: weight multiplying x_i in the fixed part of the subgradient, and whether r_i = 0.
    Vector row_weight(problem.n());
    Vector zero_row = Vector::Zero(problem.n());
    for (Index i = 0; i < problem.n(); ++i) {
        const bool zero = std::abs(r[i]) <= zero_tol;
        const double sgn = zero ? 0.0 : (r[i] > 0.0 ? 1.0 : -1.0);
        row_weight[i] = (2.0 * tau - 1.0) / (2.0 * n) + sgn / (2.0 * n);
        zero_row[i] = zero ? 1.0 : 0.0;
    }
    const Vector fixed = X.transpose() * row_weight;

    constexpr double none = -std::numeric_limits<double>::infinity();
    double elem_max = none;
    if (alpha < 1.0) {
        const Vector slack = X.cwiseAbs().transpose() * zero_row / (2.0 * n);
        for (Index j = 0; j < X.cols(); ++j) {
            if (d[j] == 0.0) continue;
            elem_max = std::max(elem_max, (std::abs(fixed[j]) + slack[j]) / ((1.0 - alpha) * d[j]));
        }
        if (elem_max == none) throw InvalidInput("lambda_max: every element weight is zero");
    }

    double group_max = none;
    if (alpha > 0.0) {
        for (std::size_t l = 0; l < groups.count(); ++l) {
            const double wl = w[static_cast<Index>(l)];
            if (wl == 0.0) continue;
            double sq = 0.0;
            for (Index j : groups.members(l)) sq += fixed[j] * fixed[j];
            double slack = 0.0;
            for (Index i = 0; i < problem.n(); ++i) {
                if (zero_row[i] == 0.0) continue;
                double row_sq = 0.0;
                for (Index j : groups.members(l)) row_sq += X(i, j) * X(i, j);
                slack += std::sqrt(row_sq);
            }
            group_max = std::max(group_max, (std::sqrt(sq) + slack / (2.0 * n)) / (alpha * wl));
        }
        if (group_max == none) throw InvalidInput("lambda_max: every group weight is zero");
    }

    if (alpha == 0.0) return elem_max;
    if (alpha == 1.0) return group_max;
    return std::min(elem_max, group_max);
}

Vector lambda_grid(double lambda_max_value, std::size_t count, double min_ratio)
{
    if (!(std::isfinite(lambda_max_value) && lambda_max_value > 0.0)) {
        throw InvalidInput("lambda_grid needs a positive finite lambda_max");
    }
    if (count < 2) throw InvalidInput("lambda_grid needs count >= 2");
    if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw InvalidInput("min_ratio must lie in (0, 1)");
    Vector grid(static_cast<Index>(count));
    const double step = std::log(min_ratio) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        grid[static_cast<Index>(k)] = lambda_max_value * std::exp(step * static_cast<double>(k));
    }
    grid[0] = lambda_max_value;
    return grid;
}

double default_min_ratio(Index n, Index p)
{
    return p > n ? 0.05 : 0.001;
}

SolutionPath solve_path(const QuantileProblem& problem, double alpha, const Vector& d,
                        const Vector& w, const Vector& grid, const SolverConfig& config)
{
    if (grid.size() == 0) throw InvalidInput("lambda grid is empty");
    for (Index k = 0; k < grid.size(); ++k) {
        if (!(std::isfinite(grid[k]) && grid[k] >= 0.0)) {
            throw InvalidInput("lambda grid entries must be finite and >= 0");
        }
        if (k > 0 && !(grid[k] < grid[k - 1])) {
            throw InvalidInput("lambda grid must be strictly decreasing (entry " + std::to_string(k) +
                               ")");
        }
    }
    config.validate();

    const auto start = std::chrono::steady_clock::now();
    const SystemOperator op =
        SystemOperator::build(problem.X(), config.linalg_strategy_hint, config.cg, config.thresholds);

    SolutionPath path;
    path.alpha = alpha;
    path.lambdas = grid;
    std::optional<SolverState> warm;
    for (Index k = 0; k < grid.size(); ++k) {
        const PenaltySpec pen = penalty_from_alpha(alpha, grid[k], d, w);
        try {
            SolveResult res = sgl_dadmm_solve(problem, pen, config, warm, &op);
            path.models.push_back(std::move(res.model));
            path.reports.push_back(res.report);
            warm = std::move(res.state);
        } catch (const DivergenceError& e) {
            std::ostringstream msg;
            msg.precision(17);
            msg << e.what() << " (lambda = " << grid[k] << ", path index " << k << ")";
            throw DivergenceError(msg.str(), e.iteration());
        }
    }
    path.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return path;
}

std::pair<Vector, Vector> adaptive_weights(const Vector& pilot_beta, const GroupPartition& partition,
                                           double power, double floor)
{
    if (!(power > 0.0 && std::isfinite(power))) throw InvalidInput("power must be positive");
    if (!(floor > 0.0 && std::isfinite(floor))) throw InvalidInput("floor must be positive");
    if (static_cast<std::size_t>(pilot_beta.size()) != partition.p()) {
        throw InvalidInput("pilot coefficient length does not match the partition");
    }
    if (!pilot_beta.allFinite()) throw InvalidInput("pilot coefficients must be finite");

    Vector d = (pilot_beta.cwiseAbs().array() + floor).pow(-power).matrix();
    Vector w(static_cast<Index>(partition.count()));
    for (std::size_t l = 0; l < partition.count(); ++l) {
        double sq = 0.0;
        for (Index j : partition.members(l)) sq += pilot_beta[j] * pilot_beta[j];
        w[static_cast<Index>(l)] = std::pow(std::sqrt(sq) + floor, -power) *
                                   std::sqrt(static_cast<double>(partition.size(l)));
    }
    return {std::move(d), std::move(w)};
}

} // namespace sglq
