#include "sglq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sglq/errors.hpp"

namespace sglq {

void SolverConfig::validate() const
{
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    if (!(std::isfinite(varpi) && varpi > 0.0)) throw InvalidInput("varpi must be > 0");
    if (!(gamma > 0.0 && gamma < golden)) throw InvalidInput("gamma must lie in (0, (1+sqrt(5))/2)");
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw InvalidInput("eps1 and eps2 must be > 0");
    if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
    if (check_every < 1) throw InvalidInput("check_every must be >= 1");
}

SolverState SolverState::zeros(Index n, Index p)
{
    SolverState s;
    s.theta = Vector::Zero(n);
    s.u = Vector::Zero(p);
    s.v = Vector::Zero(n);
    s.beta = Vector::Zero(p);
    s.z = Vector::Zero(n);
    return s;
}

SolverState SolverState::initial(const QuantileProblem& problem)
{
    SolverState s = zeros(problem.n(), problem.p());
    s.beta0 = sample_quantile(problem.y(), problem.tau());
    return s;
}

SolverState SolverState::intercept_only(const QuantileProblem& problem)
{
    SolverState s = initial(problem);
    const Vector& y = problem.y();
    const double tau = problem.tau();
    const double tol = 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff());
    s.z = y.array() - s.beta0;
    double fill = 0.0;
    Index ties = 0;
    for (Index i = 0; i < problem.n(); ++i) {
        if (std::abs(s.z[i]) <= tol) {
            ++ties;
        } else {
            s.theta[i] = s.z[i] > 0.0 ? -tau : 1.0 - tau;
            fill -= s.theta[i];
        }
    }
    if (ties > 0) {
        const double each = std::clamp(fill / static_cast<double>(ties), -tau, 1.0 - tau);
        for (Index i = 0; i < problem.n(); ++i)
            if (std::abs(s.z[i]) <= tol) s.theta[i] = each;
    }
    s.v = s.theta;
    s.u = -(problem.X().transpose() * s.theta);
    return s;
}

void SolverState::check_dimensions(Index n, Index p) const
{
    if (theta.size() != n || v.size() != n || z.size() != n || u.size() != p || beta.size() != p) {
        throw InvalidInput("solver state dimensions do not match the problem");
    }
}

double internal_penalty_scale(const QuantileProblem& problem)
{
    return static_cast<double>(problem.n());
}

namespace {

struct IterationContext {
    const QuantileProblem& problem;
    const SolverConfig& config;
    const SystemOperator& op;
    ProxPenalty prox;  // thresholds of varpi * n * h

    IterationContext(const QuantileProblem& pr, const PenaltySpec& pen, const SolverConfig& cfg,
                     const SystemOperator& o)
        : problem(pr), config(cfg), op(o),
          prox(ProxPenalty::from_penalty(pen, pr.groups(), cfg.varpi * internal_penalty_scale(pr)))
    {}
};

struct Scratch {
    Vector rhs;
    Vector Xt_theta;
    Vector a;
};

void guard(const SolverState& s, std::size_t iter)
{
    auto bad = [](const Vector& x) {
        return !x.allFinite() || (x.size() > 0 && x.cwiseAbs().maxCoeff() > kDivergenceBound);
    };
    if (bad(s.theta) || bad(s.u) || bad(s.v) || bad(s.beta) || bad(s.z) || !std::isfinite(s.beta0) ||
        std::abs(s.beta0) > kDivergenceBound) {
        throw DivergenceError("ADMM iterates diverged at iteration " + std::to_string(iter), iter);
    }
}

void step(const IterationContext& ctx, SolverState& s, Scratch& w)
{
    const Matrix& X = ctx.problem.X();
    const double varpi = ctx.config.varpi;
    const double gamma = ctx.config.gamma;

    // theta: M theta = v - X u + (X beta + z + beta0 1 - y) / varpi
    w.a.noalias() = s.beta - varpi * s.u;
    w.rhs.noalias() = X * w.a;
    w.rhs += s.z - ctx.problem.y();
    w.rhs.array() += s.beta0;
    w.rhs /= varpi;
    w.rhs += s.v;
    s.theta = ctx.op.solve(w.rhs);

    // u: conjugate prox via Moreau, with a = beta - varpi X^T theta
    w.Xt_theta.noalias() = X.transpose() * s.theta;
    w.a.noalias() = s.beta - varpi * w.Xt_theta;
    Vector prox_a = w.a;
    detail::prox_h_inplace(prox_a, ctx.prox);
    s.u = (w.a - prox_a) / varpi;

    // v uses the old z
    s.v = (s.theta - s.z / varpi).cwiseMax(-ctx.problem.tau()).cwiseMin(1.0 - ctx.problem.tau());

    if (gamma == 1.0) {
        s.beta = std::move(prox_a);
    } else {
        s.beta -= (gamma * varpi) * (w.Xt_theta + s.u);
    }
    s.z -= (gamma * varpi) * (s.theta - s.v);
    s.beta0 -= gamma * varpi * s.theta.sum();
    ++s.iter;
    guard(s, s.iter);
}

ResidualReport residuals_impl(const Vector& u_prev, const Vector& v_prev, const SolverState& s,
                              const QuantileProblem& problem, const SolverConfig& config)
{
    const Matrix& X = problem.X();
    const auto n = static_cast<double>(problem.n());
    const auto p = static_cast<double>(problem.p());
    const Vector Xt_theta = X.transpose() * s.theta;
    const double sum_theta = s.theta.sum();

    ResidualReport r;
    r.primal_residual = std::sqrt((Xt_theta + s.u).squaredNorm() + (s.theta - s.v).squaredNorm() +
                                  sum_theta * sum_theta);
    const double a_norm =
        std::sqrt(Xt_theta.squaredNorm() + s.theta.squaredNorm() + sum_theta * sum_theta);
    const double b_norm = std::sqrt(s.u.squaredNorm() + s.v.squaredNorm());
    r.eps_pri = config.eps1 * std::sqrt(p + n + 1.0) + config.eps2 * std::max(a_norm, b_norm);

    r.dual_residual = config.varpi * (X * (s.u - u_prev) - (s.v - v_prev)).norm();
    Vector fit = X * s.beta + s.z;
    fit.array() += s.beta0;
    r.eps_dual = std::sqrt(n) * config.eps1 + config.eps2 * fit.norm();
    return r;
}

} // namespace

SolverState iterate_once(const SolverState& state, const QuantileProblem& problem,
                         const PenaltySpec& penalty, const SolverConfig& config,
                         const SystemOperator& op)
{
    config.validate();
    state.check_dimensions(problem.n(), problem.p());
    if (op.n() != problem.n() || op.p() != problem.p()) {
        throw InvalidInput("system operator was built for a different design");
    }
    const IterationContext ctx(problem, penalty, config, op);
    SolverState next = state;
    Scratch w;
    step(ctx, next, w);
    return next;
}

ResidualReport residuals(const SolverState& state_prev, const SolverState& state,
                         const QuantileProblem& problem, const SolverConfig& config)
{
    state_prev.check_dimensions(problem.n(), problem.p());
    state.check_dimensions(problem.n(), problem.p());
    return residuals_impl(state_prev.u, state_prev.v, state, problem, config);
}

double kkt_residual(const SolverState& state, const QuantileProblem& problem,
                    const PenaltySpec& penalty)
{
    state.check_dimensions(problem.n(), problem.p());
    const Matrix& X = problem.X();
    const double tau = problem.tau();
    const ProxPenalty h =
        ProxPenalty::from_penalty(penalty, problem.groups(), internal_penalty_scale(problem));

    Vector primal = X * state.beta + state.z - problem.y();
    primal.array() += state.beta0;

    // u = Prox_{h*}(beta + u) is equivalent to beta = Prox_h(beta + u) by the Moreau identity.
    const Vector subgrad = prox_h(state.beta + state.u, h) - state.beta;
    const Vector box = state.v - (state.v - state.z).cwiseMax(-tau).cwiseMin(1.0 - tau);
    const Vector dual_eq = X.transpose() * state.theta + state.u;

    return std::max({primal.norm(), subgrad.norm(), box.norm(), dual_eq.norm(),
                     (state.theta - state.v).norm(), std::abs(state.theta.sum())});
}

double constraint_residual_sq(const SolverState& state, const QuantileProblem& problem)
{
    const double s = state.theta.sum();
    return (problem.X().transpose() * state.theta + state.u).squaredNorm() +
           (state.theta - state.v).squaredNorm() + s * s;
}

double merit_value(const SolverState& state, const SolverState& optimum,
                   const QuantileProblem& problem, const SolverConfig& config)
{
    const double gamma = config.gamma;
    const double varpi = config.varpi;
    const double d0 = state.beta0 - optimum.beta0;
    const double multiplier_gap =
        (state.beta - optimum.beta).squaredNorm() + (state.z - optimum.z).squaredNorm() + d0 * d0;
    const double xi_gap = (state.u - optimum.u).squaredNorm() + (state.v - optimum.v).squaredNorm();
    return multiplier_gap / (gamma * varpi) + varpi * xi_gap +
           (1.0 - std::min(gamma, 1.0 / gamma)) * varpi * constraint_residual_sq(state, problem);
}

Vector reported_beta(const SolverState& state, const QuantileProblem& problem,
                     const PenaltySpec& penalty, const SolverConfig& config)
{
    if (config.gamma == 1.0) return state.beta;
    const ProxPenalty h = ProxPenalty::from_penalty(
        penalty, problem.groups(), config.varpi * internal_penalty_scale(problem));
    const Vector a = state.beta - config.varpi * (problem.X().transpose() * state.theta);
    return prox_h(a, h);
}

SolveResult sgl_dadmm_solve(const QuantileProblem& problem, const PenaltySpec& penalty,
                            const SolverConfig& config, const std::optional<SolverState>& warm_start,
                            const SystemOperator* op)
{
    config.validate();
    penalty.validate(problem.groups());

    std::optional<SystemOperator> owned;
    if (op == nullptr) {
        owned = SystemOperator::build(problem.X(), config.linalg_strategy_hint, config.cg,
                                      config.thresholds);
        op = &*owned;
    } else if (op->n() != problem.n() || op->p() != problem.p()) {
        throw InvalidInput("system operator was built for a different design");
    }

    SolverState state = warm_start ? *warm_start : SolverState::intercept_only(problem);
    state.check_dimensions(problem.n(), problem.p());
    const std::size_t start_iter = state.iter;

    const IterationContext ctx(problem, penalty, config, *op);
    Scratch w;
    ResidualReport last;
    Vector u_prev;
    Vector v_prev;
    bool converged = false;
    for (std::size_t k = 1; k <= config.max_iters; ++k) {
        const bool check = k % config.check_every == 0 || k == config.max_iters;
        if (check) {
            u_prev = state.u;
            v_prev = state.v;
        }
        step(ctx, state, w);
        if (check) {
            last = residuals_impl(u_prev, v_prev, state, problem, config);
            if (last.converged()) {
                converged = true;
                break;
            }
        }
    }

    SolveResult out;
    out.report.iterations = state.iter - start_iter;
    out.report.primal_residual = last.primal_residual;
    out.report.dual_residual = last.dual_residual;
    out.report.eps_pri = last.eps_pri;
    out.report.eps_dual = last.eps_dual;
    out.report.converged = converged;
    out.report.kkt_residual = kkt_residual(state, problem, penalty);
    out.model.beta0 = state.beta0;
    out.model.beta = reported_beta(state, problem, penalty, config);
    out.report.objective = primal_objective(problem, penalty, out.model.beta0, out.model.beta);
    out.model.diagnostics = out.report;
    out.state = std::move(state);
    return out;
}

} // namespace sglq
