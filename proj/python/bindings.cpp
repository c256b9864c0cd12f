#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sglq/errors.hpp"
#include "sglq/eval.hpp"
#include "sglq/path.hpp"
#include "sglq/prox.hpp"
#include "sglq/solver.hpp"

namespace py = pybind11;
using namespace sglq;

namespace {

GroupPartition partition(const std::optional<std::vector<int>>& labels, Index p)
{
    if (!labels) return GroupPartition::singletons(static_cast<std::size_t>(p));
    return GroupPartition::from_labels(*labels);
}

std::vector<int> labels_of(const GroupPartition& g)
{
    std::vector<int> out(g.p());
    for (std::size_t j = 0; j < g.p(); ++j) out[j] = g.group_of(j);
    return out;
}

PenaltySpec penalty(const GroupPartition& g, double lambda, double mu, const std::optional<Vector>& d,
                    const std::optional<Vector>& w)
{
    PenaltySpec pen = PenaltySpec::with_default_weights(g, lambda, mu);
    if (d) pen.d = *d;
    if (w) pen.w = *w;
    return pen;
}

SolverConfig config(double varpi, double gamma, double eps1, double eps2, std::size_t max_iters,
                    const std::string& linsolver)
{
    SolverConfig c;
    c.varpi = varpi;
    c.gamma = gamma;
    c.eps1 = eps1;
    c.eps2 = eps2;
    c.max_iters = max_iters;
    if (linsolver != "auto") c.linalg_strategy_hint = linear_strategy_from_string(linsolver);
    return c;
}

py::dict report_dict(const ConvergenceReport& r)
{
    py::dict d;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["objective"] = r.objective;
    d["kkt_residual"] = r.kkt_residual;
    d["primal_residual"] = r.primal_residual;
    d["dual_residual"] = r.dual_residual;
    d["eps_pri"] = r.eps_pri;
    d["eps_dual"] = r.eps_dual;
    return d;
}

ProxPenalty prox_penalty(const Vector& d, const Vector& w, const std::optional<std::vector<int>>& groups)
{
    ProxPenalty p;
    p.scaled_d = d;
    p.scaled_w = w;
    p.partition = partition(groups, d.size());
    return p;
}

} // namespace

PYBIND11_MODULE(_sglq, m)
{
    m.doc() = "Sparse group lasso penalized quantile regression by dual ADMM.";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<IterativeFailure>(m, "IterativeFailure", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    m.def("check_loss", &check_loss, py::arg("u"), py::arg("tau"));
    m.def("sample_quantile", &sample_quantile, py::arg("values"), py::arg("tau"));

    m.def(
        "objective",
        [](const Matrix& X, const Vector& y, double tau, double beta0, const Vector& beta, double lambda, double mu,
           const std::optional<std::vector<int>>& groups, const std::optional<Vector>& d,
           const std::optional<Vector>& w) {
            const auto g = partition(groups, X.cols());
            return primal_objective(QuantileProblem(X, y, tau, g), penalty(g, lambda, mu, d, w), beta0, beta);
        },
        py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("beta0"), py::arg("beta"), py::arg("lam") = 0.0,
        py::arg("mu") = 0.0, py::arg("groups") = py::none(), py::arg("d") = py::none(), py::arg("w") = py::none());

    m.def("box_project", &box_project, py::arg("a"), py::arg("tau"));
    m.def("soft_threshold", &soft_threshold, py::arg("xi"), py::arg("thresholds"));
    m.def(
        "group_soft_threshold",
        [](const Vector& eta, const Vector& t, const std::vector<int>& groups) {
            return group_soft_threshold(eta, t, GroupPartition::from_labels(groups));
        },
        py::arg("eta"), py::arg("thresholds"), py::arg("groups"));
    m.def(
        "prox_h",
        [](const Vector& a, const Vector& d, const Vector& w, const std::optional<std::vector<int>>& groups) {
            return prox_h(a, prox_penalty(d, w, groups));
        },
        py::arg("a"), py::arg("d"), py::arg("w"), py::arg("groups") = py::none(),
        "Proximal map with thresholds d (per coefficient) and w (per group) already scaled.");

    m.def(
        "fit",
        [](const Matrix& X, const Vector& y, double tau, double lambda, double mu,
           const std::optional<std::vector<int>>& groups, const std::optional<Vector>& d,
           const std::optional<Vector>& w, double varpi, double gamma, double eps1, double eps2,
           std::size_t max_iters, const std::string& linsolver) {
            const auto g = partition(groups, X.cols());
            const QuantileProblem prob(X, y, tau, g);
            SolveResult res;
            {
                py::gil_scoped_release release;
                res = sgl_dadmm_solve(prob, penalty(g, lambda, mu, d, w),
                                      config(varpi, gamma, eps1, eps2, max_iters, linsolver));
            }
            py::dict out = report_dict(res.report);
            out["beta0"] = res.model.beta0;
            out["beta"] = res.model.beta;
            return out;
        },
        py::arg("X"), py::arg("y"), py::arg("tau") = 0.5, py::arg("lam") = 0.0, py::arg("mu") = 0.0,
        py::arg("groups") = py::none(), py::arg("d") = py::none(), py::arg("w") = py::none(),
        py::arg("varpi") = 1.0, py::arg("gamma") = 1.0, py::arg("eps1") = 1e-3, py::arg("eps2") = 1e-3,
        py::arg("max_iters") = 20000, py::arg("linsolver") = "auto");

    m.def(
        "lambda_max",
        [](const Matrix& X, const Vector& y, double tau, double alpha, const std::optional<std::vector<int>>& groups,
           const std::optional<Vector>& d, const std::optional<Vector>& w) {
            const auto g = partition(groups, X.cols());
            const auto pen = penalty(g, 0.0, 0.0, d, w);
            return lambda_max(QuantileProblem(X, y, tau, g), alpha, pen.d, pen.w);
        },
        py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("alpha"), py::arg("groups") = py::none(),
        py::arg("d") = py::none(), py::arg("w") = py::none());

    m.def("lambda_grid", &lambda_grid, py::arg("lambda_max"), py::arg("count"), py::arg("min_ratio"));

    m.def(
        "solve_path",
        [](const Matrix& X, const Vector& y, double tau, double alpha, const Vector& lambdas,
           const std::optional<std::vector<int>>& groups, const std::optional<Vector>& d,
           const std::optional<Vector>& w, double eps1, double eps2, std::size_t max_iters) {
            const auto g = partition(groups, X.cols());
            const auto pen = penalty(g, 0.0, 0.0, d, w);
            const QuantileProblem prob(X, y, tau, g);
            SolutionPath path;
            {
                py::gil_scoped_release release;
                path = solve_path(prob, alpha, pen.d, pen.w, lambdas, config(1.0, 1.0, eps1, eps2, max_iters, "auto"));
            }
            Matrix betas(static_cast<Index>(path.models.size()), X.cols());
            Vector beta0(static_cast<Index>(path.models.size()));
            py::list reports;
            for (std::size_t k = 0; k < path.models.size(); ++k) {
                betas.row(static_cast<Index>(k)) = path.models[k].beta.transpose();
                beta0[static_cast<Index>(k)] = path.models[k].beta0;
                reports.append(report_dict(path.reports[k]));
            }
            py::dict out;
            out["lambdas"] = path.lambdas;
            out["beta0"] = beta0;
            out["beta"] = betas;
            out["reports"] = reports;
            return out;
        },
        py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("alpha"), py::arg("lambdas"),
        py::arg("groups") = py::none(), py::arg("d") = py::none(), py::arg("w") = py::none(),
        py::arg("eps1") = 1e-3, py::arg("eps2") = 1e-3, py::arg("max_iters") = 20000);

    m.def(
        "simulate",
        [](const std::string& design, Index n, Index p, const std::string& dist, double tau, std::uint64_t seed,
           std::uint64_t stream) {
            SimSpec spec;
            spec.design = design_from_string(design);
            spec.n = n;
            spec.p_or_q = p;
            spec.error_dist = error_dist_from_string(dist);
            spec.tau = tau;
            spec.seed = seed;
            const SimData data = generate(spec, stream);
            py::dict out;
            out["X"] = data.problem.X();
            out["y"] = data.problem.y();
            out["beta"] = data.true_beta;
            out["groups"] = labels_of(data.problem.groups());
            return out;
        },
        py::arg("design"), py::arg("n"), py::arg("p"), py::arg("dist"), py::arg("tau") = 0.5, py::arg("seed") = 1,
        py::arg("stream") = 0);

    m.def(
        "metrics",
        [](const Vector& beta_hat, const Vector& beta_true) {
            const MetricReport r = compute_metrics(beta_hat, beta_true);
            py::dict out;
            out["mse"] = r.mse;
            out["mae"] = r.mae;
            out["gfp_count"] = r.gfp_count;
            out["gfp_rate"] = r.gfp_rate;
            out["gfn_count"] = r.gfn_count;
            out["gfn_rate"] = r.gfn_rate;
            return out;
        },
        py::arg("beta_hat"), py::arg("beta_true"));
}
