#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sglq/errors.hpp"
#include "sglq/eval.hpp"
#include "sglq/linalg.hpp"
#include "sglq/path.hpp"
#include "sglq/solver.hpp"

namespace sglq::cli {

using nlohmann::ordered_json;

void to_json(ordered_json& j, const RunManifest& m)
{
    j = ordered_json{
        {"format_version", m.format_version},
        {"command", m.command},
        {"data", m.data},
        {"response", m.response},
        {"groups", m.groups},
        {"center", m.center},
        {"output", m.output},
        {"diagnostics", m.diagnostics},
        {"summary", m.summary},
        {"data_out", m.data_out},
        {"timing", m.timing},
        {"tau", m.tau},
        {"alpha", m.alpha ? ordered_json(*m.alpha) : ordered_json(nullptr)},
        {"lambda", m.lambda},
        {"mu", m.mu},
        {"element_weights", m.element_weights},
        {"group_weights", m.group_weights},
        {"nlambda", m.nlambda},
        {"min_ratio", m.min_ratio ? ordered_json(*m.min_ratio) : ordered_json(nullptr)},
        {"lambdas", m.lambdas},
        {"varpi", m.varpi},
        {"gamma", m.gamma},
        {"eps1", m.eps1},
        {"eps2", m.eps2},
        {"max_iters", m.max_iters},
        {"check_every", m.check_every},
        {"linsolver", m.linsolver},
        {"cg_tol", m.cg_tol},
        {"cg_max_iters", m.cg_max_iters},
        {"design", m.design},
        {"dists", m.dists},
        {"taus", m.taus},
        {"n", m.n},
        {"p", m.p},
        {"seed", m.seed},
        {"reps", m.reps},
        {"tune_nlambda", m.tune_nlambda},
        {"alphas", m.alphas},
        {"adaptive", m.adaptive},
        {"adaptive_power", m.adaptive_power},
        {"adaptive_floor", m.adaptive_floor},
        {"standardize", m.standardize},
        {"threads", m.threads},
    };
}

void from_json(const ordered_json& j, RunManifest& m)
{
    if (!j.is_object()) throw InvalidInput("manifest must be a JSON object");
    RunManifest d;
    ordered_json known;
    to_json(known, d);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) throw InvalidInput("unknown manifest field '" + it.key() + "'");
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    auto get_opt = [&](const char* key, std::optional<double>& field) {
        if (!j.contains(key) || j.at(key).is_null()) {
            field.reset();
        } else {
            field = j.at(key).get<double>();
        }
    };
    try {
        get("format_version", d.format_version);
        if (d.format_version != "1") {
            throw InvalidInput("unsupported manifest format_version '" + d.format_version + "'");
        }
        get("command", d.command);
        get("data", d.data);
        get("response", d.response);
        get("groups", d.groups);
        get("center", d.center);
        get("output", d.output);
        get("diagnostics", d.diagnostics);
        get("summary", d.summary);
        get("data_out", d.data_out);
        get("timing", d.timing);
        get("tau", d.tau);
        get_opt("alpha", d.alpha);
        get("lambda", d.lambda);
        get("mu", d.mu);
        get("element_weights", d.element_weights);
        get("group_weights", d.group_weights);
        get("nlambda", d.nlambda);
        get_opt("min_ratio", d.min_ratio);
        get("lambdas", d.lambdas);
        get("varpi", d.varpi);
        get("gamma", d.gamma);
        get("eps1", d.eps1);
        get("eps2", d.eps2);
        get("max_iters", d.max_iters);
        get("check_every", d.check_every);
        get("linsolver", d.linsolver);
        get("cg_tol", d.cg_tol);
        get("cg_max_iters", d.cg_max_iters);
        get("design", d.design);
        get("dists", d.dists);
        get("taus", d.taus);
        get("n", d.n);
        get("p", d.p);
        get("seed", d.seed);
        get("reps", d.reps);
        get("tune_nlambda", d.tune_nlambda);
        get("alphas", d.alphas);
        get("adaptive", d.adaptive);
        get("adaptive_power", d.adaptive_power);
        get("adaptive_floor", d.adaptive_floor);
        get("standardize", d.standardize);
        get("threads", d.threads);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed manifest: ") + e.what());
    }
    m = std::move(d);
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

SolverConfig solver_config(const RunManifest& m)
{
    SolverConfig c;
    c.varpi = m.varpi;
    c.gamma = m.gamma;
    c.eps1 = m.eps1;
    c.eps2 = m.eps2;
    c.max_iters = m.max_iters;
    c.check_every = m.check_every;
    if (m.linsolver != "auto") {
        try {
            c.linalg_strategy_hint = linear_strategy_from_string(m.linsolver);
        } catch (const InvalidInput&) {
            throw InvalidInput("unknown --linsolver '" + m.linsolver + "' (accepted: auto, direct, woodbury, cg)");
        }
    }
    c.cg.tolerance = m.cg_tol;
    c.cg.max_iters = m.cg_max_iters;
    c.validate();
    return c;
}

std::pair<Vector, Vector> weights(const RunManifest& m, const GroupPartition& groups)
{
    const PenaltySpec defaults = PenaltySpec::with_default_weights(groups, 0.0, 0.0);
    Vector d = defaults.d;
    Vector w = defaults.w;
    if (!m.element_weights.empty()) {
        if (m.element_weights.size() != groups.p()) {
            throw InvalidInput("--element-weights needs " + std::to_string(groups.p()) + " values");
        }
        d = Eigen::Map<const Vector>(m.element_weights.data(), static_cast<Index>(m.element_weights.size()));
    }
    if (!m.group_weights.empty()) {
        if (m.group_weights.size() != groups.count()) {
            throw InvalidInput("--group-weights needs " + std::to_string(groups.count()) + " values");
        }
        w = Eigen::Map<const Vector>(m.group_weights.data(), static_cast<Index>(m.group_weights.size()));
    }
    return {d, w};
}

PenaltySpec penalty_at(const RunManifest& m, const GroupPartition& groups, double lambda)
{
    auto [d, w] = weights(m, groups);
    PenaltySpec pen;
    if (m.alpha) {
        if (m.mu != 0.0) throw InvalidInput("--mu cannot be combined with --alpha (use --lambda as the common magnitude)");
        pen = penalty_from_alpha(*m.alpha, lambda, d, w);
    } else {
        pen.lambda = lambda;
        pen.mu = m.mu;
        pen.d = d;
        pen.w = w;
    }
    if (!(std::isfinite(pen.lambda) && pen.lambda >= 0.0 && std::isfinite(pen.mu) && pen.mu >= 0.0)) {
        throw InvalidInput("penalty magnitudes must be finite and >= 0");
    }
    pen.validate(groups);
    return pen;
}

struct Prepared {
    Dataset ds;
    GroupPartition groups;
    Vector means;
    std::optional<QuantileProblem> original;
    std::optional<QuantileProblem> fit;  // centered when requested
};

Prepared prepare(const RunManifest& m)
{
    if (m.data.empty()) throw InvalidInput("--data is required");
    Prepared pr;
    pr.ds = load_dataset(m.data, m.response);
    pr.groups = m.groups.empty() ? GroupPartition::singletons(pr.ds.columns.size())
                                 : read_groups(m.groups, pr.ds.columns);
    pr.original.emplace(pr.ds.X, pr.ds.y, m.tau, pr.groups);
    if (m.center) {
        auto [Xc, means] = center_columns(pr.ds.X);
        pr.means = means;
        pr.fit.emplace(std::move(Xc), pr.ds.y, m.tau, pr.groups);
    } else {
        pr.means = Vector::Zero(static_cast<Index>(pr.ds.columns.size()));
        pr.fit = pr.original;
    }
    return pr;
}

double original_intercept(const Prepared& pr, const FittedModel& model)
{
    return model.beta0 - pr.means.dot(model.beta);
}

ordered_json report_json(const ConvergenceReport& r, double objective)
{
    return ordered_json{{"iterations", r.iterations},
                        {"primal_residual", r.primal_residual},
                        {"dual_residual", r.dual_residual},
                        {"eps_pri", r.eps_pri},
                        {"eps_dual", r.eps_dual},
                        {"kkt_residual", r.kkt_residual},
                        {"objective", objective},
                        {"converged", r.converged}};
}

ordered_json groups_json(const Prepared& pr)
{
    ordered_json g = ordered_json::array();
    for (std::size_t l = 0; l < pr.groups.count(); ++l) {
        ordered_json names = ordered_json::array();
        for (Index j : pr.groups.members(l)) names.push_back(pr.ds.columns[static_cast<std::size_t>(j)]);
        g.push_back(names);
    }
    return g;
}

ordered_json nonzero_groups(const GroupPartition& groups, const Vector& beta)
{
    ordered_json out = ordered_json::array();
    for (std::size_t l = 0; l < groups.count(); ++l) {
        bool nz = false;
        for (Index j : groups.members(l)) nz = nz || beta[j] != 0.0;
        if (nz) out.push_back(l);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback)
{
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot write '" + path + "'");
    f << text;
    if (!f) throw InvalidInput("error writing '" + path + "'");
}

ordered_json manifest_json(const RunManifest& m)
{
    ordered_json j;
    to_json(j, m);
    return j;
}

int cmd_fit(const RunManifest& m, std::ostream& out)
{
    const Prepared pr = prepare(m);
    const SolverConfig cfg = solver_config(m);
    const PenaltySpec pen = penalty_at(m, pr.groups, m.lambda);
    const SolveResult res = sgl_dadmm_solve(*pr.fit, pen, cfg);
    const double beta0 = original_intercept(pr, res.model);
    const double objective = primal_objective(*pr.original, pen, beta0, res.model.beta);

    ordered_json doc;
    doc["format_version"] = "1";
    doc["command"] = "fit";
    doc["manifest"] = manifest_json(m);
    doc["penalty"] = {{"lambda", pen.lambda}, {"mu", pen.mu}};
    doc["columns"] = pr.ds.columns;
    doc["groups"] = groups_json(pr);
    doc["beta0"] = beta0;
    doc["beta"] = std::vector<double>(res.model.beta.data(), res.model.beta.data() + res.model.beta.size());
    doc["nonzero_groups"] = nonzero_groups(pr.groups, res.model.beta);
    doc["report"] = report_json(res.report, objective);
    write_text(m.output, doc.dump(2) + "\n", out);
    return res.report.converged ? 0 : 2;
}

int cmd_path(const RunManifest& m, std::ostream& out)
{
    const Prepared pr = prepare(m);
    const SolverConfig cfg = solver_config(m);
    const double alpha = m.alpha.value_or(0.5);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("--alpha must lie in [0, 1]");
    if (m.mu != 0.0) throw InvalidInput("path takes --alpha, not --mu");
    auto [d, w] = weights(m, pr.groups);

    Vector grid;
    if (!m.lambdas.empty()) {
        grid = Eigen::Map<const Vector>(m.lambdas.data(), static_cast<Index>(m.lambdas.size()));
    } else {
        const double ratio = m.min_ratio.value_or(default_min_ratio(pr.fit->n(), pr.fit->p()));
        grid = lambda_grid(lambda_max(*pr.fit, alpha, d, w), m.nlambda, ratio);
    }
    const SolutionPath path = solve_path(*pr.fit, alpha, d, w, grid, cfg);

    std::ostringstream csv;
    csv << "lambda,intercept";
    for (const std::string& c : pr.ds.columns) {
        const bool quote = c.find_first_of(",\"\r\n") != std::string::npos;
        if (!quote) {
            csv << ',' << c;
            continue;
        }
        csv << ",\"";
        for (char ch : c) csv << (ch == '"' ? std::string("\"\"") : std::string(1, ch));
        csv << '"';
    }
    csv << "\r\n";
    ordered_json fits = ordered_json::array();
    bool all_converged = true;
    for (std::size_t k = 0; k < path.models.size(); ++k) {
        const FittedModel& fm = path.models[k];
        const double lam = grid[static_cast<Index>(k)];
        const PenaltySpec pen = penalty_from_alpha(alpha, lam, d, w);
        const double beta0 = original_intercept(pr, fm);
        const double objective = primal_objective(*pr.original, pen, beta0, fm.beta);
        csv << fmt(lam) << ',' << fmt(beta0);
        for (Index j = 0; j < fm.beta.size(); ++j) csv << ',' << fmt(fm.beta[j]);
        csv << "\r\n";
        fits.push_back(ordered_json{{"lambda", lam},
                                    {"penalty", {{"lambda", pen.lambda}, {"mu", pen.mu}}},
                                    {"nonzero_groups", nonzero_groups(pr.groups, fm.beta)},
                                    {"report", report_json(path.reports[k], objective)}});
        all_converged = all_converged && path.reports[k].converged;
    }
    write_text(m.output, csv.str(), out);
    if (!m.diagnostics.empty()) {
        ordered_json doc;
        doc["format_version"] = "1";
        doc["command"] = "path";
        doc["manifest"] = manifest_json(m);
        doc["alpha"] = alpha;
        doc["columns"] = pr.ds.columns;
        doc["groups"] = groups_json(pr);
        doc["fits"] = fits;
        if (m.timing) doc["wall_time_s"] = path.wall_time_s;
        write_text(m.diagnostics, doc.dump(2) + "\n", out);
    }
    return all_converged ? 0 : 2;
}

std::vector<SimSpec> scenarios(const RunManifest& m)
{
    std::vector<SimSpec> specs;
    if (m.dists.empty() || m.taus.empty()) throw InvalidInput("at least one --dist and one --tau are required");
    for (const std::string& dist : m.dists) {
        for (double tau : m.taus) {
            SimSpec s;
            s.design = design_from_string(m.design);
            s.error_dist = error_dist_from_string(dist);
            s.n = m.n;
            s.p_or_q = m.p;
            s.tau = tau;
            s.seed = m.seed;
            s.validate();
            specs.push_back(s);
        }
    }
    return specs;
}

BenchmarkConfig bench_config(const RunManifest& m)
{
    if (m.reps < 1) throw InvalidInput("--reps must be >= 1");
    BenchmarkConfig bc;
    bc.solver = solver_config(m);
    bc.replications = m.reps;
    bc.threads = m.threads;
    bc.tuning.n_lambda = m.tune_nlambda;
    bc.tuning.min_ratio = m.min_ratio.value_or(0.0);
    bc.tuning.alphas = m.alphas;
    bc.tuning.adaptive = m.adaptive;
    bc.tuning.adaptive_power = m.adaptive_power;
    bc.tuning.adaptive_floor = m.adaptive_floor;
    bc.tuning.standardize = m.standardize;
    bc.tuning.validate();
    return bc;
}

void write_sample(const std::string& prefix, const SimData& data, std::size_t rep)
{
    std::ostringstream csv;
    const Index p = data.problem.p();
    csv << "y";
    for (Index j = 0; j < p; ++j) csv << ",x" << (j + 1);
    csv << "\r\n";
    for (Index i = 0; i < data.problem.n(); ++i) {
        csv << fmt(data.problem.y()[i]);
        for (Index j = 0; j < p; ++j) csv << ',' << fmt(data.problem.X()(i, j));
        csv << "\r\n";
    }
    std::ostringstream sink;
    write_text(prefix + "_rep" + std::to_string(rep) + ".csv", csv.str(), sink);
    if (rep == 0) {
        ordered_json g = ordered_json::array();
        for (std::size_t l = 0; l < data.problem.groups().count(); ++l) {
            ordered_json names = ordered_json::array();
            for (Index j : data.problem.groups().members(l)) names.push_back("x" + std::to_string(j + 1));
            g.push_back(names);
        }
        ordered_json truth = std::vector<double>(data.true_beta.data(), data.true_beta.data() + p);
        write_text(prefix + "_groups.json", ordered_json{{"groups", g}}.dump(2) + "\n", sink);
        write_text(prefix + "_truth.json", ordered_json{{"beta", truth}}.dump(2) + "\n", sink);
    }
}

int cmd_bench(const RunManifest& m, std::ostream& out, std::ostream& err)
{
    const std::vector<SimSpec> specs = scenarios(m);
    if (m.command == "simulate" && specs.size() != 1) {
        throw InvalidInput("simulate runs one scenario; pass a single --dist and --tau or use bench");
    }
    const BenchmarkConfig bc = bench_config(m);
    if (!m.data_out.empty()) {
        for (std::size_t r = 0; r < m.reps; ++r) {
            SimSpec s = specs.front();
            s.seed = replication_seed(s.seed, r);
            write_sample(m.data_out, generate(s, 0), r);
        }
    }
    const std::vector<BenchmarkRow> rows = run_benchmark(specs, bc);

    std::ostringstream csv;
    write_benchmark_csv(csv, rows, m.timing);
    write_text(m.output, csv.str(), out);
    if (!m.summary.empty()) {
        std::ostringstream js;
        write_benchmark_json(js, rows, m.timing);
        const ordered_json body = ordered_json::parse(js.str());
        ordered_json doc;
        doc["format_version"] = body.at("format_version");
        doc["command"] = m.command;
        doc["manifest"] = manifest_json(m);
        for (const auto& [key, value] : body.items())
            if (key != "format_version") doc[key] = value;
        write_text(m.summary, doc.dump(2) + "\n", out);
    }

    std::ostream& lines = (m.output.empty() || m.output == "-") ? err : out;
    bool failed = false;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        std::vector<double> mse, mae, gfp, gfn, time;
        std::size_t errors = 0;
        for (std::size_t r = 0; r < m.reps; ++r) {
            const BenchmarkRow& row = rows[s * m.reps + r];
            if (!row.error.empty()) {
                ++errors;
                continue;
            }
            mse.push_back(row.metrics.mse);
            mae.push_back(row.metrics.mae);
            gfp.push_back(row.metrics.gfp_rate);
            gfn.push_back(row.metrics.gfn_rate);
            time.push_back(row.metrics.wall_time_s);
        }
        failed = failed || errors > 0;
        lines << to_string(specs[s].design) << ' ' << to_string(specs[s].error_dist) << " n=" << specs[s].n
              << " p=" << specs[s].p_or_q << " tau=" << short_fmt(specs[s].tau) << " reps=" << m.reps
              << " failed=" << errors << " median_mse=" << short_fmt(median(mse))
              << " median_mae=" << short_fmt(median(mae)) << " median_gfp_rate=" << short_fmt(median(gfp))
              << " median_gfn_rate=" << short_fmt(median(gfn));
        if (m.timing) lines << " median_time_s=" << short_fmt(median(time));
        lines << "\n";
    }
    return failed ? 1 : 0;
}

ordered_json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(path + ": malformed JSON (" + e.what() + ")");
    }
}

bool objectives_match(double reported, double recomputed)
{
    return std::abs(reported - recomputed) <= 1e-10 * std::max(1.0, std::abs(reported));
}

int cmd_verify(const RunManifest& m, const std::string& result_path, const std::string& coef_path,
               std::ostream& out)
{
    const ordered_json doc = read_json_file(result_path);
    RunManifest recorded;
    try {
        from_json(doc.at("manifest"), recorded);
    } catch (const nlohmann::json::exception&) {
        throw InvalidInput(result_path + ": no manifest recorded");
    }
    if (!m.data.empty()) recorded.data = m.data;
    if (!m.groups.empty()) recorded.groups = m.groups;
    const Prepared pr = prepare(recorded);

    std::size_t mismatches = 0;
    const std::string command = doc.value("command", "");
    if (command == "fit") {
        const PenaltySpec pen = penalty_at(recorded, pr.groups, recorded.lambda);
        const auto beta_v = doc.at("beta").get<std::vector<double>>();
        if (beta_v.size() != pr.ds.columns.size()) throw InvalidInput(result_path + ": beta has the wrong length");
        const Vector beta = Eigen::Map<const Vector>(beta_v.data(), static_cast<Index>(beta_v.size()));
        const double recomputed = primal_objective(*pr.original, pen, doc.at("beta0").get<double>(), beta);
        const double reported = doc.at("report").at("objective").get<double>();
        const bool ok = objectives_match(reported, recomputed);
        out << "fit objective reported " << fmt(reported) << " recomputed " << fmt(recomputed)
            << (ok ? " ok" : " MISMATCH") << "\n";
        mismatches += ok ? 0 : 1;
    } else if (command == "path") {
        if (coef_path.empty()) throw InvalidInput("verifying a path needs --coefficients");
        const Table coef = read_csv(coef_path);
        const auto& fits = doc.at("fits");
        if (coef.rows.size() != fits.size()) throw InvalidInput(coef_path + ": row count differs from the diagnostics");
        if (coef.header.size() != pr.ds.columns.size() + 2) {
            throw InvalidInput(coef_path + ": column count does not match the data");
        }
        const double alpha = doc.at("alpha").get<double>();
        auto [d, w] = weights(recorded, pr.groups);
        for (std::size_t k = 0; k < coef.rows.size(); ++k) {
            const auto& row = coef.rows[k];
            const PenaltySpec pen = penalty_from_alpha(alpha, row[0], d, w);
            const Vector beta = Eigen::Map<const Vector>(row.data() + 2, static_cast<Index>(row.size() - 2));
            const double recomputed = primal_objective(*pr.original, pen, row[1], beta);
            const double reported = fits[k].at("report").at("objective").get<double>();
            const bool ok = objectives_match(reported, recomputed);
            if (!ok) {
                out << "path row " << k << " objective reported " << fmt(reported) << " recomputed "
                    << fmt(recomputed) << " MISMATCH\n";
            }
            mismatches += ok ? 0 : 1;
        }
        out << "path rows checked " << coef.rows.size() << ", mismatches " << mismatches << "\n";
    } else {
        throw InvalidInput(result_path + ": only fit results and path diagnostics can be verified");
    }
    return mismatches == 0 ? 0 : 1;
}

void add_data_options(CLI::App* app, RunManifest& m)
{
    app->add_option("--data", m.data, "CSV file with a header row")->required();
    app->add_option("--response", m.response, "Name of the response column")->required();
    app->add_option("--groups", m.groups, "JSON file {\"groups\": [[names...], ...]}");
    app->add_flag("--center,!--no-center", m.center, "Center design columns (default on)");
    app->add_option("--tau", m.tau, "Quantile level in (0, 1)");
}

void add_penalty_options(CLI::App* app, RunManifest& m, double& alpha_in)
{
    app->add_option("--lambda", m.lambda, "Element penalty, or the common magnitude with --alpha");
    app->add_option("--mu", m.mu, "Group penalty");
    app->add_option("--alpha", alpha_in, "Mixing weight: lambda = (1-alpha) L, mu = alpha L");
    app->add_option("--element-weights", m.element_weights, "Comma separated d_j")->delimiter(',');
    app->add_option("--group-weights", m.group_weights, "Comma separated w_l")->delimiter(',');
}

void add_solver_options(CLI::App* app, RunManifest& m)
{
    app->add_option("--varpi", m.varpi, "Augmented Lagrangian parameter");
    app->add_option("--gamma", m.gamma, "Multiplier step relaxation in (0, 1.618)");
    app->add_option("--eps1", m.eps1, "Absolute tolerance");
    app->add_option("--eps2", m.eps2, "Relative tolerance");
    app->add_option("--max-iters", m.max_iters, "Iteration cap");
    app->add_option("--check-every", m.check_every, "Residual check cadence");
    app->add_option("--linsolver", m.linsolver, "auto, direct, woodbury or cg");
    app->add_option("--cg-tol", m.cg_tol, "CG relative tolerance");
    app->add_option("--cg-max-iters", m.cg_max_iters, "CG iteration cap");
}

void add_sim_options(CLI::App* app, RunManifest& m, bool multi)
{
    app->add_option("--design", m.design, "timing or poly");
    app->add_option("--n", m.n, "Sample size");
    app->add_option("--p,--q", m.p, "p for the timing design, q for the polynomial design");
    if (multi) {
        app->add_option("--dists", m.dists, "Comma separated error distributions")->delimiter(',');
        app->add_option("--taus", m.taus, "Comma separated quantile levels")->delimiter(',');
    } else {
        app->add_option("--dist", m.dists, "normal3, laplace, t4, homo-normal2, hetero-normal3, hetero-chi3")
            ->delimiter(',');
        app->add_option("--tau", m.taus, "Quantile level")->delimiter(',');
    }
    app->add_option("--seed", m.seed, "Base seed; replication r uses seed + r");
    app->add_option("--reps", m.reps, "Replications per scenario");
    app->add_option("--nlambda", m.tune_nlambda, "Tuning grid size");
    app->add_option("--alphas", m.alphas, "Comma separated alpha candidates")->delimiter(',');
    app->add_flag("--adaptive", m.adaptive, "Second tuning round with adaptive weights");
    app->add_option("--adaptive-power", m.adaptive_power, "Exponent of the adaptive weights");
    app->add_option("--adaptive-floor", m.adaptive_floor, "Floor added to pilot magnitudes");
    app->add_flag("--standardize,!--no-standardize", m.standardize, "Fit on standardized columns (default on)");
    app->add_option("--threads", m.threads, "Replication threads (default SGLQ_THREADS or 1)");
    app->add_option("--output", m.output, "CSV output path (default stdout)");
    app->add_option("--summary", m.summary, "JSON summary path");
    app->add_flag("--timing", m.timing, "Include wall times (output is then not reproducible)");
}

} // namespace

int execute(const RunManifest& m, std::ostream& out, std::ostream& err)
{
    try {
        if (m.format_version != "1") throw InvalidInput("unsupported format_version");
        if (m.command == "fit") return cmd_fit(m, out);
        if (m.command == "path") return cmd_path(m, out);
        if (m.command == "simulate" || m.command == "bench") return cmd_bench(m, out, err);
        throw InvalidInput("unknown command '" + m.command + "' (accepted: fit, path, simulate, bench)");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Sparse group lasso penalized quantile regression by dual ADMM"};
    app.require_subcommand(1);

    RunManifest fit_m, path_m, sim_m, bench_m, verify_m;
    fit_m.command = "fit";
    path_m.command = "path";
    sim_m.command = "simulate";
    bench_m.command = "bench";
    double fit_alpha = std::nan("");
    double path_alpha = std::nan("");
    double path_min_ratio = std::nan("");
    double sim_min_ratio = std::nan("");
    double bench_min_ratio = std::nan("");
    std::string result_path, coef_path, manifest_path;

    CLI::App* fit = app.add_subcommand("fit", "Fit one penalty");
    add_data_options(fit, fit_m);
    add_penalty_options(fit, fit_m, fit_alpha);
    add_solver_options(fit, fit_m);
    fit->add_option("--output", fit_m.output, "Result JSON path (default stdout)");

    CLI::App* path = app.add_subcommand("path", "Warm-started regularization path");
    add_data_options(path, path_m);
    add_penalty_options(path, path_m, path_alpha);
    add_solver_options(path, path_m);
    path->add_option("--nlambda", path_m.nlambda, "Grid size for the automatic grid");
    path->add_option("--min-ratio", path_min_ratio, "Smallest lambda as a fraction of lambda_max");
    path->add_option("--lambdas", path_m.lambdas, "Explicit descending grid, comma separated")->delimiter(',');
    path->add_option("--output", path_m.output, "Coefficient CSV path (default stdout)");
    path->add_option("--diagnostics", path_m.diagnostics, "Diagnostics JSON path");
    path->add_flag("--timing", path_m.timing, "Record the path wall time");

    CLI::App* sim = app.add_subcommand("simulate", "Replications of one simulation scenario");
    add_sim_options(sim, sim_m, false);
    add_solver_options(sim, sim_m);
    sim->add_option("--min-ratio", sim_min_ratio, "Tuning grid floor as a fraction of lambda_max");
    sim->add_option("--data-out", sim_m.data_out, "Also write each training sample as PREFIX_repR.csv");

    CLI::App* bench = app.add_subcommand("bench", "Replications over distributions x quantile levels");
    add_sim_options(bench, bench_m, true);
    add_solver_options(bench, bench_m);
    bench->add_option("--min-ratio", bench_min_ratio, "Tuning grid floor as a fraction of lambda_max");

    CLI::App* verify = app.add_subcommand("verify", "Recompute the objective of a fit or path output");
    verify->add_option("--result", result_path, "fit result JSON or path diagnostics JSON")->required();
    verify->add_option("--coefficients", coef_path, "path coefficient CSV");
    verify->add_option("--data", verify_m.data, "Override the recorded data path");
    verify->add_option("--groups", verify_m.groups, "Override the recorded groups path");

    CLI::App* runm = app.add_subcommand("run", "Execute a manifest");
    runm->add_option("--manifest", manifest_path, "Manifest JSON (the \"manifest\" of any output, or a bare one)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    auto finish = [](RunManifest& m, double alpha, double min_ratio) {
        if (!std::isnan(alpha)) m.alpha = alpha;
        if (!std::isnan(min_ratio)) m.min_ratio = min_ratio;
    };
    if (fit->parsed()) {
        finish(fit_m, fit_alpha, std::nan(""));
        return execute(fit_m, out, err);
    }
    if (path->parsed()) {
        finish(path_m, path_alpha, path_min_ratio);
        return execute(path_m, out, err);
    }
    if (sim->parsed()) {
        finish(sim_m, std::nan(""), sim_min_ratio);
        return execute(sim_m, out, err);
    }
    if (bench->parsed()) {
        finish(bench_m, std::nan(""), bench_min_ratio);
        return execute(bench_m, out, err);
    }
    try {
        if (verify->parsed()) return cmd_verify(verify_m, result_path, coef_path, out);
        std::ifstream in(manifest_path, std::ios::binary);
        if (!in) throw InvalidInput("cannot open '" + manifest_path + "'");
        ordered_json doc;
        try {
            doc = ordered_json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidInput(manifest_path + ": malformed JSON (" + e.what() + ")");
        }
        RunManifest m;
        from_json(doc.contains("manifest") ? doc.at("manifest") : doc, m);
        return execute(m, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace sglq::cli
