// Acceptance gate: one PASS/FAIL line per criterion. Arguments select a subset, e.g. `3 5`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "sglq/eval.hpp"
#include "sglq/linalg.hpp"
#include "sglq/path.hpp"
#include "sglq/prox.hpp"
#include "sglq/solver.hpp"

using namespace sglq;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Vector from(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> stdv(const Vector& v)
{
    return {v.data(), v.data() + v.size()};
}

std::vector<std::vector<int>> groups_of(const GroupPartition& g)
{
    std::vector<std::vector<int>> out;
    for (std::size_t l = 0; l < g.count(); ++l) {
        out.emplace_back();
        for (Index j : g.members(l)) out.back().push_back(static_cast<int>(j));
    }
    return out;
}

double max_block_change(const SolverState& a, const SolverState& b)
{
    return std::max({(a.theta - b.theta).cwiseAbs().maxCoeff(), (a.u - b.u).cwiseAbs().maxCoeff(),
                     (a.v - b.v).cwiseAbs().maxCoeff(), (a.beta - b.beta).cwiseAbs().maxCoeff(),
                     (a.z - b.z).cwiseAbs().maxCoeff(), std::abs(a.beta0 - b.beta0)});
}

SolverConfig tight()
{
    SolverConfig c;
    c.eps1 = 1e-10;
    c.eps2 = 1e-10;
    c.max_iters = 200000;
    return c;
}

Outcome oracle_equivalence()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> n_dist(8, 25), p_dist(1, 8), pick(0, 2);
    const double taus[] = {0.25, 0.5, 0.75};
    const double pens[] = {0.0, 0.05, 0.2};
    double worst = 0.0;
    int failed = 0;
    for (int t = 0; t < 30; ++t) {
        const int n = n_dist(rng), p = p_dist(rng);
        const int g = std::min(p, 1 + pick(rng));
        const double tau = taus[pick(rng)];
        const double lambda = pens[pick(rng)], mu = pens[pick(rng)];
        const auto inst = sglq_test::random_instance(rng, n, p, g, tau, lambda, mu);
        const auto oracle = sglq_test::subgradient_oracle(inst, 1000000);
        const auto res = sgl_dadmm_solve(sglq_test::to_problem(inst), sglq_test::to_penalty(inst), tight());
        const double rel = std::abs(res.report.objective - oracle.objective) / oracle.objective;
        worst = std::max(worst, rel);
        if (!(rel <= 1e-5)) ++failed;
    }
    const double secs = seconds_since(t0);
    return {failed == 0 && secs < 120.0,
            fmt("30 instances, worst relative objective gap %.2e (limit 1e-5), %d over, %.1f s (limit 120 s)",
                worst, failed, secs)};
}

Outcome lambda_max_zeros()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> n_dist(10, 60), p_dist(2, 20);
    std::uniform_real_distribution<double> tau_dist(0.1, 0.9);
    const double alphas[] = {0.0, 0.3, 0.7, 1.0};
    int nonzero = 0;
    for (int t = 0; t < 50; ++t) {
        const int n = n_dist(rng), p = p_dist(rng);
        const int g = std::max(1, p / 3);
        const auto inst = sglq_test::random_instance(rng, n, p, g, tau_dist(rng), 0.0, 0.0);
        const auto prob = sglq_test::to_problem(inst);
        const Vector d = from(inst.d), w = from(inst.w);
        const double alpha = alphas[t % 4];
        const double lmax = lambda_max(prob, alpha, d, w);
        const auto res = sgl_dadmm_solve(prob, penalty_from_alpha(alpha, lmax, d, w), SolverConfig{});
        if ((res.model.beta.array() != 0.0).any()) ++nonzero;
    }
    const double secs = seconds_since(t0);
    return {nonzero == 0 && secs < 30.0,
            fmt("50 instances, %d with a nonzero coefficient at lambda_max, %.2f s (limit 30 s)", nonzero, secs)};
}

Outcome fixed_point()
{
    std::mt19937_64 rng(303);
    double worst_move = 0.0, worst_kkt = 0.0, worst_solved_kkt = 0.0;
    for (int t = 0; t < 12; ++t) {
        const int n = 10 + 3 * t, p = 3 + t % 6, g = 1 + t % 3;
        const double tau = 0.2 + 0.05 * t;
        const auto planted = sglq_test::planted_instance(rng, n, p, g, tau, 0.01 * (1 + t % 3), 0.02 * (t % 4));
        const auto prob = sglq_test::to_problem(planted.plain);
        const auto pen = sglq_test::to_penalty(planted.plain);
        worst_kkt = std::max(worst_kkt, kkt_residual(planted.optimum, prob, pen));
        const auto op = SystemOperator::build(prob.X());
        for (double gamma : {0.5, 1.0, 1.5}) {
            SolverConfig cfg;
            cfg.gamma = gamma;
            const auto next = iterate_once(planted.optimum, prob, pen, cfg, op);
            worst_move = std::max(worst_move, max_block_change(next, planted.optimum));
        }
        const auto solved = sgl_dadmm_solve(prob, pen, tight());
        worst_solved_kkt = std::max(worst_solved_kkt, kkt_residual(solved.state, prob, pen));
    }
    return {worst_move <= 1e-8 && worst_kkt <= 1e-6 && worst_solved_kkt <= 1e-6,
            fmt("12 planted optima: max block move %.2e (limit 1e-8), KKT %.2e, KKT after a tight solve %.2e "
                "(limit 1e-6)",
                worst_move, worst_kkt, worst_solved_kkt)};
}

Outcome monitors()
{
    bool ok = true;
    int trend_fail = 0, slow = 0, worst_hit = 0;
    const auto desk = sglq_test::desk_instances();
    for (const auto& inst : desk) {
        const auto prob = sglq_test::to_problem(inst);
        const auto pen = sglq_test::to_penalty(inst);
        const auto op = SystemOperator::build(prob.X());
        for (double gamma : {0.5, 1.0, 1.6}) {
            SolverConfig cfg;
            cfg.gamma = gamma;
            auto s = SolverState::initial(prob);
            double r50 = 0.0, r500 = 0.0;
            int hit = -1;
            for (int k = 1; k <= 20000 && (k <= 500 || hit < 0); ++k) {
                s = iterate_once(s, prob, pen, cfg, op);
                const double r = constraint_residual_sq(s, prob);
                if (k == 50) r50 = r;
                if (k == 500) r500 = r;
                if (hit < 0 && r < 1e-6) hit = k;
            }
            if (!(r500 < r50)) ++trend_fail;
            if (hit < 0) ++slow;
            worst_hit = std::max(worst_hit, hit);
        }
    }
    ok = trend_fail == 0 && slow == 0;

    std::mt19937_64 rng(404);
    const auto planted = sglq_test::planted_instance(rng, 12, 4, 2, 0.4, 0.02, 0.03);
    const auto prob = sglq_test::to_problem(planted.plain);
    const auto pen = sglq_test::to_penalty(planted.plain);
    const auto op = SystemOperator::build(prob.X());
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (double gamma : {0.5, 1.0, 1.5}) {
        SolverConfig cfg;
        cfg.gamma = gamma;
        auto s = SolverState::initial(prob);
        double prev = merit_value(s, planted.optimum, prob, cfg);
        for (int k = 1; k <= 2000; ++k) {
            s = iterate_once(s, prob, pen, cfg, op);
            const double c = merit_value(s, planted.optimum, prob, cfg);
            worst_rise = std::max(worst_rise, c - prev);
            prev = c;
        }
    }
    ok = ok && worst_rise <= 1e-9;
    return {ok, fmt("%zu desk instances x 3 gammas: %d without decrease from iteration 50 to 500, %d never below "
                    "1e-6, slowest crossing at iteration %d; largest merit increase %.2e (slack 1e-9)",
                    desk.size(), trend_fail, slow, worst_hit, worst_rise)};
}

ProxPenalty prox_penalty(const Vector& d, const Vector& w, const GroupPartition& g)
{
    ProxPenalty p;
    p.scaled_d = d;
    p.scaled_w = w;
    p.partition = g;
    return p;
}

Outcome prox_calculus()
{
    std::mt19937_64 rng(505);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double eps = std::numeric_limits<double>::epsilon();

    double grid_gap = 0.0;
    for (int t = 0; t < 40; ++t) {
        const int p = t % 2 == 0 ? 2 : 3;
        const auto g = p == 2 ? GroupPartition::from_sizes(std::vector<std::size_t>{2})
                              : GroupPartition::from_sizes(std::vector<std::size_t>{2, 1});
        Vector a(p), d(p), w(static_cast<Index>(g.count()));
        for (Index j = 0; j < p; ++j) {
            a[j] = 1.5 * normal(rng);
            d[j] = 0.6 * unit(rng);
        }
        for (Index l = 0; l < w.size(); ++l) w[l] = 0.8 * unit(rng);
        const Vector out = prox_h(a, prox_penalty(d, w, g));
        const auto grid = sglq_test::grid_prox_oracle(stdv(a), stdv(d), stdv(w), groups_of(g), 1e-3);
        for (Index j = 0; j < p; ++j) grid_gap = std::max(grid_gap, std::abs(out[j] - grid[static_cast<std::size_t>(j)]));
    }

    // a = prox(a) + varpi * step, and varpi * step lies in the dual set of the penalty.
    double recon_ulps = 0.0, dual_violation = 0.0;
    const std::vector<std::size_t> sizes{2, 3, 1};
    const auto g = GroupPartition::from_sizes(sizes);
    for (int t = 0; t < 300; ++t) {
        Vector a(6), d(6), w(3);
        for (Index j = 0; j < 6; ++j) {
            a[j] = 2.0 * normal(rng);
            d[j] = 0.5 * unit(rng);
        }
        for (Index l = 0; l < 3; ++l) w[l] = 0.7 * unit(rng);
        const auto pen = prox_penalty(d, w, g);
        const double varpi = std::pow(2.0, static_cast<int>(t % 5) - 2);
        const Vector step = prox_h_conjugate_step(a, varpi, pen);
        const Vector p = prox_h(a, pen);
        const Vector back = p + varpi * step;
        for (Index j = 0; j < 6; ++j) recon_ulps = std::max(recon_ulps, std::abs(back[j] - a[j]) / (eps * std::max(1.0, std::abs(a[j]))));
        const Vector zeta = varpi * step;
        for (std::size_t l = 0; l < g.count(); ++l) {
            double sq = 0.0;
            for (Index j : g.members(l)) {
                const double r = std::max(std::abs(zeta[j]) - d[j], 0.0);
                sq += r * r;
            }
            dual_violation = std::max(dual_violation, std::sqrt(sq) - w[static_cast<Index>(l)]);
        }
    }

    // Closed forms written out coordinate by coordinate.
    double closed_gap = 0.0;
    for (int t = 0; t < 200; ++t) {
        Vector a(6), d(6), w(3);
        for (Index j = 0; j < 6; ++j) {
            a[j] = 2.0 * normal(rng);
            d[j] = 0.8 * unit(rng);
        }
        for (Index l = 0; l < 3; ++l) w[l] = 1.2 * unit(rng);
        const double tau = unit(rng);
        const Vector box = box_project(a, tau);
        const Vector soft = soft_threshold(a, d);
        const Vector grp = group_soft_threshold(a, w, g);
        const Vector both = prox_h(a, prox_penalty(d, w, g));
        std::vector<double> s(6);
        for (Index j = 0; j < 6; ++j) {
            const double b = std::min(std::max(a[j], -tau), 1.0 - tau);
            closed_gap = std::max(closed_gap, std::abs(box[j] - b));
            const double sgn = a[j] > 0 ? 1.0 : (a[j] < 0 ? -1.0 : 0.0);
            s[static_cast<std::size_t>(j)] = sgn * std::max(std::abs(a[j]) - d[j], 0.0);
            closed_gap = std::max(closed_gap, std::abs(soft[j] - s[static_cast<std::size_t>(j)]));
        }
        for (std::size_t l = 0; l < g.count(); ++l) {
            double na = 0.0, ns = 0.0;
            for (Index j : g.members(l)) {
                na += a[j] * a[j];
                ns += s[static_cast<std::size_t>(j)] * s[static_cast<std::size_t>(j)];
            }
            na = std::sqrt(na);
            ns = std::sqrt(ns);
            const double wl = w[static_cast<Index>(l)];
            for (Index j : g.members(l)) {
                const double ga = na > 0 ? std::max(na - wl, 0.0) / na * a[j] : 0.0;
                const double gs = ns > 0 ? std::max(ns - wl, 0.0) / ns * s[static_cast<std::size_t>(j)] : 0.0;
                closed_gap = std::max({closed_gap, std::abs(grp[j] - ga), std::abs(both[j] - gs)});
            }
        }
    }
    const bool ok = grid_gap <= 1e-3 && recon_ulps <= 2.0 && dual_violation <= 1e-14 && closed_gap <= 1e-14;
    return {ok, fmt("grid gap %.2e (limit 1e-3); Moreau reconstruction within %.1f ulp, dual-set violation %.2e; "
                    "closed forms max gap %.2e (limit 1e-14)",
                    grid_gap, recon_ulps, dual_violation, closed_gap)};
}

Outcome linear_algebra()
{
    std::mt19937_64 rng(606);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> dim(2, 50);
    double worst_pair = 0.0, worst_identity = 0.0;
    CgParams cg;
    cg.tolerance = 1e-13;
    cg.max_iters = 10000;
    for (int t = 0; t < 40; ++t) {
        const Index n = dim(rng), p = dim(rng);
        Matrix X(n, p);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < p; ++j) X(i, j) = normal(rng);
        X = center_columns(X).first;
        Vector rhs(n);
        for (Index i = 0; i < n; ++i) rhs[i] = normal(rng);
        const auto direct = SystemOperator::build(X, LinearStrategy::Direct);
        const auto wood = SystemOperator::build(X, LinearStrategy::Woodbury);
        const auto iter = SystemOperator::build(X, LinearStrategy::IterativeCG, cg);
        const Vector sols[] = {direct.solve(rhs), wood.solve(rhs), iter.solve(rhs)};
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                worst_pair = std::max(worst_pair, (sols[a] - sols[b]).norm() / std::max(sols[a].norm(), sols[b].norm()));

        const Matrix M = Matrix::Identity(n, n) + X * X.transpose() + Matrix::Ones(n, n);
        const Matrix inv = Matrix::Identity(n, n) -
                           X * (Matrix::Identity(p, p) + X.transpose() * X).inverse() * X.transpose() -
                           Matrix::Ones(n, n) / static_cast<double>(n + 1);
        worst_identity = std::max(worst_identity, (inv * M - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
        Matrix lib(n, n);
        for (Index k = 0; k < n; ++k) lib.col(k) = wood.solve(Vector::Unit(n, k));
        worst_identity = std::max(worst_identity, (lib - inv).cwiseAbs().maxCoeff());
    }
    return {worst_pair <= 1e-8 && worst_identity <= 1e-8,
            fmt("40 centered designs: worst pairwise relative gap %.2e (limit 1e-8), Woodbury inverse entrywise "
                "error %.2e (limit 1e-8)",
                worst_pair, worst_identity)};
}

Outcome timing_design()
{
    const auto t0 = Clock::now();
    SimSpec spec;
    spec.design = Design::Timing;
    spec.n = 100;
    spec.p_or_q = 500;
    spec.error_dist = ErrorDist::Normal3;
    spec.tau = 0.5;
    spec.seed = 2024;
    BenchmarkConfig cfg;
    cfg.replications = 20;
    cfg.threads = 1;
    cfg.tuning.alphas = {1.0};
    const auto rows = run_benchmark({spec}, cfg);
    std::vector<double> mse;
    double slowest = 0.0;
    int errors = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) ++errors;
        mse.push_back(r.metrics.mse);
        slowest = std::max(slowest, r.metrics.wall_time_s);
    }
    const double med = median(mse), secs = seconds_since(t0);
    const bool ok = errors == 0 && med >= 0.015 && med <= 0.15 && slowest < 1.0 && secs < 600.0;
    return {ok, fmt("20 replications: median MSE %.4f (bracket [0.015, 0.15]), slowest single fit %.3f s (limit 1 s), "
                    "%d failed rows, total %.1f s (limit 600 s)",
                    med, slowest, errors, secs)};
}

Outcome selection()
{
    const auto t0 = Clock::now();
    SimSpec spec;
    spec.design = Design::PolyGroups;
    spec.n = 300;
    spec.p_or_q = 100;
    spec.error_dist = ErrorDist::HomoNormal2;
    spec.tau = 0.5;
    spec.seed = 77;
    BenchmarkConfig cfg;
    cfg.replications = 20;
    cfg.threads = 1;
    cfg.tuning.alphas = {0.5};
    cfg.tuning.adaptive = true;
    cfg.tuning.adaptive_floor = 1e-3;
    const auto rows = run_benchmark({spec}, cfg);
    int good = 0;
    std::vector<double> gfp, gfn;
    for (const auto& r : rows) {
        if (r.error.empty() && r.metrics.gfp_rate <= 0.05 && r.metrics.gfn_rate <= 0.05) ++good;
        gfp.push_back(r.metrics.gfp_rate);
        gfn.push_back(r.metrics.gfn_rate);
    }
    return {good >= 16, fmt("%d of 20 replications with GFP and GFN rates <= 0.05 (need 16); median GFP %.4f, "
                            "median GFN %.4f, %.1f s",
                            good, median(gfp), median(gfn), seconds_since(t0))};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const char* env = std::getenv("SGLQ_TEST_TMP");
    const fs::path dir = fs::path(env ? env : fs::temp_directory_path().string()) / "acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string D = dir.string() + "/";

    using Args = std::vector<std::string>;
    struct Step {
        std::string name;
        Args args;
        std::vector<std::string> files;
    };
    const std::vector<Step> steps = {
        {"simulate",
         {"simulate", "--design", "timing", "--n", "60", "--p", "30", "--dist", "laplace", "--tau", "0.3", "--seed",
          "11", "--reps", "2", "--nlambda", "12", "--output", D + "sim.csv", "--summary", D + "sim.json",
          "--data-out", D + "d"},
         {"sim.csv", "sim.json", "d_rep0.csv", "d_rep1.csv", "d_groups.json", "d_truth.json"}},
        {"fit",
         {"fit", "--data", D + "d_rep0.csv", "--response", "y", "--groups", D + "d_groups.json", "--tau", "0.3",
          "--alpha", "0.5", "--lambda", "0.05", "--output", D + "fit.json"},
         {"fit.json"}},
        {"path",
         {"path", "--data", D + "d_rep0.csv", "--response", "y", "--groups", D + "d_groups.json", "--tau", "0.3",
          "--alpha", "0.4", "--nlambda", "8", "--output", D + "path.csv", "--diagnostics", D + "path.json"},
         {"path.csv", "path.json"}},
        {"bench",
         {"bench", "--design", "poly", "--n", "120", "--q", "20", "--dists", "homo-normal2,hetero-chi3", "--taus",
          "0.5", "--seed", "5", "--reps", "2", "--nlambda", "10", "--alphas", "0.5", "--output", D + "bench.csv",
          "--summary", D + "bench.json"},
         {"bench.csv", "bench.json"}},
        {"verify", {"verify", "--result", D + "fit.json"}, {}},
        {"verify-path", {"verify", "--result", D + "path.json", "--coefficients", D + "path.csv"}, {}},
        {"run", {"run", "--manifest", D + "bench.json"}, {"bench.csv", "bench.json"}},
    };

    int mismatched = 0, failed = 0;
    std::string which;
    for (const auto& step : steps) {
        std::string captured[2];
        int codes[2];
        for (int rep = 0; rep < 2; ++rep) {
            std::vector<const char*> argv{"sglq"};
            for (const auto& a : step.args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            codes[rep] = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            captured[rep] = out.str() + "\x1f" + err.str();
            for (const auto& f : step.files) captured[rep] += "\x1e" + slurp(dir / f);
        }
        if (codes[0] != 0 || codes[1] != 0) {
            ++failed;
            which += " " + step.name + "(exit " + std::to_string(codes[0]) + ")";
        } else if (captured[0] != captured[1]) {
            ++mismatched;
            which += " " + step.name + "(bytes differ)";
        }
    }
    return {mismatched == 0 && failed == 0,
            fmt("%zu invocations of fit, path, simulate, bench, verify and run repeated: %d differ, %d failed%s",
                steps.size(), mismatched, failed, which.c_str())};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::function<Outcome()>> criteria = {
        oracle_equivalence, lambda_max_zeros, fixed_point, monitors, prox_calculus,
        linear_algebra,     timing_design,    selection,   determinism};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("CRITERION %d %s: %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
