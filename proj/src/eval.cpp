#include "sglq/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/laplace_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include "json.hpp"

#include "sglq/errors.hpp"
#include "sglq/path.hpp"

namespace sglq {

namespace {

enum class Purpose : std::uint32_t { Design = 1, Error = 2 };

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, Purpose purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

double raw_error(ErrorDist dist, std::mt19937_64& rng)
{
    switch (dist) {
    case ErrorDist::Normal3:
    case ErrorDist::HeteroNormal3:
        return boost::random::normal_distribution<double>(0.0, 3.0)(rng);
    case ErrorDist::Laplace:
        return boost::random::laplace_distribution<double>(0.0, 1.0)(rng);
    case ErrorDist::T4:
        return boost::random::student_t_distribution<double>(4.0)(rng);
    case ErrorDist::HomoNormal2:
        return boost::random::normal_distribution<double>(0.0, 2.0)(rng);
    case ErrorDist::HeteroChi3:
        return boost::random::chi_squared_distribution<double>(3.0)(rng);
    }
    throw InvalidInput("unknown error distribution");
}

bool is_timing_dist(ErrorDist e)
{
    return e == ErrorDist::Normal3 || e == ErrorDist::Laplace || e == ErrorDist::T4;
}

double std_normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace

std::string to_string(Design d)
{
    return d == Design::Timing ? "timing" : "poly";
}

std::string to_string(ErrorDist e)
{
    switch (e) {
    case ErrorDist::Normal3: return "normal3";
    case ErrorDist::Laplace: return "laplace";
    case ErrorDist::T4: return "t4";
    case ErrorDist::HomoNormal2: return "homo-normal2";
    case ErrorDist::HeteroNormal3: return "hetero-normal3";
    case ErrorDist::HeteroChi3: return "hetero-chi3";
    }
    return "?";
}

Design design_from_string(const std::string& s)
{
    if (s == "timing") return Design::Timing;
    if (s == "poly") return Design::PolyGroups;
    throw InvalidInput("unknown design '" + s + "' (accepted: timing, poly)");
}

ErrorDist error_dist_from_string(const std::string& s)
{
    for (ErrorDist e : {ErrorDist::Normal3, ErrorDist::Laplace, ErrorDist::T4, ErrorDist::HomoNormal2,
                        ErrorDist::HeteroNormal3, ErrorDist::HeteroChi3}) {
        if (s == to_string(e)) return e;
    }
    throw InvalidInput("unknown error distribution '" + s +
                       "' (accepted: normal3, laplace, t4, homo-normal2, hetero-normal3, hetero-chi3)");
}

void SimSpec::validate() const
{
    if (n < 1) throw InvalidInput("n must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
    if (design == Design::Timing) {
        if (p_or_q < 13) throw InvalidInput("timing design needs p >= 13");
        if (!is_timing_dist(error_dist)) {
            throw InvalidInput("timing design accepts normal3, laplace or t4 errors");
        }
    } else {
        if (p_or_q < 20) throw InvalidInput("polynomial design needs q >= 20");
        if (is_timing_dist(error_dist)) {
            throw InvalidInput("polynomial design accepts homo-normal2, hetero-normal3 or hetero-chi3 errors");
        }
    }
}

double error_quantile(ErrorDist dist, double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
    namespace bm = boost::math;
    switch (dist) {
    case ErrorDist::Normal3:
    case ErrorDist::HeteroNormal3:
        return bm::quantile(bm::normal_distribution<double>(0.0, 3.0), tau);
    case ErrorDist::Laplace:
        return bm::quantile(bm::laplace_distribution<double>(0.0, 1.0), tau);
    case ErrorDist::T4:
        return bm::quantile(bm::students_t_distribution<double>(4.0), tau);
    case ErrorDist::HomoNormal2:
        return bm::quantile(bm::normal_distribution<double>(0.0, 2.0), tau);
    case ErrorDist::HeteroChi3:
        return bm::quantile(bm::chi_squared_distribution<double>(3.0), tau);
    }
    throw InvalidInput("unknown error distribution");
}

SimData gen_timing_design(const SimSpec& spec, std::uint64_t stream)
{
    if (spec.design != Design::Timing) throw InvalidInput("spec is not a timing design");
    spec.validate();
    const Index n = spec.n;
    const Index p = spec.p_or_q;
    const Index nz = std::max<Index>(3, p - 12);

    std::mt19937_64 rng = make_engine(spec.seed, stream, Purpose::Design);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    boost::random::normal_distribution<double> jitter(0.0, 0.1);

    Matrix Z(n, nz);
    for (Index k = 0; k < nz; ++k)
        for (Index i = 0; i < n; ++i) Z(i, k) = normal(rng);
    Matrix X(n, p);
    for (Index j = 0; j < 12; ++j)
        for (Index i = 0; i < n; ++i) X(i, j) = Z(i, j / 4) + jitter(rng);
    for (Index j = 12; j < p; ++j) X.col(j) = Z.col(j - 12);

    Vector beta = Vector::Zero(p);
    beta.head(4).setConstant(3.0);
    beta.segment(4, 4).setConstant(2.0);
    beta.segment(8, 4).setConstant(-1.0);

    std::mt19937_64 erng = make_engine(spec.seed, stream, Purpose::Error);
    const double shift = error_quantile(spec.error_dist, spec.tau);
    Vector y = X * beta;
    for (Index i = 0; i < n; ++i) y[i] += raw_error(spec.error_dist, erng) - shift;

    std::vector<std::size_t> sizes{4, 4, 4};
    sizes.resize(static_cast<std::size_t>(p - 9), 1);
    return SimData{QuantileProblem(std::move(X), std::move(y), spec.tau,
                                   GroupPartition::from_sizes(sizes)),
                   std::move(beta)};
}

SimData gen_poly_design(const SimSpec& spec, std::uint64_t stream)
{
    if (spec.design != Design::PolyGroups) throw InvalidInput("spec is not a polynomial design");
    spec.validate();
    const Index n = spec.n;
    const Index q = spec.p_or_q;

    std::mt19937_64 rng = make_engine(spec.seed, stream, Purpose::Design);
    boost::random::normal_distribution<double> normal(0.0, 1.0);

    // AR(1) recursion gives corr(X_j, X_k) = 0.5^|j-k| with unit variances.
    Matrix Xt(n, q);
    const double innov = std::sqrt(0.75);
    for (Index i = 0; i < n; ++i) {
        Xt(i, 0) = normal(rng);
        for (Index j = 1; j < q; ++j) Xt(i, j) = 0.5 * Xt(i, j - 1) + innov * normal(rng);
    }
    for (Index i = 0; i < n; ++i) Xt(i, 0) = std_normal_cdf(Xt(i, 0));

    Matrix X(n, 3 * q);
    for (Index j = 0; j < q; ++j) {
        X.col(3 * j) = Xt.col(j);
        X.col(3 * j + 1) = Xt.col(j).array().square().matrix();
        X.col(3 * j + 2) = Xt.col(j).array().cube().matrix();
    }

    Vector beta = Vector::Zero(3 * q);
    beta.segment(3 * 5, 3) << 1.0, 1.0, 1.0;
    beta.segment(3 * 11, 3) << 1.0 / 3.0, -1.0, 2.0 / 3.0;
    beta.segment(3 * 14, 3) << 0.5, -1.0, 0.5;
    beta.segment(3 * 19, 3) << 1.0, 1.0, 1.0;

    std::mt19937_64 erng = make_engine(spec.seed, stream, Purpose::Error);
    const double shift = error_quantile(spec.error_dist, spec.tau);
    Vector y = X * beta;
    for (Index i = 0; i < n; ++i) {
        const double x1 = Xt(i, 0);
        double eps = raw_error(spec.error_dist, erng) - shift;
        if (spec.error_dist != ErrorDist::HomoNormal2) eps *= x1;
        y[i] += x1 * eps;
    }

    std::vector<std::size_t> sizes(static_cast<std::size_t>(q), 3);
    return SimData{QuantileProblem(std::move(X), std::move(y), spec.tau,
                                   GroupPartition::from_sizes(sizes)),
                   std::move(beta)};
}

SimData generate(const SimSpec& spec, std::uint64_t stream)
{
    return spec.design == Design::Timing ? gen_timing_design(spec, stream)
                                         : gen_poly_design(spec, stream);
}

MetricReport compute_metrics(const Vector& beta_hat, const Vector& beta_true)
{
    if (beta_hat.size() != beta_true.size()) throw InvalidInput("coefficient lengths differ");
    if (beta_hat.size() == 0) throw InvalidInput("empty coefficient vectors");
    const auto p = static_cast<double>(beta_hat.size());
    MetricReport m;
    const Vector diff = beta_hat - beta_true;
    m.mse = diff.squaredNorm() / p;
    m.mae = diff.lpNorm<1>() / p;
    std::size_t zeros = 0;
    std::size_t nonzeros = 0;
    for (Index j = 0; j < beta_hat.size(); ++j) {
        if (beta_true[j] == 0.0) {
            ++zeros;
            if (beta_hat[j] != 0.0) ++m.gfp_count;
        } else {
            ++nonzeros;
            if (beta_hat[j] == 0.0) ++m.gfn_count;
        }
    }
    m.gfp_rate = zeros > 0 ? static_cast<double>(m.gfp_count) / static_cast<double>(zeros) : 0.0;
    m.gfn_rate = nonzeros > 0 ? static_cast<double>(m.gfn_count) / static_cast<double>(nonzeros) : 0.0;
    return m;
}

void TuningConfig::validate() const
{
    if (n_lambda < 2) throw InvalidInput("the lambda candidate grid needs at least 2 points");
    if (min_ratio != 0.0 && !(min_ratio > 0.0 && min_ratio < 1.0)) {
        throw InvalidInput("min_ratio must lie in (0, 1)");
    }
    if (alphas.empty()) throw InvalidInput("no alpha candidates");
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput("alpha candidates must lie in [0, 1]");
    }
    if (adaptive && !(adaptive_power > 0.0 && adaptive_floor > 0.0)) {
        throw InvalidInput("adaptive power and floor must be positive");
    }
}

double prediction_loss(const QuantileProblem& sample, const FittedModel& model)
{
    if (model.beta.size() != sample.p()) throw InvalidInput("model does not match the sample");
    Vector r = sample.y() - sample.X() * model.beta;
    r.array() -= model.beta0;
    return check_loss(r, sample.tau());
}

namespace {

struct Selection {
    double alpha = 0.0;
    double lambda = 0.0;
    double loss = std::numeric_limits<double>::infinity();
    Vector beta;  // on the fitting scale
};

// Column means and scales of the fitting design; identity when not standardizing.
struct ColumnScaling {
    Vector means;
    Vector scales;

    FittedModel to_original(const FittedModel& m) const
    {
        FittedModel out = m;
        out.beta = m.beta.cwiseQuotient(scales);
        out.beta0 = m.beta0 - means.dot(out.beta);
        return out;
    }
};

QuantileProblem standardized(const QuantileProblem& problem, ColumnScaling& scaling)
{
    const auto n = static_cast<double>(problem.n());
    Matrix X = problem.X();
    scaling.means = X.colwise().mean().transpose();
    X.rowwise() -= scaling.means.transpose();
    scaling.scales = (X.colwise().norm().array() / std::sqrt(n)).matrix().transpose();
    for (Index j = 0; j < X.cols(); ++j) {
        if (!(scaling.scales[j] > 0.0)) scaling.scales[j] = 1.0;
        X.col(j) /= scaling.scales[j];
    }
    return QuantileProblem(std::move(X), problem.y(), problem.tau(), problem.groups());
}

Selection select_on_grid(const QuantileProblem& fit_problem, const ColumnScaling& scaling,
                         const QuantileProblem& valid, const TuningConfig& tuning,
                         const SolverConfig& config, const Vector& d, const Vector& w)
{
    const double ratio = tuning.min_ratio > 0.0 ? tuning.min_ratio
                                                : default_min_ratio(fit_problem.n(), fit_problem.p());
    Selection best;
    for (double alpha : tuning.alphas) {
        const double lmax = lambda_max(fit_problem, alpha, d, w);
        const Vector grid = lambda_grid(lmax, tuning.n_lambda, ratio);
        const SolutionPath path = solve_path(fit_problem, alpha, d, w, grid, config);
        for (std::size_t k = 0; k < path.models.size(); ++k) {
            const double loss = prediction_loss(valid, scaling.to_original(path.models[k]));
            if (loss < best.loss) {
                best.loss = loss;
                best.alpha = alpha;
                best.lambda = grid[static_cast<Index>(k)];
                best.beta = path.models[k].beta;
            }
        }
    }
    return best;
}

} // namespace

TunedFit tune_by_validation(const QuantileProblem& train, const QuantileProblem& valid,
                            const TuningConfig& tuning, const SolverConfig& config)
{
    tuning.validate();
    if (train.p() != valid.p() || train.tau() != valid.tau()) {
        throw InvalidInput("training and validation samples differ in shape or tau");
    }
    ColumnScaling scaling{Vector::Zero(train.p()), Vector::Ones(train.p())};
    const QuantileProblem fit_problem = tuning.standardize ? standardized(train, scaling) : train;

    PenaltySpec defaults = PenaltySpec::with_default_weights(train.groups(), 0.0, 0.0);
    Vector d = defaults.d;
    Vector w = defaults.w;

    Selection sel = select_on_grid(fit_problem, scaling, valid, tuning, config, d, w);
    if (tuning.adaptive) {
        std::tie(d, w) = adaptive_weights(sel.beta, train.groups(), tuning.adaptive_power,
                                          tuning.adaptive_floor);
        sel = select_on_grid(fit_problem, scaling, valid, tuning, config, d, w);
    }

    TunedFit out;
    out.alpha = sel.alpha;
    out.lambda_common = sel.lambda;
    out.d = d;
    out.w = w;
    const PenaltySpec pen = penalty_from_alpha(sel.alpha, sel.lambda, d, w);
    const auto start = std::chrono::steady_clock::now();
    SolveResult res = sgl_dadmm_solve(fit_problem, pen, config);
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.model = scaling.to_original(res.model);
    out.validation_loss = prediction_loss(valid, out.model);
    return out;
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t replication)
{
    return base_seed + static_cast<std::uint64_t>(replication);
}

unsigned threads_from_env()
{
    const char* env = std::getenv("SGLQ_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) return 1;
    return static_cast<unsigned>(std::min<long>(v, 256));
}

std::vector<BenchmarkRow> run_benchmark(const std::vector<SimSpec>& specs, const BenchmarkConfig& config)
{
    if (specs.empty()) throw InvalidInput("no scenarios to run");
    if (config.replications < 1) throw InvalidInput("replications must be >= 1");
    config.tuning.validate();
    config.solver.validate();
    for (const SimSpec& s : specs) s.validate();

    std::vector<BenchmarkRow> rows;
    for (const SimSpec& s : specs) {
        for (std::size_t r = 0; r < config.replications; ++r) {
            BenchmarkRow row;
            row.spec = s;
            row.spec.seed = replication_seed(s.seed, r);
            row.replication = r;
            rows.push_back(row);
        }
    }

    auto run_row = [&](BenchmarkRow& row) {
        try {
            const SimData train = generate(row.spec, 0);
            const SimData valid = generate(row.spec, 1);
            const TunedFit fit = tune_by_validation(train.problem, valid.problem, config.tuning, config.solver);
            row.metrics = compute_metrics(fit.model.beta, train.true_beta);
            row.metrics.wall_time_s = fit.wall_time_s;
            row.alpha = fit.alpha;
            row.lambda_common = fit.lambda_common;
            row.iterations = fit.model.diagnostics.iterations;
            row.converged = fit.model.diagnostics.converged;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };

    const unsigned threads = std::max(1u, config.threads > 0 ? config.threads : threads_from_env());
    if (threads == 1 || rows.size() == 1) {
        for (BenchmarkRow& row : rows) run_row(row);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) run_row(rows[i]);
        });
    }
    for (std::thread& th : pool) th.join();
    return rows;
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows, bool with_timing)
{
    out << "design,error_dist,n,p_or_q,tau,seed,replication,alpha,lambda,mse,mae,gfp_count,gfp_rate,"
           "gfn_count,gfn_rate,iterations,converged,status";
    if (with_timing) out << ",wall_time_s";
    out << "\r\n";
    for (const BenchmarkRow& r : rows) {
        out << to_string(r.spec.design) << ',' << to_string(r.spec.error_dist) << ',' << r.spec.n << ','
            << r.spec.p_or_q << ',' << fmt(r.spec.tau) << ',' << r.spec.seed << ',' << r.replication
            << ',' << fmt(r.alpha) << ',' << fmt(r.lambda_common) << ',' << fmt(r.metrics.mse) << ','
            << fmt(r.metrics.mae) << ',' << r.metrics.gfp_count << ',' << fmt(r.metrics.gfp_rate) << ','
            << r.metrics.gfn_count << ',' << fmt(r.metrics.gfn_rate) << ',' << r.iterations << ','
            << (r.converged ? "true" : "false") << ',' << csv_field(r.error.empty() ? "ok" : r.error);
        if (with_timing) out << ',' << fmt(r.metrics.wall_time_s);
        out << "\r\n";
    }
}

double median(std::vector<double> values)
{
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

void write_benchmark_json(std::ostream& out, const std::vector<BenchmarkRow>& rows, bool with_timing)
{
    using nlohmann::ordered_json;
    struct Acc {
        const BenchmarkRow* first = nullptr;
        std::size_t failed = 0;
        std::vector<double> mse, mae, gfp, gfn, time;
    };
    std::vector<std::string> order;
    std::map<std::string, Acc> groups;
    for (const BenchmarkRow& r : rows) {
        const std::string key = to_string(r.spec.design) + "|" + to_string(r.spec.error_dist) + "|" +
                                std::to_string(r.spec.n) + "|" + std::to_string(r.spec.p_or_q) + "|" +
                                fmt(r.spec.tau) + "|" + std::to_string(r.spec.seed - r.replication);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        Acc& a = it->second;
        if (a.first == nullptr) a.first = &r;
        if (!r.error.empty()) {
            ++a.failed;
            continue;
        }
        a.mse.push_back(r.metrics.mse);
        a.mae.push_back(r.metrics.mae);
        a.gfp.push_back(r.metrics.gfp_rate);
        a.gfn.push_back(r.metrics.gfn_rate);
        a.time.push_back(r.metrics.wall_time_s);
    }
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };

    ordered_json doc;
    doc["format_version"] = "1";
    ordered_json scenarios = ordered_json::array();
    for (const std::string& key : order) {
        const Acc& a = groups.at(key);
        const SimSpec& s = a.first->spec;
        ordered_json j;
        j["design"] = to_string(s.design);
        j["error_dist"] = to_string(s.error_dist);
        j["n"] = s.n;
        j["p_or_q"] = s.p_or_q;
        j["tau"] = s.tau;
        j["base_seed"] = s.seed - a.first->replication;
        j["replications"] = a.mse.size() + a.failed;
        j["failed"] = a.failed;
        j["median_mse"] = num(median(a.mse));
        j["mean_mse"] = num(mean(a.mse));
        j["median_mae"] = num(median(a.mae));
        j["mean_mae"] = num(mean(a.mae));
        j["mean_gfp_rate"] = num(mean(a.gfp));
        j["mean_gfn_rate"] = num(mean(a.gfn));
        if (with_timing) j["median_wall_time_s"] = num(median(a.time));
        scenarios.push_back(j);
    }
    doc["scenarios"] = scenarios;
    out << doc.dump(2) << "\n";
}

} // namespace sglq
