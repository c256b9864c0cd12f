#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sglq/model.hpp"
#include "sglq/solver.hpp"

namespace sglq {

enum class Design { Timing, PolyGroups };

/// Timing design: Normal3 (sd 3), Laplace(0, 1), T4.
/// Polynomial design: HomoNormal2 (sd 2), HeteroNormal3 (x1 * N(0, 9)), HeteroChi3 (x1 * chi2(3)).
enum class ErrorDist { Normal3, Laplace, T4, HomoNormal2, HeteroNormal3, HeteroChi3 };

std::string to_string(Design d);
std::string to_string(ErrorDist e);
Design design_from_string(const std::string& s);
ErrorDist error_dist_from_string(const std::string& s);

struct SimSpec {
    Design design = Design::Timing;
    Index n = 100;
    Index p_or_q = 500;  // p for the timing design, q (variables before expansion) for PolyGroups
    ErrorDist error_dist = ErrorDist::Normal3;
    double tau = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimData {
    QuantileProblem problem;
    Vector true_beta;
};

/// Random streams are keyed by (seed, stream, purpose): stream 0 is the training sample and
/// stream 1 the validation sample; purposes separate the design draws from the error draws.
/// The engine is std::mt19937_64 seeded through std::seed_seq; distributions come from Boost.Random.
SimData gen_timing_design(const SimSpec& spec, std::uint64_t stream = 0);
SimData gen_poly_design(const SimSpec& spec, std::uint64_t stream = 0);
SimData generate(const SimSpec& spec, std::uint64_t stream = 0);

/// Tau-quantile of the raw error draw; generators subtract it so that beta* is the
/// conditional tau-quantile surface.
double error_quantile(ErrorDist dist, double tau);

struct MetricReport {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t gfp_count = 0;
    double gfp_rate = 0.0;
    std::size_t gfn_count = 0;
    double gfn_rate = 0.0;
    double wall_time_s = 0.0;
};

/// MSE and MAE average over all p coefficients. GFP counts truly zero coefficients estimated
/// nonzero, GFN truly nonzero ones estimated exactly zero; rates divide by the respective totals.
MetricReport compute_metrics(const Vector& beta_hat, const Vector& beta_true);

struct TuningConfig {
    std::size_t n_lambda = 50;
    double min_ratio = 0.0;              // 0 selects default_min_ratio(n, p)
    std::vector<double> alphas{1.0};
    bool adaptive = false;               // refit with weights from the tuned pilot fit
    double adaptive_power = 1.0;
    double adaptive_floor = 1e-3;
    bool standardize = true;             // fit on centered, unit-variance columns

    void validate() const;
};

struct TunedFit {
    FittedModel model;
    double alpha = 0.0;
    double lambda_common = 0.0;
    double validation_loss = 0.0;
    Vector d;
    Vector w;
    double wall_time_s = 0.0;  // one cold-start solve at the selected penalty
};

/// Mean check loss of a fitted model on another sample.
double prediction_loss(const QuantileProblem& sample, const FittedModel& model);

/// Path over a log grid for each alpha, selection by validation check loss, then a timed
/// cold-start refit at the winner. With `adaptive`, a second round runs with adaptive weights
/// built from the first round's coefficients. With `standardize`, the penalty acts on the
/// coefficients of the standardized design and the returned model is mapped back to the
/// original columns (zeros are preserved exactly).
TunedFit tune_by_validation(const QuantileProblem& train, const QuantileProblem& valid,
                            const TuningConfig& tuning, const SolverConfig& config);

struct BenchmarkConfig {
    SolverConfig solver;
    TuningConfig tuning;
    std::size_t replications = 1;
    unsigned threads = 0;  // 0 reads SGLQ_THREADS, falling back to 1
};

struct BenchmarkRow {
    SimSpec spec;          // seed is the replication's own seed
    std::size_t replication = 0;
    MetricReport metrics;
    double alpha = 0.0;
    double lambda_common = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::string error;     // empty when the row succeeded
};

/// Replication r of a spec uses seed spec.seed + r.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t replication);

/// One row per (spec, replication), in that order regardless of the thread count.
std::vector<BenchmarkRow> run_benchmark(const std::vector<SimSpec>& specs,
                                        const BenchmarkConfig& config);

unsigned threads_from_env();

/// CSV with one header row. Wall time is written only when `with_timing` is set, so that
/// the default output is byte-reproducible.
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows, bool with_timing);

/// JSON summary grouped by scenario: medians and means of the metrics.
void write_benchmark_json(std::ostream& out, const std::vector<BenchmarkRow>& rows,
                          bool with_timing);

double median(std::vector<double> values);

} // namespace sglq
