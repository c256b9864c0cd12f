#pragma once

// Reference computations used only by the tests. They deliberately avoid the library's
// code paths (plain loops over std::vector) so that agreement is evidence of correctness.

#include <cstdint>
#include <random>
#include <vector>

#include "sglq/model.hpp"
#include "sglq/solver.hpp"

namespace sglq_test {

struct PlainInstance {
    int n = 0;
    int p = 0;
    std::vector<double> X;  // row-major n x p
    std::vector<double> y;
    double tau = 0.5;
    std::vector<std::vector<int>> groups;
    double lambda = 0.0;
    double mu = 0.0;
    std::vector<double> d;
    std::vector<double> w;

    double x(int i, int j) const { return X[static_cast<std::size_t>(i * p + j)]; }
};

sglq::QuantileProblem to_problem(const PlainInstance& inst);
sglq::PenaltySpec to_penalty(const PlainInstance& inst);
PlainInstance from_problem(const sglq::QuantileProblem& problem, const sglq::PenaltySpec& penalty);

/// Objective written out term by term from its definition.
double straight_objective(const PlainInstance& inst, double beta0, const std::vector<double>& beta);

struct OracleSolution {
    double beta0 = 0.0;
    std::vector<double> beta;
    double objective = 0.0;
};

/// Subgradient descent over (beta0, beta) with normalized steps and a non-increasing,
/// piecewise-geometric step schedule; every stage restarts from the best point seen.
OracleSolution subgradient_oracle(const PlainInstance& inst, long iterations = 1000000);

/// Quantile regression without penalty by enumerating basic solutions: every
/// (p+1)-subset of rows that determines an interpolating fit. Exact for small n.
OracleSolution lp_vertex_oracle(const PlainInstance& inst);

/// argmin_u scale*h(u) + 0.5||u - a||^2 on a lattice of the given spacing (coarse to fine),
/// with thresholds already multiplied by the scale.
std::vector<double> grid_prox_oracle(const std::vector<double>& a, const std::vector<double>& t_elem,
                                     const std::vector<double>& t_group,
                                     const std::vector<std::vector<int>>& groups, double spacing);

double prox_objective(const std::vector<double>& u, const std::vector<double>& a,
                      const std::vector<double>& t_elem, const std::vector<double>& t_group,
                      const std::vector<std::vector<int>>& groups);

/// Random small instance with Gaussian design and a sparse linear signal.
PlainInstance random_instance(std::mt19937_64& rng, int n, int p, int n_groups, double tau,
                              double lambda, double mu);

/// A problem together with an exact primal-dual optimum built by construction: pick the
/// optimum first, then choose X and y so that every optimality condition holds.
struct PlantedInstance {
    PlainInstance plain;
    sglq::SolverState optimum;
};

PlantedInstance planted_instance(std::mt19937_64& rng, int n, int p, int n_groups, double tau,
                                 double lambda, double mu);

/// Instance drawn from raw std::mt19937_64 output only (no library distributions), so it is
/// identical on every platform: X and y uniform on (-1, 1) with a linear signal in y.
PlainInstance portable_instance(std::uint64_t seed, int n, int p, int n_groups, double tau,
                                double lambda, double mu);

struct PlainState {
    std::vector<double> theta, u, v, beta, z;
    double beta0 = 0.0;
};

/// One dual ADMM pass written with loops and Gaussian elimination. Penalty thresholds are
/// varpi * n * lambda * d and varpi * n * mu * w because the iteration runs on the summed loss.
PlainState reference_iterate(const PlainInstance& inst, const PlainState& s, double varpi, double gamma);

/// The fixed set of small instances used for convergence monitoring.
std::vector<PlainInstance> desk_instances();

/// Sort-based type-1 tau quantile and the full interval of intercept-only minimizers.
double sorted_quantile(std::vector<double> values, double tau);
std::pair<double, double> quantile_minimizer_interval(std::vector<double> values, double tau);

} // namespace sglq_test
