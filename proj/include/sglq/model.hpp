#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sglq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Non-overlapping partition of the columns {0..p-1} into g groups.
class GroupPartition {
public:
    GroupPartition() = default;

    /// Build from a per-column label; labels must be 0..g-1, each used at least once.
    static GroupPartition from_labels(std::span<const int> group_of);
    /// Contiguous groups of the given sizes, in column order.
    static GroupPartition from_sizes(std::span<const std::size_t> sizes);
    static GroupPartition singletons(std::size_t p);

    std::size_t p() const noexcept { return group_of_.size(); }
    std::size_t count() const noexcept { return members_.size(); }
    int group_of(std::size_t column) const { return group_of_.at(column); }
    std::size_t size(std::size_t group) const { return members_.at(group).size(); }
    std::span<const Index> members(std::size_t group) const { return members_.at(group); }
    std::vector<std::size_t> sizes() const;

    bool operator==(const GroupPartition&) const = default;

private:
    std::vector<int> group_of_;
    std::vector<std::vector<Index>> members_;
};

/// Design, response, quantile level and group partition. Validated on construction.
class QuantileProblem {
public:
    QuantileProblem(Matrix X, Vector y, double tau, GroupPartition groups);

    const Matrix& X() const noexcept { return X_; }
    const Vector& y() const noexcept { return y_; }
    double tau() const noexcept { return tau_; }
    const GroupPartition& groups() const noexcept { return groups_; }
    Index n() const noexcept { return X_.rows(); }
    Index p() const noexcept { return X_.cols(); }

private:
    Matrix X_;
    Vector y_;
    double tau_;
    GroupPartition groups_;
};

/// lambda * ||d .* beta||_1 + mu * sum_l w_l ||beta_{G_l}||_2
struct PenaltySpec {
    double lambda = 0.0;
    double mu = 0.0;
    Vector d;
    Vector w;

    /// d_j = 1 and w_l = sqrt(|G_l|).
    static PenaltySpec with_default_weights(const GroupPartition& groups, double lambda, double mu);
    void validate(const GroupPartition& groups) const;
};

struct ConvergenceReport {
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double eps_pri = 0.0;
    double eps_dual = 0.0;
    double kkt_residual = 0.0;
    bool converged = false;
    double objective = 0.0;
};

struct FittedModel {
    double beta0 = 0.0;
    Vector beta;
    ConvergenceReport diagnostics;
};

/// Mean check loss (1/n) sum rho_tau(u_i), rho_tau(u) = u (tau - 1{u <= 0}).
double check_loss(const Vector& u, double tau);

double penalty_value(const PenaltySpec& penalty, const GroupPartition& groups, const Vector& beta);

double primal_objective(const QuantileProblem& problem, const PenaltySpec& penalty, double beta0,
                        const Vector& beta);

/// lambda = (1 - alpha) * lambda_common, mu = alpha * lambda_common.
PenaltySpec penalty_from_alpha(double alpha, double lambda_common, Vector d, Vector w);

/// Type-1 sample quantile: the ceil(n * tau)-th order statistic (at least the first).
double sample_quantile(const Vector& values, double tau);

} // namespace sglq
