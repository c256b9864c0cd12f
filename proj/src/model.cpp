#include "sglq/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sglq/errors.hpp"

namespace sglq {

GroupPartition GroupPartition::from_labels(std::span<const int> group_of)
{
    if (group_of.empty()) throw InvalidInput("group partition must cover at least one column");
    const int max_label = *std::max_element(group_of.begin(), group_of.end());
    GroupPartition out;
    out.group_of_.assign(group_of.begin(), group_of.end());
    out.members_.resize(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t j = 0; j < group_of.size(); ++j) {
        if (group_of[j] < 0) {
            throw InvalidInput("negative group label at column " + std::to_string(j));
        }
        out.members_[static_cast<std::size_t>(group_of[j])].push_back(static_cast<Index>(j));
    }
    for (std::size_t l = 0; l < out.members_.size(); ++l) {
        if (out.members_[l].empty()) {
            throw InvalidInput("group label " + std::to_string(l) + " has no columns");
        }
    }
    return out;
}

GroupPartition GroupPartition::from_sizes(std::span<const std::size_t> sizes)
{
    std::vector<int> labels;
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        if (sizes[l] == 0) throw InvalidInput("group sizes must be positive");
        labels.insert(labels.end(), sizes[l], static_cast<int>(l));
    }
    return from_labels(labels);
}

GroupPartition GroupPartition::singletons(std::size_t p)
{
    std::vector<int> labels(p);
    for (std::size_t j = 0; j < p; ++j) labels[j] = static_cast<int>(j);
    return from_labels(labels);
}

std::vector<std::size_t> GroupPartition::sizes() const
{
    std::vector<std::size_t> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m.size());
    return out;
}

QuantileProblem::QuantileProblem(Matrix X, Vector y, double tau, GroupPartition groups)
    : X_(std::move(X)), y_(std::move(y)), tau_(tau), groups_(std::move(groups))
{
    if (!(tau_ > 0.0 && tau_ < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
    if (X_.rows() < 1 || X_.cols() < 1) throw InvalidInput("design must have n >= 1 and p >= 1");
    if (X_.rows() != y_.size()) {
        throw InvalidInput("design has " + std::to_string(X_.rows()) + " rows but response has " +
                           std::to_string(y_.size()) + " entries");
    }
    if (groups_.p() != static_cast<std::size_t>(X_.cols())) {
        throw InvalidInput("group partition covers " + std::to_string(groups_.p()) +
                           " columns, design has " + std::to_string(X_.cols()));
    }
    if (!X_.allFinite()) throw InvalidInput("design contains non-finite values");
    if (!y_.allFinite()) throw InvalidInput("response contains non-finite values");
}

PenaltySpec PenaltySpec::with_default_weights(const GroupPartition& groups, double lambda, double mu)
{
    PenaltySpec pen;
    pen.lambda = lambda;
    pen.mu = mu;
    pen.d = Vector::Ones(static_cast<Index>(groups.p()));
    pen.w.resize(static_cast<Index>(groups.count()));
    for (std::size_t l = 0; l < groups.count(); ++l) {
        pen.w[static_cast<Index>(l)] = std::sqrt(static_cast<double>(groups.size(l)));
    }
    return pen;
}

void PenaltySpec::validate(const GroupPartition& groups) const
{
    if (!(std::isfinite(lambda) && lambda >= 0.0)) throw InvalidInput("lambda must be finite and >= 0");
    if (!(std::isfinite(mu) && mu >= 0.0)) throw InvalidInput("mu must be finite and >= 0");
    if (static_cast<std::size_t>(d.size()) != groups.p()) {
        throw InvalidInput("element weights d must have length p");
    }
    if (static_cast<std::size_t>(w.size()) != groups.count()) {
        throw InvalidInput("group weights w must have length g");
    }
    if (!d.allFinite() || (d.array() < 0.0).any()) {
        throw InvalidInput("element weights must be finite and nonnegative");
    }
    if (!w.allFinite() || (w.array() < 0.0).any()) {
        throw InvalidInput("group weights must be finite and nonnegative");
    }
}

double check_loss(const Vector& u, double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
    if (u.size() == 0) throw InvalidInput("check_loss needs a nonempty residual vector");
    if (!u.allFinite()) throw InvalidInput("check_loss received non-finite residuals");
    double total = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
        const double r = u[i];
        total += r > 0.0 ? tau * r : (tau - 1.0) * r;
    }
    return total / static_cast<double>(u.size());
}

double penalty_value(const PenaltySpec& penalty, const GroupPartition& groups, const Vector& beta)
{
    if (static_cast<std::size_t>(beta.size()) != groups.p()) {
        throw InvalidInput("coefficient vector length does not match the partition");
    }
    double l1 = 0.0;
    if (penalty.lambda != 0.0) l1 = penalty.d.cwiseProduct(beta.cwiseAbs()).sum();
    double group = 0.0;
    if (penalty.mu != 0.0) {
        for (std::size_t l = 0; l < groups.count(); ++l) {
            double sq = 0.0;
            for (Index j : groups.members(l)) sq += beta[j] * beta[j];
            group += penalty.w[static_cast<Index>(l)] * std::sqrt(sq);
        }
    }
    return penalty.lambda * l1 + penalty.mu * group;
}

double primal_objective(const QuantileProblem& problem, const PenaltySpec& penalty, double beta0,
                        const Vector& beta)
{
    if (beta.size() != problem.p()) throw InvalidInput("beta length must equal p");
    penalty.validate(problem.groups());
    const Vector residual =
        problem.y() - problem.X() * beta - Vector::Constant(problem.n(), beta0);
    return check_loss(residual, problem.tau()) + penalty_value(penalty, problem.groups(), beta);
}

PenaltySpec penalty_from_alpha(double alpha, double lambda_common, Vector d, Vector w)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
    if (!(std::isfinite(lambda_common) && lambda_common >= 0.0)) {
        throw InvalidInput("lambda_common must be finite and >= 0");
    }
    PenaltySpec pen;
    pen.lambda = (1.0 - alpha) * lambda_common;
    pen.mu = alpha * lambda_common;
    pen.d = std::move(d);
    pen.w = std::move(w);
    return pen;
}

double sample_quantile(const Vector& values, double tau)
{
    if (values.size() == 0) throw InvalidInput("sample_quantile of an empty sample");
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
    std::vector<double> sorted(values.data(), values.data() + values.size());
    const auto n = static_cast<double>(sorted.size());
    // ceil(n * tau) with a guard against n * tau landing a hair above an integer.
    auto k = static_cast<std::size_t>(std::ceil(n * tau - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    return sorted[k - 1];
}

} // namespace sglq
