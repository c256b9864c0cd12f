#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>

#include "sglq/model.hpp"

namespace sglq {

enum class LinearStrategy { Direct, Woodbury, IterativeCG };
enum class Preconditioner { None, Diagonal };

std::string_view to_string(LinearStrategy s);
LinearStrategy linear_strategy_from_string(std::string_view name);

struct CgParams {
    double tolerance = 1e-10;
    std::size_t max_iters = 5000;
    Preconditioner preconditioner = Preconditioner::Diagonal;
};

struct StrategyThresholds {
    Index n_direct = 2000;
    Index p_woodbury = 2000;
};

/// Auto-selection rule: Direct if n <= n_direct, else Woodbury if p <= p_woodbury, else CG.
LinearStrategy choose_strategy(Index n, Index p, const StrategyThresholds& thresholds = {});

/// Applies M^{-1} for M = I_n + X X^T + 1 1^T. M does not depend on the penalty,
/// so one operator serves every iteration and every lambda on a path.
class SystemOperator {
public:
    static SystemOperator build(const Matrix& X, std::optional<LinearStrategy> strategy_hint = {},
                                const CgParams& cg = {}, const StrategyThresholds& thresholds = {});

    LinearStrategy strategy() const noexcept { return strategy_; }
    Index n() const noexcept { return n_; }
    Index p() const noexcept { return p_; }
    /// True when the Woodbury factor is the p x p one, which needs centered columns.
    bool uses_centered_woodbury() const noexcept { return centered_; }
    const CgParams& cg_params() const noexcept { return cg_; }

    Vector solve(const Vector& rhs) const;
    /// M * s, used for residual checks.
    Vector apply(const Vector& s) const;

private:
    struct Impl;
    LinearStrategy strategy_ = LinearStrategy::Direct;
    Index n_ = 0;
    Index p_ = 0;
    bool centered_ = false;
    CgParams cg_;
    std::shared_ptr<const Impl> impl_;
};

/// Subtract column means; returns the centered matrix and the means.
std::pair<Matrix, Vector> center_columns(const Matrix& X);

bool columns_centered(const Matrix& X, double tol = 1e-10);

} // namespace sglq
