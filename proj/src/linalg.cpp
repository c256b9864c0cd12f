#include "sglq/linalg.hpp"

#include <cmath>
#include <string>

#include "sglq/errors.hpp"

namespace sglq {

std::string_view to_string(LinearStrategy s)
{
    switch (s) {
    case LinearStrategy::Direct: return "direct";
    case LinearStrategy::Woodbury: return "woodbury";
    case LinearStrategy::IterativeCG: return "cg";
    }
    return "unknown";
}

LinearStrategy linear_strategy_from_string(std::string_view name)
{
    if (name == "direct") return LinearStrategy::Direct;
    if (name == "woodbury") return LinearStrategy::Woodbury;
    if (name == "cg") return LinearStrategy::IterativeCG;
    throw InvalidInput("unknown linear strategy '" + std::string(name) +
                       "' (accepted: direct, woodbury, cg)");
}

LinearStrategy choose_strategy(Index n, Index p, const StrategyThresholds& thresholds)
{
    if (n <= thresholds.n_direct) return LinearStrategy::Direct;
    if (p <= thresholds.p_woodbury) return LinearStrategy::Woodbury;
    return LinearStrategy::IterativeCG;
}

struct SystemOperator::Impl {
    Matrix X;
    // Direct: LLT of M. Woodbury: LLT of I_p + X^T X (centered) or I + U^T U with U = [X 1].
    Eigen::LLT<Matrix> factor;
    Vector diag_inv;
};

SystemOperator SystemOperator::build(const Matrix& X, std::optional<LinearStrategy> strategy_hint,
                                     const CgParams& cg, const StrategyThresholds& thresholds)
{
    if (X.rows() < 1 || X.cols() < 1) throw InvalidInput("design must be nonempty");
    if (!X.allFinite()) throw InvalidInput("design contains non-finite values");
    if (!(cg.tolerance > 0.0) || cg.max_iters == 0) throw InvalidInput("invalid CG parameters");

    SystemOperator op;
    op.n_ = X.rows();
    op.p_ = X.cols();
    op.cg_ = cg;
    op.strategy_ = strategy_hint.value_or(choose_strategy(op.n_, op.p_, thresholds));

    auto impl = std::make_shared<Impl>();
    impl->X = X;
    const Index n = op.n_;
    const Index p = op.p_;

    switch (op.strategy_) {
    case LinearStrategy::Direct: {
        Matrix M = Matrix::Identity(n, n);
        M.selfadjointView<Eigen::Lower>().rankUpdate(X);
        M.array() += 1.0;
        impl->factor.compute(M);
        break;
    }
    case LinearStrategy::Woodbury: {
        op.centered_ = columns_centered(X);
        if (op.centered_) {
            Matrix K = Matrix::Identity(p, p);
            K.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
            impl->factor.compute(K);
        } else {
            // The p x p identity needs 1^T X = 0; fold the ones column into the low-rank part.
            Matrix U(n, p + 1);
            U.leftCols(p) = X;
            U.col(p).setOnes();
            Matrix K = Matrix::Identity(p + 1, p + 1);
            K.selfadjointView<Eigen::Lower>().rankUpdate(U.transpose());
            impl->factor.compute(K);
        }
        break;
    }
    case LinearStrategy::IterativeCG: {
        impl->diag_inv = (X.rowwise().squaredNorm().array() + 2.0).inverse().matrix();
        break;
    }
    }
    if (op.strategy_ != LinearStrategy::IterativeCG && impl->factor.info() != Eigen::Success) {
        throw InvalidInput("factorization of the theta-system failed");
    }
    op.impl_ = std::move(impl);
    return op;
}

Vector SystemOperator::apply(const Vector& s) const
{
    const Matrix& X = impl_->X;
    Vector out = s + X * (X.transpose() * s);
    out.array() += s.sum();
    return out;
}

Vector SystemOperator::solve(const Vector& rhs) const
{
    if (rhs.size() != n_) throw InvalidInput("rhs length must equal n");
    if (!rhs.allFinite()) throw InvalidInput("rhs contains non-finite values");
    const Matrix& X = impl_->X;

    switch (strategy_) {
    case LinearStrategy::Direct: return impl_->factor.solve(rhs);
    case LinearStrategy::Woodbury: {
        if (centered_) {
            const Vector t = impl_->factor.solve(X.transpose() * rhs);
            Vector out = rhs - X * t;
            out.array() -= rhs.sum() / static_cast<double>(n_ + 1);
            return out;
        }
        Vector Utr(p_ + 1);
        Utr.head(p_) = X.transpose() * rhs;
        Utr[p_] = rhs.sum();
        const Vector t = impl_->factor.solve(Utr);
        Vector out = rhs - X * t.head(p_);
        out.array() -= t[p_];
        return out;
    }
    case LinearStrategy::IterativeCG: break;
    }

    // Preconditioned conjugate gradient on the SPD system.
    const double rhs_norm = rhs.norm();
    Vector x = Vector::Zero(n_);
    if (rhs_norm == 0.0) return x;
    const double target = cg_.tolerance * rhs_norm;
    const bool jacobi = cg_.preconditioner == Preconditioner::Diagonal;

    Vector r = rhs;
    Vector z = jacobi ? Vector(r.cwiseProduct(impl_->diag_inv)) : r;
    Vector d = z;
    double rz = r.dot(z);
    double rnorm = rhs_norm;
    for (std::size_t it = 0; it < cg_.max_iters; ++it) {
        const Vector Md = apply(d);
        const double alpha = rz / d.dot(Md);
        x += alpha * d;
        r -= alpha * Md;
        rnorm = r.norm();
        if (rnorm <= target) return x;
        z = jacobi ? Vector(r.cwiseProduct(impl_->diag_inv)) : r;
        const double rz_next = r.dot(z);
        d = z + (rz_next / rz) * d;
        rz = rz_next;
    }
    throw IterativeFailure("conjugate gradient did not reach tolerance within " +
                               std::to_string(cg_.max_iters) + " iterations",
                           rnorm / rhs_norm);
}

std::pair<Matrix, Vector> center_columns(const Matrix& X)
{
    Vector means = X.colwise().mean().transpose();
    Matrix centered = X.rowwise() - means.transpose();
    return {std::move(centered), std::move(means)};
}

bool columns_centered(const Matrix& X, double tol)
{
    for (Index j = 0; j < X.cols(); ++j) {
        const double scale = std::max(1.0, X.col(j).cwiseAbs().maxCoeff());
        if (std::abs(X.col(j).mean()) > tol * scale) return false;
    }
    return true;
}

} // namespace sglq
