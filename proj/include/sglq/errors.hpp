#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sglq {

/// Bad arguments: dimension mismatch, out-of-range parameter, non-finite data.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative linear solve stopped before reaching its tolerance.
class IterativeFailure : public std::runtime_error {
public:
    IterativeFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// ADMM iterates became non-finite or exceeded the divergence bound.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

} // namespace sglq
