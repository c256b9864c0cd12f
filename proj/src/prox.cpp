#include "sglq/prox.hpp"

#include <algorithm>
#include <cmath>

#include "sglq/errors.hpp"

namespace sglq {

ProxPenalty ProxPenalty::from_penalty(const PenaltySpec& penalty, const GroupPartition& partition,
                                      double scale)
{
    penalty.validate(partition);
    if (!(std::isfinite(scale) && scale > 0.0)) throw InvalidInput("prox scale must be positive");
    ProxPenalty out;
    out.scaled_d = (scale * penalty.lambda) * penalty.d;
    out.scaled_w = (scale * penalty.mu) * penalty.w;
    out.partition = partition;
    return out;
}

void ProxPenalty::validate() const
{
    if (static_cast<std::size_t>(scaled_d.size()) != partition.p() ||
        static_cast<std::size_t>(scaled_w.size()) != partition.count()) {
        throw InvalidInput("prox penalty thresholds do not match the partition");
    }
    if (!scaled_d.allFinite() || (scaled_d.array() < 0.0).any() || !scaled_w.allFinite() ||
        (scaled_w.array() < 0.0).any()) {
        throw InvalidInput("prox thresholds must be finite and nonnegative");
    }
}

Vector box_project(const Vector& a, double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
    if (!a.allFinite()) throw InvalidInput("box_project received non-finite input");
    return a.cwiseMax(-tau).cwiseMin(1.0 - tau);
}

Vector soft_threshold(const Vector& xi, const Vector& thresholds)
{
    if (xi.size() != thresholds.size()) throw InvalidInput("soft_threshold length mismatch");
    if ((thresholds.array() < 0.0).any()) throw InvalidInput("soft_threshold needs thresholds >= 0");
    if (!xi.allFinite() || !thresholds.allFinite()) {
        throw InvalidInput("soft_threshold received non-finite input");
    }
    Vector out(xi.size());
    for (Index j = 0; j < xi.size(); ++j) {
        const double mag = std::abs(xi[j]) - thresholds[j];
        out[j] = mag > 0.0 ? std::copysign(mag, xi[j]) : 0.0;
    }
    return out;
}

namespace {

void group_shrink_inplace(Vector& eta, const Vector& group_thresholds, const GroupPartition& partition)
{
    for (std::size_t l = 0; l < partition.count(); ++l) {
        const auto members = partition.members(l);
        double sq = 0.0;
        for (Index j : members) sq += eta[j] * eta[j];
        const double norm = std::sqrt(sq);
        const double t = group_thresholds[static_cast<Index>(l)];
        if (norm == 0.0 || norm <= t) {
            for (Index j : members) eta[j] = 0.0;
        } else if (t > 0.0) {
            const double factor = (norm - t) / norm;
            for (Index j : members) eta[j] *= factor;
        }
    }
}

void soft_threshold_inplace(Vector& xi, const Vector& thresholds)
{
    for (Index j = 0; j < xi.size(); ++j) {
        const double mag = std::abs(xi[j]) - thresholds[j];
        xi[j] = mag > 0.0 ? std::copysign(mag, xi[j]) : 0.0;
    }
}

} // namespace

Vector group_soft_threshold(const Vector& eta, const Vector& group_thresholds,
                            const GroupPartition& partition)
{
    if (static_cast<std::size_t>(eta.size()) != partition.p()) {
        throw InvalidInput("group_soft_threshold: vector length does not match partition");
    }
    if (static_cast<std::size_t>(group_thresholds.size()) != partition.count()) {
        throw InvalidInput("group_soft_threshold: need one threshold per group");
    }
    if ((group_thresholds.array() < 0.0).any()) {
        throw InvalidInput("group_soft_threshold needs thresholds >= 0");
    }
    if (!eta.allFinite() || !group_thresholds.allFinite()) {
        throw InvalidInput("group_soft_threshold received non-finite input");
    }
    Vector out = eta;
    group_shrink_inplace(out, group_thresholds, partition);
    return out;
}

namespace detail {

void prox_h_inplace(Vector& a, const ProxPenalty& pen)
{
    soft_threshold_inplace(a, pen.scaled_d);
    group_shrink_inplace(a, pen.scaled_w, pen.partition);
}

} // namespace detail

Vector prox_h(const Vector& a, const ProxPenalty& pen)
{
    pen.validate();
    if (static_cast<std::size_t>(a.size()) != pen.partition.p()) {
        throw InvalidInput("prox_h: vector length does not match partition");
    }
    if (!a.allFinite()) throw InvalidInput("prox_h received non-finite input");
    Vector out = a;
    detail::prox_h_inplace(out, pen);
    return out;
}

Vector prox_h_conjugate_step(const Vector& a, double varpi, const ProxPenalty& pen)
{
    if (!(varpi > 0.0 && std::isfinite(varpi))) throw InvalidInput("varpi must be positive");
    return (a - prox_h(a, pen)) / varpi;
}

} // namespace sglq
