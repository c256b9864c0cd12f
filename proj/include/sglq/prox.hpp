#pragma once

#include "sglq/model.hpp"

namespace sglq {

/// Thresholds of the combined penalty after scaling: scale * lambda * d and scale * mu * w.
struct ProxPenalty {
    Vector scaled_d;
    Vector scaled_w;
    GroupPartition partition;

    static ProxPenalty from_penalty(const PenaltySpec& penalty, const GroupPartition& partition,
                                    double scale);
    void validate() const;
};

/// Euclidean projection onto the box [-tau, 1 - tau]^n.
Vector box_project(const Vector& a, double tau);

/// sgn(xi) .* max(|xi| - t, 0), with literal zeros in the dead zone.
Vector soft_threshold(const Vector& xi, const Vector& thresholds);

/// Blockwise radial shrinkage; a block whose norm is <= its threshold becomes exactly zero.
Vector group_soft_threshold(const Vector& eta, const Vector& group_thresholds,
                            const GroupPartition& partition);

/// Proximal map of the sparse group penalty: group shrinkage applied after soft-thresholding.
Vector prox_h(const Vector& a, const ProxPenalty& pen);

/// (a - prox_h(a)) / varpi, i.e. the conjugate prox at a / varpi via the Moreau identity.
Vector prox_h_conjugate_step(const Vector& a, double varpi, const ProxPenalty& pen);

namespace detail {
// In-place forms used inside the ADMM loop.
void prox_h_inplace(Vector& a, const ProxPenalty& pen);
} // namespace detail

} // namespace sglq
