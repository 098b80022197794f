#pragma once

#include <iosfwd>

#include "ddmpc/collector.hpp"

namespace ddmpc {

/// Least-squares parameter estimate with conditioning diagnostics.
/// Full mode: theta_hat = [vec(A_hat); vec(B_hat)].
/// Partial mode: theta_hat = [vec(A1); vec(A2); vec(B1)] and (A_hat, B_hat)
/// carry the exact [[0, I], [A1, A2]] / [[0], [B1]] block structure.
struct ParameterEstimate {
    Vector theta_hat;
    Matrix A_hat;
    Matrix B_hat;
    MeasurementMode mode = MeasurementMode::Full;
    double condition_estimate = 0.0;
    double residual_norm = 0.0;
};

struct ExcitationReport {
    bool rank_ok = false;
    double condition_estimate = 0.0;
    double min_singular_value = 0.0;
};

/// Solves Gamma = Psi * theta and reshapes into (A_hat, B_hat).
/// Propagates RankDeficientError when the batch is not exciting enough.
ParameterEstimate estimate(const RegressorBatch& batch,
                           double cond_threshold = 1e10);

/// Singular-value diagnostics of the stacked regressor.
ExcitationReport excitation_report(const RegressorBatch& batch,
                                   double cond_threshold = 1e10);

/// Relative Frobenius error ||[A_hat B_hat] - [A B]||_F / ||[A B]||_F.
double estimate_error(const ParameterEstimate& est, const LtiModel& truth);

/// Plain-text report block (A_hat, B_hat, residual, condition).
void write_estimate_report(const ParameterEstimate& est, std::ostream& os);

}  // namespace ddmpc
