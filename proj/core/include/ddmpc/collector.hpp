#pragma once

#include <iosfwd>

#include "ddmpc/plant.hpp"

namespace ddmpc {

/// Integral-window quantities for the full-state regressor. All fields are
/// zero when t (relative to the trajectory start) is below delta.
struct WindowSampleFull {
    double t = 0.0;
    Vector F;     // x(t) - x(t - delta)
    Vector Xi_x;  // integral of x over [t - delta, t]
    Vector Xi_u;  // integral of u over [t - delta, t]
};

/// Double-integral window quantities for the partial-state regressor over
/// the measured half-state xi. Zero below t = delta1 + delta2.
struct WindowSamplePartial {
    double t = 0.0;
    Vector F1;     // xi(t-d2-d1) - xi(t-d1) + xi(t) - xi(t-d2)
    Vector Xi_p;   // double integral of xi
    Vector Xi_v;   // difference of the two length-d2 integrals of xi
    Vector Xi_u1;  // double integral of u
};

enum class MeasurementMode { Full, Partial };

/// Stacked regression system Gamma = Psi * theta over sample times i*delta.
struct RegressorBatch {
    Vector gamma;
    Matrix psi;
    Eigen::Index n = 0;  // state dimension
    Eigen::Index m = 0;  // input dimension
    Eigen::Index q = 0;  // measured half-state dimension (partial mode)
    int sample_count = 0;
    MeasurementMode mode = MeasurementMode::Full;

    Eigen::Index parameter_count() const { return psi.cols(); }
};

struct RegressorRow {
    Vector gamma_row;
    Matrix psi_row;
};

/// Window quantities of the full-state case at time t; integrals by
/// composite trapezoid over the trajectory grid.
WindowSampleFull window_full(const Trajectory& traj, double t, double delta);

/// Window quantities of the partial-state case; xi is the first q = n/2
/// state components. Throws DomainError when delta1 == delta2.
WindowSamplePartial window_partial(const Trajectory& traj, double t,
                                   double delta1, double delta2);

/// Row block [ (Xi_x (x) I_n)^T  (Xi_u (x) I_n)^T ] and increment F.
RegressorRow regressor_row_full(const WindowSampleFull& s, Eigen::Index n,
                                Eigen::Index m);

/// Row block [ (Xi_p (x) I_q)^T  (Xi_v (x) I_q)^T  (Xi_u1 (x) I_q)^T ].
RegressorRow regressor_row_partial(const WindowSamplePartial& s,
                                   Eigen::Index q, Eigen::Index m);

/// Stacks rows over sample times i*delta, i = 0..l, dropping the all-zero
/// rows from the below-threshold regime. Partial mode uses delta1 = delta,
/// delta2 = 2*delta and requires even n.
RegressorBatch assemble_batch(const Trajectory& traj, double delta, int l,
                              MeasurementMode mode);

void write_batch_csv(const RegressorBatch& batch, std::ostream& os);
RegressorBatch read_batch_csv(std::istream& is);

}  // namespace ddmpc
