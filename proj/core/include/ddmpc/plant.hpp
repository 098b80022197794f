#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ddmpc/numerics.hpp"

namespace ddmpc {

/// Continuous-time LTI plant xdot = A x + B u.
struct LtiModel {
    Matrix A;  // n x n
    Matrix B;  // n x m

    LtiModel() = default;
    LtiModel(Matrix a, Matrix b);

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }

    /// Rank check of [B, AB, ..., A^(n-1)B]. Used as a fixture sanity
    /// warning, not a hard error.
    bool controllable(double tol = 1e-9) const;
};

/// Dense simulation record on a uniform time grid.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    Matrix states;  // n x (steps+1), column k is x(t0 + k*dt)
    Matrix inputs;  // m x (steps+1), column k is u(t0 + k*dt)

    // Input discontinuities: (grid index g, left limit u(t_g^-)). The inputs
    // column stores the right limit u(t_g^+); integrators that want O(dt^2)
    // accuracy across a jump need the left value for the cell ending at g.
    std::vector<std::pair<Eigen::Index, Vector>> input_jumps;

    Eigen::Index samples() const { return states.cols(); }
    double t_end() const { return t0 + dt * static_cast<double>(samples() - 1); }

    /// Grid index of time t; throws DomainError if t is off-grid or
    /// outside the span.
    Eigen::Index index_of(double t, double tol = 1e-9) const;
};

struct Sinusoid {
    double amplitude = 0.0;
    double frequency = 0.0;  // rad/s
    double phase = 0.0;
};

/// Excitation-phase input u = -K0 x + per-channel sum of sinusoids.
struct ExcitationSpec {
    Matrix K0;                                  // m x n
    std::vector<std::vector<Sinusoid>> dither;  // one list per input channel
    double duration = 0.0;

    /// Total distinct dither frequencies across channels.
    int frequency_count() const;
};

/// Builds the default dither: count sinusoids with frequencies 0.3*i rad/s
/// and amplitude 0.5, distributed round-robin over m channels.
std::vector<std::vector<Sinusoid>> default_dither(int count, int m);

/// Reference trajectory x_d(t) with analytic derivatives of any order.
struct ReferenceSpec {
    enum class Kind { Constant, Polynomial, Sinusoid };

    Kind kind = Kind::Constant;
    Vector setpoint;                  // Constant: x_d(t) = setpoint
    Matrix poly_coeffs;               // Polynomial: row j holds c0..cd, x_d_j = sum c_k t^k
    std::vector<Sinusoid> channels;   // Sinusoid: x_d_j = a sin(w t + phi)
    int max_derivative_order = 10;

    Eigen::Index dim() const;
    Vector value(double t) const;
    /// order-th time derivative; order 0 returns value(t).
    Vector derivative(double t, int order) const;
};

using InputFunction = std::function<Vector(double t, const Vector& x)>;

/// One classical RK4 step of xdot = A x + B u(t, x).
Vector rk4_step(const LtiModel& model, const Vector& x, const InputFunction& u,
                double t, double dt);

/// Repeated RK4 on a uniform grid over [t0, t_end]. dt must divide the span.
Trajectory simulate(const LtiModel& model, const Vector& x0,
                    const InputFunction& u, double t0, double t_end, double dt);

/// u = -K0 x + dither(t).
Vector excitation_input(const ExcitationSpec& spec, const Vector& x, double t);

struct ReferenceStack {
    Vector X1d;  // derivative orders 0 .. rho-1, stacked
    Vector X2d;  // derivative orders rho .. r, stacked
};

/// Stacked reference derivatives at time t for control order r and relative
/// degree rho. Throws DomainError if r exceeds the spec's derivative budget
/// for a non-constant reference, or if r < rho or rho < 1.
ReferenceStack reference_stack(const ReferenceSpec& spec, double t, int r,
                               int rho);

/// Writes t, x_0..x_{n-1}, u_0..u_{m-1} rows.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

}  // namespace ddmpc
