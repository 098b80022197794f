#include "ddmpc/plant.hpp"

#include <cmath>
#include <iostream>
#include <ostream>

namespace ddmpc {

LtiModel::LtiModel(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
    if (A.rows() != A.cols())
        throw ShapeError("LtiModel: A must be square");
    if (B.rows() != A.rows())
        throw ShapeError("LtiModel: B must have as many rows as A");
}

bool LtiModel::controllable(double tol) const {
    const Eigen::Index nn = n();
    Matrix ctrb(nn, nn * m());
    Matrix block = B;
    for (Eigen::Index i = 0; i < nn; ++i) {
        ctrb.middleCols(i * m(), m()) = block;
        block = A * block;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(ctrb);
    qr.setThreshold(tol);
    return qr.rank() == nn;
}

Eigen::Index Trajectory::index_of(double t, double tol) const {
    const double pos = (t - t0) / dt;
    const auto k = static_cast<Eigen::Index>(std::llround(pos));
    if (std::abs(pos - static_cast<double>(k)) > tol)
        throw DomainError("Trajectory: time " + std::to_string(t) +
                          " is not on the sample grid");
    if (k < 0 || k >= samples())
        throw DomainError("Trajectory: time " + std::to_string(t) +
                          " outside the recorded span");
    return k;
}

int ExcitationSpec::frequency_count() const {
    int count = 0;
    for (const auto& ch : dither) count += static_cast<int>(ch.size());
    return count;
}

std::vector<std::vector<Sinusoid>> default_dither(int count, int m) {
    std::vector<std::vector<Sinusoid>> out(static_cast<std::size_t>(m));
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i % m)].push_back(
            Sinusoid{0.5, 0.3 * (i + 1), 0.0});
    return out;
}

Eigen::Index ReferenceSpec::dim() const {
    switch (kind) {
        case Kind::Constant: return setpoint.size();
        case Kind::Polynomial: return poly_coeffs.rows();
        case Kind::Sinusoid: return static_cast<Eigen::Index>(channels.size());
    }
    return 0;
}

Vector ReferenceSpec::value(double t) const { return derivative(t, 0); }

Vector ReferenceSpec::derivative(double t, int order) const {
    const Eigen::Index nd = dim();
    Vector out = Vector::Zero(nd);
    switch (kind) {
        case Kind::Constant:
            if (order == 0) out = setpoint;
            break;
        case Kind::Polynomial:
            for (Eigen::Index j = 0; j < nd; ++j) {
                double v = 0.0;
                for (Eigen::Index k = order; k < poly_coeffs.cols(); ++k) {
                    double c = poly_coeffs(j, k);
                    for (int d = 0; d < order; ++d)
                        c *= static_cast<double>(k - d);
                    v += c * std::pow(t, static_cast<double>(k - order));
                }
                out(j) = v;
            }
            break;
        case Kind::Sinusoid:
            for (Eigen::Index j = 0; j < nd; ++j) {
                const auto& s = channels[static_cast<std::size_t>(j)];
                // d^r/dt^r [a sin(wt+phi)] = a w^r sin(wt+phi+r*pi/2)
                out(j) = s.amplitude * std::pow(s.frequency, order) *
                         std::sin(s.frequency * t + s.phase +
                                  order * M_PI / 2.0);
            }
            break;
    }
    return out;
}

Vector rk4_step(const LtiModel& model, const Vector& x, const InputFunction& u,
                double t, double dt) {
    if (dt <= 0.0) throw DomainError("rk4_step: dt must be positive");
    auto f = [&](double tau, const Vector& xs) -> Vector {
        return model.A * xs + model.B * u(tau, xs);
    };
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Vector k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Vector k4 = f(t + dt, x + dt * k3);
    Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite())
        throw NumericalError("rk4_step: non-finite state at t=" +
                             std::to_string(t));
    return next;
}

Trajectory simulate(const LtiModel& model, const Vector& x0,
                    const InputFunction& u, double t0, double t_end,
                    double dt) {
    if (t_end <= t0) throw DomainError("simulate: t_end must exceed t0");
    const double span = t_end - t0;
    const auto steps = static_cast<Eigen::Index>(std::llround(span / dt));
    if (std::abs(span - static_cast<double>(steps) * dt) > 1e-9 * span ||
        steps < 1)
        throw DomainError("simulate: dt does not divide the time span");

    Trajectory traj;
    traj.t0 = t0;
    traj.dt = dt;
    traj.states.resize(model.n(), steps + 1);
    traj.inputs.resize(model.m(), steps + 1);

    Vector x = x0;
    for (Eigen::Index k = 0; k <= steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        traj.states.col(k) = x;
        traj.inputs.col(k) = u(t, x);
        if (k < steps) x = rk4_step(model, x, u, t, dt);
    }
    return traj;
}

Vector excitation_input(const ExcitationSpec& spec, const Vector& x, double t) {
    Vector u = -(spec.K0 * x);
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        if (static_cast<std::size_t>(j) >= spec.dither.size()) break;
        for (const auto& s : spec.dither[static_cast<std::size_t>(j)])
            u(j) += s.amplitude * std::sin(s.frequency * t + s.phase);
    }
    return u;
}

ReferenceStack reference_stack(const ReferenceSpec& spec, double t, int r,
                               int rho) {
    if (rho < 1 || r < rho)
        throw DomainError("reference_stack: need r >= rho >= 1");
    if (spec.kind != ReferenceSpec::Kind::Constant &&
        r > spec.max_derivative_order)
        throw DomainError(
            "reference_stack: derivative order " + std::to_string(r) +
            " exceeds reference budget " +
            std::to_string(spec.max_derivative_order));

    const Eigen::Index nd = spec.dim();
    ReferenceStack out;
    out.X1d.resize(rho * nd);
    out.X2d.resize((r - rho + 1) * nd);
    for (int i = 0; i < rho; ++i)
        out.X1d.segment(i * nd, nd) = spec.derivative(t, i);
    for (int i = rho; i <= r; ++i)
        out.X2d.segment((i - rho) * nd, nd) = spec.derivative(t, i);
    return out;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "t";
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) os << ",x_" << i;
    for (Eigen::Index i = 0; i < traj.inputs.rows(); ++i) os << ",u_" << i;
    os << "\n";
    const auto fmt = [&os](double v) { os << "," << v; };
    os.precision(17);
    for (Eigen::Index k = 0; k < traj.samples(); ++k) {
        os << traj.t0 + static_cast<double>(k) * traj.dt;
        for (Eigen::Index i = 0; i < traj.states.rows(); ++i)
            fmt(traj.states(i, k));
        for (Eigen::Index i = 0; i < traj.inputs.rows(); ++i)
            fmt(traj.inputs(i, k));
        os << "\n";
    }
}

}  // namespace ddmpc
