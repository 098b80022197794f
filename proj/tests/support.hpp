#pragma once

#include <cmath>
#include <random>

#include "ddmpc/mpc.hpp"
#include "ddmpc/runner.hpp"

namespace ddmpc::testing {

inline double fact(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

/// Taylor evaluation of a stacked derivative vector: orders [lo, lo+blocks)
/// with block dimension n.
inline Vector taylor_eval(const Vector& stack, int lo, Eigen::Index n,
                          double tau) {
    const Eigen::Index blocks = stack.size() / n;
    Vector out = Vector::Zero(n);
    for (Eigen::Index i = 0; i < blocks; ++i)
        out += std::pow(tau, lo + static_cast<int>(i)) /
               fact(lo + static_cast<int>(i)) * stack.segment(i * n, n);
    return out;
}

/// Quadrature-evaluated horizon cost; independent oracle for build_qp.
/// Integrates ||x_hat(tau) - xd_taylor(tau)||_Q^2 + ||u(tau)||_R^2 by the
/// composite trapezoid rule and adds the terminal penalty.
inline double quadrature_cost(const PredictionMatrices& pm,
                              const MpcConfig& cfg, const Vector& x,
                              const Vector& X1d, const Vector& X2d,
                              const Vector& u_stack, int points = 10000) {
    const auto policy = extract_policy(u_stack, pm.rho, pm.r, pm.m);
    auto integrand = [&](double tau) {
        const Vector xd = taylor_eval(X1d, 0, pm.n, tau) +
                          taylor_eval(X2d, pm.rho, pm.n, tau);
        const Vector e = predict_state(pm, x, u_stack, tau) - xd;
        const Vector u = policy.eval(tau);
        return e.dot(cfg.Q * e) + u.dot(cfg.R * u);
    };
    const double h = cfg.T / points;
    double acc = 0.5 * (integrand(0.0) + integrand(cfg.T));
    for (int i = 1; i < points; ++i) acc += integrand(i * h);
    double cost = h * acc;
    if (cfg.P_terminal.size() > 0) {
        const Vector xd = taylor_eval(X1d, 0, pm.n, cfg.T) +
                          taylor_eval(X2d, pm.rho, pm.n, cfg.T);
        const Vector e = predict_state(pm, x, u_stack, cfg.T) - xd;
        cost += e.dot(cfg.P_terminal * e);
    }
    return cost;
}

/// Scalar minimizer search: coarse grid scan followed by golden-section
/// refinement of the bracketing interval.
template <typename F>
double golden_section_min(F f, double lo, double hi, int grid_points,
                          double tol = 1e-10) {
    double best = lo, best_val = f(lo);
    for (int i = 1; i <= grid_points; ++i) {
        const double u = lo + (hi - lo) * i / grid_points;
        const double v = f(u);
        if (v < best_val) {
            best_val = v;
            best = u;
        }
    }
    double a = std::max(lo, best - (hi - lo) / grid_points);
    double b = std::min(hi, best + (hi - lo) / grid_points);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                            std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

/// Shared scalar closed-loop fixture: plant xdot = -x + u, setpoint 1.
inline ExperimentConfig scalar_experiment() {
    ExperimentConfig cfg;
    cfg.plant = LtiModel(Matrix::Constant(1, 1, -1.0),
                         Matrix::Constant(1, 1, 1.0));
    cfg.x0 = Vector::Zero(1);
    cfg.excitation.K0 = Matrix::Zero(1, 1);
    cfg.excitation.dither = default_dither(2, 1);
    // Longer than the l*delta minimum: the extra windows damp the estimate
    // fluctuation of early re-identifications near the quadrature floor.
    cfg.excitation.duration = 5.0;
    cfg.delta = 0.05;
    cfg.l = 50;
    cfg.dt_sim = 1e-3;
    cfg.mpc.T = 1.0;
    cfg.mpc.r = 1;
    cfg.mpc.Q = Matrix::Constant(1, 1, 1.0);
    cfg.mpc.R = Matrix::Constant(1, 1, 1e-3);
    cfg.mpc.u_lo = Vector::Constant(1, -5.0);
    cfg.mpc.u_hi = Vector::Constant(1, 5.0);
    cfg.reference.kind = ReferenceSpec::Kind::Constant;
    cfg.reference.setpoint = Vector::Constant(1, 1.0);
    cfg.total_time = 10.0;
    return cfg;
}

}  // namespace ddmpc::testing
