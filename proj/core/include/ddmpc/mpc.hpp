#pragma once

#include <optional>

#include "ddmpc/numerics.hpp"

namespace ddmpc {

/// Receding-horizon controller settings. Weights are validated against the
/// plant dimensions before use: Q symmetric positive definite, R and
/// P_terminal symmetric positive semidefinite, box strictly containing 0.
struct MpcConfig {
    double T = 1.0;               // prediction horizon
    int r = 1;                    // control order (>= rho)
    std::optional<int> rho_override;
    Matrix Q;                     // n x n state weight
    Matrix R;                     // m x m input weight
    Matrix P_terminal;            // n x n terminal weight; empty means zero
    Vector u_lo;                  // per-channel box lower bounds
    Vector u_hi;                  // per-channel box upper bounds
    double epsilon = 1e-10;       // Tikhonov floor on the Hessian
    int constraint_grid_points = 32;
    double rho_tol = 1e-9;

    void validate(Eigen::Index n, Eigen::Index m) const;
};

/// Taylor-basis prediction matrices for estimated dynamics (A_hat, B_hat):
/// A1 stacks A_hat^0 .. A_hat^(rho-1), A2 stacks A_hat^rho .. A_hat^r, and
/// Bcal is block-lower-triangular Toeplitz with block (i,j) =
/// A_hat^(rho-1+i-j) * B_hat.
struct PredictionMatrices {
    Matrix A1;    // rho*n x n
    Matrix A2;    // (r-rho+1)*n x n
    Matrix Bcal;  // (r-rho+1)*n x (r-rho+1)*m
    int rho = 1;
    int r = 1;
    Eigen::Index n = 0;
    Eigen::Index m = 0;

    Eigen::Index decision_dim() const { return (r - rho + 1) * m; }
};

/// Quadratic cost J(u) = u'Hu + 2g'u + c over the stacked input
/// derivatives u = [u^[0]; ...; u^[r-rho]].
struct QpProblem {
    Matrix H;
    Vector g;
    double c = 0.0;
};

/// Piecewise-polynomial control policy u(t_k + tau) = sum tau^j/j! u^[j].
struct PolynomialPolicy {
    Matrix blocks;  // m x (r-rho+1); column j is u^[j]
    Vector eval(double tau) const;
};

/// Smallest i >= 1 with ||A^(i-1) B||_F > tol * ||B||_F.
/// Throws NumericalError for B ~= 0 (input never reaches the state).
int relative_degree(const Matrix& A_hat, const Matrix& B_hat, double tol);

PredictionMatrices build_prediction(const Matrix& A_hat, const Matrix& B_hat,
                                    int rho, int r);

/// Taylor prediction x(t_k + tau) from the frozen state and input stack.
Vector predict_state(const PredictionMatrices& pm, const Vector& x,
                     const Vector& u_stack, double tau);

/// Assembles H, g, c so that the quadratic matches the horizon-integrated
/// tracking cost plus input energy and terminal penalty, with X1d/X2d the
/// stacked reference derivatives at t_k.
QpProblem build_qp(const PredictionMatrices& pm, const MpcConfig& cfg,
                   const Vector& x, const Vector& X1d, const Vector& X2d);

/// Solves H u = -g by Cholesky; H is positive definite by construction.
Vector solve_unconstrained(const QpProblem& qp);

/// Sub-optimal box handling: uniformly scales the stack by the largest
/// alpha in (0, 1] keeping the input polynomial inside the box at every
/// grid sample of [0, T] (bisection to 1e-6). Already-feasible stacks pass
/// through unchanged.
Vector enforce_box(const Vector& u_star, const PredictionMatrices& pm,
                   const MpcConfig& cfg);

PolynomialPolicy extract_policy(const Vector& u_stack, int rho, int r,
                                Eigen::Index m);

}  // namespace ddmpc
