#include "ddmpc/mpc.hpp"

#include <cmath>

namespace ddmpc {

namespace {

bool symmetric(const Matrix& m, double tol = 1e-9) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.norm());
}

bool positive_semidefinite(const Matrix& m, double tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol * (1.0 + m.norm());
}

/// Row vector of scaled monomials tau^i / i! for i in [lo, hi].
Eigen::RowVectorXd taylor_row(int lo, int hi, double tau) {
    Eigen::RowVectorXd row(hi - lo + 1);
    double fact = 1.0;
    double power = 1.0;
    for (int i = 0; i <= hi; ++i) {
        if (i > 0) {
            fact *= i;
            power *= tau;
        }
        if (i >= lo) row(i - lo) = power / fact;
    }
    return row;
}

}  // namespace

void MpcConfig::validate(Eigen::Index n, Eigen::Index m) const {
    if (T <= 0.0) throw DomainError("mpc: horizon T must be positive");
    if (r < 1) throw DomainError("mpc: control order r must be >= 1");
    if (Q.rows() != n || Q.cols() != n)
        throw ShapeError("mpc: Q must be n x n");
    if (R.rows() != m || R.cols() != m)
        throw ShapeError("mpc: R must be m x m");
    if (!symmetric(Q) || !positive_semidefinite(Q - 1e-12 * Matrix::Identity(n, n)))
        throw DomainError("mpc: Q must be symmetric positive definite");
    {
        Eigen::LLT<Matrix> llt(Q);
        if (llt.info() != Eigen::Success)
            throw DomainError("mpc: Q must be symmetric positive definite");
    }
    if (!symmetric(R) || !positive_semidefinite(R))
        throw DomainError("mpc: R must be symmetric positive semidefinite");
    if (P_terminal.size() > 0) {
        if (P_terminal.rows() != n || P_terminal.cols() != n)
            throw ShapeError("mpc: P_terminal must be n x n");
        if (!symmetric(P_terminal) || !positive_semidefinite(P_terminal))
            throw DomainError(
                "mpc: P_terminal must be symmetric positive semidefinite");
    }
    if (u_lo.size() != m || u_hi.size() != m)
        throw ShapeError("mpc: box bounds must have one entry per input");
    for (Eigen::Index j = 0; j < m; ++j)
        if (!(u_lo(j) < 0.0 && u_hi(j) > 0.0))
            throw DomainError(
                "mpc: box must contain the origin strictly in its interior");
    if (epsilon < 0.0) throw DomainError("mpc: epsilon must be nonnegative");
    if (constraint_grid_points < 2)
        throw DomainError("mpc: need at least 2 constraint grid points");
}

int relative_degree(const Matrix& A_hat, const Matrix& B_hat, double tol) {
    if (A_hat.rows() != A_hat.cols() || B_hat.rows() != A_hat.rows())
        throw ShapeError("relative_degree: inconsistent shapes");
    const double bnorm = B_hat.norm();
    if (bnorm == 0.0)
        throw NumericalError("relative_degree: B is zero, input never "
                             "reaches the state");
    Matrix markov = B_hat;  // A^(i-1) B for i = 1
    const auto n = static_cast<int>(A_hat.rows());
    for (int i = 1; i <= n; ++i) {
        if (markov.norm() > tol * bnorm) return i;
        markov = A_hat * markov;
    }
    throw NumericalError("relative_degree: all Markov blocks below tolerance");
}

PredictionMatrices build_prediction(const Matrix& A_hat, const Matrix& B_hat,
                                    int rho, int r) {
    if (rho < 1 || r < rho)
        throw DomainError("build_prediction: need r >= rho >= 1");
    const Eigen::Index n = A_hat.rows();
    const Eigen::Index m = B_hat.cols();
    if (A_hat.cols() != n || B_hat.rows() != n)
        throw ShapeError("build_prediction: inconsistent shapes");

    // Powers A^0 .. A^r by iterated multiplication.
    std::vector<Matrix> pow(static_cast<std::size_t>(r) + 1);
    pow[0] = Matrix::Identity(n, n);
    for (int i = 1; i <= r; ++i) pow[i] = pow[i - 1] * A_hat;

    PredictionMatrices pm;
    pm.rho = rho;
    pm.r = r;
    pm.n = n;
    pm.m = m;
    pm.A1.resize(rho * n, n);
    for (int i = 0; i < rho; ++i) pm.A1.middleRows(i * n, n) = pow[i];

    const int nb = r - rho + 1;
    pm.A2.resize(nb * n, n);
    for (int i = 0; i < nb; ++i) pm.A2.middleRows(i * n, n) = pow[rho + i];

    pm.Bcal = Matrix::Zero(nb * n, nb * m);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j <= i; ++j)
            pm.Bcal.block(i * n, j * m, n, m) = pow[rho - 1 + i - j] * B_hat;
    return pm;
}

Vector predict_state(const PredictionMatrices& pm, const Vector& x,
                     const Vector& u_stack, double tau) {
    const Vector X1 = pm.A1 * x;
    const Vector X2 = pm.A2 * x + pm.Bcal * u_stack;
    const auto t1 = taylor_row(0, pm.rho - 1, tau);
    const auto t2 = taylor_row(pm.rho, pm.r, tau);
    Vector out = Vector::Zero(pm.n);
    for (Eigen::Index i = 0; i < t1.size(); ++i)
        out += t1(i) * X1.segment(i * pm.n, pm.n);
    for (Eigen::Index i = 0; i < t2.size(); ++i)
        out += t2(i) * X2.segment(i * pm.n, pm.n);
    return out;
}

QpProblem build_qp(const PredictionMatrices& pm, const MpcConfig& cfg,
                   const Vector& x, const Vector& X1d, const Vector& X2d) {
    const Eigen::Index n = pm.n;
    const int rho = pm.rho;
    const int r = pm.r;
    if (x.size() != n) throw ShapeError("build_qp: state dimension mismatch");
    if (X1d.size() != rho * n || X2d.size() != (r - rho + 1) * n)
        throw ShapeError("build_qp: reference stack dimension mismatch");

    const Matrix T11 = monomial_gram(0, rho - 1, 0, rho - 1, cfg.T, cfg.Q);
    const Matrix T12 = monomial_gram(0, rho - 1, rho, r, cfg.T, cfg.Q);
    const Matrix T22 = monomial_gram(rho, r, rho, r, cfg.T, cfg.Q);
    const Matrix Tu = monomial_gram(0, r - rho, 0, r - rho, cfg.T, cfg.R);

    const Vector X1t = pm.A1 * x - X1d;          // constant part of X~1
    const Vector d = pm.A2 * x - X2d;            // X~2 = d + Bcal * u

    QpProblem qp;
    qp.H = pm.Bcal.transpose() * T22 * pm.Bcal + Tu;
    qp.g = pm.Bcal.transpose() * (T22 * d + T12.transpose() * X1t);
    qp.c = X1t.dot(T11 * X1t) + 2.0 * X1t.dot(T12 * d) + d.dot(T22 * d);

    if (cfg.P_terminal.size() > 0 && cfg.P_terminal.norm() > 0.0) {
        // Terminal error e(T) = M1 * X~1 + M2 * X~2 from the Taylor rows.
        const Matrix M1 = kron(taylor_row(0, rho - 1, cfg.T),
                               Matrix::Identity(n, n));
        const Matrix M2 = kron(taylor_row(rho, r, cfg.T),
                               Matrix::Identity(n, n));
        const Vector e0 = M1 * X1t + M2 * d;
        const Matrix M2B = M2 * pm.Bcal;
        qp.H += M2B.transpose() * cfg.P_terminal * M2B;
        qp.g += M2B.transpose() * (cfg.P_terminal * e0);
        qp.c += e0.dot(cfg.P_terminal * e0);
    }

    qp.H += cfg.epsilon * Matrix::Identity(qp.H.rows(), qp.H.cols());
    qp.H = 0.5 * (qp.H + qp.H.transpose().eval());
    return qp;
}

Vector solve_unconstrained(const QpProblem& qp) {
    Eigen::LLT<Matrix> llt(qp.H);
    if (llt.info() != Eigen::Success) {
        Eigen::LDLT<Matrix> ldlt(qp.H);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("solve_unconstrained: factorization failed");
        Vector u = ldlt.solve(-qp.g);
        if (!u.allFinite())
            throw NumericalError("solve_unconstrained: non-finite solution");
        return u;
    }
    return llt.solve(-qp.g);
}

namespace {

bool stack_feasible(const Vector& u_stack, const PredictionMatrices& pm,
                    const MpcConfig& cfg) {
    const auto policy = extract_policy(u_stack, pm.rho, pm.r, pm.m);
    const int g = cfg.constraint_grid_points;
    for (int k = 0; k < g; ++k) {
        const double tau = cfg.T * static_cast<double>(k) /
                           static_cast<double>(g - 1);
        const Vector u = policy.eval(tau);
        for (Eigen::Index j = 0; j < u.size(); ++j)
            if (u(j) < cfg.u_lo(j) - 1e-12 || u(j) > cfg.u_hi(j) + 1e-12)
                return false;
    }
    return true;
}

}  // namespace

Vector enforce_box(const Vector& u_star, const PredictionMatrices& pm,
                   const MpcConfig& cfg) {
    if (stack_feasible(u_star, pm, cfg)) return u_star;
    // The zero stack is feasible since the box contains the origin, so the
    // feasible scale set [0, alpha*] is nonempty; bisect its boundary.
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (stack_feasible(mid * u_star, pm, cfg))
            lo = mid;
        else
            hi = mid;
    }
    return lo * u_star;
}

PolynomialPolicy extract_policy(const Vector& u_stack, int rho, int r,
                                Eigen::Index m) {
    const int nb = r - rho + 1;
    if (u_stack.size() != nb * m)
        throw ShapeError("extract_policy: stack length mismatch");
    PolynomialPolicy policy;
    policy.blocks = unvec(u_stack, m, nb);
    return policy;
}

Vector PolynomialPolicy::eval(double tau) const {
    Vector u = Vector::Zero(blocks.rows());
    double coef = 1.0;
    for (Eigen::Index j = 0; j < blocks.cols(); ++j) {
        if (j > 0) coef *= tau / static_cast<double>(j);
        u += coef * blocks.col(j);
    }
    return u;
}

}  // namespace ddmpc
