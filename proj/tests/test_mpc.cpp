#include "doctest.h"

#include <random>

#include "ddmpc/mpc.hpp"
#include "ddmpc/plant.hpp"
#include "support.hpp"

using namespace ddmpc;
using ddmpc::testing::quadrature_cost;
using ddmpc::testing::random_matrix;

namespace {

MpcConfig scalar_config() {
    MpcConfig cfg;
    cfg.T = 1.0;
    cfg.r = 1;
    cfg.Q = Matrix::Identity(1, 1);
    cfg.R = Matrix::Identity(1, 1);
    cfg.u_lo = Vector::Constant(1, -1.0);
    cfg.u_hi = Vector::Constant(1, 1.0);
    cfg.epsilon = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("relative_degree") {
    Matrix a(2, 2);
    a << 0, 1, 0, 0;
    Matrix b(2, 1);
    b << 0, 1;
    CHECK(relative_degree(a, b, 1e-9) == 1);
    std::mt19937 rng(2);
    CHECK(relative_degree(random_matrix(3, 3, rng), Matrix::Ones(3, 1),
                          1e-9) == 1);
    CHECK_THROWS_AS(relative_degree(a, Matrix::Zero(2, 1), 1e-9),
                    NumericalError);
}

TEST_CASE("build_prediction scalar cases") {
    const Matrix a0 = Matrix::Zero(1, 1);
    const Matrix b1 = Matrix::Ones(1, 1);

    auto pm1 = build_prediction(a0, b1, 1, 1);
    CHECK(pm1.A1(0, 0) == 1.0);
    CHECK(pm1.A2(0, 0) == 0.0);
    CHECK(pm1.Bcal(0, 0) == 1.0);

    auto pm2 = build_prediction(a0, b1, 1, 2);
    CHECK(pm2.A2.norm() == 0.0);
    CHECK((pm2.Bcal - Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("build_prediction double integrator Toeplitz blocks") {
    Matrix a(2, 2);
    a << 0, 1, 0, 0;
    Matrix b(2, 1);
    b << 0, 1;
    auto pm = build_prediction(a, b, 1, 2);
    Matrix expected(4, 2);
    expected << 0, 0, 1, 0, 1, 0, 0, 1;  // blocks [[B, 0], [AB, B]]
    CHECK((pm.Bcal - expected).norm() == 0.0);
}

TEST_CASE("predict_state") {
    SUBCASE("tau = 0 returns the state") {
        Matrix a(2, 2);
        a << 0.3, -0.2, 0.1, 0.5;
        auto pm = build_prediction(a, Matrix::Ones(2, 1), 1, 2);
        Vector x(2);
        x << 1.0, -2.0;
        CHECK((predict_state(pm, x, Vector::Zero(2), 0.0) - x).norm() <
              1e-14);
    }
    SUBCASE("pure integrator under constant input") {
        auto pm = build_prediction(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 1,
                                   1);
        Vector x = Vector::Constant(1, 0.7);
        Vector u = Vector::Constant(1, 2.0);
        CHECK(predict_state(pm, x, u, 0.4)(0) ==
              doctest::Approx(0.7 + 0.4 * 2.0).epsilon(1e-14));
    }
    SUBCASE("double integrator, exact since A nilpotent") {
        Matrix a(2, 2);
        a << 0, 1, 0, 0;
        Matrix b(2, 1);
        b << 0, 1;
        auto pm = build_prediction(a, b, 1, 2);
        Vector u(2);
        u << 1.0, 0.0;
        Vector pred = predict_state(pm, Vector::Zero(2), u, 0.5);
        CHECK(pred(0) == doctest::Approx(0.125).epsilon(1e-14));
        CHECK(pred(1) == doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("build_qp scalar fixture J(u) = (4/3)u^2 + u + 1") {
    auto cfg = scalar_config();
    auto pm = build_prediction(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 1, 1);
    Vector x = Vector::Ones(1);
    auto qp = build_qp(pm, cfg, x, Vector::Zero(1), Vector::Zero(1));
    CHECK(qp.H(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(qp.g(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(qp.c == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("zero error needs zero control") {
        auto qp0 =
            build_qp(pm, cfg, Vector::Zero(1), Vector::Zero(1), Vector::Zero(1));
        CHECK(qp0.g.norm() == 0.0);
        CHECK(solve_unconstrained(qp0).norm() == 0.0);
    }
}

TEST_CASE("Hessian is symmetric with eigenvalues at least epsilon") {
    std::mt19937 rng(9);
    MpcConfig cfg;
    cfg.T = 1.5;
    cfg.r = 3;
    cfg.Q = Matrix::Identity(2, 2);
    cfg.R = Matrix::Zero(1, 1);  // semidefinite R; epsilon must rescue H
    cfg.u_lo = Vector::Constant(1, -1.0);
    cfg.u_hi = Vector::Constant(1, 1.0);
    cfg.epsilon = 1e-10;
    Matrix a = random_matrix(2, 2, rng);
    Matrix b = random_matrix(2, 1, rng);
    auto pm = build_prediction(a, b, 1, 3);
    auto qp = build_qp(pm, cfg, random_matrix(2, 1, rng).col(0),
                       random_matrix(2, 1, rng).col(0),
                       random_matrix(6, 1, rng).col(0));
    CHECK((qp.H - qp.H.transpose()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(qp.H);
    CHECK(es.eigenvalues().minCoeff() >= 0.5 * cfg.epsilon);
}

TEST_CASE("QP cost matches horizon quadrature for random stacks") {
    std::mt19937 rng(17);
    MpcConfig cfg;
    cfg.T = 0.8;
    cfg.r = 2;
    cfg.Q = Matrix::Identity(2, 2) * 2.0;
    cfg.R = Matrix::Identity(1, 1) * 0.3;
    cfg.P_terminal = Matrix::Identity(2, 2) * 0.5;
    cfg.u_lo = Vector::Constant(1, -10.0);
    cfg.u_hi = Vector::Constant(1, 10.0);
    cfg.epsilon = 0.0;
    Matrix a(2, 2);
    a << 0, 1, -1, -1;
    Matrix b(2, 1);
    b << 0, 1;
    auto pm = build_prediction(a, b, 1, 2);
    Vector x(2);
    x << 0.4, -0.6;
    Vector x1d = random_matrix(2, 1, rng).col(0);
    Vector x2d = random_matrix(4, 1, rng).col(0);
    auto qp = build_qp(pm, cfg, x, x1d, x2d);
    for (int trial = 0; trial < 5; ++trial) {
        Vector u = random_matrix(2, 1, rng).col(0);
        const double quad = quadrature_cost(pm, cfg, x, x1d, x2d, u);
        const double alg = u.dot(qp.H * u) + 2.0 * qp.g.dot(u) + qp.c;
        CHECK(alg == doctest::Approx(quad).epsilon(1e-7));
    }
}

TEST_CASE("solver stationarity against finite differences of the quadrature cost") {
    MpcConfig cfg;
    cfg.T = 1.2;
    cfg.r = 2;
    cfg.Q = Matrix::Identity(2, 2);
    cfg.R = Matrix::Identity(1, 1) * 0.1;
    cfg.u_lo = Vector::Constant(1, -10.0);
    cfg.u_hi = Vector::Constant(1, 10.0);
    cfg.epsilon = 1e-10;
    Matrix a(2, 2);
    a << 0, 1, -2, -0.5;
    Matrix b(2, 1);
    b << 0, 1;
    auto pm = build_prediction(a, b, 1, 2);
    Vector x(2);
    x << 1.0, 0.0;
    Vector x1d = Vector::Zero(2), x2d = Vector::Zero(4);
    auto qp = build_qp(pm, cfg, x, x1d, x2d);
    Vector u_star = solve_unconstrained(qp);
    Vector grad(u_star.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < u_star.size(); ++i) {
        Vector up = u_star, dn = u_star;
        up(i) += h;
        dn(i) -= h;
        grad(i) = (quadrature_cost(pm, cfg, x, x1d, x2d, up) -
                   quadrature_cost(pm, cfg, x, x1d, x2d, dn)) /
                  (2.0 * h);
    }
    CHECK(grad.norm() <= 1e-6 * (1.0 + qp.g.norm()));
}

TEST_CASE("solve_unconstrained basics") {
    QpProblem qp;
    qp.H = Matrix::Constant(1, 1, 4.0 / 3.0);
    qp.g = Vector::Constant(1, 0.5);
    CHECK(solve_unconstrained(qp)(0) == doctest::Approx(-0.375).epsilon(1e-12));

    qp.H = Matrix::Identity(2, 2);
    qp.g = Vector(2);
    qp.g << 1, -2;
    Vector u = solve_unconstrained(qp);
    CHECK(u(0) == doctest::Approx(-1.0));
    CHECK(u(1) == doctest::Approx(2.0));
}

TEST_CASE("argmin invariant under joint scaling of Q and R") {
    MpcConfig cfg;
    cfg.T = 1.0;
    cfg.r = 2;
    cfg.Q = Matrix::Identity(2, 2);
    cfg.R = Matrix::Identity(1, 1) * 0.2;
    cfg.u_lo = Vector::Constant(1, -10.0);
    cfg.u_hi = Vector::Constant(1, 10.0);
    Matrix a(2, 2);
    a << 0, 1, -1, -1;
    Matrix b(2, 1);
    b << 0, 1;
    auto pm = build_prediction(a, b, 1, 2);
    Vector x(2);
    x << 0.3, 0.7;
    auto u1 = solve_unconstrained(
        build_qp(pm, cfg, x, Vector::Zero(2), Vector::Zero(4)));
    MpcConfig scaled = cfg;
    scaled.Q *= 37.0;
    scaled.R *= 37.0;
    auto u2 = solve_unconstrained(
        build_qp(pm, scaled, x, Vector::Zero(2), Vector::Zero(4)));
    CHECK((u1 - u2).norm() < 1e-8 * (1.0 + u1.norm()));
}

TEST_CASE("prediction order: error shrinks ~2^(r+1) when tau halves") {
    Matrix a(2, 2);
    a << 0, 1, -1, -1;
    Matrix b(2, 1);
    b << 0, 1;
    LtiModel model(a, b);
    const int r = 2;
    auto pm = build_prediction(a, b, 1, r);
    Vector x(2);
    x << 0.5, -0.3;
    Vector u_stack(2);
    u_stack << 0.3, -0.2;
    auto policy = extract_policy(u_stack, 1, r, 1);
    auto u = [&policy](double t, const Vector&) { return policy.eval(t); };

    auto flow_error = [&](double tau) {
        auto traj = simulate(model, x, u, 0.0, tau, tau / 2000.0);
        return (predict_state(pm, x, u_stack, tau) -
                traj.states.col(traj.samples() - 1))
            .norm();
    };
    const double ratio = flow_error(0.2) / flow_error(0.1);
    CHECK(ratio > 8.0 * 0.75);
    CHECK(ratio < 8.0 * 1.25);
}

TEST_CASE("prediction exact on nilpotent plants with polynomial input") {
    Matrix a(3, 3);
    a << 0, 1, 0, 0, 0, 1, 0, 0, 0;  // A^3 = 0
    Matrix b(3, 1);
    b << 0, 0, 1;
    LtiModel model(a, b);
    // x3 integrates the quadratic input, so the solution is a quintic; the
    // Taylor prediction is exact only once r covers every nonzero derivative.
    const int r = 5;
    auto pm = build_prediction(a, b, 1, r);
    Vector x(3);
    x << 0.2, -0.1, 0.4;
    Vector u_stack(5);
    u_stack << 1.0, 0.5, -0.25, 0.0, 0.0;
    auto policy = extract_policy(u_stack, 1, r, 1);
    auto u = [&policy](double t, const Vector&) { return policy.eval(t); };
    auto traj = simulate(model, x, u, 0.0, 0.8, 1e-4);
    CHECK((predict_state(pm, x, u_stack, 0.8) -
           traj.states.col(traj.samples() - 1))
              .norm() < 1e-10);
}

TEST_CASE("enforce_box") {
    auto cfg = scalar_config();
    auto pm = build_prediction(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 1, 1);

    SUBCASE("interior point passes through") {
        Vector u = Vector::Constant(1, -0.375);
        CHECK((enforce_box(u, pm, cfg) - u).norm() == 0.0);
    }
    SUBCASE("constant polynomial scales to the boundary, i.e. clamps") {
        cfg.u_lo = Vector::Constant(1, -0.2);
        cfg.u_hi = Vector::Constant(1, 0.2);
        Vector u = Vector::Constant(1, -0.375);
        CHECK(enforce_box(u, pm, cfg)(0) ==
              doctest::Approx(-0.2).epsilon(1e-5));
    }
    SUBCASE("zero stack is always feasible") {
        CHECK(enforce_box(Vector::Zero(1), pm, cfg).norm() == 0.0);
    }
    SUBCASE("scaled polynomial stays inside the box at every grid sample") {
        MpcConfig wide = scalar_config();
        wide.r = 3;
        auto pm3 =
            build_prediction(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 1, 3);
        Vector u(3);
        u << 0.9, 3.0, -8.0;
        Vector boxed = enforce_box(u, pm3, wide);
        auto policy = extract_policy(boxed, 1, 3, 1);
        for (int k = 0; k < wide.constraint_grid_points; ++k) {
            const double tau =
                wide.T * k / (wide.constraint_grid_points - 1);
            const double v = policy.eval(tau)(0);
            CHECK(v <= wide.u_hi(0) + 1e-12);
            CHECK(v >= wide.u_lo(0) - 1e-12);
        }
    }
}

TEST_CASE("extract_policy") {
    Vector single = Vector::Constant(1, 0.7);
    CHECK(extract_policy(single, 1, 1, 1).eval(0.9)(0) == 0.7);

    Vector two(2);
    two << 1.0, 2.0;
    auto policy = extract_policy(two, 1, 2, 1);
    CHECK(policy.eval(0.0)(0) == doctest::Approx(1.0));
    CHECK(policy.eval(0.5)(0) == doctest::Approx(2.0));

    CHECK(extract_policy(Vector::Zero(3), 1, 3, 1).eval(0.4).norm() == 0.0);
}

TEST_CASE("config validation rejects bad weights and boxes") {
    MpcConfig cfg = scalar_config();
    CHECK_NOTHROW(cfg.validate(1, 1));

    SUBCASE("indefinite Q") {
        cfg.Q = Matrix::Constant(1, 1, -1.0);
        CHECK_THROWS_AS(cfg.validate(1, 1), DomainError);
    }
    SUBCASE("box must contain the origin") {
        cfg.u_lo = Vector::Constant(1, 0.5);
        CHECK_THROWS_AS(cfg.validate(1, 1), DomainError);
    }
    SUBCASE("wrong R shape") {
        cfg.R = Matrix::Identity(2, 2);
        CHECK_THROWS_AS(cfg.validate(1, 1), ShapeError);
    }
}
