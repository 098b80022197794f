#include "doctest.h"

#include "ddmpc/identifier.hpp"
#include "support.hpp"

using namespace ddmpc;

namespace {

Trajectory excited_trajectory(const LtiModel& model, double t_end, double dt,
                              int dither_count) {
    ExcitationSpec exc;
    exc.K0 = Matrix::Zero(model.m(), model.n());
    exc.dither = default_dither(dither_count, static_cast<int>(model.m()));
    return simulate(
        model, Vector::Zero(model.n()),
        [&exc](double t, const Vector& x) {
            return excitation_input(exc, x, t);
        },
        0.0, t_end, dt);
}

}  // namespace

TEST_CASE("scalar plant identified to quadrature accuracy") {
    LtiModel model(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0));
    auto traj = excited_trajectory(model, 2.5, 1e-3, 2);
    auto batch = assemble_batch(traj, 0.05, 50, MeasurementMode::Full);
    auto est = estimate(batch);
    CHECK(std::abs(est.A_hat(0, 0) + 1.0) < 1e-4);
    CHECK(std::abs(est.B_hat(0, 0) - 1.0) < 1e-4);
    CHECK(estimate_error(est, model) < 1e-4);
    CHECK(excitation_report(batch).rank_ok);
}

TEST_CASE("zero regressor raises a rank-deficiency error") {
    RegressorBatch batch;
    batch.n = 1;
    batch.m = 1;
    batch.mode = MeasurementMode::Full;
    batch.sample_count = 4;
    batch.psi = Matrix::Zero(4, 2);
    batch.gamma = Vector::Zero(4);
    CHECK_THROWS_AS(estimate(batch), RankDeficientError);
}

TEST_CASE("partial-state identification recovers the Eq-structured blocks") {
    Matrix a(2, 2);
    a << 0, 1, -2, -3;
    Matrix b(2, 1);
    b << 0, 1;
    LtiModel model(a, b);
    auto traj = excited_trajectory(model, 3.0, 1e-3, 6);
    auto batch = assemble_batch(traj, 0.05, 60, MeasurementMode::Partial);
    auto est = estimate(batch);
    CHECK(est.mode == MeasurementMode::Partial);
    // known blocks are written exactly
    CHECK(est.A_hat(0, 0) == 0.0);
    CHECK(est.A_hat(0, 1) == 1.0);
    CHECK(est.B_hat(0, 0) == 0.0);
    CHECK(std::abs(est.A_hat(1, 0) + 2.0) < 1e-3);
    CHECK(std::abs(est.A_hat(1, 1) + 3.0) < 1e-3);
    CHECK(std::abs(est.B_hat(1, 0) - 1.0) < 1e-3);
    CHECK(estimate_error(est, model) < 1e-3);
}

TEST_CASE("partial and full estimates agree on the structured plant") {
    Matrix a(2, 2);
    a << 0, 1, -2, -3;
    Matrix b(2, 1);
    b << 0, 1;
    LtiModel model(a, b);
    auto traj = excited_trajectory(model, 3.0, 1e-3, 6);
    auto full = estimate(assemble_batch(traj, 0.05, 60, MeasurementMode::Full));
    auto part =
        estimate(assemble_batch(traj, 0.05, 60, MeasurementMode::Partial));
    CHECK((full.A_hat.row(1) - part.A_hat.row(1)).norm() < 1e-3);
    CHECK((full.B_hat.row(1) - part.B_hat.row(1)).norm() < 1e-3);
}

TEST_CASE("estimate error halves twice when the grid step halves") {
    LtiModel model(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0));
    double errors[2];
    int idx = 0;
    for (double dt : {1e-3, 5e-4}) {
        auto traj = excited_trajectory(model, 2.5, dt, 2);
        auto est =
            estimate(assemble_batch(traj, 0.05, 50, MeasurementMode::Full));
        errors[idx++] = estimate_error(est, model);
    }
    CHECK(errors[0] / errors[1] > 3.0);
    CHECK(errors[0] / errors[1] < 5.0);
}

TEST_CASE("excitation_report diagnostics") {
    RegressorBatch batch;
    batch.n = 2;
    batch.m = 0;
    batch.sample_count = 2;

    SUBCASE("identity regressor") {
        batch.psi = Matrix::Identity(4, 4);
        batch.gamma = Vector::Zero(4);
        auto rep = excitation_report(batch);
        CHECK(rep.rank_ok);
        CHECK(rep.condition_estimate == doctest::Approx(1.0));
    }
    SUBCASE("duplicated columns") {
        batch.psi = Matrix::Zero(4, 4);
        batch.psi.col(0) = Vector::Ones(4);
        batch.psi.col(1) = Vector::Ones(4);
        batch.gamma = Vector::Zero(4);
        CHECK_FALSE(excitation_report(batch).rank_ok);
    }
}

TEST_CASE("estimate_error definition") {
    Matrix a(2, 2);
    a << 1, 0, 0, 1;
    Matrix b(2, 1);
    b << 1, 2;
    LtiModel truth(a, b);

    ParameterEstimate est;
    est.A_hat = a;
    est.B_hat = b;
    CHECK(estimate_error(est, truth) == 0.0);

    est.A_hat = a + Matrix::Identity(2, 2);
    Matrix ab(2, 3);
    ab << a, b;
    CHECK(estimate_error(est, truth) ==
          doctest::Approx(std::sqrt(2.0) / ab.norm()).epsilon(1e-12));

    est.A_hat = Matrix::Zero(3, 3);
    CHECK_THROWS_AS(estimate_error(est, truth), ShapeError);
}

TEST_CASE("reshape round trip and determinism") {
    LtiModel model(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0));
    auto traj = excited_trajectory(model, 2.5, 1e-3, 2);
    auto batch = assemble_batch(traj, 0.05, 50, MeasurementMode::Full);
    auto a = estimate(batch);
    auto b = estimate(batch);
    CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() == 0.0);
    Vector rebuilt(2);
    rebuilt << vec(a.A_hat), vec(a.B_hat);
    CHECK((rebuilt - a.theta_hat).cwiseAbs().maxCoeff() == 0.0);
}
