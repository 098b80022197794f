#include <benchmark/benchmark.h>

#include "ddmpc/collector.hpp"
#include "ddmpc/identifier.hpp"
#include "ddmpc/mpc.hpp"
#include "ddmpc/plant.hpp"

using namespace ddmpc;

namespace {

LtiModel bench_plant() {
    Matrix a(4, 4);
    a << -1.2, 0, 0.3, 0,
          0.8, -1.6, 0, 0.2,
          0.2, 0, -1, 0,
          0, 0.3, 0.7, -1.4;
    Matrix b(4, 2);
    b << 1, 0,
         0.3, 0,
         0, 1,
         0, 0.4;
    return LtiModel(a, b);
}

Trajectory excited_trajectory(double dt) {
    const auto model = bench_plant();
    ExcitationSpec exc;
    exc.K0 = Matrix::Zero(2, 4);
    exc.dither = default_dither(24, 2);
    return simulate(
        model, Vector::Zero(4),
        [&exc](double t, const Vector& x) {
            return excitation_input(exc, x, t);
        },
        0.0, 5.0, dt);
}

void bm_monomial_gram(benchmark::State& state) {
    const Matrix w = Matrix::Identity(4, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(monomial_gram(1, 6, 1, 6, 1.0, w));
}
BENCHMARK(bm_monomial_gram);

void bm_rk4_step(benchmark::State& state) {
    const auto model = bench_plant();
    const InputFunction u = [](double, const Vector&) {
        return Vector::Constant(2, 0.1);
    };
    Vector x = Vector::Ones(4);
    for (auto _ : state) {
        x = rk4_step(model, x, u, 0.0, 1e-3);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(bm_rk4_step);

void bm_assemble_batch(benchmark::State& state) {
    const auto traj = excited_trajectory(1e-3);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            assemble_batch(traj, 0.05, 96, MeasurementMode::Full));
}
BENCHMARK(bm_assemble_batch);

void bm_estimate(benchmark::State& state) {
    const auto batch =
        assemble_batch(excited_trajectory(1e-3), 0.05, 96,
                       MeasurementMode::Full);
    for (auto _ : state) benchmark::DoNotOptimize(estimate(batch));
}
BENCHMARK(bm_estimate);

void bm_build_qp(benchmark::State& state) {
    const auto model = bench_plant();
    MpcConfig cfg;
    cfg.T = 1.0;
    cfg.r = 3;
    cfg.Q = Matrix::Identity(4, 4);
    cfg.R = 0.01 * Matrix::Identity(2, 2);
    cfg.u_lo = Vector::Constant(2, -5.0);
    cfg.u_hi = Vector::Constant(2, 5.0);
    const auto pm = build_prediction(model.A, model.B, 1, cfg.r);
    const Vector x = Vector::Ones(4);
    const Vector x1d = Vector::Zero(4);
    const Vector x2d = Vector::Zero(4 * cfg.r);
    for (auto _ : state)
        benchmark::DoNotOptimize(build_qp(pm, cfg, x, x1d, x2d));
}
BENCHMARK(bm_build_qp);

void bm_solve_qp(benchmark::State& state) {
    const auto model = bench_plant();
    MpcConfig cfg;
    cfg.T = 1.0;
    cfg.r = 3;
    cfg.Q = Matrix::Identity(4, 4);
    cfg.R = 0.01 * Matrix::Identity(2, 2);
    cfg.u_lo = Vector::Constant(2, -5.0);
    cfg.u_hi = Vector::Constant(2, 5.0);
    const auto pm = build_prediction(model.A, model.B, 1, cfg.r);
    const auto qp = build_qp(pm, cfg, Vector::Ones(4), Vector::Zero(4),
                             Vector::Zero(4 * cfg.r));
    for (auto _ : state) benchmark::DoNotOptimize(solve_unconstrained(qp));
}
BENCHMARK(bm_solve_qp);

}  // namespace

BENCHMARK_MAIN();
