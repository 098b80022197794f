#include "ddmpc/runner.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ddmpc {

namespace {

bool is_multiple(double value, double base, double tol = 1e-9) {
    const double ratio = value / base;
    return std::abs(ratio - std::llround(ratio)) <= tol;
}

Trajectory head_of(const Trajectory& traj, Eigen::Index last_index) {
    Trajectory out;
    out.t0 = traj.t0;
    out.dt = traj.dt;
    out.states = traj.states.leftCols(last_index + 1);
    out.inputs = traj.inputs.leftCols(last_index + 1);
    for (const auto& jump : traj.input_jumps)
        if (jump.first <= last_index) out.input_jumps.push_back(jump);
    return out;
}

/// Keeps only the newest `keep` row blocks of a batch (sliding window).
RegressorBatch tail_of(const RegressorBatch& batch, int keep) {
    if (batch.sample_count <= keep) return batch;
    const Eigen::Index rows_per = batch.psi.rows() / batch.sample_count;
    const Eigen::Index nrows = keep * rows_per;
    RegressorBatch out = batch;
    out.sample_count = keep;
    out.gamma = batch.gamma.tail(nrows).eval();
    out.psi = batch.psi.bottomRows(nrows).eval();
    return out;
}

Vector clamp_to_box(const Vector& u, const Vector& lo, const Vector& hi) {
    return u.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

int ExperimentConfig::effective_l() const {
    if (l > 0) return l;
    const auto n = plant.n();
    const auto m = plant.m();
    return static_cast<int>(4 * (n * n + n * m));
}

double ExperimentConfig::effective_control_period() const {
    return control_period > 0.0 ? control_period : delta;
}

double ExperimentConfig::effective_excitation_duration() const {
    if (excitation.duration > 0.0) return excitation.duration;
    double d = effective_l() * delta;
    if (measurement_mode == MeasurementMode::Partial) d += 3.0 * delta;
    return d;
}

void ExperimentConfig::validate() const {
    const auto n = plant.n();
    const auto m = plant.m();
    if (x0.size() != n) throw ShapeError("config: x0 dimension mismatch");
    if (dt_sim <= 0.0) throw DomainError("config: dt_sim must be positive");
    if (!is_multiple(delta, dt_sim))
        throw DomainError("config: delta must be an integer multiple of dt_sim");
    const double dc = effective_control_period();
    if (!is_multiple(dc, dt_sim))
        throw DomainError(
            "config: control_period must be an integer multiple of dt_sim");
    if (mpc.T < dc)
        throw DomainError("config: horizon T must cover the control period");
    if (!use_true_model && total_time < effective_excitation_duration())
        throw DomainError(
            "config: total_time must cover the excitation phase");
    if (measurement_mode == MeasurementMode::Partial && n % 2 != 0)
        throw DomainError("config: partial mode requires even state dimension");
    if (excitation.K0.size() > 0 &&
        (excitation.K0.rows() != m || excitation.K0.cols() != n))
        throw ShapeError("config: K0 must be m x n");
    if (reference.dim() != n)
        throw ShapeError("config: reference dimension mismatch");
    mpc.validate(n, m);
}

Vector residual_w(const Vector& x, const Vector& u,
                  const ParameterEstimate& est, const LtiModel& truth) {
    if (x.size() != truth.n() || u.size() != truth.m())
        throw ShapeError("residual_w: dimension mismatch");
    return (est.A_hat - truth.A) * x + (est.B_hat - truth.B) * u;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto n = cfg.plant.n();
    const auto m = cfg.plant.m();
    const double dt = cfg.dt_sim;
    const double dc = cfg.effective_control_period();
    const double t_exc =
        cfg.use_true_model ? 0.0 : cfg.effective_excitation_duration();
    const auto steps_total =
        static_cast<Eigen::Index>(std::llround(cfg.total_time / dt));
    const auto steps_exc = static_cast<Eigen::Index>(std::llround(t_exc / dt));
    const auto steps_per_control =
        static_cast<Eigen::Index>(std::llround(dc / dt));

    ExcitationSpec exc = cfg.excitation;
    if (exc.K0.size() == 0) exc.K0 = Matrix::Zero(m, n);

    // Growing history over the whole run; identification windows read it.
    Trajectory history;
    history.t0 = 0.0;
    history.dt = dt;
    history.states.resize(n, steps_total + 1);
    history.inputs.resize(m, steps_total + 1);

    // Phase 1: excite under the nominal feedback plus dither.
    const InputFunction u_exc = [&exc](double t, const Vector& x) {
        return excitation_input(exc, x, t);
    };
    Vector x = cfg.x0;
    for (Eigen::Index k = 0; k <= steps_exc; ++k) {
        const double t = static_cast<double>(k) * dt;
        history.states.col(k) = x;
        history.inputs.col(k) = u_exc(t, x);
        if (k < steps_exc) x = rk4_step(cfg.plant, x, u_exc, t, dt);
    }

    const auto assemble_at = [&](Eigen::Index step) {
        const Trajectory head = head_of(history, step);
        const int l_now = static_cast<int>(
            std::floor((head.t_end() + 1e-9) / cfg.delta));
        RegressorBatch batch = assemble_batch(head, cfg.delta, l_now,
                                              cfg.measurement_mode);
        if (cfg.retention == Retention::Window)
            batch = tail_of(batch, cfg.effective_l());
        return batch;
    };

    ExperimentResult result;
    if (cfg.use_true_model) {
        result.estimate.A_hat = cfg.plant.A;
        result.estimate.B_hat = cfg.plant.B;
        result.estimate.theta_hat.resize(n * n + n * m);
        result.estimate.theta_hat << vec(cfg.plant.A), vec(cfg.plant.B);
        result.estimate.condition_estimate = 1.0;
        result.report.rank_ok = true;
        result.report.condition_estimate = 1.0;
    } else {
        const RegressorBatch batch = assemble_at(steps_exc);
        result.report = excitation_report(batch);
        if (!result.report.rank_ok)
            throw RankDeficientError(
                "run_experiment: excitation data is rank deficient "
                "(condition estimate " +
                    std::to_string(result.report.condition_estimate) + ")",
                result.report.condition_estimate);
        result.estimate = estimate(batch);
    }

    // Phase 2: receding-horizon control.
    result.log.reserve(static_cast<std::size_t>(steps_total - steps_exc));
    PolynomialPolicy policy;
    double t_k = t_exc;
    for (Eigen::Index k = steps_exc; k < steps_total; ++k) {
        const double t = static_cast<double>(k) * dt;
        // Record the sample at t before identification reads the history.
        // The input column holds u(t^-) from the outgoing policy for now and
        // is overwritten with the applied input below; at k == steps_exc the
        // excitation phase already filled it.
        history.states.col(k) = x;
        if (k > steps_exc)
            history.inputs.col(k) = clamp_to_box(policy.eval(t - t_k),
                                                 cfg.mpc.u_lo, cfg.mpc.u_hi);
        const bool control_instant =
            (k - steps_exc) % steps_per_control == 0;
        Vector u_left;
        if (control_instant) {
            // Left limit of the input at this instant: the excitation value
            // at the phase switch, the outgoing policy afterwards. Kept as a
            // jump annotation so window integrals stay trapezoid-accurate.
            u_left = history.inputs.col(k);
            t_k = t;
            if (cfg.reidentify && !cfg.use_true_model && k > steps_exc)
                result.estimate = estimate(assemble_at(k));
            const int rho = cfg.mpc.rho_override
                                ? *cfg.mpc.rho_override
                                : relative_degree(result.estimate.A_hat,
                                                  result.estimate.B_hat,
                                                  cfg.mpc.rho_tol);
            if (cfg.mpc.r < rho)
                throw DomainError("run_experiment: control order r < rho at "
                                  "step " + std::to_string(k));
            try {
                const auto pm = build_prediction(result.estimate.A_hat,
                                                 result.estimate.B_hat, rho,
                                                 cfg.mpc.r);
                const auto ref =
                    reference_stack(cfg.reference, t_k, cfg.mpc.r, rho);
                const auto qp =
                    build_qp(pm, cfg.mpc, x, ref.X1d, ref.X2d);
                if (cfg.capture_qp && !result.first_qp) result.first_qp = qp;
                const Vector u_star = solve_unconstrained(qp);
                policy = extract_policy(enforce_box(u_star, pm, cfg.mpc), rho,
                                        cfg.mpc.r, m);
            } catch (const NumericalError& e) {
                throw NumericalError("run_experiment: QP failure at step " +
                                     std::to_string(k) + ": " + e.what());
            }
        }

        const InputFunction u_ctrl = [&](double tau, const Vector&) {
            return clamp_to_box(policy.eval(tau - t_k), cfg.mpc.u_lo,
                                cfg.mpc.u_hi);
        };
        const Vector u_now = u_ctrl(t, x);

        LogRecord rec;
        rec.t = t;
        rec.x = x;
        rec.u_applied = u_now;
        rec.x_d = cfg.reference.value(t);
        const Vector e = x - rec.x_d;
        rec.e_norm = e.norm();
        rec.w_norm = residual_w(x, u_now, result.estimate, cfg.plant).norm();
        rec.theta_err = estimate_error(result.estimate, cfg.plant);
        rec.stage_cost = e.dot(cfg.mpc.Q * e) + u_now.dot(cfg.mpc.R * u_now);
        result.log.push_back(std::move(rec));

        history.inputs.col(k) = u_now;
        if (control_instant)
            history.input_jumps.emplace_back(k, std::move(u_left));
        x = rk4_step(cfg.plant, x, u_ctrl, t, dt);
    }
    history.states.col(steps_total) = x;
    history.inputs.col(steps_total) =
        clamp_to_box(policy.eval(cfg.total_time - t_k), cfg.mpc.u_lo,
                     cfg.mpc.u_hi);
    return result;
}

Summary summarize(const std::vector<LogRecord>& log) {
    if (log.empty()) throw DomainError("summarize: empty log");
    Summary s;
    s.final_tracking_error = log.back().e_norm;
    double cost_acc = 0.0;
    for (const auto& rec : log) {
        s.max_abs_input =
            std::max(s.max_abs_input, rec.u_applied.cwiseAbs().maxCoeff());
        cost_acc += rec.stage_cost;
        s.estimate_error_trace.push_back(rec.theta_err);
        s.w_norm_trace.push_back(rec.w_norm);
    }
    s.mean_stage_cost = cost_acc / static_cast<double>(log.size());
    return s;
}

namespace {
std::string fmt9(double v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
}
}  // namespace

void write_log_csv(const std::vector<LogRecord>& log, std::ostream& os) {
    if (log.empty()) throw DomainError("write_log_csv: empty log");
    const auto n = log.front().x.size();
    const auto m = log.front().u_applied.size();
    os << "t";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i;
    for (Eigen::Index i = 0; i < m; ++i) os << ",u_" << i;
    for (Eigen::Index i = 0; i < n; ++i) os << ",xd_" << i;
    os << ",e_norm,w_norm,theta_err,stage_cost,qp_status\n";
    for (const auto& rec : log) {
        os << fmt9(rec.t);
        for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt9(rec.x(i));
        for (Eigen::Index i = 0; i < m; ++i)
            os << "," << fmt9(rec.u_applied(i));
        for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt9(rec.x_d(i));
        os << "," << fmt9(rec.e_norm) << "," << fmt9(rec.w_norm) << ","
           << fmt9(rec.theta_err) << "," << fmt9(rec.stage_cost) << ","
           << rec.qp_status << "\n";
    }
}

void write_report(const Summary& summary, const ParameterEstimate& estimate,
                  std::ostream& os) {
    os << "closed-loop report\n";
    os << "final_tracking_error: " << fmt9(summary.final_tracking_error)
       << "\n";
    os << "max_abs_input: " << fmt9(summary.max_abs_input) << "\n";
    os << "mean_stage_cost: " << fmt9(summary.mean_stage_cost) << "\n";
    os << "final_estimate_error: "
       << fmt9(summary.estimate_error_trace.back()) << "\n";
    os << "final_w_norm: " << fmt9(summary.w_norm_trace.back()) << "\n";
    write_estimate_report(estimate, os);
}

}  // namespace ddmpc
