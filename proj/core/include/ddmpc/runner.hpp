#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddmpc/collector.hpp"
#include "ddmpc/identifier.hpp"
#include "ddmpc/mpc.hpp"

namespace ddmpc {

enum class Retention { Growing, Window };

/// Full closed-loop experiment description: ground-truth plant, excitation
/// phase, collection grid, identification policy, controller, reference.
struct ExperimentConfig {
    LtiModel plant;
    Vector x0;
    MeasurementMode measurement_mode = MeasurementMode::Full;
    ExcitationSpec excitation;
    double delta = 0.05;     // collection sampling period
    int l = 0;               // batch sample count; 0 means 4*(n^2+nm)
    double dt_sim = 1e-3;    // integrator step
    Retention retention = Retention::Growing;
    bool reidentify = true;  // re-estimate at every control instant
    MpcConfig mpc;
    ReferenceSpec reference;
    double control_period = 0.0;  // delta_c; 0 means delta
    double total_time = 10.0;
    std::uint64_t seed = 0;
    // Hands the true (A, B) to the controller and skips the excitation and
    // identification phases entirely; ablation/regression hook.
    bool use_true_model = false;
    // Capture the first control-step QP in the result (debug dump hook).
    bool capture_qp = false;

    int effective_l() const;
    double effective_control_period() const;
    double effective_excitation_duration() const;

    /// Checks grid alignment, weight definiteness, and mode constraints.
    void validate() const;
};

/// Per-step closed-loop telemetry during the control phase.
struct LogRecord {
    double t = 0.0;
    Vector x;
    Vector u_applied;
    Vector x_d;
    double e_norm = 0.0;
    double w_norm = 0.0;
    double theta_err = 0.0;
    double stage_cost = 0.0;
    std::string qp_status = "ok";
};

struct ExperimentResult {
    std::vector<LogRecord> log;
    ParameterEstimate estimate;
    ExcitationReport report;
    std::optional<QpProblem> first_qp;
};

struct Summary {
    double final_tracking_error = 0.0;
    double max_abs_input = 0.0;
    double mean_stage_cost = 0.0;
    std::vector<double> estimate_error_trace;
    std::vector<double> w_norm_trace;
};

/// Instantaneous model-mismatch residual w = (A_hat - A) x + (B_hat - B) u.
Vector residual_w(const Vector& x, const Vector& u,
                  const ParameterEstimate& est, const LtiModel& truth);

/// Runs excitation, identification, then the receding-horizon loop.
/// Throws RankDeficientError if the excitation data cannot identify the
/// plant, NumericalError on a QP failure (message carries the step index).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

Summary summarize(const std::vector<LogRecord>& log);

/// Columns: t, x_0..x_{n-1}, u_0..u_{m-1}, xd_0..xd_{n-1}, e_norm, w_norm,
/// theta_err, stage_cost, qp_status. Values printed with 9 significant
/// digits so logs diff cleanly across runs.
void write_log_csv(const std::vector<LogRecord>& log, std::ostream& os);

void write_report(const Summary& summary, const ParameterEstimate& estimate,
                  std::ostream& os);

}  // namespace ddmpc
