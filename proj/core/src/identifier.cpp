#include "ddmpc/identifier.hpp"

#include <ostream>

namespace ddmpc {

ParameterEstimate estimate(const RegressorBatch& batch, double cond_threshold) {
    ParameterEstimate est;
    est.mode = batch.mode;
    est.theta_hat = least_squares(batch.psi, batch.gamma, cond_threshold);
    est.residual_norm = (batch.psi * est.theta_hat - batch.gamma).norm();

    Eigen::BDCSVD<Matrix> svd(batch.psi);
    const auto& sv = svd.singularValues();
    est.condition_estimate = sv(0) / sv(sv.size() - 1);

    const Eigen::Index n = batch.n;
    const Eigen::Index m = batch.m;
    if (batch.mode == MeasurementMode::Full) {
        est.A_hat = unvec(est.theta_hat.head(n * n), n, n);
        est.B_hat = unvec(est.theta_hat.tail(n * m), n, m);
    } else {
        const Eigen::Index q = batch.q;
        const Matrix A1 = unvec(est.theta_hat.segment(0, q * q), q, q);
        const Matrix A2 = unvec(est.theta_hat.segment(q * q, q * q), q, q);
        const Matrix B1 = unvec(est.theta_hat.tail(m * q), q, m);
        est.A_hat = Matrix::Zero(n, n);
        est.A_hat.topRightCorner(q, q) = Matrix::Identity(q, q);
        est.A_hat.bottomLeftCorner(q, q) = A1;
        est.A_hat.bottomRightCorner(q, q) = A2;
        est.B_hat = Matrix::Zero(n, m);
        est.B_hat.bottomRows(q) = B1;
    }
    return est;
}

ExcitationReport excitation_report(const RegressorBatch& batch,
                                   double cond_threshold) {
    ExcitationReport rep;
    Eigen::BDCSVD<Matrix> svd(batch.psi);
    const auto& sv = svd.singularValues();
    rep.min_singular_value = sv(sv.size() - 1);
    rep.condition_estimate =
        rep.min_singular_value > 0.0
            ? sv(0) / rep.min_singular_value
            : std::numeric_limits<double>::infinity();
    rep.rank_ok = rep.condition_estimate < cond_threshold;
    return rep;
}

double estimate_error(const ParameterEstimate& est, const LtiModel& truth) {
    if (est.A_hat.rows() != truth.A.rows() ||
        est.A_hat.cols() != truth.A.cols() ||
        est.B_hat.rows() != truth.B.rows() ||
        est.B_hat.cols() != truth.B.cols())
        throw ShapeError("estimate_error: estimate/truth dimension mismatch");
    Matrix diff(truth.A.rows(), truth.A.cols() + truth.B.cols());
    diff << est.A_hat - truth.A, est.B_hat - truth.B;
    Matrix ref(truth.A.rows(), truth.A.cols() + truth.B.cols());
    ref << truth.A, truth.B;
    return diff.norm() / ref.norm();
}

void write_estimate_report(const ParameterEstimate& est, std::ostream& os) {
    os.precision(9);
    os << "mode: "
       << (est.mode == MeasurementMode::Full ? "full" : "partial") << "\n";
    os << "A_hat:\n" << est.A_hat << "\n";
    os << "B_hat:\n" << est.B_hat << "\n";
    os << "residual_norm: " << est.residual_norm << "\n";
    os << "condition_estimate: " << est.condition_estimate << "\n";
}

}  // namespace ddmpc
