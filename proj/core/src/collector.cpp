#include "ddmpc/collector.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace ddmpc {

namespace {

Eigen::Index grid_steps(const Trajectory& traj, double span,
                        const char* what) {
    const double pos = span / traj.dt;
    const auto k = static_cast<Eigen::Index>(std::llround(pos));
    if (k < 1 || std::abs(pos - static_cast<double>(k)) > 1e-9)
        throw DomainError(std::string(what) +
                          " must be a positive integer multiple of the "
                          "trajectory step");
    return k;
}

/// Trapezoid of the input over grid cells [k0, k0+w], honoring annotated
/// jumps: the cell ending at a jump index must use the left limit there,
/// while the stored column already holds the right limit.
Vector input_integral(const Trajectory& traj, Eigen::Index k0,
                      Eigen::Index w) {
    Vector acc = trapezoid_integral(traj.inputs.middleCols(k0, w + 1),
                                    traj.dt);
    for (const auto& [g, left] : traj.input_jumps)
        if (g > k0 && g <= k0 + w)
            acc += 0.5 * traj.dt * (left - traj.inputs.col(g));
    return acc;
}

}  // namespace

WindowSampleFull window_full(const Trajectory& traj, double t, double delta) {
    const Eigen::Index n = traj.states.rows();
    const Eigen::Index m = traj.inputs.rows();
    WindowSampleFull s;
    s.t = t;
    if (t - traj.t0 < delta - 1e-12) {
        s.F = Vector::Zero(n);
        s.Xi_x = Vector::Zero(n);
        s.Xi_u = Vector::Zero(m);
        return s;
    }
    const Eigen::Index k1 = traj.index_of(t);
    const Eigen::Index w = grid_steps(traj, delta, "window_full: delta");
    const Eigen::Index k0 = k1 - w;
    s.F = traj.states.col(k1) - traj.states.col(k0);
    s.Xi_x = trapezoid_integral(traj.states.middleCols(k0, w + 1), traj.dt);
    s.Xi_u = input_integral(traj, k0, w);
    return s;
}

WindowSamplePartial window_partial(const Trajectory& traj, double t,
                                   double delta1, double delta2) {
    if (std::abs(delta1 - delta2) < 1e-12)
        throw DomainError("window_partial: delta1 must differ from delta2");
    const Eigen::Index n = traj.states.rows();
    if (n % 2 != 0)
        throw DomainError("window_partial: state dimension must be even");
    const Eigen::Index q = n / 2;
    const Eigen::Index m = traj.inputs.rows();

    WindowSamplePartial s;
    s.t = t;
    if (t - traj.t0 < delta1 + delta2 - 1e-12) {
        s.F1 = Vector::Zero(q);
        s.Xi_p = Vector::Zero(q);
        s.Xi_v = Vector::Zero(q);
        s.Xi_u1 = Vector::Zero(m);
        return s;
    }

    const Eigen::Index w1 = grid_steps(traj, delta1, "window_partial: delta1");
    const Eigen::Index w2 = grid_steps(traj, delta2, "window_partial: delta2");
    const Eigen::Index kt = traj.index_of(t);
    const auto xi = traj.states.topRows(q);

    s.F1 = xi.col(kt - w2 - w1) - xi.col(kt - w1) + xi.col(kt) -
           xi.col(kt - w2);

    // Inner integrals g(tau) = int_{tau-d1}^{tau} over the outer grid
    // [t-d2, t], then one outer trapezoid pass.
    Matrix inner_xi(q, w2 + 1);
    Matrix inner_u(m, w2 + 1);
    for (Eigen::Index j = 0; j <= w2; ++j) {
        const Eigen::Index kj = kt - w2 + j;
        inner_xi.col(j) =
            trapezoid_integral(xi.middleCols(kj - w1, w1 + 1), traj.dt);
        inner_u.col(j) = input_integral(traj, kj - w1, w1);
    }
    s.Xi_p = trapezoid_integral(inner_xi, traj.dt);
    s.Xi_u1 = trapezoid_integral(inner_u, traj.dt);
    s.Xi_v = trapezoid_integral(xi.middleCols(kt - w2, w2 + 1), traj.dt) -
             trapezoid_integral(xi.middleCols(kt - w1 - w2, w2 + 1), traj.dt);
    return s;
}

RegressorRow regressor_row_full(const WindowSampleFull& s, Eigen::Index n,
                                Eigen::Index m) {
    RegressorRow row;
    row.gamma_row = s.F;
    row.psi_row.resize(n, n * n + n * m);
    const Matrix id = Matrix::Identity(n, n);
    row.psi_row.leftCols(n * n) = kron(s.Xi_x, id).transpose();
    row.psi_row.rightCols(n * m) = kron(s.Xi_u, id).transpose();
    return row;
}

RegressorRow regressor_row_partial(const WindowSamplePartial& s,
                                   Eigen::Index q, Eigen::Index m) {
    RegressorRow row;
    row.gamma_row = s.F1;
    row.psi_row.resize(q, 2 * q * q + m * q);
    const Matrix id = Matrix::Identity(q, q);
    row.psi_row.leftCols(q * q) = kron(s.Xi_p, id).transpose();
    row.psi_row.middleCols(q * q, q * q) = kron(s.Xi_v, id).transpose();
    row.psi_row.rightCols(m * q) = kron(s.Xi_u1, id).transpose();
    return row;
}

RegressorBatch assemble_batch(const Trajectory& traj, double delta, int l,
                              MeasurementMode mode) {
    const Eigen::Index n = traj.states.rows();
    const Eigen::Index m = traj.inputs.rows();
    if (l < 1) throw DomainError("assemble_batch: need l >= 1");

    const double span = traj.t_end() - traj.t0;
    if (static_cast<double>(l) * delta > span + 1e-9)
        throw DomainError("assemble_batch: trajectory spans " +
                          std::to_string(span) + " s, need " +
                          std::to_string(l * delta) + " s for l samples");

    RegressorBatch batch;
    batch.mode = mode;
    batch.n = n;
    batch.m = m;

    Eigen::Index rows_per = 0;
    Eigen::Index cols = 0;
    double threshold = 0.0;
    if (mode == MeasurementMode::Full) {
        rows_per = n;
        cols = n * n + n * m;
        threshold = delta;
    } else {
        if (n % 2 != 0)
            throw DomainError(
                "assemble_batch: partial mode requires even state dimension");
        batch.q = n / 2;
        rows_per = batch.q;
        cols = 2 * batch.q * batch.q + m * batch.q;
        threshold = 3.0 * delta;  // delta1 + delta2 with the 1x/2x defaults
    }

    std::vector<RegressorRow> rows;
    for (int i = 0; i <= l; ++i) {
        const double t = traj.t0 + static_cast<double>(i) * delta;
        if (t - traj.t0 < threshold - 1e-12) continue;  // all-zero row
        if (mode == MeasurementMode::Full) {
            rows.push_back(
                regressor_row_full(window_full(traj, t, delta), n, m));
        } else {
            rows.push_back(regressor_row_partial(
                window_partial(traj, t, delta, 2.0 * delta), batch.q, m));
        }
    }

    const auto nrows = static_cast<Eigen::Index>(rows.size()) * rows_per;
    if (nrows < cols) {
        const auto l_min = (cols + rows_per - 1) / rows_per +
                           static_cast<Eigen::Index>(threshold / delta);
        throw DomainError("assemble_batch: " + std::to_string(nrows) +
                          " rows < " + std::to_string(cols) +
                          " parameters; need l >= " + std::to_string(l_min));
    }

    batch.sample_count = static_cast<int>(rows.size());
    batch.gamma.resize(nrows);
    batch.psi.resize(nrows, cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto off = static_cast<Eigen::Index>(i) * rows_per;
        batch.gamma.segment(off, rows_per) = rows[i].gamma_row;
        batch.psi.middleRows(off, rows_per) = rows[i].psi_row;
    }
    return batch;
}

void write_batch_csv(const RegressorBatch& batch, std::ostream& os) {
    os << "mode," << (batch.mode == MeasurementMode::Full ? "full" : "partial")
       << ",n," << batch.n << ",m," << batch.m << ",q," << batch.q
       << ",samples," << batch.sample_count << "\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < batch.psi.rows(); ++i) {
        os << batch.gamma(i);
        for (Eigen::Index j = 0; j < batch.psi.cols(); ++j)
            os << "," << batch.psi(i, j);
        os << "\n";
    }
}

RegressorBatch read_batch_csv(std::istream& is) {
    RegressorBatch batch;
    std::string line;
    if (!std::getline(is, line))
        throw DomainError("read_batch_csv: empty input");
    {
        std::stringstream hs(line);
        std::string key, value;
        while (std::getline(hs, key, ',') && std::getline(hs, value, ',')) {
            if (key == "mode")
                batch.mode = value == "partial" ? MeasurementMode::Partial
                                                : MeasurementMode::Full;
            else if (key == "n") batch.n = std::stol(value);
            else if (key == "m") batch.m = std::stol(value);
            else if (key == "q") batch.q = std::stol(value);
            else if (key == "samples") batch.sample_count = std::stoi(value);
        }
    }
    std::vector<std::vector<double>> data;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        data.push_back(std::move(row));
    }
    if (data.empty()) throw DomainError("read_batch_csv: no data rows");
    const auto nrows = static_cast<Eigen::Index>(data.size());
    const auto cols = static_cast<Eigen::Index>(data.front().size()) - 1;
    batch.gamma.resize(nrows);
    batch.psi.resize(nrows, cols);
    for (Eigen::Index i = 0; i < nrows; ++i) {
        const auto& row = data[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols + 1)
            throw DomainError("read_batch_csv: ragged row");
        batch.gamma(i) = row[0];
        for (Eigen::Index j = 0; j < cols; ++j)
            batch.psi(i, j) = row[static_cast<std::size_t>(j) + 1];
    }
    return batch;
}

}  // namespace ddmpc
