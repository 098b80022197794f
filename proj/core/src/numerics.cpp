#include "ddmpc/numerics.hpp"

#include <cmath>

namespace ddmpc {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols)
        throw ShapeError("unvec: vector length " + std::to_string(v.size()) +
                         " != " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Vector least_squares(const Matrix& psi, const Vector& gamma,
                     double cond_threshold) {
    if (psi.rows() != gamma.size())
        throw ShapeError("least_squares: psi has " +
                         std::to_string(psi.rows()) + " rows, gamma has " +
                         std::to_string(gamma.size()) + " entries");
    if (psi.rows() < psi.cols())
        throw ShapeError("least_squares: underdetermined system (" +
                         std::to_string(psi.rows()) + " rows < " +
                         std::to_string(psi.cols()) + " cols)");

    Eigen::BDCSVD<Matrix> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    const double cond = (smin > 0.0) ? smax / smin
                                     : std::numeric_limits<double>::infinity();
    if (!(cond < cond_threshold))
        throw RankDeficientError(
            "least_squares: regressor numerically rank deficient "
            "(condition estimate " + std::to_string(cond) + ")",
            cond);
    return svd.solve(gamma);
}

namespace {
double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}
}  // namespace

Matrix monomial_gram(int j_min, int j_max, int k_min, int k_max,
                     double horizon, const Matrix& weight) {
    if (horizon <= 0.0)
        throw DomainError("monomial_gram: horizon must be positive");
    if (j_max < j_min || k_max < k_min || j_min < 0 || k_min < 0)
        throw DomainError("monomial_gram: empty or negative index range");
    if (weight.rows() != weight.cols())
        throw ShapeError("monomial_gram: weight must be square");

    const Eigen::Index d = weight.rows();
    const int nr = j_max - j_min + 1;
    const int nc = k_max - k_min + 1;
    Matrix out(nr * d, nc * d);
    for (int a = j_min; a <= j_max; ++a) {
        for (int b = k_min; b <= k_max; ++b) {
            const double coef = std::pow(horizon, a + b + 1) /
                                ((a + b + 1) * factorial(a) * factorial(b));
            out.block((a - j_min) * d, (b - k_min) * d, d, d) = coef * weight;
        }
    }
    return out;
}

Vector trapezoid_integral(const Eigen::Ref<const Matrix>& samples, double dt) {
    if (samples.cols() < 2)
        throw DomainError("trapezoid_integral: need at least 2 samples");
    if (dt <= 0.0)
        throw DomainError("trapezoid_integral: dt must be positive");
    Vector acc = 0.5 * (samples.col(0) + samples.col(samples.cols() - 1));
    for (Eigen::Index i = 1; i + 1 < samples.cols(); ++i) acc += samples.col(i);
    return dt * acc;
}

}  // namespace ddmpc
