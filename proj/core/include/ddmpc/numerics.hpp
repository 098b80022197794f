#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ddmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Operand shapes do not match the operation's contract.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A scalar argument is outside its admissible range.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A computation produced non-finite values or a factorization failed.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Regressor matrix is numerically rank deficient; carries the condition
/// estimate so callers can report how far from identifiable the data is.
struct RankDeficientError : NumericalError {
    double condition_estimate;
    explicit RankDeficientError(const std::string& msg, double cond)
        : NumericalError(msg), condition_estimate(cond) {}
};

/// Kronecker product a (x) b; block (i,j) of the result is a(i,j)*b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major stacking of m into a vector.
Vector vec(const Matrix& m);

/// Inverse of vec. Throws ShapeError if v.size() != rows*cols.
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Minimum-norm least-squares solution of psi * theta ~= gamma via SVD.
/// Throws RankDeficientError when the condition estimate of psi exceeds
/// cond_threshold (the data does not pin down theta).
Vector least_squares(const Matrix& psi, const Vector& gamma,
                     double cond_threshold = 1e10);

/// Horizon Gram matrix of the scaled monomial basis tau^a / a!.
/// Block (a,b), a in [j_min, j_max], b in [k_min, k_max], equals
///   T^(a+b+1) / ((a+b+1) * a! * b!) * weight,
/// the closed form of  integral_0^T tau^(a+b)/(a! b!) dtau  times the weight.
/// Result has (j_max-j_min+1) x (k_max-k_min+1) blocks of weight's shape.
Matrix monomial_gram(int j_min, int j_max, int k_min, int k_max,
                     double horizon, const Matrix& weight);

/// Composite trapezoid rule over equally spaced vector samples.
/// samples has one column per time point. Throws DomainError for fewer
/// than 2 columns or dt <= 0.
Vector trapezoid_integral(const Eigen::Ref<const Matrix>& samples, double dt);

}  // namespace ddmpc
