#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace cnsdeblur {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LeastSquaresResult {
    Vector x;
    bool degenerate = false; // rank deficient with ridge 0; x is the minimum-norm solution
    int rank = 0;
};

// argmin |Mx - b|^2 + ridge |x|^2
inline LeastSquaresResult solve_least_squares(const Matrix& M, const Vector& b, double ridge = 0.0) {
    if (M.rows() != b.size()) throw DimensionError("least squares: row count does not match rhs length");
    if (ridge < 0.0) throw ContractError("least squares: ridge must be nonnegative");
    LeastSquaresResult r;
    if (M.cols() == 0) return r;
    if (ridge > 0.0) {
        Matrix N = M.transpose() * M;
        N.diagonal().array() += ridge;
        r.x = N.ldlt().solve(M.transpose() * b);
        r.rank = static_cast<int>(M.cols());
        return r;
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
    r.x = cod.solve(b);
    r.rank = static_cast<int>(cod.rank());
    r.degenerate = r.rank < M.cols();
    return r;
}

struct EigenDecomposition {
    Vector values;  // descending
    Matrix vectors; // columns, same order
};

inline EigenDecomposition sym_eigen(const Matrix& B) {
    if (B.rows() != B.cols()) throw ContractError("sym_eigen: matrix is not square");
    const double scale = std::max(B.cwiseAbs().maxCoeff(), 1e-300);
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ContractError("sym_eigen: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(B);
    if (es.info() != Eigen::Success) throw NumericalError("sym_eigen: eigensolver failed");
    const Eigen::Index n = B.rows();
    EigenDecomposition d;
    d.values.resize(n);
    d.vectors.resize(n, n);
    // Eigen returns ascending order
    for (Eigen::Index i = 0; i < n; ++i) {
        d.values(i) = es.eigenvalues()(n - 1 - i);
        d.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return d;
}

inline Matrix pseudo_inverse(const Matrix& M, double tol = 1e-10) {
    if (M.size() == 0) throw DimensionError("pseudo_inverse: empty matrix");
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol * (s.size() ? s(0) : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

} // namespace cnsdeblur
