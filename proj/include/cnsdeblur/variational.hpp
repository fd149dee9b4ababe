#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "errors.hpp"
#include "image.hpp"
#include "linalg.hpp"

namespace cnsdeblur {

// First differences: central inside, one-sided on the outermost samples.
inline Grid derivative_x(const Grid& s) {
    if (s.cols < 2) throw DimensionError("derivative_x needs at least 2 columns");
    Grid out(s.rows, s.cols);
    const int W = s.cols;
    for (int i = 0; i < s.rows; ++i) {
        out(i, 0) = s(i, 1) - s(i, 0);
        for (int k = 1; k + 1 < W; ++k) out(i, k) = 0.5 * (s(i, k + 1) - s(i, k - 1));
        out(i, W - 1) = s(i, W - 1) - s(i, W - 2);
    }
    return out;
}

inline Grid derivative_y(const Grid& s) {
    if (s.rows < 2) throw DimensionError("derivative_y needs at least 2 rows");
    Grid out(s.rows, s.cols);
    const int H = s.rows;
    for (int k = 0; k < s.cols; ++k) {
        out(0, k) = s(1, k) - s(0, k);
        for (int i = 1; i + 1 < H; ++i) out(i, k) = 0.5 * (s(i + 1, k) - s(i - 1, k));
        out(H - 1, k) = s(H - 1, k) - s(H - 2, k);
    }
    return out;
}

// Transposes of derivative_x / derivative_y.
inline Grid derivative_x_adjoint(const Grid& f) {
    Grid out(f.rows, f.cols);
    const int W = f.cols;
    for (int i = 0; i < f.rows; ++i) {
        out(i, 0) -= f(i, 0);
        out(i, 1) += f(i, 0);
        for (int k = 1; k + 1 < W; ++k) {
            out(i, k + 1) += 0.5 * f(i, k);
            out(i, k - 1) -= 0.5 * f(i, k);
        }
        out(i, W - 1) += f(i, W - 1);
        out(i, W - 2) -= f(i, W - 1);
    }
    return out;
}

inline Grid derivative_y_adjoint(const Grid& f) {
    Grid out(f.rows, f.cols);
    const int H = f.rows;
    for (int k = 0; k < f.cols; ++k) {
        out(0, k) -= f(0, k);
        out(1, k) += f(0, k);
        for (int i = 1; i + 1 < H; ++i) {
            out(i + 1, k) += 0.5 * f(i, k);
            out(i - 1, k) -= 0.5 * f(i, k);
        }
        out(H - 1, k) += f(H - 1, k);
        out(H - 2, k) -= f(H - 1, k);
    }
    return out;
}

// 1D difference matrix matching derivative_x along a line of n samples.
inline Matrix difference_matrix(int n) {
    if (n < 2) throw DimensionError("difference matrix needs n >= 2");
    Matrix D = Matrix::Zero(n, n);
    D(0, 0) = -1.0;
    D(0, 1) = 1.0;
    for (int i = 1; i + 1 < n; ++i) {
        D(i, i - 1) = -0.5;
        D(i, i + 1) = 0.5;
    }
    D(n - 1, n - 2) = -1.0;
    D(n - 1, n - 1) = 1.0;
    return D;
}

// (Dx, Dy) acting on row-major lex vectors of a rows x cols grid.
inline std::pair<Matrix, Matrix> grid_difference_matrices(int rows, int cols) {
    const Matrix dc = difference_matrix(cols), dr = difference_matrix(rows);
    Matrix Dx = Matrix::Zero(rows * cols, rows * cols), Dy = Matrix::Zero(rows * cols, rows * cols);
    for (int i = 0; i < rows; ++i)
        Dx.block(i * cols, i * cols, cols, cols) = dc;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < rows; ++j)
            if (dr(i, j) != 0.0)
                for (int k = 0; k < cols; ++k) Dy(i * cols + k, j * cols + k) = dr(i, j);
    return {Dx, Dy};
}

inline Grid metric_determinant(const Grid& s) {
    if (s.rows < 2 || s.cols < 2) throw DimensionError("metric_determinant needs a grid of at least 2x2");
    const Grid sx = derivative_x(s), sy = derivative_y(s);
    Grid out(s.rows, s.cols);
    for (std::size_t i = 0; i < s.size(); ++i) out.data[i] = 1.0 + sx.data[i] * sx.data[i] + sy.data[i] * sy.data[i];
    return out;
}

inline double surface_area(const Grid& s) {
    const Grid g = metric_determinant(s);
    double a = 0.0;
    for (double v : g.data) a += std::sqrt(v);
    return a;
}

// Negative gradient of surface_area with respect to every sample: div(grad S / sqrt(1+|grad S|^2)).
inline Grid curvature_operator(const Grid& s) {
    if (s.rows < 3 || s.cols < 3) throw DimensionError("curvature_operator needs a grid of at least 3x3");
    Grid sx = derivative_x(s), sy = derivative_y(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = std::sqrt(1.0 + sx.data[i] * sx.data[i] + sy.data[i] * sy.data[i]);
        sx.data[i] /= r;
        sy.data[i] /= r;
    }
    Grid ax = derivative_x_adjoint(sx);
    const Grid ay = derivative_y_adjoint(sy);
    for (std::size_t i = 0; i < s.size(); ++i) ax.data[i] = -(ax.data[i] + ay.data[i]);
    return ax;
}

// Pointwise mean-curvature expression with central first, second and mixed differences
// (replicate boundary). Agrees with curvature_operator for smooth, slowly varying surfaces.
inline Grid mean_curvature_pointwise(const Grid& s) {
    if (s.rows < 3 || s.cols < 3) throw DimensionError("mean_curvature_pointwise needs a grid of at least 3x3");
    const int H = s.rows, W = s.cols;
    auto at = [&](int i, int k) { return s(std::clamp(i, 0, H - 1), std::clamp(k, 0, W - 1)); };
    Grid out(H, W);
    for (int i = 0; i < H; ++i)
        for (int k = 0; k < W; ++k) {
            const double gx = 0.5 * (at(i, k + 1) - at(i, k - 1));
            const double gy = 0.5 * (at(i + 1, k) - at(i - 1, k));
            const double gxx = at(i, k + 1) - 2.0 * at(i, k) + at(i, k - 1);
            const double gyy = at(i + 1, k) - 2.0 * at(i, k) + at(i - 1, k);
            const double gxy = 0.25 * (at(i + 1, k + 1) - at(i + 1, k - 1) - at(i - 1, k + 1) + at(i - 1, k - 1));
            const double base = 1.0 + gx * gx + gy * gy;
            out(i, k) = ((1.0 + gy * gy) * gxx + (1.0 + gx * gx) * gyy - 2.0 * gx * gy * gxy) / (base * std::sqrt(base));
        }
    return out;
}

// Negative gradient of sum (eps^2 + |grad S|^2)^(alpha/2); optional BVDR regularizer.
inline Grid tv_operator(const Grid& s, double alpha, double eps = 1e-3) {
    if (s.rows < 3 || s.cols < 3) throw DimensionError("tv_operator needs a grid of at least 3x3");
    Grid sx = derivative_x(s), sy = derivative_y(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double n2 = eps * eps + sx.data[i] * sx.data[i] + sy.data[i] * sy.data[i];
        const double w = alpha * std::pow(n2, 0.5 * alpha - 1.0);
        sx.data[i] *= w;
        sy.data[i] *= w;
    }
    Grid ax = derivative_x_adjoint(sx);
    const Grid ay = derivative_y_adjoint(sy);
    for (std::size_t i = 0; i < s.size(); ++i) ax.data[i] = -(ax.data[i] + ay.data[i]);
    return ax;
}

} // namespace cnsdeblur
