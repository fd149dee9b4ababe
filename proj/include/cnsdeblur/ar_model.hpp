#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "linalg.hpp"

namespace cnsdeblur {

struct Region {
    int top = 0;
    int left = 0;
    int rows = 0;
    int cols = 0;
};

struct ArModel {
    int p = 0;
    int q = 0;
    Grid coeffs;          // p x q, center pinned to 1
    double residual = 0;  // mean squared stencil response over the fit region
    double ridge = 0;     // ridge added to the normal equations
    int equations = 0;
};

struct OperatorMatrix {
    Matrix matrix; // l*m x (p+l-1)(q+m-1)
    int l = 0, m = 0, p = 0, q = 0;
};

inline Region default_fit_region(const ImageGrid& image, int p, int q) {
    const int side = std::min({image.rows, image.cols, std::max(2 * p * q, 64)});
    return Region{(image.rows - side) / 2, (image.cols - side) / 2, side, side};
}

inline ArModel estimate_ar(const ImageGrid& image, int p, int q, std::optional<Region> region = std::nullopt) {
    if (p < 1 || q < 1 || p % 2 == 0 || q % 2 == 0) throw ContractError("AR orders must be odd and >= 1");
    const Region reg = region ? *region : default_fit_region(image, p, q);
    if (reg.top < 0 || reg.left < 0 || reg.rows < 0 || reg.cols < 0 || reg.top + reg.rows > image.rows ||
        reg.left + reg.cols > image.cols)
        throw DimensionError("AR fit region outside image");
    const int nr = reg.rows - p + 1, nc = reg.cols - q + 1;
    const int unknowns = p * q - 1;
    const long neq = (nr > 0 && nc > 0) ? static_cast<long>(nr) * nc : 0;
    if (neq < std::max(unknowns, 1))
        throw InsufficientDataError("AR fit region too small: " + std::to_string(neq) + " equations for " +
                                    std::to_string(unknowns) + " unknowns");
    const int ci = (p - 1) / 2, ck = (q - 1) / 2, center = ci * q + ck;

    ArModel model;
    model.p = p;
    model.q = q;
    model.coeffs = Grid(p, q);
    model.coeffs(ci, ck) = 1.0;
    model.equations = static_cast<int>(neq);

    if (unknowns > 0) {
        Matrix N = Matrix::Zero(unknowns, unknowns);
        Vector rhs = Vector::Zero(unknowns);
        const int chunk = std::max(1, 8192 / std::max(1, nc)) * nc;
        Matrix X(std::min<long>(chunk, neq), unknowns);
        Vector y(X.rows());
        long done = 0;
        while (done < neq) {
            const long n = std::min<long>(chunk, neq - done);
            if (X.rows() != n) {
                X.resize(n, unknowns);
                y.resize(n);
            }
            for (long e = 0; e < n; ++e) {
                const int r = static_cast<int>((done + e) / nc), c = static_cast<int>((done + e) % nc);
                int col = 0;
                for (int i = 0; i < p; ++i)
                    for (int k = 0; k < q; ++k) {
                        const double v = image(reg.top + r + i, reg.left + c + k);
                        if (i * q + k == center) y(e) = -v;
                        else X(e, col++) = v;
                    }
            }
            N.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
            rhs.noalias() += X.transpose() * y;
            done += n;
        }
        N = N.selfadjointView<Eigen::Lower>();
        model.ridge = 1e-8 * N.trace();
        N.diagonal().array() += model.ridge;
        Vector a = N.ldlt().solve(rhs);
        if (!a.allFinite()) throw NumericalError("AR normal equations produced non-finite coefficients");
        int col = 0;
        for (int i = 0; i < p; ++i)
            for (int k = 0; k < q; ++k)
                if (i * q + k != center) model.coeffs(i, k) = a(col++);
    }

    double acc = 0.0;
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nc; ++c) {
            double s = 0.0;
            for (int i = 0; i < p; ++i)
                for (int k = 0; k < q; ++k) s += model.coeffs(i, k) * image(reg.top + r + i, reg.left + c + k);
            acc += s * s;
        }
    model.residual = acc / static_cast<double>(neq);
    return model;
}

inline OperatorMatrix build_operator(const ArModel& model, int l, int m) {
    if (l < 1 || m < 1 || l % 2 == 0 || m % 2 == 0) throw ContractError("kernel dims must be odd and >= 1");
    if (l >= model.p || m >= model.q)
        throw ContractError("kernel dims must be smaller than AR orders (l < p, m < q); got l=" + std::to_string(l) +
                            " p=" + std::to_string(model.p) + " m=" + std::to_string(m) +
                            " q=" + std::to_string(model.q));
    const int P = model.p, Q = model.q, cols = Q + m - 1;
    OperatorMatrix op;
    op.l = l;
    op.m = m;
    op.p = P;
    op.q = Q;
    op.matrix = Matrix::Zero(l * m, (P + l - 1) * cols);
    for (int ri = 0; ri < l; ++ri)
        for (int rk = 0; rk < m; ++rk)
            for (int i = 0; i < P; ++i)
                for (int k = 0; k < Q; ++k) op.matrix(ri * m + rk, (ri + i) * cols + rk + k) = model.coeffs(i, k);
    return op;
}

struct OrderSuggestion {
    int p = 3;
    int q = 3;
    std::string warning;
};

namespace detail {

inline int odd_ceil(int v) { return v % 2 == 0 ? v + 1 : v; }

// Autocorrelation of the mean-removed image along one axis, lags 0..n-1.
inline std::vector<double> axis_autocorrelation(const ImageGrid& img, bool along_rows, int n) {
    const double mean = grid_sum(img) / static_cast<double>(img.size());
    std::vector<double> r(n, 0.0);
    for (int t = 0; t < n; ++t) {
        double s = 0.0;
        long cnt = 0;
        if (along_rows) {
            for (int i = 0; i < img.rows; ++i)
                for (int k = 0; k + t < img.cols; ++k, ++cnt) s += (img(i, k) - mean) * (img(i, k + t) - mean);
        } else {
            for (int i = 0; i + t < img.rows; ++i)
                for (int k = 0; k < img.cols; ++k, ++cnt) s += (img(i, k) - mean) * (img(i + t, k) - mean);
        }
        r[t] = cnt ? s / static_cast<double>(cnt) : 0.0;
    }
    return r;
}

// Last column of the inverse Toeplitz autocorrelation matrix.
inline Vector inverse_correlation_last_column(const std::vector<double>& r) {
    const int n = static_cast<int>(r.size());
    Matrix T(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) T(i, j) = r[std::abs(i - j)];
    return pseudo_inverse(T, 1e-12).col(n - 1);
}

// Largest lag (distance from the last entry) of a significant local peak, 0 if none.
inline int max_peak_lag(const Vector& c, double rel_threshold) {
    const int n = static_cast<int>(c.size());
    const double ref = std::abs(c(n - 1));
    if (!(ref > 0.0)) return 0;
    for (int j = 0; j <= n - 2; ++j) {
        const double v = std::abs(c(j));
        const bool left_ok = j == 0 || v > std::abs(c(j - 1));
        const bool right_ok = j + 1 > n - 2 || v >= std::abs(c(j + 1));
        if (left_ok && right_ok && v / ref >= rel_threshold) return n - 1 - j;
    }
    return 0;
}

} // namespace detail

inline OrderSuggestion suggest_order(const ImageGrid& image, int max_order) {
    if (max_order < 3 || max_order % 2 == 0) throw ContractError("max_order must be odd and >= 3");
    if (image.rows < max_order || image.cols < max_order) throw DimensionError("image smaller than max_order");
    OrderSuggestion out;
    const auto [mn, mx] = std::minmax_element(image.data.begin(), image.data.end());
    if (*mx - *mn <= 1e-12 * std::max(1.0, std::abs(*mx))) {
        out.warning = "constant image: returning minimum order 3";
        return out;
    }
    const double thr = 4.0 / std::sqrt(static_cast<double>(image.size()));
    auto axis_order = [&](bool along_rows) {
        const Vector c = detail::inverse_correlation_last_column(detail::axis_autocorrelation(image, along_rows, max_order));
        const int lag = detail::max_peak_lag(c, thr);
        return std::clamp(detail::odd_ceil(lag + 1), 3, max_order);
    };
    out.q = axis_order(true);
    out.p = axis_order(false);
    return out;
}

} // namespace cnsdeblur
