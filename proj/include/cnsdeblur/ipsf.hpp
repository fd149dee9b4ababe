#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cns.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "linalg.hpp"
#include "psf.hpp"
#include "report.hpp"
#include "variational.hpp"

namespace cnsdeblur {

// Convolution matrix in the kernel space: l*m rows, (2l-1)(2m-1) columns; row (ri,rk) holds h shifted by (ri,rk).
inline Matrix kernel_convolution_matrix(const Kernel& h) {
    const int L = h.rows, M = h.cols, C = 2 * M - 1;
    Matrix H = Matrix::Zero(L * M, (2 * L - 1) * C);
    for (int ri = 0; ri < L; ++ri)
        for (int rk = 0; rk < M; ++rk)
            for (int i = 0; i < L; ++i)
                for (int k = 0; k < M; ++k) H(ri * M + rk, (ri + i) * C + rk + k) = h(i, k);
    return H;
}

struct SpectralIpsfSystem {
    Matrix M0; // K x N
    Vector e;  // unit vector at the center index
    Vector u;  // least-squares coefficients
    Kernel g;  // normalized IPSF
};

inline SpectralIpsfSystem ipsf_spectral_system(const Kernel& h, const CnsBasis& basis) {
    check_kernel(h);
    if (h.rows != basis.l || h.cols != basis.m) throw DimensionError("PSF and basis dimensions differ");
    SpectralIpsfSystem sys;
    const Matrix W = basis.squared_basis();
    sys.M0 = W.transpose() * kernel_convolution_matrix(h);
    const Eigen::Index N = sys.M0.cols();
    if (!(sys.M0.cwiseAbs().maxCoeff() > 1e-14)) throw DegenerateError("spectral IPSF system is numerically zero");
    sys.e = Vector::Zero(N);
    sys.e((N - 1) / 2) = 1.0;
    sys.u = solve_least_squares(sys.M0.transpose(), sys.e).x;
    sys.g = detail::normalized_from(W, sys.u, basis.l, basis.m);
    return sys;
}

inline Kernel ipsf_spectral(const Kernel& h, const CnsBasis& basis) { return ipsf_spectral_system(h, basis).g; }

inline KernelResult optimize_ipsf_spectral(const Kernel& g0, const Kernel& h, const CnsBasis& basis,
                                           const OptimizerConfig& cfg = {}) {
    if (g0.rows != basis.l || g0.cols != basis.m) throw DimensionError("IPSF and basis dimensions differ");
    const SpectralIpsfSystem sys = ipsf_spectral_system(h, basis);
    detail::SpectralProblem pb;
    pb.W = basis.squared_basis();
    pb.l = basis.l;
    pb.m = basis.m;
    pb.base = sys.M0 * sys.M0.transpose();
    pb.rhs = sys.M0 * sys.e;
    pb.v0 = solve_least_squares(pb.W, detail::lex(g0)).x;
    auto res = detail::run_spectral_optimizer(pb, g0, cfg, "ipsf_spectral");
    return {res.kernel, res.report};
}

struct SpaceIpsfSystem {
    Matrix R;  // sum of y y^T over windows
    Vector r;  // sum of y x
    int rows = 0, cols = 0;
    long windows = 0;
};

// Normal equations for g minimizing sum (g . window(h*x) - x_center)^2.
inline SpaceIpsfSystem ipsf_space_system(const ImageGrid& x, const Kernel& h) {
    check_kernel(h);
    const int a = 2 * h.rows - 1, b = 2 * h.cols - 1;
    if (x.rows < 2 * a || x.cols < 2 * b)
        throw DimensionError("image too small for a space-domain IPSF of size " + std::to_string(a) + "x" +
                             std::to_string(b));
    const ImageGrid Y = convolve(x, h);
    const int nr = x.rows - a + 1, nc = x.cols - b + 1, n = a * b;
    const int cl = h.rows - 1, cm = h.cols - 1;
    SpaceIpsfSystem sys;
    sys.rows = a;
    sys.cols = b;
    sys.windows = static_cast<long>(nr) * nc;
    sys.R = Matrix::Zero(n, n);
    sys.r = Vector::Zero(n);
    const long block = 2048;
    Matrix Ym(n, std::min(block, sys.windows));
    Vector t(Ym.cols());
    for (long start = 0; start < sys.windows; start += block) {
        const long cnt = std::min(block, sys.windows - start);
        if (Ym.cols() != cnt) {
            Ym.resize(n, cnt);
            t.resize(cnt);
        }
        for (long c = 0; c < cnt; ++c) {
            const int i = static_cast<int>((start + c) / nc), k = static_cast<int>((start + c) % nc);
            for (int l = 0; l < a; ++l)
                for (int m = 0; m < b; ++m) Ym(l * b + m, c) = Y(i + l, k + m);
            t(c) = x(i + cl, k + cm);
        }
        sys.R.selfadjointView<Eigen::Lower>().rankUpdate(Ym);
        sys.r.noalias() += Ym * t;
    }
    sys.R = sys.R.selfadjointView<Eigen::Lower>();
    return sys;
}

struct SpaceIpsfResult {
    Kernel g;
    bool singular = false;
    double ridge_used = 0.0;
};

namespace detail {

inline bool numerically_singular(const Matrix& R) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(R, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff(), lo = es.eigenvalues().minCoeff();
    return !(hi > 0.0) || lo <= 1e-13 * hi;
}

} // namespace detail

inline SpaceIpsfResult ipsf_space_solve(const SpaceIpsfSystem& sys, double ridge = 0.0) {
    SpaceIpsfResult out;
    Matrix R = sys.R;
    const double n = static_cast<double>(R.rows());
    if (ridge > 0.0) {
        out.ridge_used = ridge;
    } else if (detail::numerically_singular(R)) {
        out.singular = true;
        out.ridge_used = 1e-8 * R.trace() / n;
        if (!(out.ridge_used > 0.0)) throw DegenerateError("space IPSF: correlation matrix is zero");
    }
    R.diagonal().array() += out.ridge_used;
    const Vector g = R.ldlt().solve(sys.r);
    if (!g.allFinite()) throw NumericalError("space IPSF: non-finite solution");
    out.g = detail::unlex(g, sys.rows, sys.cols);
    return out;
}

inline SpaceIpsfResult ipsf_space_ex(const ImageGrid& x, const Kernel& h, double ridge = 0.0, bool crop = false) {
    SpaceIpsfResult res = ipsf_space_solve(ipsf_space_system(x, h), ridge);
    if (crop) res.g = center_crop(res.g, h.rows, h.cols);
    return res;
}

inline Kernel ipsf_space(const ImageGrid& x, const Kernel& h, double ridge = 0.0, bool crop = false) {
    return ipsf_space_ex(x, h, ridge, crop).g;
}

// Lagged minimal-surface operator on a kernel grid: -(Dx^T diag(1/rho) Dx + Dy^T diag(1/rho) Dy),
// rho = sqrt(1 + gx^2 + gy^2) frozen at g. delta_r_matrix(g) * g == curvature_operator(g).
inline Matrix delta_r_matrix(const Kernel& g) {
    const auto [Dx, Dy] = grid_difference_matrices(g.rows, g.cols);
    const Vector v = detail::lex(g);
    const Vector gx = Dx * v, gy = Dy * v;
    const Vector inv_rho = (1.0 + gx.array().square() + gy.array().square()).sqrt().inverse().matrix();
    return -(Dx.transpose() * inv_rho.asDiagonal() * Dx + Dy.transpose() * inv_rho.asDiagonal() * Dy);
}

inline KernelResult optimize_ipsf_space(const Kernel& g0, const ImageGrid& x, const Kernel& h,
                                        const OptimizerConfig& cfg = {}) {
    cfg.validate();
    SpaceIpsfSystem sys = ipsf_space_system(x, h);
    if (g0.rows != sys.rows || g0.cols != sys.cols)
        throw DimensionError("space IPSF optimizer expects the uncropped " + std::to_string(sys.rows) + "x" +
                             std::to_string(sys.cols) + " kernel");
    // Correlations measured in the configured intensity units.
    const double s2 = cfg.intensity_scale * cfg.intensity_scale;
    Matrix R = sys.R * s2;
    if (detail::numerically_singular(R)) R.diagonal().array() += 1e-8 * R.trace() / static_cast<double>(R.rows());
    const Vector r = sys.r * s2;
    RunReport failed;
    failed.method = "ipsf_space";
    for (double lam = cfg.lambda0; lam >= cfg.lambda_floor; lam *= 0.5) {
        RunReport rep;
        rep.method = "ipsf_space";
        rep.lambda_used = lam;
        Kernel g = g0;
        bool gate_ok = true, done = false;
        for (int t = 0; t < cfg.max_iters; ++t) {
            const Matrix lhs = R - lam * delta_r_matrix(g);
            const Vector next = lhs.ldlt().solve(r);
            if (!next.allFinite()) throw NumericalError("space IPSF optimizer: non-finite iterate");
            Kernel gn = detail::unlex(next, g.rows, g.cols);
            const double d = detail::squared_step(gn, g);
            rep.residual_trace.push_back(d);
            rep.lambda_trace.push_back(lam);
            g = std::move(gn);
            const auto n = rep.residual_trace.size();
            if (n >= 2) {
                const double before = rep.residual_trace[n - 2];
                if (before > 0.0) rep.convergence_ratio_max = std::max(rep.convergence_ratio_max, d / before);
                if (static_cast<int>(n) <= cfg.q + 1 && before > cfg.eps && cfg.theta * d > before) {
                    gate_ok = false;
                    break;
                }
            }
            if (d <= cfg.eps) {
                rep.stop_reason = StopReason::eps_reached;
                done = true;
                break;
            }
        }
        if (!gate_ok) continue;
        if (!done) rep.stop_reason = StopReason::iter_cap;
        rep.iterations = static_cast<int>(rep.residual_trace.size());
        rep.returned_iterate = rep.iterations;
        return {g, rep};
    }
    failed.stop_reason = StopReason::lambda_gate_failed;
    failed.notes.push_back("no feasible lambda passed the contraction gate; returning the unoptimized IPSF");
    return {g0, failed};
}

} // namespace cnsdeblur
