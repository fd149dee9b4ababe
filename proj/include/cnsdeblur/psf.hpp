#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cns.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "linalg.hpp"
#include "report.hpp"
#include "variational.hpp"

namespace cnsdeblur {

struct GradientStats {
    Matrix rho;   // K x K
    Matrix omega; // K x K
};

inline GradientStats gradient_stats(const ImageGrid& image, const CnsBasis& basis) {
    const int L = basis.l, M = basis.m, H = image.rows, W = image.cols;
    if (H - 2 * L < 1 || W - 2 * M < 1)
        throw DimensionError("image too small for gradient statistics with a " + std::to_string(L) + "x" +
                             std::to_string(M) + " kernel");
    const ImageGrid g = gradient(image);
    const int nr = H - L, nc = W - M, lm = L * M;
    const long npos = static_cast<long>(nr) * nc;

    // Extended gradient matrix (one lex window per column), accumulated in column blocks.
    Matrix C = Matrix::Zero(lm, lm);
    const long block = 4096;
    Matrix G(lm, std::min(block, npos));
    for (long start = 0; start < npos; start += block) {
        const long n = std::min(block, npos - start);
        if (G.cols() != n) G.resize(lm, n);
        for (long c = 0; c < n; ++c) {
            const int a = static_cast<int>((start + c) / nc), b = static_cast<int>((start + c) % nc);
            for (int i = 0; i < L; ++i)
                for (int k = 0; k < M; ++k) G(i * M + k, c) = g(a + i, b + k);
        }
        C.selfadjointView<Eigen::Lower>().rankUpdate(G);
    }
    C = C.selfadjointView<Eigen::Lower>();
    C /= static_cast<double>(npos);
    // Multiplying by the cross-diagonal unit matrix reverses the row order of the second factor.
    Matrix R(lm, lm);
    for (int s = 0; s < lm; ++s) R.col(s) = C.col(lm - 1 - s);

    const int nk = H - 2 * L, nn = W - 2 * M;
    Grid mbar(2 * L - 1, 2 * M - 1);
    for (int a = 0; a < 2 * L - 1; ++a)
        for (int b = 0; b < 2 * M - 1; ++b) {
            double s = 0.0;
            for (int k = 0; k < nk; ++k)
                for (int n = 0; n < nn; ++n) s += g(a + k, b + n);
            mbar(a, b) = s / (static_cast<double>(nk) * nn);
        }
    Matrix Xbar(lm, lm);
    for (int i = 0; i < L; ++i)
        for (int l = 0; l < M; ++l)
            for (int j = 0; j < L; ++j)
                for (int m = 0; m < M; ++m) Xbar(i * M + l, j * M + m) = mbar(i + j, l + m);

    const Matrix V = basis.null_vectors();
    GradientStats st;
    st.rho = V.transpose() * R * V;
    st.rho = 0.5 * (st.rho + st.rho.transpose()).eval();
    st.omega = V.transpose() * Xbar * V;
    return st;
}

// v_k = sign(d) sqrt|d| with d = rho_kk + omega_kk^2; sign(0) = +1.
inline Vector psf_spectrum(const GradientStats& stats) {
    const Eigen::Index K = stats.rho.rows();
    Vector v(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double d = stats.rho(k, k) + stats.omega(k, k) * stats.omega(k, k);
        v(k) = (d >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::abs(d));
    }
    return v;
}

inline Kernel kernel_from_spectrum(const Vector& v, const CnsBasis& basis) {
    if (v.size() != basis.k()) throw DimensionError("spectrum length does not match basis K");
    const Vector h = basis.squared_basis() * v;
    return Kernel(basis.l, basis.m, std::vector<double>(h.data(), h.data() + h.size()));
}

inline Kernel estimate_psf(const GradientStats& stats, const CnsBasis& basis) {
    if (stats.rho.rows() != basis.k() || stats.omega.rows() != basis.k())
        throw DimensionError("gradient statistics and basis disagree on K");
    const Kernel h = kernel_from_spectrum(psf_spectrum(stats), basis);
    if (!(std::abs(grid_sum(h)) > 1e-12)) throw DegenerateError("assembled PSF sums to ~0; cannot normalize");
    return normalize(h);
}

namespace detail {

inline Vector lex(const Grid& g) { return Eigen::Map<const Vector>(g.data.data(), static_cast<Eigen::Index>(g.size())); }

inline Grid unlex(const Vector& v, int rows, int cols) {
    return Grid(rows, cols, std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector min_norm_solve(const Matrix& A, const Vector& b) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A.rows(), A.cols());
    cod.setThreshold(1e-12);
    cod.compute(A);
    return cod.solve(b);
}

struct SpectralProblem {
    Matrix W;    // l*m x K squared basis
    Matrix base; // K x K
    Vector rhs;  // K
    Vector v0;   // starting coefficients
    int l = 0, m = 0;
};

struct SpectralOutcome {
    Kernel kernel;
    RunReport report;
    bool accepted = false;
};

inline Kernel normalized_from(const Matrix& W, const Vector& v, int l, int m) {
    const Vector h = W * v;
    const double s = h.sum();
    if (!(std::abs(s) > 1e-12)) throw DegenerateError("kernel iterate sums to ~0; cannot normalize");
    return unlex(h / s, l, m);
}

inline double squared_step(const Grid& a, const Grid& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    return d;
}

// Lagged-diffusivity fixed point: (base + 2 lambda Phi(v_t)) v_{t+1} = rhs, with a contraction gate
// over the first q steps and lambda halving until the gate passes.
inline SpectralOutcome run_spectral_optimizer(const SpectralProblem& pb, const Kernel& start,
                                              const OptimizerConfig& cfg, const std::string& method) {
    cfg.validate();
    const auto [Dx, Dy] = grid_difference_matrices(pb.l, pb.m);
    const Matrix DxW = Dx * pb.W, DyW = Dy * pb.W;
    SpectralOutcome out;
    out.report.method = method;
    for (double lam = cfg.lambda0; lam >= cfg.lambda_floor; lam *= 0.5) {
        RunReport rep;
        rep.method = method;
        rep.lambda_used = lam;
        Vector v = pb.v0;
        Kernel prev = normalized_from(pb.W, pb.v0, pb.l, pb.m);
        bool gate_ok = true;
        bool done = false;
        for (int t = 0; t < cfg.max_iters; ++t) {
            const Vector h = pb.W * v;
            const Vector hx = Dx * h, hy = Dy * h;
            const Vector inv_rho = (1.0 + hx.array().square() + hy.array().square()).sqrt().inverse().matrix();
            const Matrix Phi = 0.25 * (DxW.transpose() * inv_rho.asDiagonal() * DxW +
                                       DyW.transpose() * inv_rho.asDiagonal() * DyW);
            const Matrix lhs = pb.base + 2.0 * lam * Phi;
            v = min_norm_solve(lhs, pb.rhs);
            if (!v.allFinite()) throw NumericalError(method + ": non-finite spectral coefficients");
            Kernel cur = normalized_from(pb.W, v, pb.l, pb.m);
            const double d = squared_step(cur, prev);
            rep.residual_trace.push_back(d);
            rep.lambda_trace.push_back(lam);
            prev = std::move(cur);
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
        out.kernel = prev;
        out.report = rep;
        out.accepted = true;
        return out;
    }
    out.kernel = start;
    out.report.stop_reason = StopReason::lambda_gate_failed;
    out.report.notes.push_back("no lambda in [" + std::to_string(cfg.lambda_floor) + ", " +
                               std::to_string(cfg.lambda0) + "] passed the contraction gate");
    return out;
}

} // namespace detail

struct KernelResult {
    Kernel kernel;
    RunReport report;
};

inline KernelResult optimize_psf(const Kernel& h0, const CnsBasis& basis, const OptimizerConfig& cfg = {}) {
    if (h0.rows != basis.l || h0.cols != basis.m) throw DimensionError("PSF and basis dimensions differ");
    if (!(cfg.lambda0 > 0.0)) throw ContractError("optimize_psf requires lambda > 0");
    detail::SpectralProblem pb;
    pb.W = basis.squared_basis();
    pb.l = basis.l;
    pb.m = basis.m;
    pb.base = pb.W.transpose() * pb.W;
    pb.rhs = pb.W.transpose() * detail::lex(h0);
    pb.v0 = solve_least_squares(pb.W, detail::lex(h0)).x;
    auto res = detail::run_spectral_optimizer(pb, h0, cfg, "psf");
    return {res.kernel, res.report};
}

} // namespace cnsdeblur
