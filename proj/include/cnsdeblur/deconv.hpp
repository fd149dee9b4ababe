#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "ar_model.hpp"
#include "cns.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "ipsf.hpp"
#include "report.hpp"
#include "variational.hpp"

namespace cnsdeblur {

struct RestoreResult {
    ImageGrid image;
    RunReport report;
};

inline ImageGrid deconvolve_once(const ImageGrid& x, const Kernel& g) { return convolve(x, g, BoundaryPolicy::replicate); }

namespace detail {

inline double mean_of(const Grid& a) { return grid_sum(a) / static_cast<double>(a.size()); }

inline double mean_abs(const Grid& a) {
    double s = 0.0;
    for (double v : a.data) s += std::abs(v);
    return s / static_cast<double>(a.size());
}

inline double mean_sq_diff(const Grid& a, const Grid& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    return s / static_cast<double>(a.size());
}

inline Grid minus(const Grid& a, const Grid& b) {
    Grid out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline Grid scaled(const Grid& a, double s) {
    Grid out = a;
    for (double& v : out.data) v *= s;
    return out;
}

inline Grid abs_of(const Grid& a) {
    Grid out = a;
    for (double& v : out.data) v = std::abs(v);
    return out;
}

inline void check_restore_inputs(const ImageGrid& x, const Kernel& h, const Kernel& g) {
    check_kernel(h);
    check_kernel(g);
    if (h.rows > x.rows || h.cols > x.cols || g.rows > x.rows || g.cols > x.cols)
        throw DimensionError("kernel larger than image");
    if (x.rows < 3 || x.cols < 3) throw DimensionError("image must be at least 3x3");
    if (!all_finite(x)) throw InputError("image contains non-finite values");
}

} // namespace detail

enum class Regularizer { surface, tv };

struct BvdrOptions {
    Regularizer regularizer = Regularizer::surface;
    double tv_alpha = 1.0;
};

inline RestoreResult bvdr_optimize(const ImageGrid& x, const Kernel& h, const Kernel& g, const OptimizerConfig& cfg = {},
                                   BvdrOptions opts = {}) {
    using namespace detail;
    cfg.validate();
    check_restore_inputs(x, h, g);
    const double sc = cfg.intensity_scale, dt = cfg.delta_t;
    auto reg = [&](const Grid& s) {
        return opts.regularizer == Regularizer::surface ? curvature_operator(s) : tv_operator(s, opts.tv_alpha);
    };
    RunReport rep;
    rep.method = "bvdr";
    const ImageGrid X = scaled(x, sc);
    Grid Sprev = X;
    Grid S = convolve(X, g);
    Grid Lprev = reg(X);
    Grid Ls = reg(S);

    // Initial regularization weight.
    double GL = mean_abs(convolve(Ls, g));
    const double num0 = mean_abs(convolve(minus(S, X), h));
    double lambda;
    if (num0 == 0.0) {
        lambda = 0.0;
    } else {
        const double ex = std::exp(mean_abs(convolve(minus(Ls, Lprev), g)) / (cfg.alpha * GL));
        lambda = num0 / (cfg.alpha * GL) / (ex - 1.0);
    }
    auto fallback = [&](const Grid& s, const Grid& sp, const Grid& l, const Grid& lp) {
        const double n = mean_of(convolve(minus(s, sp), h));
        const double d = mean_of(convolve(minus(abs_of(l), abs_of(lp)), g));
        return n / d;
    };
    if (!std::isfinite(lambda)) {
        lambda = fallback(S, Sprev, Ls, Lprev);
        rep.notes.push_back("k=0: initial lambda degenerate, fallback value used");
    }

    int steps_applied = 0;
    bool stopped = false;
    for (int k = 0; k < cfg.max_iters; ++k) {
        if (k > 0) {
            GL = mean_abs(convolve(Ls, g));
            const double num = mean_abs(convolve(minus(S, Sprev), h));
            const double ex = mean_of(convolve(minus(abs_of(Ls), abs_of(Lprev)), g));
            double next = num == 0.0 && lambda == 0.0 ? 0.0 : (lambda + num / (dt * GL)) * std::exp(-ex / (dt * GL));
            if (!std::isfinite(next)) {
                next = fallback(S, Sprev, Ls, Lprev);
                rep.notes.push_back("k=" + std::to_string(k) + ": lambda degenerate, fallback value used");
            }
            lambda = next;
        }
        if (!std::isfinite(lambda)) {
            rep.stop_reason = StopReason::lambda_gate_failed;
            rep.notes.push_back("k=" + std::to_string(k) + ": lambda non-finite after fallback");
            stopped = true;
            break;
        }
        if (lambda < 0.0) {
            rep.notes.push_back("k=" + std::to_string(k) + ": negative lambda clamped to 0");
            lambda = 0.0;
        }
        const Grid HS = convolve(S, h);
        const Grid GLs = convolve(Ls, g);
        Grid Sn = S;
        for (std::size_t i = 0; i < S.size(); ++i)
            Sn.data[i] += dt * (X.data[i] - HS.data[i] + lambda * GLs.data[i]);
        if (!all_finite(Sn)) throw NumericalError("bvdr: non-finite pixel at iteration " + std::to_string(k));
        const double res = mean_sq_diff(Sn, S);
        rep.residual_trace.push_back(res);
        rep.lambda_trace.push_back(lambda);
        const auto n = rep.lambda_trace.size();
        if (rep.transition < 0 && n >= 2 && rep.lambda_trace[n - 1] < rep.lambda_trace[n - 2])
            rep.transition = static_cast<int>(n) - 2;
        if (rep.transition >= 0 && static_cast<int>(n) - 2 > rep.transition) {
            const double before = rep.residual_trace[n - 2];
            if (before > 0.0) rep.convergence_ratio_max = std::max(rep.convergence_ratio_max, res / before);
            // Residual growth after the lambda peak: keep the pre-increase state.
            if (res > before) {
                rep.stop_reason = StopReason::residual_increased;
                stopped = true;
                break;
            }
        }
        Sprev = std::move(S);
        Lprev = std::move(Ls);
        S = std::move(Sn);
        Ls = reg(S);
        ++steps_applied;
        if (res <= cfg.eps) {
            rep.stop_reason = StopReason::eps_reached;
            stopped = true;
            break;
        }
    }
    if (!stopped) rep.stop_reason = StopReason::iter_cap;
    rep.iterations = static_cast<int>(rep.residual_trace.size());
    rep.returned_iterate = steps_applied;
    rep.lambda_used = lambda;
    return {scaled(S, 1.0 / sc), rep};
}

inline RestoreResult cs_optimize(const ImageGrid& x, const Kernel& h, const Kernel& g, const OptimizerConfig& cfg = {}) {
    using namespace detail;
    cfg.validate();
    check_restore_inputs(x, h, g);
    const double sc = cfg.intensity_scale, dt = cfg.delta_t;
    RunReport rep;
    rep.method = "cs";
    const ImageGrid X = scaled(x, sc);
    Grid S = convolve(X, g);
    Grid Sprev, Lprev;
    Grid best = S;
    int best_steps = 0;
    double best_res = std::numeric_limits<double>::infinity();
    bool stopped = false;
    for (int k = 0; k < cfg.max_iters; ++k) {
        const Grid R = minus(X, convolve(S, h));
        const Grid sigma = metric_determinant(S);
        const Grid Lc = curvature_operator(S);
        Grid lam_l(S.rows, S.cols);
        double lam_mean = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) {
            const double lam = R.data[i] * R.data[i] / (2.0 * sigma.data[i]);
            lam_mean += lam;
            lam_l.data[i] = lam * Lc.data[i];
        }
        lam_mean /= static_cast<double>(S.size());
        const Grid regterm = convolve(lam_l, g);
        Grid Sn = S;
        for (std::size_t i = 0; i < S.size(); ++i) Sn.data[i] += dt * (R.data[i] + regterm.data[i]);
        if (!all_finite(Sn)) throw NumericalError("cs: non-finite pixel at iteration " + std::to_string(k));
        const double res = mean_sq_diff(Sn, S);
        const double lmean = mean_abs(Lc);
        const double dt_min = lmean > 0.0 ? mean_abs(minus(Sn, S)) / lmean : 0.0;

        // Blur-level bound diagnostic, needs the previous iterate.
        if (k > 0) {
            double lhs = 0.0;
            for (double v : R.data) lhs += v * v;
            lhs /= static_cast<double>(R.size());
            const double numer = mean_of(correlate(convolve(minus(S, Sprev), h), h));
            const double denom = mean_of(minus(abs_of(Lc), abs_of(Lprev)));
            rep.bound_lhs_trace.push_back(lhs);
            rep.bound_rhs_trace.push_back(2.0 * mean_of(sigma) * numer / denom);
        }

        rep.residual_trace.push_back(res);
        rep.lambda_trace.push_back(lam_mean);
        rep.dt_min_trace.push_back(dt_min);
        if (dt_min > dt)
            rep.notes.push_back("k=" + std::to_string(k) + ": delta_t below the stability bound " + std::to_string(dt_min));
        const auto n = rep.residual_trace.size();
        if (n >= 2) {
            const double before = rep.residual_trace[n - 2];
            if (before > 0.0) rep.convergence_ratio_max = std::max(rep.convergence_ratio_max, res / before);
            if (res > before) {
                rep.stop_reason = StopReason::residual_increased;
                stopped = true;
                break;
            }
        }
        Sprev = std::move(S);
        Lprev = Lc;
        S = std::move(Sn);
        if (res < best_res) {
            best_res = res;
            best = S;
            best_steps = k + 1;
        }
        if (res <= cfg.eps) {
            rep.stop_reason = StopReason::eps_reached;
            stopped = true;
            break;
        }
    }
    if (!stopped) rep.stop_reason = StopReason::iter_cap;
    rep.iterations = static_cast<int>(rep.residual_trace.size());
    rep.returned_iterate = best_steps;
    return {scaled(best, 1.0 / sc), rep};
}

inline bool convergence_check(const RunReport& report, double theta) {
    const auto& r = report.residual_trace;
    if (r.size() < 2) throw ContractError("convergence_check needs at least 2 residuals");
    const std::size_t first = report.transition >= 0 ? static_cast<std::size_t>(report.transition) + 1 : 0;
    for (std::size_t j = first; j + 1 < r.size(); ++j)
        if (r[j + 1] * theta > r[j]) return false;
    return true;
}

struct DenoiseResult {
    ImageGrid image;
    Kernel filter;
    Kernel psf;
};

// Single-eigenvector prefilter: PSF from the smallest-eigenvalue CNS vector, its space-domain inverse
// applied to the input. The inverse is solved with a Tikhonov ridge of ridge_factor * trace(R)/n.
inline DenoiseResult denoise_prefilter(const ImageGrid& x, int p, int q, int l, int m, double ridge_factor = 0.1) {
    if (!(ridge_factor >= 0.0)) throw ContractError("denoise ridge factor must be nonnegative");
    const ArModel ar = estimate_ar(x, p, q);
    const CnsBasis basis = compute_cns(build_operator(ar, l, m), CnsOptions{true, 128});
    DenoiseResult out;
    out.psf = normalize(basis.squared_grid(0));
    const SpaceIpsfSystem sys = ipsf_space_system(x, out.psf);
    const double ridge = ridge_factor * sys.R.trace() / static_cast<double>(sys.R.rows());
    out.filter = ipsf_space_solve(sys, ridge).g;
    out.image = convolve(x, out.filter);
    return out;
}

} // namespace cnsdeblur
