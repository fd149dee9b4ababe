#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "ar_model.hpp"
#include "cns.hpp"
#include "deconv.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "ipsf.hpp"
#include "psf.hpp"
#include "report.hpp"

namespace cnsdeblur {

enum class OptimizerKind { none, bvdr, cs };
enum class IpsfRoute { spectral, space };

struct PipelineConfig {
    int ar_p = 17, ar_q = 17;
    int psf_l = 9, psf_m = 9;
    OptimizerKind optimizer = OptimizerKind::cs;
    IpsfRoute ipsf_route = IpsfRoute::spectral;
    bool optimize_kernels = true;
    bool denoise = false;
    int denoise_p = 33, denoise_q = 33, denoise_l = 17, denoise_m = 17;
    double denoise_ridge = 0.1;
    std::uint64_t seed = 0;
    OptimizerConfig opt;

    void validate() const {
        auto odd = [](int v) { return v >= 1 && v % 2 == 1; };
        if (!odd(ar_p) || !odd(ar_q)) throw ContractError("AR orders must be odd and >= 1");
        if (!odd(psf_l) || !odd(psf_m)) throw ContractError("PSF dims must be odd and >= 1");
        if (psf_l >= ar_p || psf_m >= ar_q) throw ContractError("PSF dims must be smaller than AR orders");
        if (denoise && (!odd(denoise_p) || !odd(denoise_q) || !odd(denoise_l) || !odd(denoise_m) ||
                        denoise_l >= denoise_p || denoise_m >= denoise_q))
            throw ContractError("invalid denoise model sizes");
        if (!(denoise_ridge >= 0.0)) throw ContractError("denoise_ridge must be nonnegative");
        opt.validate();
    }
};

inline const char* to_string(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::none: return "none";
    case OptimizerKind::bvdr: return "bvdr";
    case OptimizerKind::cs: return "cs";
    }
    return "none";
}

inline const char* to_string(IpsfRoute r) { return r == IpsfRoute::spectral ? "spectral" : "space"; }

inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "none") return OptimizerKind::none;
    if (s == "bvdr") return OptimizerKind::bvdr;
    if (s == "cs") return OptimizerKind::cs;
    throw InputError("unknown optimizer '" + s + "' (expected none, bvdr or cs)");
}

inline IpsfRoute parse_ipsf_route(const std::string& s) {
    if (s == "spectral") return IpsfRoute::spectral;
    if (s == "space") return IpsfRoute::space;
    throw InputError("unknown IPSF route '" + s + "' (expected spectral or space)");
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': not a number: " + v);
    }
}

inline int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != static_cast<double>(static_cast<long>(d))) throw InputError("config key '" + key + "': not an integer: " + v);
    return static_cast<int>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw InputError("config key '" + key + "': not a boolean: " + v);
}

} // namespace detail

inline void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv) {
    using namespace detail;
    for (const auto& [k, v] : kv) {
        if (k == "ar_p") cfg.ar_p = to_int(k, v);
        else if (k == "ar_q") cfg.ar_q = to_int(k, v);
        else if (k == "psf_l") cfg.psf_l = to_int(k, v);
        else if (k == "psf_m") cfg.psf_m = to_int(k, v);
        else if (k == "optimizer") cfg.optimizer = parse_optimizer(v);
        else if (k == "ipsf") cfg.ipsf_route = parse_ipsf_route(v);
        else if (k == "optimize_kernels") cfg.optimize_kernels = to_bool(k, v);
        else if (k == "denoise") cfg.denoise = to_bool(k, v);
        else if (k == "denoise_p") cfg.denoise_p = to_int(k, v);
        else if (k == "denoise_q") cfg.denoise_q = to_int(k, v);
        else if (k == "denoise_l") cfg.denoise_l = to_int(k, v);
        else if (k == "denoise_m") cfg.denoise_m = to_int(k, v);
        else if (k == "denoise_ridge") cfg.denoise_ridge = to_double(k, v);
        else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(k, v));
        else if (k == "lambda") cfg.opt.lambda0 = to_double(k, v);
        else if (k == "lambda_floor") cfg.opt.lambda_floor = to_double(k, v);
        else if (k == "delta_t") cfg.opt.delta_t = to_double(k, v);
        else if (k == "eps") cfg.opt.eps = to_double(k, v);
        else if (k == "max_iters") cfg.opt.max_iters = to_int(k, v);
        else if (k == "theta") cfg.opt.theta = to_double(k, v);
        else if (k == "q") cfg.opt.q = to_int(k, v);
        else if (k == "alpha") cfg.opt.alpha = to_double(k, v);
        else if (k == "intensity_scale") cfg.opt.intensity_scale = to_double(k, v);
        else throw InputError("unknown config key '" + k + "'");
    }
}

struct EstimateResult {
    ArModel ar;
    CnsBasis basis;
    Kernel h0, h;
    Kernel g0, g;
    RunReport psf_report;
    RunReport ipsf_report;
    bool ipsf_singular = false;
    std::optional<Kernel> denoise_filter;
    ImageGrid working_image; // the image the estimate was computed from
};

// `stage`, when given, names the step in progress so callers can report where a failure happened.
inline EstimateResult run_estimate(const ImageGrid& x, const PipelineConfig& cfg, std::string* stage = nullptr) {
    auto enter = [&](const char* name) {
        if (stage) *stage = name;
    };
    enter("config");
    cfg.validate();
    EstimateResult r;
    r.working_image = x;
    if (cfg.denoise) {
        enter("denoise");
        DenoiseResult d = denoise_prefilter(x, cfg.denoise_p, cfg.denoise_q, cfg.denoise_l, cfg.denoise_m, cfg.denoise_ridge);
        r.working_image = std::move(d.image);
        r.denoise_filter = std::move(d.filter);
    }
    const ImageGrid& w = r.working_image;
    enter("ar-model");
    r.ar = estimate_ar(w, cfg.ar_p, cfg.ar_q);
    enter("cns");
    r.basis = compute_cns(build_operator(r.ar, cfg.psf_l, cfg.psf_m));
    enter("psf");
    r.h0 = estimate_psf(gradient_stats(w, r.basis), r.basis);
    r.h = r.h0;
    if (cfg.optimize_kernels) {
        KernelResult kr = optimize_psf(r.h0, r.basis, cfg.opt);
        r.h = std::move(kr.kernel);
        r.psf_report = std::move(kr.report);
    }
    enter("ipsf");
    if (cfg.ipsf_route == IpsfRoute::spectral) {
        r.g0 = ipsf_spectral(r.h, r.basis);
        r.g = r.g0;
        if (cfg.optimize_kernels) {
            KernelResult kr = optimize_ipsf_spectral(r.g0, r.h, r.basis, cfg.opt);
            r.g = std::move(kr.kernel);
            r.ipsf_report = std::move(kr.report);
        }
    } else {
        SpaceIpsfResult sr = ipsf_space_ex(w, r.h);
        r.ipsf_singular = sr.singular;
        r.g0 = sr.g;
        r.g = r.g0;
        if (cfg.optimize_kernels) {
            KernelResult kr = optimize_ipsf_space(r.g0, w, r.h, cfg.opt);
            r.g = std::move(kr.kernel);
            r.ipsf_report = std::move(kr.report);
        }
    }
    return r;
}

inline RestoreResult run_deblur(const ImageGrid& x, const Kernel& g, const std::optional<Kernel>& h,
                                const PipelineConfig& cfg) {
    cfg.opt.validate();
    check_kernel(g);
    if (g.rows > x.rows || g.cols > x.cols) throw DimensionError("IPSF larger than image");
    if (cfg.optimizer == OptimizerKind::none) {
        RestoreResult r{deconvolve_once(x, g), RunReport{}};
        r.report.method = "none";
        r.report.stop_reason = StopReason::eps_reached;
        return r;
    }
    if (!h) throw InputError("optimizer '" + std::string(to_string(cfg.optimizer)) + "' needs the PSF kernel");
    if (cfg.optimizer == OptimizerKind::bvdr) return bvdr_optimize(x, *h, g, cfg.opt);
    return cs_optimize(x, *h, g, cfg.opt);
}

} // namespace cnsdeblur
