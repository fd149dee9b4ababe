#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cnsdeblur/cnsdeblur.hpp>

namespace fs = std::filesystem;
using namespace cnsdeblur;

namespace {

struct CommonFlags {
    std::vector<int> ar_order, psf_size;
    std::string optimizer, ipsf, config;
    std::optional<double> lambda, delta_t, eps;
    std::optional<int> max_iters;
    bool denoise = false;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--ar-order", f.ar_order, "AR model orders P Q")->expected(2);
    cmd->add_option("--psf-size", f.psf_size, "kernel dims L M")->expected(2);
    cmd->add_option("--optimizer", f.optimizer, "none, bvdr or cs");
    cmd->add_option("--ipsf", f.ipsf, "spectral or space");
    cmd->add_option("--lambda", f.lambda, "initial regularization weight");
    cmd->add_option("--delta-t", f.delta_t, "relaxation step");
    cmd->add_option("--eps", f.eps, "stopping tolerance");
    cmd->add_option("--max-iters", f.max_iters, "iteration cap");
    cmd->add_flag("--denoise", f.denoise, "apply the single-eigenvector prefilter");
    cmd->add_option("--config", f.config, "key = value configuration file");
    cmd->add_option("--seed", f.seed, "noise generator seed");
}

PipelineConfig build_config(const CommonFlags& f) {
    PipelineConfig cfg;
    if (!f.config.empty()) apply_config(cfg, parse_config(f.config));
    if (f.ar_order.size() == 2) cfg.ar_p = f.ar_order[0], cfg.ar_q = f.ar_order[1];
    if (f.psf_size.size() == 2) cfg.psf_l = f.psf_size[0], cfg.psf_m = f.psf_size[1];
    if (!f.optimizer.empty()) cfg.optimizer = parse_optimizer(f.optimizer);
    if (!f.ipsf.empty()) cfg.ipsf_route = parse_ipsf_route(f.ipsf);
    if (f.lambda) cfg.opt.lambda0 = *f.lambda;
    if (f.delta_t) cfg.opt.delta_t = *f.delta_t;
    if (f.eps) cfg.opt.eps = *f.eps;
    if (f.max_iters) cfg.opt.max_iters = *f.max_iters;
    if (f.denoise) cfg.denoise = true;
    if (f.seed) cfg.seed = *f.seed;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError(path.string() + ": cannot open for writing");
    out << text;
}

std::string estimate_report(const EstimateResult& r, const PipelineConfig& cfg) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "ar_order " << cfg.ar_p << ' ' << cfg.ar_q << '\n';
    os << "psf_size " << cfg.psf_l << ' ' << cfg.psf_m << '\n';
    os << "ar_residual " << r.ar.residual << '\n';
    os << "ns_dimension " << r.basis.k() << '\n';
    os << "threshold " << r.basis.threshold << '\n';
    os << "gap_ratio " << r.basis.gap_ratio << '\n';
    os << "ipsf_route " << to_string(cfg.ipsf_route) << '\n';
    os << "ipsf_singular " << (r.ipsf_singular ? 1 : 0) << '\n';
    os << "denoise " << (cfg.denoise ? 1 : 0) << '\n';
    if (cfg.optimize_kernels) {
        RunReport p = r.psf_report;
        p.method = "psf";
        write_report_stream(os, p);
        RunReport g = r.ipsf_report;
        g.method = "ipsf";
        write_report_stream(os, g);
    }
    return os.str();
}

int cmd_estimate(const std::string& input, const std::string& out_dir, const std::string& cns_dump,
                 const CommonFlags& flags, std::string& stage) {
    stage = "config";
    const PipelineConfig cfg = build_config(flags);
    stage = "input";
    const ImageGrid x = read_image(input);
    const EstimateResult r = run_estimate(x, cfg, &stage);
    stage = "output";
    fs::create_directories(out_dir);
    write_kernel((fs::path(out_dir) / "h.kern").string(), r.h);
    write_kernel((fs::path(out_dir) / "g.kern").string(), r.g);
    write_text(fs::path(out_dir) / "report.txt", estimate_report(r, cfg));
    if (r.denoise_filter) write_kernel((fs::path(out_dir) / "denoise.kern").string(), *r.denoise_filter);
    if (!cns_dump.empty()) {
        std::ofstream dump(cns_dump);
        if (!dump) throw InputError(cns_dump + ": cannot open for writing");
        write_cns_dump(dump, r.basis);
    }
    std::cout << "ns_dimension " << r.basis.k() << '\n';
    return 0;
}

int cmd_deblur(const std::string& input, const std::string& g_path, const std::string& h_path,
               const std::string& output, const std::string& report_path, const CommonFlags& flags,
               std::string& stage) {
    stage = "config";
    const PipelineConfig cfg = build_config(flags);
    stage = "input";
    const ImageGrid x = read_image(input);
    const Kernel g = read_kernel(g_path);
    std::optional<Kernel> h;
    if (!h_path.empty()) h = read_kernel(h_path);
    stage = "deconv";
    const RestoreResult r = run_deblur(x, g, h, cfg);
    stage = "output";
    write_pgm(output, r.image);
    if (!report_path.empty()) {
        std::ostringstream os;
        write_report_stream(os, r.report);
        write_text(report_path, os.str());
    }
    std::cout << "iterations " << r.report.iterations << "\nstop_reason " << to_string(r.report.stop_reason) << '\n';
    return 0;
}

Kernel blur_from_spec(const std::string& kind, const std::vector<double>& params, std::string& summary) {
    std::ostringstream os;
    os << std::setprecision(17);
    Kernel k;
    if (kind == "gaussian") {
        if (params.size() != 1) throw InputError("gaussian blur needs SIGMA");
        k = gaussian_kernel(params[0]);
        os << "blur gaussian\nsigma " << params[0] << '\n';
    } else if (kind == "motion") {
        if (params.empty() || params.size() > 2) throw InputError("motion blur needs LENGTH [ANGLE]");
        const double angle = params.size() == 2 ? params[1] : 0.0;
        k = motion_kernel(params[0], angle);
        os << "blur motion\nlength " << params[0] << "\nangle " << angle << '\n';
    } else if (kind == "disk") {
        if (params.size() != 1) throw InputError("disk blur needs RADIUS");
        k = disk_kernel(params[0]);
        os << "blur disk\nradius " << params[0] << '\n';
    } else {
        throw InputError("unknown blur kind '" + kind + "' (expected gaussian, motion or disk)");
    }
    summary = os.str();
    return k;
}

int cmd_synth(const std::string& input, const std::string& kind, const std::vector<double>& params, double noise,
              std::uint64_t seed, const std::string& out_dir, std::string& stage) {
    stage = "config";
    std::string summary;
    const Kernel k = blur_from_spec(kind, params, summary);
    if (!(noise >= 0.0 && noise <= 1.0)) throw InputError("noise density must lie in [0,1]");
    stage = "input";
    const ImageGrid clean = read_image(input);
    stage = "synth";
    ImageGrid blurred = convolve(clean, k);
    if (noise > 0.0) blurred = salt_and_pepper(blurred, noise, seed);
    stage = "output";
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_pgm((dir / "blurred.pgm").string(), blurred);
    write_kernel((dir / "kernel.kern").string(), k);
    std::ostringstream m;
    m << std::setprecision(17) << "source " << input << '\n'
      << summary << "kernel_size " << k.rows << ' ' << k.cols << "\nkernel_file kernel.kern\n"
      << "noise_density " << noise << "\nseed " << seed << "\nblurred_file blurred.pgm\n";
    write_text(dir / "manifest.txt", m.str());
    return 0;
}

std::string format_value(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

int cmd_quality(const std::vector<std::string>& images, const std::string& reference, std::string& stage) {
    stage = "input";
    std::vector<ImageGrid> loaded;
    for (const auto& p : images) loaded.push_back(read_image(p));
    std::optional<ImageGrid> ref;
    if (!reference.empty()) ref = read_image(reference);
    stage = "quality";
    for (std::size_t i = 0; i < images.size(); ++i) {
        AiConfig ai;
        ai.fragment = std::min({ai.fragment, loaded[i].rows, loaded[i].cols});
        std::cout << "AI " << images[i] << ' ' << format_value(anisotropy_index(loaded[i], ai)) << '\n';
        if (ref) std::cout << "PSNR " << images[i] << ' ' << format_value(psnr(loaded[i], *ref)) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind deblurring via the conjugated null space of a 2D AR model"};
    app.require_subcommand(1);

    CommonFlags est_flags, deb_flags;
    std::string est_input, est_out = ".", est_dump;
    auto* est = app.add_subcommand("estimate", "estimate PSF and IPSF kernels from a degraded image");
    est->add_option("input", est_input, "degraded image (PGM/PPM)")->required();
    est->add_option("-o,--out-dir", est_out, "directory for h.kern, g.kern and report.txt");
    est->add_option("--dump-cns", est_dump, "write the CNS eigenvalues and vectors to this file");
    add_common(est, est_flags);

    std::string deb_input, deb_g, deb_h, deb_out = "restored.pgm", deb_report;
    auto* deb = app.add_subcommand("deblur", "restore an image with a known IPSF (and PSF)");
    deb->add_option("input", deb_input, "degraded image")->required();
    deb->add_option("-g,--g-kernel", deb_g, "IPSF kernel file")->required();
    deb->add_option("-k,--h-kernel", deb_h, "PSF kernel file (needed by bvdr and cs)");
    deb->add_option("-o,--output", deb_out, "restored image (PGM)");
    deb->add_option("-r,--report", deb_report, "iteration table output");
    add_common(deb, deb_flags);

    std::string syn_input, syn_kind, syn_out = ".";
    std::vector<double> syn_params;
    double syn_noise = 0.0;
    std::uint64_t syn_seed = 0;
    auto* syn = app.add_subcommand("synth", "blur (and optionally noise) a clean image");
    syn->add_option("input", syn_input, "clean image")->required();
    syn->add_option("--blur", syn_kind, "gaussian, motion or disk")->required();
    syn->add_option("--param", syn_params, "SIGMA | LENGTH [ANGLE] | RADIUS")->required();
    syn->add_option("--noise", syn_noise, "salt-and-pepper density in [0,1]");
    syn->add_option("--seed", syn_seed, "noise generator seed");
    syn->add_option("-o,--out-dir", syn_out, "output directory");

    std::vector<std::string> q_images;
    std::string q_ref;
    auto* qual = app.add_subcommand("quality", "anisotropy index and PSNR");
    qual->add_option("images", q_images, "images to score")->required();
    qual->add_option("--reference", q_ref, "reference image for PSNR");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code_for(ErrorKind::input);
    }

    std::string stage = "startup";
    try {
        if (*est) return cmd_estimate(est_input, est_out, est_dump, est_flags, stage);
        if (*deb) return cmd_deblur(deb_input, deb_g, deb_h, deb_out, deb_report, deb_flags, stage);
        if (*syn) return cmd_synth(syn_input, syn_kind, syn_params, syn_noise, syn_seed, syn_out, stage);
        if (*qual) return cmd_quality(q_images, q_ref, stage);
    } catch (const Error& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return exit_code_for(ErrorKind::input);
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return exit_code_for(ErrorKind::numerical);
    }
    return 0;
}
