#include <gtest/gtest.h>

#include "support/scenes.hpp"

using namespace cnsdeblur;
using testsupport::scene;

TEST(PipelineDefaults, MatchDocumentedValues) {
    const PipelineConfig c;
    EXPECT_EQ(c.ar_p, 17);
    EXPECT_EQ(c.ar_q, 17);
    EXPECT_EQ(c.psf_l, 9);
    EXPECT_EQ(c.psf_m, 9);
    EXPECT_EQ(c.optimizer, OptimizerKind::cs);
    EXPECT_EQ(c.ipsf_route, IpsfRoute::spectral);
    EXPECT_TRUE(c.optimize_kernels);
    EXPECT_FALSE(c.denoise);
    EXPECT_DOUBLE_EQ(c.opt.lambda0, 0.01);
    EXPECT_DOUBLE_EQ(c.opt.lambda_floor, 1e-5);
    EXPECT_DOUBLE_EQ(c.opt.eps, 1e-8);
    EXPECT_DOUBLE_EQ(c.opt.delta_t, 0.1);
    EXPECT_EQ(c.opt.max_iters, 20);
    EXPECT_EQ(c.opt.q, 3);
    EXPECT_DOUBLE_EQ(c.opt.theta, 10.0);
    EXPECT_NO_THROW(c.validate());
}

TEST(PipelineConfig, ValidationRejectsBadShapes) {
    PipelineConfig c;
    c.ar_p = 16;
    EXPECT_THROW(c.validate(), ContractError);
    c = PipelineConfig{};
    c.psf_l = 17;
    EXPECT_THROW(c.validate(), ContractError);
    c = PipelineConfig{};
    c.denoise = true;
    c.denoise_l = 40;
    EXPECT_THROW(c.validate(), ContractError);
    c = PipelineConfig{};
    c.opt.max_iters = 0;
    EXPECT_THROW(c.validate(), ContractError);
}

TEST(PipelineConfig, ParsesNames) {
    EXPECT_EQ(parse_optimizer("none"), OptimizerKind::none);
    EXPECT_EQ(parse_optimizer("bvdr"), OptimizerKind::bvdr);
    EXPECT_EQ(parse_optimizer("cs"), OptimizerKind::cs);
    EXPECT_THROW(parse_optimizer("adam"), InputError);
    EXPECT_EQ(parse_ipsf_route("space"), IpsfRoute::space);
    EXPECT_THROW(parse_ipsf_route("fourier"), InputError);
    EXPECT_STREQ(to_string(OptimizerKind::bvdr), "bvdr");
    EXPECT_STREQ(to_string(IpsfRoute::spectral), "spectral");
}

TEST(PipelineConfig, ApplyConfigSetsKeys) {
    PipelineConfig c;
    apply_config(c, {{"ar_p", "11"}, {"psf_m", "5"}, {"optimizer", "bvdr"}, {"ipsf", "space"}, {"lambda", "0.02"},
                     {"max_iters", "7"}, {"optimize_kernels", "false"}, {"denoise", "yes"}, {"denoise_ridge", "0.5"}});
    EXPECT_EQ(c.ar_p, 11);
    EXPECT_EQ(c.psf_m, 5);
    EXPECT_EQ(c.optimizer, OptimizerKind::bvdr);
    EXPECT_EQ(c.ipsf_route, IpsfRoute::space);
    EXPECT_DOUBLE_EQ(c.opt.lambda0, 0.02);
    EXPECT_EQ(c.opt.max_iters, 7);
    EXPECT_FALSE(c.optimize_kernels);
    EXPECT_TRUE(c.denoise);
    EXPECT_DOUBLE_EQ(c.denoise_ridge, 0.5);
}

TEST(PipelineConfig, ApplyConfigRejectsBadInput) {
    PipelineConfig c;
    EXPECT_THROW(apply_config(c, {{"colour", "red"}}), InputError);
    EXPECT_THROW(apply_config(c, {{"ar_p", "seven"}}), InputError);
    EXPECT_THROW(apply_config(c, {{"ar_p", "7.5"}}), InputError);
    EXPECT_THROW(apply_config(c, {{"denoise", "maybe"}}), InputError);
}

TEST(RunEstimate, IsDeterministic) {
    const ImageGrid x = convolve(scene(96, 2), gaussian_kernel(1.0, 5));
    PipelineConfig c;
    c.psf_l = c.psf_m = 7;
    const EstimateResult a = run_estimate(x, c), b = run_estimate(x, c);
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.g, b.g);
    EXPECT_EQ(a.basis.k(), b.basis.k());
    EXPECT_EQ(a.h.rows, 7);
    EXPECT_EQ(a.g.rows, 7);
    EXPECT_NEAR(grid_sum(a.h), 1.0, 1e-12);
    EXPECT_NEAR(grid_sum(a.g), 1.0, 1e-12);
}

TEST(RunEstimate, ReportsFailingStage) {
    std::string stage;
    try {
        run_estimate(scene(30, 1), PipelineConfig{}, &stage);
        FAIL() << "expected InsufficientDataError";
    } catch (const InsufficientDataError&) {
        EXPECT_EQ(stage, "ar-model");
    }
    PipelineConfig bad;
    bad.ar_p = 4;
    EXPECT_THROW(run_estimate(scene(64, 1), bad, &stage), ContractError);
    EXPECT_EQ(stage, "config");
}

TEST(RunEstimate, SpaceRouteProducesFullSizeIpsf) {
    PipelineConfig c;
    c.psf_l = c.psf_m = 5;
    c.ar_p = c.ar_q = 9;
    c.ipsf_route = IpsfRoute::space;
    const EstimateResult r = run_estimate(convolve(scene(96, 3), gaussian_kernel(1.0, 5)), c);
    EXPECT_EQ(r.g.rows, 9);
    EXPECT_EQ(r.g.cols, 9);
}

TEST(RunDeblur, NoneWithDeltaIsIdentity) {
    const ImageGrid x = scene(40, 4);
    PipelineConfig c;
    c.optimizer = OptimizerKind::none;
    const RestoreResult r = run_deblur(x, delta_kernel(5, 5), std::nullopt, c);
    EXPECT_EQ(r.image, x);
    EXPECT_EQ(r.report.method, "none");
}

TEST(RunDeblur, IterativeMethodsNeedPsf) {
    const ImageGrid x = scene(40, 4);
    PipelineConfig c;
    c.optimizer = OptimizerKind::bvdr;
    EXPECT_THROW(run_deblur(x, delta_kernel(3, 3), std::nullopt, c), InputError);
    c.optimizer = OptimizerKind::cs;
    EXPECT_THROW(run_deblur(x, delta_kernel(3, 3), std::nullopt, c), InputError);
    EXPECT_THROW(run_deblur(x, delta_kernel(41, 41), delta_kernel(3, 3), c), DimensionError);
}

TEST(SynthKernels, DocumentedShapes) {
    EXPECT_EQ(gaussian_kernel(0.0), delta_kernel(1, 1));
    const Kernel m = motion_kernel(5, 0);
    ASSERT_EQ(m.rows, 1);
    ASSERT_EQ(m.cols, 5);
    for (double v : m.data) EXPECT_DOUBLE_EQ(v, 0.2);
    const Kernel v = motion_kernel(5, 90);
    EXPECT_EQ(v.rows, 5);
    EXPECT_EQ(v.cols, 1);
    const Kernel d = disk_kernel(2.0);
    EXPECT_EQ(d.rows, 5);
    EXPECT_NEAR(grid_sum(d), 1.0, 1e-12);
    EXPECT_NEAR(grid_sum(motion_kernel(6.3, 30)), 1.0, 1e-12);
    EXPECT_NEAR(grid_sum(gaussian_kernel(1.3)), 1.0, 1e-12);
}

TEST(SynthNoise, DensityAndDeterminism) {
    const ImageGrid x(100, 100, 0.5);
    const ImageGrid a = salt_and_pepper(x, 0.1, 7), b = salt_and_pepper(x, 0.1, 7);
    EXPECT_EQ(a, b);
    int hit = 0;
    for (double v : a.data) hit += v != 0.5;
    EXPECT_NEAR(hit / 10000.0, 0.1, 0.02);
    EXPECT_THROW(salt_and_pepper(x, 1.5, 1), InputError);
}
