#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <cnsdeblur/ar_model.hpp>

using namespace cnsdeblur;

namespace {

// 3x3 centrosymmetric stencil with transfer 1 + 2b(cos wx + cos wy) + 4c cos wx cos wy.
constexpr double kB = -0.4, kC = 0.05;

Grid known_stencil() {
    Grid a(3, 3, kC);
    a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = kB;
    a(1, 1) = 1.0;
    return a;
}

// Sum of plane waves sitting on the zero curve of known_stencil(), plus optional white noise.
ImageGrid zero_curve_image(int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> nd(0.0, 1.0);
    ImageGrid img(n, n);
    for (double cx : {0.4, 0.5, 0.62, 0.75, 0.86, 0.95}) {
        const double cy = (1.0 + 2.0 * kB * cx) / (-2.0 * kB - 4.0 * kC * cx);
        const double wx = std::acos(cx), wy = std::acos(cy);
        for (double sy : {1.0, -1.0}) {
            const double ph = phase(rng);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) img(i, k) += std::cos(sy * wy * i + wx * k + ph);
        }
    }
    for (double& v : img.data) v += noise * nd(rng);
    return img;
}

Vector window_vector(const ImageGrid& img, int top, int left, int rows, int cols) {
    const auto w = lex_window(img, top, left, rows, cols);
    return Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
}

} // namespace

TEST(EstimateAr, CenterPinnedToOne) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    ImageGrid img(40, 40);
    for (double& v : img.data) v = nd(rng);
    const ArModel m = estimate_ar(img, 5, 3);
    EXPECT_EQ(m.coeffs(2, 1), 1.0);
    EXPECT_EQ(m.coeffs.rows, 5);
    EXPECT_EQ(m.coeffs.cols, 3);
}

TEST(EstimateAr, OneByOneModelResidualIsPower) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    ImageGrid img(32, 32);
    for (double& v : img.data) v = nd(rng);
    const ArModel m = estimate_ar(img, 1, 1);
    EXPECT_EQ(m.coeffs(0, 0), 1.0);
    double power = 0.0;
    for (double v : img.data) power += v * v;
    EXPECT_NEAR(m.residual, power / static_cast<double>(img.size()), 1e-12);
}

TEST(EstimateAr, RecoversZeroCurveStencil) {
    const ImageGrid img = zero_curve_image(96, 1e-7, 3);
    const ArModel m = estimate_ar(img, 3, 3);
    const Grid a0 = known_stencil();
    for (std::size_t i = 0; i < a0.size(); ++i) EXPECT_NEAR(m.coeffs.data[i], a0.data[i], 1e-3) << "tap " << i;
}

TEST(EstimateAr, NoiseFreeResidualVanishes) {
    const ImageGrid img = zero_curve_image(80, 0.0, 4);
    const ArModel m = estimate_ar(img, 3, 3);
    double power = 0.0;
    for (double v : img.data) power += v * v;
    EXPECT_LE(m.residual, 1e-12 * power / static_cast<double>(img.size()));
}

TEST(EstimateAr, ResidualNeverAbovePinnedDelta) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    ImageGrid img(48, 48);
    for (double& v : img.data) v = nd(rng);
    const ImageGrid smooth = convolve(img, Kernel(5, 5, 1.0 / 25.0));
    const ArModel full = estimate_ar(smooth, 5, 5), unit = estimate_ar(smooth, 1, 1);
    EXPECT_LT(full.residual, unit.residual);
}

TEST(EstimateAr, RegionTooSmallIsInsufficientData) {
    EXPECT_THROW(estimate_ar(ImageGrid(40, 40, 1.0), 5, 5, Region{0, 0, 6, 6}), InsufficientDataError);
}

TEST(EstimateAr, RegionOutsideImageThrows) {
    EXPECT_THROW(estimate_ar(ImageGrid(20, 20), 3, 3, Region{10, 10, 20, 20}), DimensionError);
}

TEST(EstimateAr, EvenOrderRejected) { EXPECT_THROW(estimate_ar(ImageGrid(20, 20), 4, 3), ContractError); }

TEST(EstimateAr, LargeImageHighOrderCompletes) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    ImageGrid img(512, 512);
    for (double& v : img.data) v = nd(rng);
    img = convolve(img, Kernel(3, 3, 1.0 / 9.0));
    const auto t0 = std::chrono::steady_clock::now();
    const ArModel m = estimate_ar(img, 17, 17);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_TRUE(std::isfinite(m.residual));
    EXPECT_TRUE(all_finite(m.coeffs));
    EXPECT_EQ(m.coeffs(8, 8), 1.0);
    RecordProperty("seconds", std::to_string(secs));
}

TEST(BuildOperator, SingleShiftIsLexStencil) {
    ArModel m;
    m.p = m.q = 3;
    m.coeffs = Grid(3, 3, std::vector<double>{1, 2, 3, 4, 1, 6, 7, 8, 9});
    const OperatorMatrix op = build_operator(m, 1, 1);
    ASSERT_EQ(op.matrix.rows(), 1);
    ASSERT_EQ(op.matrix.cols(), 9);
    for (int i = 0; i < 9; ++i) EXPECT_EQ(op.matrix(0, i), m.coeffs.data[i]);
}

TEST(BuildOperator, ShapeAndRowShift) {
    ArModel m;
    m.p = m.q = 5;
    m.coeffs = Grid(5, 5);
    for (std::size_t i = 0; i < m.coeffs.size(); ++i) m.coeffs.data[i] = 1.0 + static_cast<double>(i);
    const OperatorMatrix op = build_operator(m, 3, 3);
    ASSERT_EQ(op.matrix.rows(), 9);
    ASSERT_EQ(op.matrix.cols(), 49);
    for (int c = 0; c + 1 < 49; ++c) EXPECT_EQ(op.matrix(1, c + 1), op.matrix(0, c));
    EXPECT_EQ(op.matrix(1, 0), 0.0);
    for (int c = 0; c + 7 < 49; ++c) EXPECT_EQ(op.matrix(3, c + 7), op.matrix(0, c));
}

TEST(BuildOperator, RowsShareTheSameNonzeroMultiset) {
    ArModel m;
    m.p = 5;
    m.q = 3;
    m.coeffs = Grid(5, 3);
    for (std::size_t i = 0; i < m.coeffs.size(); ++i) m.coeffs.data[i] = 0.1 * static_cast<double>(i + 1);
    const OperatorMatrix op = build_operator(m, 3, 1);
    auto sorted_nonzero = [&](int r) {
        std::vector<double> v;
        for (Eigen::Index c = 0; c < op.matrix.cols(); ++c)
            if (op.matrix(r, c) != 0.0) v.push_back(op.matrix(r, c));
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto ref = sorted_nonzero(0);
    EXPECT_EQ(ref.size(), 15u);
    for (int r = 1; r < op.matrix.rows(); ++r) EXPECT_EQ(sorted_nonzero(r), ref);
}

TEST(BuildOperator, AnnihilatesModelConsistentWindow) {
    const ImageGrid img = zero_curve_image(64, 0.0, 7);
    const ArModel m = estimate_ar(img, 3, 3);
    const OperatorMatrix op = build_operator(m, 1, 1);
    ArModel exact;
    exact.p = exact.q = 3;
    exact.coeffs = known_stencil();
    const int l = 1, mm = 1;
    const Vector w = window_vector(img, 20, 30, 3 + l - 1, 3 + mm - 1);
    EXPECT_LE((op.matrix * w).norm(), 1e-6 * w.norm());
    ArModel big = exact;
    big.p = big.q = 5;
    big.coeffs = center_pad(exact.coeffs, 5, 5);
    const OperatorMatrix op3 = build_operator(big, 3, 3);
    const Vector w3 = window_vector(img, 10, 12, 7, 7);
    EXPECT_LE((op3.matrix * w3).norm(), 1e-6 * w3.norm());
}

TEST(BuildOperator, KernelNotSmallerThanModelIsRejected) {
    ArModel m;
    m.p = m.q = 3;
    m.coeffs = known_stencil();
    EXPECT_THROW(build_operator(m, 3, 1), ContractError);
    EXPECT_THROW(build_operator(m, 2, 1), ContractError);
}

namespace {

// Independent scan: explicit autocorrelation, dense inverse, walk of the last column.
int oracle_axis_order(const ImageGrid& img, bool along_rows, int n) {
    double mean = 0.0;
    for (double v : img.data) mean += v;
    mean /= static_cast<double>(img.size());
    std::vector<double> r(n);
    for (int t = 0; t < n; ++t) {
        double s = 0.0;
        long cnt = 0;
        for (int i = 0; i < img.rows; ++i)
            for (int k = 0; k < img.cols; ++k) {
                const int i2 = along_rows ? i : i + t, k2 = along_rows ? k + t : k;
                if (i2 >= img.rows || k2 >= img.cols) continue;
                s += (img(i, k) - mean) * (img(i2, k2) - mean);
                ++cnt;
            }
        r[t] = s / static_cast<double>(cnt);
    }
    Matrix T(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) T(i, j) = r[std::abs(i - j)];
    const Vector c = T.inverse().col(n - 1).cwiseAbs();
    const double thr = 4.0 / std::sqrt(static_cast<double>(img.size()));
    int lag = 0;
    for (int j = 0; j <= n - 2; ++j) {
        const bool left = j == 0 || c(j) > c(j - 1);
        const bool right = j == n - 2 || c(j) >= c(j + 1);
        if (left && right && c(j) / c(n - 1) >= thr) {
            lag = n - 1 - j;
            break;
        }
    }
    int order = lag + 1;
    if (order % 2 == 0) ++order;
    return std::clamp(order, 3, n);
}

ImageGrid sinusoid(int n, int period, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    ImageGrid s(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            s(i, k) = std::sin(2 * std::numbers::pi * k / period) + std::sin(2 * std::numbers::pi * i / period) +
                      noise * nd(rng);
    return s;
}

} // namespace

TEST(SuggestOrder, WhiteNoiseGivesMinimum) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    ImageGrid img(128, 128);
    for (double& v : img.data) v = nd(rng);
    const auto s = suggest_order(img, 33);
    EXPECT_EQ(s.p, 3);
    EXPECT_EQ(s.q, 3);
}

TEST(SuggestOrder, ConstantImageWarns) {
    const auto s = suggest_order(ImageGrid(40, 40, 0.5), 9);
    EXPECT_EQ(s.p, 3);
    EXPECT_EQ(s.q, 3);
    EXPECT_FALSE(s.warning.empty());
}

TEST(SuggestOrder, SinusoidsMatchDirectScanAndCoverPeriod) {
    for (int period : {4, 6, 8, 12}) {
        const ImageGrid img = sinusoid(96, period, 0.3, 9 + period);
        const auto s = suggest_order(img, 17);
        EXPECT_EQ(s.q, oracle_axis_order(img, true, 17)) << "period " << period;
        EXPECT_EQ(s.p, oracle_axis_order(img, false, 17)) << "period " << period;
        EXPECT_GE(s.q, period) << "period " << period;
        EXPECT_GE(s.p, period) << "period " << period;
    }
}

TEST(SuggestOrder, RejectsBadMaxOrder) {
    EXPECT_THROW(suggest_order(ImageGrid(20, 20), 4), ContractError);
    EXPECT_THROW(suggest_order(ImageGrid(5, 5), 7), DimensionError);
}
