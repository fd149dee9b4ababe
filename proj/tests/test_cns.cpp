#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <cnsdeblur/ar_model.hpp>
#include <cnsdeblur/cns.hpp>

using namespace cnsdeblur;

namespace {

Matrix orthonormal(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return Eigen::HouseholderQR<Matrix>(m).householderQ() * Matrix::Identity(n, n);
}

// Operator with exactly `rank` singular values drawn from [0.9, 1.2] and the rest zero.
OperatorMatrix rank_operator(int l, int m, int cols, int rank, std::uint64_t seed, Vector* sv = nullptr) {
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(0.9, 1.2);
    const int n = l * m;
    const Matrix U = orthonormal(n, seed), V = orthonormal(cols, seed + 1);
    Matrix S = Matrix::Zero(n, cols);
    for (int i = 0; i < rank; ++i) S(i, i) = u(rng);
    OperatorMatrix op;
    op.l = l;
    op.m = m;
    op.p = l + 2;
    op.q = m + 2;
    op.matrix = U * S * V.transpose();
    if (sv) *sv = S.diagonal().head(n);
    return op;
}

} // namespace

TEST(ComputeCns, DeltaStencilIsDegenerate) {
    ArModel m;
    m.p = m.q = 5;
    m.coeffs = Grid(5, 5);
    m.coeffs(2, 2) = 1.0;
    EXPECT_THROW(compute_cns(build_operator(m, 3, 3)), DegenerateError);
}

TEST(ComputeCns, FlatOperatorIsDegenerate) {
    OperatorMatrix op;
    op.l = op.m = 3;
    op.matrix = Matrix::Zero(9, 25);
    EXPECT_THROW(compute_cns(op), DegenerateError);
}

TEST(ComputeCns, DimensionEqualsRankDeficiency) {
    for (int rank : {1, 4, 12, 20}) {
        Vector sv;
        const OperatorMatrix op = rank_operator(5, 5, 49, rank, 10 + rank, &sv);
        const Eigen::JacobiSVD<Matrix> svd(op.matrix);
        int numerical_rank = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-8 * svd.singularValues()(0)) ++numerical_rank;
        const CnsBasis b = compute_cns(op);
        EXPECT_EQ(b.k(), 25 - numerical_rank) << "rank " << rank;
        EXPECT_FALSE(b.capped);
    }
}

TEST(ComputeCns, EigenvaluesAreSquaredSingularValues) {
    const OperatorMatrix op = rank_operator(3, 5, 30, 9, 21);
    const CnsBasis b = compute_cns(op);
    const Eigen::JacobiSVD<Matrix> svd(op.matrix);
    const Vector s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i)
        EXPECT_NEAR(b.eigenvalues(i), s(i) * s(i), 1e-8 * b.eigenvalues(0));
}

TEST(ComputeCns, BasisInvariants) {
    const OperatorMatrix op = rank_operator(5, 3, 35, 6, 31);
    const CnsBasis b = compute_cns(op);
    const Matrix gram = b.vectors.transpose() * b.vectors;
    EXPECT_LE((gram - Matrix::Identity(15, 15)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index i = 0; i + 1 < b.eigenvalues.size(); ++i) EXPECT_GE(b.eigenvalues(i), b.eigenvalues(i + 1));
    EXPECT_GE(b.split, 1);
    EXPECT_LT(b.split, b.dim());
    EXPECT_EQ(b.threshold, 0.5 * b.eigenvalues(0));
    for (int kappa = 0; kappa < b.k(); ++kappa) {
        const Grid g = b.squared_grid(kappa);
        EXPECT_EQ(g.rows, 5);
        EXPECT_EQ(g.cols, 3);
        for (double v : g.data) EXPECT_GE(v, 0.0);
        EXPECT_NEAR(grid_sum(g), 1.0, 1e-10);
    }
    const Matrix sq = b.squared_basis();
    EXPECT_EQ(sq.cols(), b.k());
    for (int kappa = 0; kappa < b.k(); ++kappa)
        for (int i = 0; i < b.dim(); ++i) EXPECT_EQ(sq(i, kappa), b.squared_grid(kappa).data[i]);
}

TEST(ComputeCns, NullSideBelowHalfLargest) {
    const OperatorMatrix op = rank_operator(5, 5, 49, 10, 41);
    const CnsBasis b = compute_cns(op);
    for (int i = 0; i < b.dim(); ++i) {
        if (i < b.split) EXPECT_GE(b.eigenvalues(i), b.threshold);
        else EXPECT_LT(b.eigenvalues(i), b.threshold);
    }
}

TEST(ComputeCns, DimensionIsCapped) {
    const OperatorMatrix op = rank_operator(13, 13, 200, 10, 51);
    const CnsBasis b = compute_cns(op);
    EXPECT_EQ(b.k(), 128);
    EXPECT_TRUE(b.capped);
    EXPECT_EQ(compute_cns(op, CnsOptions{false, 200}).k(), 159);
}

TEST(ComputeCns, SingleVectorModeKeepsSmallestEigenvector) {
    const OperatorMatrix op = rank_operator(5, 5, 49, 20, 61);
    const CnsBasis b = compute_cns(op, CnsOptions{true, 128});
    EXPECT_EQ(b.k(), 1);
    EXPECT_EQ(cns_dimension_for_blur(b), 1);
    EXPECT_TRUE(b.single_vector);
    const Vector v = b.null_vectors().col(0);
    const Matrix B = op.matrix * op.matrix.transpose();
    EXPECT_LE((B * v).norm(), 1e-8 * B.norm());
}

TEST(ComputeCns, DumpFormat) {
    const OperatorMatrix op = rank_operator(3, 3, 25, 4, 71);
    const CnsBasis b = compute_cns(op);
    std::ostringstream os;
    write_cns_dump(os, b);
    std::istringstream is(os.str());
    int l = 0, m = 0, k = 0;
    is >> l >> m >> k;
    EXPECT_EQ(l, 3);
    EXPECT_EQ(m, 3);
    EXPECT_EQ(k, b.k());
    for (int i = 0; i < 9; ++i) {
        double v = 0.0;
        is >> v;
        EXPECT_DOUBLE_EQ(v, b.eigenvalues(i));
    }
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            double v = 0.0;
            is >> v;
            EXPECT_DOUBLE_EQ(v, b.vectors(r, c));
        }
    double extra = 0.0;
    EXPECT_FALSE(static_cast<bool>(is >> extra));
}
