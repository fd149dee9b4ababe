#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "ar_model.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "linalg.hpp"

namespace cnsdeblur {

struct CnsBasis {
    int l = 0;
    int m = 0;
    Vector eigenvalues; // descending
    Matrix vectors;     // l*m x l*m, columns
    int split = 0;      // vectors[split..] form the null side
    double threshold = 0.0;
    double gap_ratio = 0.0; // largest adjacent ratio among null-side eigenvalues
    int gap_index = -1;     // i with the largest lambda_i / lambda_{i+1} below the threshold
    bool single_vector = false;
    bool capped = false;

    int dim() const { return l * m; }
    int k() const { return dim() - split; }
    Matrix null_vectors() const { return vectors.rightCols(k()); }
    // Columns are lex grids V^2 of the null-side vectors.
    Matrix squared_basis() const { return null_vectors().array().square().matrix(); }
    Grid squared_grid(int kappa) const {
        Grid g(l, m);
        for (int i = 0; i < dim(); ++i) {
            const double v = vectors(i, split + kappa);
            g.data[i] = v * v;
        }
        return g;
    }
};

struct CnsOptions {
    bool single_vector = false;
    int cap = 128;
};

inline CnsBasis compute_cns(const OperatorMatrix& op, CnsOptions opts = {}) {
    const Matrix& A = op.matrix;
    if (A.rows() != op.l * op.m) throw ContractError("operator row count does not match l*m");
    const Matrix B = A * A.transpose();
    EigenDecomposition ed = sym_eigen(0.5 * (B + B.transpose()));
    CnsBasis basis;
    basis.l = op.l;
    basis.m = op.m;
    basis.eigenvalues = ed.values;
    basis.vectors = ed.vectors;
    const int n = op.l * op.m;
    const double l1 = ed.values(0);
    if (!(l1 > 1e-12)) throw DegenerateError("flat operator spectrum (largest eigenvalue <= 1e-12)");
    basis.threshold = 0.5 * l1;
    if (opts.single_vector) {
        if (n < 1) throw DegenerateError("empty operator");
        basis.split = n - 1;
        basis.single_vector = true;
        return basis;
    }
    int split = n;
    for (int i = 0; i < n; ++i)
        if (ed.values(i) < basis.threshold) {
            split = i;
            break;
        }
    if (split >= n) throw DegenerateError("no eigenvalue below 0.5*lambda_1; operator has no null side");
    if (n - split > opts.cap) {
        split = n - opts.cap;
        basis.capped = true;
    }
    basis.split = split;
    const double floor = l1 * 1e-13;
    for (int i = split; i + 1 < n; ++i) {
        const double r = std::max(ed.values(i), floor) / std::max(ed.values(i + 1), floor);
        if (r > basis.gap_ratio) {
            basis.gap_ratio = r;
            basis.gap_index = i;
        }
    }
    return basis;
}

inline int cns_dimension_for_blur(const CnsBasis& basis) { return basis.k(); }

inline void write_cns_dump(std::ostream& os, const CnsBasis& basis) {
    os << std::setprecision(17);
    os << basis.l << ' ' << basis.m << ' ' << basis.k() << '\n';
    for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i)
        os << (i ? " " : "") << basis.eigenvalues(i);
    os << '\n';
    for (Eigen::Index r = 0; r < basis.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < basis.vectors.cols(); ++c) os << (c ? " " : "") << basis.vectors(r, c);
        os << '\n';
    }
}

} // namespace cnsdeblur
