#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "torint/spectral.hpp"

// Numerical kernel extraction via singular value decomposition.

namespace torint {

inline constexpr double kDefaultKernelThreshold = 1e-8;

struct KernelReport {
    std::vector<double> singular_values;   // descending, all of them
    double threshold = 0.0;                // relative threshold used
    double sigma_max = 0.0;
    std::vector<std::vector<Complex>> basis;  // right singular vectors with sigma <= threshold*sigma_max
    int dimension = 0;
    // Numerical-rank ambiguity: sigma values in (thr*smax, 10*thr*smax].
    bool rank_ambiguous = false;
    int ambiguous_dimension = 0;  // kernel count if the looser cut were used
};

namespace detail {

struct SvdResult {
    std::vector<double> sigma;                 // min(m,n) values, descending
    std::vector<std::vector<Complex>> vrows;   // n right singular vectors (rows of V^H, conjugated)
};

// Full right singular system of a dense complex matrix (column-major).
inline SvdResult dense_svd(int m, int n, std::vector<Complex> a) {
    SvdResult r;
    if (n == 0) return r;
    if (m == 0) {
        // no equations: every direction is in the kernel
        r.sigma.assign(0, 0.0);
        r.vrows.assign(n, std::vector<Complex>(n, Complex{0.0, 0.0}));
        for (int i = 0; i < n; ++i) r.vrows[i][i] = Complex{1.0, 0.0};
        return r;
    }
    int mn = std::min(m, n);
    std::vector<double> s(mn);
    std::vector<Complex> u, vt(static_cast<size_t>(n) * n);
    char jobz;
    lapack_int info;
    if (m >= n) {
        jobz = 'S';  // V^H comes out n x n
        u.resize(static_cast<size_t>(m) * n);
        info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, jobz, m, n, a.data(), m, s.data(),
                              u.data(), m, vt.data(), n);
    } else {
        jobz = 'A';  // need the null-space rows of V^H as well
        u.resize(static_cast<size_t>(m) * m);
        info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, jobz, m, n, a.data(), m, s.data(),
                              u.data(), m, vt.data(), n);
    }
    if (info != 0) throw std::runtime_error("SVD failed to converge (zgesdd info=" + std::to_string(info) + ")");
    r.sigma.assign(s.begin(), s.end());
    r.vrows.assign(n, std::vector<Complex>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r.vrows[i][j] = std::conj(vt[static_cast<size_t>(j) * n + i]);  // row i of V^H -> column of V
    return r;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace detail

// Kernel of A restricted to the columns not listed in dropped_cols (those
// directions are projected out; kernel vectors carry zeros there). The
// operators assembled from trig-polynomial data are block-decomposable:
// columns that never share a nonzero row split into independent SVD problems.
inline KernelReport kernel_basis(const ComplexMatrix& A, double threshold,
                                 const std::vector<int>& dropped_cols = {}) {
    if (threshold <= 0.0) throw std::invalid_argument("kernel threshold must be positive");

    std::vector<bool> dropped(A.cols, false);
    for (int c : dropped_cols) dropped[c] = true;
    std::vector<int> keep;
    for (int c = 0; c < A.cols; ++c)
        if (!dropped[c]) keep.push_back(c);
    int n = static_cast<int>(keep.size());

    // sparsity pattern per kept column
    std::vector<std::vector<int>> col_rows(n);
    for (int c = 0; c < n; ++c) {
        int col = keep[c];
        for (int r = 0; r < A.rows; ++r)
            if (A.at(r, col) != Complex{0.0, 0.0}) col_rows[c].push_back(r);
    }

    // connected components of the column-row incidence graph
    detail::UnionFind uf(n);
    {
        std::vector<int> row_owner(A.rows, -1);
        for (int c = 0; c < n; ++c)
            for (int r : col_rows[c]) {
                if (row_owner[r] < 0)
                    row_owner[r] = c;
                else
                    uf.unite(row_owner[r], c);
            }
    }
    std::vector<std::vector<int>> components;
    {
        std::vector<int> comp_of(n, -1);
        for (int c = 0; c < n; ++c) {
            int root = uf.find(c);
            if (comp_of[root] < 0) {
                comp_of[root] = static_cast<int>(components.size());
                components.emplace_back();
            }
            components[comp_of[root]].push_back(c);
        }
    }

    // (sigma, full-length right vector) pairs over all components
    std::vector<std::pair<double, std::vector<Complex>>> pairs;
    for (const auto& comp : components) {
        std::vector<int> rows;
        for (int c : comp)
            for (int r : col_rows[c]) rows.push_back(r);
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        int mi = static_cast<int>(rows.size());
        int ni = static_cast<int>(comp.size());

        std::vector<Complex> sub(static_cast<size_t>(mi) * ni, Complex{0.0, 0.0});
        for (int cj = 0; cj < ni; ++cj)
            for (int ri = 0; ri < mi; ++ri)
                sub[static_cast<size_t>(cj) * mi + ri] = A.at(rows[ri], keep[comp[cj]]);

        auto svd = detail::dense_svd(mi, ni, std::move(sub));
        for (int i = 0; i < ni; ++i) {
            double sigma = i < static_cast<int>(svd.sigma.size()) ? svd.sigma[i] : 0.0;
            std::vector<Complex> full(A.cols, Complex{0.0, 0.0});
            for (int cj = 0; cj < ni; ++cj) full[keep[comp[cj]]] = svd.vrows[i][cj];
            pairs.emplace_back(sigma, std::move(full));
        }
    }

    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    KernelReport report;
    report.threshold = threshold;
    report.sigma_max = pairs.empty() ? 0.0 : pairs.front().first;
    double cut = threshold * report.sigma_max;
    double loose_cut = 10.0 * cut;
    for (auto& [sigma, vec] : pairs) {
        report.singular_values.push_back(sigma);
        if (report.sigma_max == 0.0 || sigma <= cut) {
            report.basis.push_back(std::move(vec));
        } else if (sigma <= loose_cut) {
            ++report.ambiguous_dimension;
        }
    }
    report.dimension = static_cast<int>(report.basis.size());
    if (report.ambiguous_dimension > 0) {
        report.rank_ambiguous = true;
        report.ambiguous_dimension += report.dimension;
    }
    return report;
}

} // namespace torint
