#pragma once

#include <algorithm>
#include <cassert>
#include <complex>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "torint/expr.hpp"

// Truncated 2-D Fourier representation of scalar fields on the torus
// [0,2pi)^2, with the convention f(x,y) = sum_{j,k} fhat(j,k) e^{i(jx+ky)}.

namespace torint {

using Complex = std::complex<double>;

struct Grid2 {
    int n = 64;

    Grid2() = default;
    explicit Grid2(int n_) : n(n_) {
        if (n < 8 || (n & (n - 1)) != 0)
            throw std::invalid_argument("grid size must be a power of two, at least 8");
    }
    double spacing() const { return 2.0 * std::numbers::pi / n; }
    double node(int i) const { return spacing() * i; }
};

// Real samples on the n x n grid, row-major with y fastest: v[ix*n + iy].
class RealGrid {
public:
    RealGrid() = default;
    explicit RealGrid(int n) : n_(n), v_(static_cast<size_t>(n) * n, 0.0) {}

    int n() const { return n_; }
    double& operator()(int ix, int iy) { return v_[static_cast<size_t>(ix) * n_ + iy]; }
    double operator()(int ix, int iy) const { return v_[static_cast<size_t>(ix) * n_ + iy]; }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    double sup_norm() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }
    double min() const { return *std::min_element(v_.begin(), v_.end()); }
    double max() const { return *std::max_element(v_.begin(), v_.end()); }
    double mean() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s / static_cast<double>(v_.size());
    }

private:
    int n_ = 0;
    std::vector<double> v_;
};

// Fourier coefficient table over modes |j|,|k| <= n/2, stored as a full
// complex n x n array in FFT index order. Fields of real data carry the
// conjugate-symmetry invariant coeff(-j,-k) = conj(coeff(j,k)).
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(int n) : n_(n), c_(static_cast<size_t>(n) * n, Complex{0.0, 0.0}) {}

    int n() const { return n_; }
    int band() const { return n_ / 2; }

    Complex coeff(int j, int k) const {
        if (std::abs(j) > n_ / 2 || std::abs(k) > n_ / 2) return {0.0, 0.0};
        return c_[idx(j, k)];
    }
    void set_coeff(int j, int k, Complex v) { c_[idx(j, k)] = v; }
    void add_coeff(int j, int k, Complex v) { c_[idx(j, k)] += v; }

    std::span<const Complex> raw() const { return c_; }
    std::span<Complex> raw() { return c_; }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& z : c_) m = std::max(m, std::abs(z));
        return m;
    }

    // Deviation from the reality condition coeff(-j,-k) = conj(coeff(j,k)).
    double conjugate_symmetry_defect() const {
        double d = 0.0;
        int h = n_ / 2;
        for (int j = -h; j <= h - 1; ++j)
            for (int k = -h; k <= h - 1; ++k)
                d = std::max(d, std::abs(coeff(j, k) - std::conj(coeff(-j, -k))));
        return d;
    }

    // Largest |j| or |k| carrying a coefficient above rel * max_abs_coeff.
    int degree(double rel = 1e-13) const {
        double cutoff = rel * max_abs_coeff();
        int deg = 0;
        int h = n_ / 2;
        for (int j = -h; j <= h - 1; ++j)
            for (int k = -h; k <= h - 1; ++k)
                if (std::abs(coeff(j, k)) > cutoff)
                    deg = std::max({deg, std::abs(j), std::abs(k)});
        return deg;
    }

    // Zero out coefficients below rel * max_abs_coeff (sampling noise).
    SpectralField pruned(double rel = 1e-13) const {
        SpectralField out = *this;
        double cutoff = rel * max_abs_coeff();
        for (auto& z : out.c_)
            if (std::abs(z) <= cutoff) z = {0.0, 0.0};
        return out;
    }

    // Evaluate the truncated series at an arbitrary point (real part).
    double eval(double x, double y) const {
        int h = n_ / 2;
        std::vector<Complex> ex(2 * h + 1), ey(2 * h + 1);
        Complex wx = std::exp(Complex{0.0, x}), wy = std::exp(Complex{0.0, y});
        ex[h] = ey[h] = Complex{1.0, 0.0};
        for (int m = 1; m <= h; ++m) {
            ex[h + m] = ex[h + m - 1] * wx;
            ex[h - m] = std::conj(ex[h + m]);
            ey[h + m] = ey[h + m - 1] * wy;
            ey[h - m] = std::conj(ey[h + m]);
        }
        Complex s{0.0, 0.0};
        for (int j = -h; j < h; ++j)
            for (int k = -h; k < h; ++k) {
                Complex z = coeff(j, k);
                if (z == Complex{0.0, 0.0}) continue;
                s += z * ex[h + j] * ey[h + k];
            }
        return s.real();
    }

private:
    size_t idx(int j, int k) const {
        int wj = j < 0 ? j + n_ : j;
        int wk = k < 0 ? k + n_ : k;
        return static_cast<size_t>(wj) * n_ + wk;
    }

    int n_ = 0;
    std::vector<Complex> c_;
};

namespace detail {

inline std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

inline void fft2(std::vector<Complex>& data, int n, int sign) {
    std::unique_lock lock(fftw_mutex());
    fftw_plan plan = fftw_plan_dft_2d(n, n,
                                      reinterpret_cast<fftw_complex*>(data.data()),
                                      reinterpret_cast<fftw_complex*>(data.data()),
                                      sign, FFTW_ESTIMATE);
    lock.unlock();
    fftw_execute(plan);
    lock.lock();
    fftw_destroy_plan(plan);
}

} // namespace detail

// Forward transform: grid values -> Fourier coefficients. Nyquist modes are
// zeroed; band-limited input of degree < n/2 is represented exactly.
inline SpectralField forward(const RealGrid& g) {
    int n = g.n();
    std::vector<Complex> data(static_cast<size_t>(n) * n);
    for (size_t i = 0; i < data.size(); ++i) data[i] = Complex{g.values()[i], 0.0};
    detail::fft2(data, n, FFTW_FORWARD);
    double scale = 1.0 / (static_cast<double>(n) * n);
    SpectralField f(n);
    for (size_t i = 0; i < data.size(); ++i) f.raw()[i] = data[i] * scale;
    int h = n / 2;
    for (int k = -h; k < h; ++k) f.set_coeff(-h, k, {0.0, 0.0});
    for (int j = -h; j < h; ++j) f.set_coeff(j, -h, {0.0, 0.0});
    return f;
}

// Inverse transform onto an n_out x n_out grid (zero-padded when n_out > n).
inline RealGrid inverse(const SpectralField& f, int n_out = 0) {
    int n = f.n();
    if (n_out == 0) n_out = n;
    std::vector<Complex> data(static_cast<size_t>(n_out) * n_out, Complex{0.0, 0.0});
    int h = std::min(n, n_out) / 2;
    for (int j = -h; j <= h - 1; ++j)
        for (int k = -h; k <= h - 1; ++k) {
            int wj = j < 0 ? j + n_out : j;
            int wk = k < 0 ? k + n_out : k;
            data[static_cast<size_t>(wj) * n_out + wk] = f.coeff(j, k);
        }
    detail::fft2(data, n_out, FFTW_BACKWARD);
    RealGrid g(n_out);
    for (size_t i = 0; i < data.size(); ++i) g.values()[i] = data[i].real();
    return g;
}

inline RealGrid sample_values(const Expr& e, std::span<const double> c, Grid2 grid) {
    RealGrid g(grid.n);
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy)
            g(ix, iy) = e.eval({grid.node(ix), grid.node(iy), c});
    return g;
}

inline SpectralField sample_to_grid(const Expr& e, std::span<const double> c, Grid2 grid) {
    return forward(sample_values(e, c, grid));
}

enum class Axis { X, Y };

inline SpectralField spectral_derivative(const SpectralField& f, Axis axis) {
    int n = f.n();
    int h = n / 2;
    SpectralField out(n);
    for (int j = -h; j <= h - 1; ++j)
        for (int k = -h; k <= h - 1; ++k) {
            int m = axis == Axis::X ? j : k;
            out.set_coeff(j, k, Complex{0.0, static_cast<double>(m)} * f.coeff(j, k));
        }
    return out;
}

// Dealiased product: evaluate both factors on a doubled grid, multiply
// pointwise, transform back and truncate to the original band.
inline SpectralField multiply(const SpectralField& f, const SpectralField& g) {
    int n = std::max(f.n(), g.n());
    int m = 2 * n;
    RealGrid fa = inverse(f, m), gb = inverse(g, m);
    RealGrid prod(m);
    for (size_t i = 0; i < prod.values().size(); ++i)
        prod.values()[i] = fa.values()[i] * gb.values()[i];
    SpectralField wide = forward(prod);
    SpectralField out(n);
    int h = n / 2;
    for (int j = -h; j <= h - 1; ++j)
        for (int k = -h; k <= h - 1; ++k)
            out.set_coeff(j, k, wide.coeff(j, k));
    return out;
}

// --- truncated mode bands and coefficient vectors ---

// Square band of modes |j|,|k| <= K, indexed row-major over (j+K, k+K).
struct ModeBand {
    int K = 16;

    int dim() const { return (2 * K + 1) * (2 * K + 1); }
    int index(int j, int k) const {
        assert(std::abs(j) <= K && std::abs(k) <= K);
        return (j + K) * (2 * K + 1) + (k + K);
    }
    std::pair<int, int> mode(int idx) const {
        return {idx / (2 * K + 1) - K, idx % (2 * K + 1) - K};
    }
    bool contains(int j, int k) const { return std::abs(j) <= K && std::abs(k) <= K; }
};

inline std::vector<Complex> to_band_vector(const SpectralField& f, ModeBand band) {
    std::vector<Complex> v(band.dim());
    for (int i = 0; i < band.dim(); ++i) {
        auto [j, k] = band.mode(i);
        v[i] = f.coeff(j, k);
    }
    return v;
}

inline SpectralField field_from_band(int n, ModeBand band, std::span<const Complex> v) {
    SpectralField f(n);
    for (int i = 0; i < band.dim(); ++i) {
        auto [j, k] = band.mode(i);
        if (std::abs(j) < n / 2 && std::abs(k) < n / 2) f.set_coeff(j, k, v[i]);
    }
    return f;
}

// --- Galerkin operators over truncated bands ---

// Dense complex matrix in column-major order (LAPACK layout).
struct ComplexMatrix {
    int rows = 0, cols = 0;
    std::vector<Complex> a;

    ComplexMatrix() = default;
    ComplexMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, Complex{0.0, 0.0}) {}
    Complex& at(int i, int j) { return a[static_cast<size_t>(j) * rows + i]; }
    Complex at(int i, int j) const { return a[static_cast<size_t>(j) * rows + i]; }

    std::vector<Complex> apply(std::span<const Complex> v) const {
        std::vector<Complex> out(rows, Complex{0.0, 0.0});
        for (int j = 0; j < cols; ++j) {
            Complex vj = v[j];
            if (vj == Complex{0.0, 0.0}) continue;
            const Complex* col = a.data() + static_cast<size_t>(j) * rows;
            for (int i = 0; i < rows; ++i) out[i] += col[i] * vj;
        }
        return out;
    }
};

// Test band wide enough to capture every product mode of trig-polynomial
// coefficient data: trial band K plus the data's spectral degree.
inline int effective_test_band(const SpectralField& x1, const SpectralField& x2, int K) {
    int deg = std::max(x1.degree(), x2.degree());
    int cap = std::max(x1.n(), x2.n()) / 2 - 1;
    return std::min(K + deg, std::max(K, cap));
}

// Galerkin truncation of the advection operator f -> X(f) = X1 df/dx + X2 df/dy,
// mapping trial coefficients (band K) to test coefficients (band R). For
// constant X the square part is diagonal with entries i(a j + b k).
inline ComplexMatrix advection_matrix(const SpectralField& x1, const SpectralField& x2,
                                      ModeBand trial, ModeBand test) {
    ComplexMatrix A((test.dim()), trial.dim());
    for (int col = 0; col < trial.dim(); ++col) {
        auto [j, k] = trial.mode(col);
        for (int row = 0; row < test.dim(); ++row) {
            auto [jr, kr] = test.mode(row);
            Complex c1 = x1.coeff(jr - j, kr - k);
            Complex c2 = x2.coeff(jr - j, kr - k);
            Complex v = Complex{0.0, 1.0} * (static_cast<double>(j) * c1 + static_cast<double>(k) * c2);
            if (v != Complex{0.0, 0.0}) A.at(row, col) = v;
        }
    }
    return A;
}

// Galerkin truncation of rho -> d/dx(rho X1) + d/dy(rho X2): the invariant
// density equation div(rho X) = 0 in coefficient space.
inline ComplexMatrix density_matrix(const SpectralField& x1, const SpectralField& x2,
                                    ModeBand trial, ModeBand test) {
    ComplexMatrix A(test.dim(), trial.dim());
    for (int col = 0; col < trial.dim(); ++col) {
        auto [j, k] = trial.mode(col);
        for (int row = 0; row < test.dim(); ++row) {
            auto [jr, kr] = test.mode(row);
            Complex c1 = x1.coeff(jr - j, kr - k);
            Complex c2 = x2.coeff(jr - j, kr - k);
            Complex v = Complex{0.0, 1.0} * (static_cast<double>(jr) * c1 + static_cast<double>(kr) * c2);
            if (v != Complex{0.0, 0.0}) A.at(row, col) = v;
        }
    }
    return A;
}

// Coupled operator for the dynamical-symmetry equation [X,Y] = 0 with
// Y = a d/dx + b d/dy. Unknowns stacked as (a-band, b-band); equations as
// (x-component, y-component) over the test band:
//   comp1 = X(a) - a dX1/dx - b dX1/dy
//   comp2 = X(b) - a dX2/dx - b dX2/dy
inline ComplexMatrix symmetry_matrix(const SpectralField& x1, const SpectralField& x2,
                                     ModeBand trial, ModeBand test) {
    int tn = trial.dim(), rn = test.dim();
    ComplexMatrix A(2 * rn, 2 * tn);
    const Complex I{0.0, 1.0};
    for (int col = 0; col < tn; ++col) {
        auto [j, k] = trial.mode(col);
        for (int row = 0; row < rn; ++row) {
            auto [jr, kr] = test.mode(row);
            int dj = jr - j, dk = kr - k;
            Complex c1 = x1.coeff(dj, dk);
            Complex c2 = x2.coeff(dj, dk);
            Complex adv = I * (static_cast<double>(j) * c1 + static_cast<double>(k) * c2);
            // a-column contributions
            Complex a_comp1 = adv - I * static_cast<double>(dj) * c1;
            Complex a_comp2 = -I * static_cast<double>(dj) * c2;
            // b-column contributions
            Complex b_comp1 = -I * static_cast<double>(dk) * c1;
            Complex b_comp2 = adv - I * static_cast<double>(dk) * c2;
            if (a_comp1 != Complex{0.0, 0.0}) A.at(row, col) = a_comp1;
            if (a_comp2 != Complex{0.0, 0.0}) A.at(rn + row, col) = a_comp2;
            if (b_comp1 != Complex{0.0, 0.0}) A.at(row, tn + col) = b_comp1;
            if (b_comp2 != Complex{0.0, 0.0}) A.at(rn + row, tn + col) = b_comp2;
        }
    }
    return A;
}

} // namespace torint
