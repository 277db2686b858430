#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torint/expr.hpp"
#include "torint/spectral.hpp"

// Tensor calculus on the fibers of U x T^2: vector fields, one-forms and
// volume forms with symbolic components, Lie brackets and derivatives,
// interior and exterior products, dual coframes. All calculus is symbolic;
// grids enter only for norms and open-condition checks.

namespace torint {

inline constexpr double kEpsIndep = 1e-8;
inline constexpr double kEpsVanish = 1e-8;

// Fiberwise vector field X1 d/dx + X2 d/dy; no components along the base.
struct VectorField2 {
    Expr vx, vy;
};

// Fiber part of a one-form: Ax dx + Ay dy.
struct OneForm2 {
    Expr ax, ay;
};

// Density against the reference volume dc_1^...^dc_m^dx^dy.
struct VolumeForm2 {
    Expr rho = Expr::lit(1.0);
};

// Trivially fibered phase space U x T^2 with U a box in R^m.
struct FiberedSystem {
    int m = 0;
    std::vector<std::array<double, 2>> box;       // [lo, hi] per fiber parameter
    VectorField2 X{Expr::lit(0.0), Expr::lit(0.0)};
    std::vector<Expr> first_integrals;            // beyond the projections c_alpha
    std::optional<VolumeForm2> volume;
};

struct DependenceError : std::runtime_error {
    double x, y;
    DependenceError(double x_, double y_, double det)
        : std::runtime_error("fields linearly dependent at grid node (" + std::to_string(x_) +
                             ", " + std::to_string(y_) + "), |det| = " + std::to_string(std::abs(det))),
          x(x_), y(y_) {}
};

struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- symbolic operations ---

inline Expr lie_derivative_scalar(const VectorField2& X, const Expr& f) {
    return X.vx * dx(f) + X.vy * dy(f);
}

inline VectorField2 lie_bracket(const VectorField2& X, const VectorField2& Y) {
    return {lie_derivative_scalar(X, Y.vx) - lie_derivative_scalar(Y, X.vx),
            lie_derivative_scalar(X, Y.vy) - lie_derivative_scalar(Y, X.vy)};
}

inline Expr exterior_derivative_oneform(const OneForm2& a) {
    return dx(a.ay) - dy(a.ax);
}

// i_X(rho dx^dy) = rho (X1 dy - X2 dx)
inline OneForm2 interior_volume(const VectorField2& X, const VolumeForm2& mu) {
    return {-(mu.rho * X.vy), mu.rho * X.vx};
}

inline Expr pairing(const OneForm2& a, const VectorField2& X) {
    return a.ax * X.vx + a.ay * X.vy;
}

// Cartan formula L_X a = i_X da + d(a(X)).
inline OneForm2 lie_derivative_oneform(const VectorField2& X, const OneForm2& a) {
    Expr da = exterior_derivative_oneform(a);   // density of the 2-form da
    Expr aX = pairing(a, X);
    return {-(da * X.vy) + dx(aX), da * X.vx + dy(aX)};
}

// Direct coordinate formula (L_X a)_i = X(a_i) + a_j d_i X^j; used as the
// independent route for the Cartan consistency tests.
inline OneForm2 lie_derivative_oneform_direct(const VectorField2& X, const OneForm2& a) {
    return {lie_derivative_scalar(X, a.ax) + a.ax * dx(X.vx) + a.ay * dx(X.vy),
            lie_derivative_scalar(X, a.ay) + a.ax * dy(X.vx) + a.ay * dy(X.vy)};
}

// div_mu X = (d/dx(rho X1) + d/dy(rho X2)) / rho; X preserves mu iff zero.
inline Expr divergence(const VectorField2& X, const VolumeForm2& mu) {
    return (dx(mu.rho * X.vx) + dy(mu.rho * X.vy)) / mu.rho;
}

// --- grid evaluation and checks ---

inline double sup_on_grid(const Expr& e, std::span<const double> c, Grid2 grid) {
    return sample_values(e, c, grid).sup_norm();
}

inline double sup_on_grid(const VectorField2& X, std::span<const double> c, Grid2 grid) {
    return std::max(sup_on_grid(X.vx, c, grid), sup_on_grid(X.vy, c, grid));
}

inline double sup_on_grid(const OneForm2& a, std::span<const double> c, Grid2 grid) {
    return std::max(sup_on_grid(a.ax, c, grid), sup_on_grid(a.ay, c, grid));
}

// min over grid nodes of |(X1,X2)|
inline double min_norm_on_grid(const VectorField2& X, std::span<const double> c, Grid2 grid) {
    double m = std::numeric_limits<double>::infinity();
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy) {
            Point p{grid.node(ix), grid.node(iy), c};
            m = std::min(m, std::hypot(X.vx.eval(p), X.vy.eval(p)));
        }
    return m;
}

inline bool never_vanishing(const VectorField2& X, std::span<const double> c, Grid2 grid,
                            double eps = kEpsVanish) {
    return min_norm_on_grid(X, c, grid) > eps;
}

inline Expr frame_determinant(const VectorField2& X, const VectorField2& Y) {
    return X.vx * Y.vy - X.vy * Y.vx;
}

inline double min_abs_on_grid(const Expr& e, std::span<const double> c, Grid2 grid) {
    double m = std::numeric_limits<double>::infinity();
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy)
            m = std::min(m, std::abs(e.eval({grid.node(ix), grid.node(iy), c})));
    return m;
}

// Checks rho > 0 strictly on the grid; throws otherwise.
inline void require_positive_density(const VolumeForm2& mu, std::span<const double> c, Grid2 grid) {
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy) {
            double v = mu.rho.eval({grid.node(ix), grid.node(iy), c});
            if (!(v > 0.0))
                throw PositivityError("volume density not positive at node (" +
                                      std::to_string(grid.node(ix)) + ", " +
                                      std::to_string(grid.node(iy)) + "): rho = " + std::to_string(v));
        }
}

// --- dual coframe (grid-valued) ---

struct GridOneForm {
    RealGrid ax, ay;
};

// At every node, invert the frame (X|Y): alpha_X(X)=1, alpha_X(Y)=0 and
// alpha_Y(X)=0, alpha_Y(Y)=1. Throws DependenceError where |det| <= eps.
inline std::pair<GridOneForm, GridOneForm> dual_coframe(const VectorField2& X, const VectorField2& Y,
                                                        std::span<const double> c, Grid2 grid,
                                                        double eps = kEpsIndep) {
    GridOneForm aX{RealGrid(grid.n), RealGrid(grid.n)};
    GridOneForm aY{RealGrid(grid.n), RealGrid(grid.n)};
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy) {
            Point p{grid.node(ix), grid.node(iy), c};
            double x1 = X.vx.eval(p), x2 = X.vy.eval(p);
            double y1 = Y.vx.eval(p), y2 = Y.vy.eval(p);
            double det = x1 * y2 - x2 * y1;
            if (std::abs(det) <= eps) throw DependenceError(p.x, p.y, det);
            aX.ax(ix, iy) = y2 / det;
            aX.ay(ix, iy) = -y1 / det;
            aY.ax(ix, iy) = -x2 / det;
            aY.ay(ix, iy) = x1 / det;
        }
    return {aX, aY};
}

} // namespace torint
