#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torint/geometry.hpp"

// Constructive transfers between integrability structures on a fiber of
// U x T^2: an invariant volume from a commuting frame, a symmetry from an
// invariant one-form, Lie-point symmetry combinations, and a first integral
// from a pair of volume-preserving fields. Hypotheses are checked before
// anything is built, and failures come back as data (named residuals), not
// exceptions, so callers can audit partially wrong certificates.

namespace torint {

inline constexpr double kTolHypothesis = 1e-8;
inline constexpr double kTolBracket = 1e-8;
inline constexpr double kTolDivergence = 1e-9;
inline constexpr double kTolIntegralDrift = 1e-9;

struct ConstructionParams {
    int grid_n = 64;
    double tol = kTolHypothesis;
};

struct NamedResidual {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ConstructionOutcome {
    std::vector<NamedResidual> hypotheses;
    std::vector<NamedResidual> conclusions;
    std::string tag;                     // classification or failure description
    bool inconsistent = false;
    bool independent = false;            // where the operation checks a frame
    double independence_margin = 0.0;    // min |det(X|Z)| over the grid

    std::optional<VolumeForm2> volume;
    std::optional<RealGrid> volume_density;  // node values of the produced density
    std::optional<VectorField2> field;
    std::optional<Expr> integral;
    std::optional<Expr> multiplier;          // lambda, when fitted

    bool hypotheses_ok() const {
        return std::all_of(hypotheses.begin(), hypotheses.end(),
                           [](const NamedResidual& r) { return r.pass; });
    }
    bool ok() const {
        return hypotheses_ok() && std::all_of(conclusions.begin(), conclusions.end(),
                                              [](const NamedResidual& r) { return r.pass; });
    }
};

namespace detail {

inline NamedResidual residual(std::string name, double value, double tol) {
    return {std::move(name), value, tol, value <= tol};
}

inline void fail_tag(ConstructionOutcome& out) {
    for (const auto& h : out.hypotheses)
        if (!h.pass) {
            out.tag = "hypothesis failure: " + h.name;
            return;
        }
}

inline double oscillation(const Expr& f, std::span<const double> c, Grid2 grid) {
    RealGrid g = sample_values(f, c, grid);
    return g.max() - g.min();
}

} // namespace detail

// mu = rho dx^dy from the dual coframe of a commuting independent frame (X, Y):
// the density is the dx^dy coefficient of alpha_X ^ alpha_Y, sign-normalized
// to be positive. Conclusion: div_mu X = 0 on the grid.
inline ConstructionOutcome volume_from_frame(const FiberedSystem& sys, const VectorField2& Y,
                                             std::span<const double> c = {},
                                             ConstructionParams params = {}) {
    Grid2 grid(params.grid_n);
    ConstructionOutcome out;

    VectorField2 br = lie_bracket(sys.X, Y);
    out.hypotheses.push_back(detail::residual("B2: ||[X,Y]||", sup_on_grid(br, c, grid), params.tol));
    if (!out.hypotheses_ok()) {
        detail::fail_tag(out);
        return out;
    }

    auto [aX, aY] = dual_coframe(sys.X, Y, c, grid);  // throws DependenceError
    RealGrid rho(grid.n);
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy)
            rho(ix, iy) = aX.ax(ix, iy) * aY.ay(ix, iy) - aX.ay(ix, iy) * aY.ax(ix, iy);
    double sign = rho(0, 0) > 0.0 ? 1.0 : -1.0;
    if (sign < 0.0)
        for (auto& v : rho.values()) v = -v;

    // the wedge density equals sign / det(X|Y) node by node; keep the closed
    // form so downstream checks can differentiate exactly
    VolumeForm2 mu{Expr::lit(sign) / frame_determinant(sys.X, Y)};
    out.independence_margin = min_abs_on_grid(frame_determinant(sys.X, Y), c, grid);
    out.independent = out.independence_margin > kEpsIndep;

    out.conclusions.push_back(
        detail::residual("||div_mu X||", sup_on_grid(divergence(sys.X, mu), c, grid), kTolDivergence));
    out.volume = mu;
    out.volume_density = std::move(rho);
    out.tag = out.ok() ? "volume constructed" : "conclusion residual above tolerance";
    return out;
}

// Solve i_Y mu = alpha for Y on the fiber: with mu = rho dx^dy this is
// Y = (a_y/rho) d/dx - (a_x/rho) d/dy. Conclusion: [X,Y] = 0 on the grid.
inline ConstructionOutcome symmetry_from_one_form(const FiberedSystem& sys, const OneForm2& alpha,
                                                  const VolumeForm2& mu,
                                                  std::span<const double> c = {},
                                                  ConstructionParams params = {}) {
    Grid2 grid(params.grid_n);
    ConstructionOutcome out;
    require_positive_density(mu, c, grid);

    out.hypotheses.push_back(detail::residual(
        "||L_X alpha||", sup_on_grid(lie_derivative_oneform(sys.X, alpha), c, grid), params.tol));
    out.hypotheses.push_back(
        detail::residual("||L_X mu||", sup_on_grid(divergence(sys.X, mu), c, grid), params.tol));
    if (!out.hypotheses_ok()) {
        detail::fail_tag(out);
        return out;
    }

    VectorField2 Y{alpha.ay / mu.rho, Expr::lit(0.0) - alpha.ax / mu.rho};
    out.conclusions.push_back(detail::residual(
        "||[X,Y]||", sup_on_grid(lie_bracket(sys.X, Y), c, grid), kTolBracket));
    out.independence_margin = min_abs_on_grid(frame_determinant(sys.X, Y), c, grid);
    out.independent = out.independence_margin > kEpsIndep;
    out.field = Y;
    out.tag = out.ok() ? "symmetry constructed" : "conclusion residual above tolerance";
    return out;
}

// Condition (i): alpha is nowhere proportional to i_X mu. Tested by the 2x2
// determinant of the component pairs at every node.
struct ProportionalityVerdict {
    bool holds = false;
    double max_det = 0.0;   // largest node determinant
    double scale = 0.0;     // sup-norm product used for the relative margin
};

inline ProportionalityVerdict check_condition_i(const FiberedSystem& sys, const OneForm2& alpha,
                                                const VolumeForm2& mu,
                                                std::span<const double> c = {},
                                                ConstructionParams params = {}) {
    Grid2 grid(params.grid_n);
    OneForm2 beta = interior_volume(sys.X, mu);
    Expr det = alpha.ax * beta.ay - alpha.ay * beta.ax;
    ProportionalityVerdict v;
    v.scale = sup_on_grid(alpha, c, grid) * sup_on_grid(beta, c, grid);
    v.max_det = sup_on_grid(det, c, grid);
    v.holds = v.max_det > kEpsIndep * v.scale;
    return v;
}

// Condition (ii): a point z with alpha_z = 0 and (d alpha)_z != 0. Grid scan
// for near-zeros of alpha, refined by 2-D Newton on the components.
struct WitnessVerdict {
    bool holds = false;
    bool witness_found = false;
    double x = 0.0, y = 0.0;
    double alpha_norm = std::numeric_limits<double>::infinity();
    double curl = 0.0;      // d alpha density at the witness
    std::string note;
};

inline WitnessVerdict check_condition_ii(const FiberedSystem& sys, const OneForm2& alpha,
                                         std::span<const double> c = {},
                                         ConstructionParams params = {}) {
    (void)sys;
    Grid2 grid(params.grid_n);
    Expr da = exterior_derivative_oneform(alpha);
    Expr jxx = dx(alpha.ax), jxy = dy(alpha.ax), jyx = dx(alpha.ay), jyy = dy(alpha.ay);

    // seed Newton from the grid nodes where ||alpha|| is smallest
    std::vector<std::pair<double, std::pair<double, double>>> seeds;
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy) {
            Point p{grid.node(ix), grid.node(iy), c};
            seeds.push_back({std::hypot(alpha.ax.eval(p), alpha.ay.eval(p)),
                             {grid.node(ix), grid.node(iy)}});
        }
    std::sort(seeds.begin(), seeds.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    seeds.resize(std::min<size_t>(seeds.size(), 40));

    WitnessVerdict best;
    for (const auto& seed : seeds) {
        double x = seed.second.first, y = seed.second.second;
        for (int it = 0; it < 30; ++it) {
            Point p{x, y, c};
            double fx = alpha.ax.eval(p), fy = alpha.ay.eval(p);
            if (std::hypot(fx, fy) < 1e-13) break;
            double a = jxx.eval(p), b = jxy.eval(p), d = jyx.eval(p), e = jyy.eval(p);
            double det = a * e - b * d;
            if (std::abs(det) < 1e-12) break;  // degenerate zero set: keep the scan point
            double sx = (e * fx - b * fy) / det, sy = (a * fy - d * fx) / det;
            double len = std::hypot(sx, sy);
            if (len > 0.5) { sx *= 0.5 / len; sy *= 0.5 / len; }
            x -= sx;
            y -= sy;
        }
        Point p{x, y, c};
        double an = std::hypot(alpha.ax.eval(p), alpha.ay.eval(p));
        double cu = da.eval(p);
        bool pass = an <= 1e-8 && std::abs(cu) >= 1e-4;
        if (pass || an < best.alpha_norm) {
            best.x = x;
            best.y = y;
            best.alpha_norm = an;
            best.curl = cu;
            best.witness_found = pass;
            best.holds = pass;
        }
        if (pass) break;
    }
    best.note = best.witness_found ? "witness found" : "no witness found on sampled set";
    return best;
}

namespace detail {

inline void require_nonvanishing_scalar(const Expr& h, std::span<const double> c, Grid2 grid) {
    if (min_abs_on_grid(h, c, grid) <= kEpsVanish)
        throw std::invalid_argument("multiplier h vanishes on the grid");
}

inline void finish_combination(ConstructionOutcome& out, const VectorField2& X,
                               const VectorField2& Z, std::span<const double> c, Grid2 grid) {
    out.conclusions.push_back(
        residual("||[X,Z]||", sup_on_grid(lie_bracket(X, Z), c, grid), kTolBracket));
    out.independence_margin = min_abs_on_grid(frame_determinant(X, Z), c, grid);
    out.independent = out.independence_margin > kEpsIndep;
    out.field = Z;
    out.tag = out.ok() ? (out.independent ? "symmetry constructed, independent"
                                          : "symmetry constructed, dependent")
                       : "conclusion residual above tolerance";
}

} // namespace detail

// Case (i): [X,Y] = g Y and X(h) = -g h give the symmetry Z = X + h Y.
inline ConstructionOutcome lie_point_combine_i(const VectorField2& X, const VectorField2& Y,
                                               const Expr& g, const Expr& h,
                                               std::span<const double> c = {},
                                               ConstructionParams params = {}) {
    Grid2 grid(params.grid_n);
    detail::require_nonvanishing_scalar(h, c, grid);
    ConstructionOutcome out;

    VectorField2 br = lie_bracket(X, Y);
    VectorField2 hyp1{br.vx - g * Y.vx, br.vy - g * Y.vy};
    out.hypotheses.push_back(detail::residual("||[X,Y] - g*Y||", sup_on_grid(hyp1, c, grid), params.tol));
    out.hypotheses.push_back(detail::residual(
        "||X(h) + g*h||", sup_on_grid(lie_derivative_scalar(X, h) + g * h, c, grid), params.tol));
    if (!out.hypotheses_ok()) {
        detail::fail_tag(out);
        return out;
    }

    VectorField2 Z{X.vx + h * Y.vx, X.vy + h * Y.vy};
    detail::finish_combination(out, X, Z, c, grid);
    return out;
}

// Case (ii): [X,Y] = g X and X(h) = -g give the symmetry Z = h X + Y.
inline ConstructionOutcome lie_point_combine_ii(const VectorField2& X, const VectorField2& Y,
                                                const Expr& g, const Expr& h,
                                                std::span<const double> c = {},
                                                ConstructionParams params = {}) {
    Grid2 grid(params.grid_n);
    detail::require_nonvanishing_scalar(h, c, grid);
    ConstructionOutcome out;

    VectorField2 br = lie_bracket(X, Y);
    VectorField2 hyp1{br.vx - g * X.vx, br.vy - g * X.vy};
    out.hypotheses.push_back(detail::residual("||[X,Y] - g*X||", sup_on_grid(hyp1, c, grid), params.tol));
    out.hypotheses.push_back(detail::residual(
        "||X(h) + g||", sup_on_grid(lie_derivative_scalar(X, h) + g, c, grid), params.tol));
    if (!out.hypotheses_ok()) {
        detail::fail_tag(out);
        return out;
    }

    VectorField2 Z{h * X.vx + Y.vx, h * X.vy + Y.vy};
    detail::finish_combination(out, X, Z, c, grid);
    return out;
}

// From a mu-preserving pair with [X,Y] = lambda X, the fiber symplectic area
// I = omega(X,Y) = rho (X1 Y2 - X2 Y1) is a first integral of X. If lambda is
// not supplied it is fitted pointwise as <[X,Y], X> / <X, X>.
inline ConstructionOutcome first_integral_from_pair(const FiberedSystem& sys, const VectorField2& Y,
                                                    const VolumeForm2& mu,
                                                    std::optional<Expr> lambda = std::nullopt,
                                                    std::span<const double> c = {},
                                                    ConstructionParams params = {}) {
    Grid2 grid(params.grid_n);
    ConstructionOutcome out;
    require_positive_density(mu, c, grid);

    const VectorField2& X = sys.X;
    out.hypotheses.push_back(
        detail::residual("||div_mu X||", sup_on_grid(divergence(X, mu), c, grid), params.tol));
    out.hypotheses.push_back(
        detail::residual("||div_mu Y||", sup_on_grid(divergence(Y, mu), c, grid), params.tol));

    double margin = min_abs_on_grid(frame_determinant(X, Y), c, grid);
    out.independence_margin = margin;
    out.independent = margin > kEpsIndep;
    out.hypotheses.push_back({"independence margin", margin, kEpsIndep, out.independent});

    VectorField2 br = lie_bracket(X, Y);
    if (!lambda) {
        if (min_norm_on_grid(X, c, grid) <= kEpsVanish) {
            out.hypotheses.push_back({"X nonvanishing (lambda fit)", 0.0, kEpsVanish, false});
            detail::fail_tag(out);
            return out;
        }
        lambda = (br.vx * X.vx + br.vy * X.vy) / (X.vx * X.vx + X.vy * X.vy);
        out.multiplier = lambda;
    }
    VectorField2 res{br.vx - *lambda * X.vx, br.vy - *lambda * X.vy};
    out.hypotheses.push_back(
        detail::residual("||[X,Y] - lambda*X||", sup_on_grid(res, c, grid), params.tol));
    if (!out.hypotheses_ok()) {
        detail::fail_tag(out);
        return out;
    }

    Expr I = mu.rho * (X.vx * Y.vy - X.vy * Y.vx);
    out.integral = I;
    out.conclusions.push_back(
        detail::residual("||X(I)||", sup_on_grid(lie_derivative_scalar(X, I), c, grid),
                         kTolIntegralDrift));

    double lam_sup = sup_on_grid(*lambda, c, grid);
    double osc = detail::oscillation(I, c, grid);
    if (lam_sup <= params.tol) {
        out.tag = "B on T^2 (Y is a dynamical symmetry)";
    } else if (osc > 1e-6) {
        out.tag = "B on S^1 (nontrivial first integral)";
    } else {
        out.inconsistent = true;
        out.tag = "inconsistent: lambda nonzero but I constant";
    }
    return out;
}

} // namespace torint
