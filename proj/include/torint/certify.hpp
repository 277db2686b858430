#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torint/constructions.hpp"
#include "torint/flow.hpp"
#include "torint/search.hpp"

// Top-level verdicts: audit the hypotheses of the two integrability notions
// on supplied data and classify a system by orchestrating the searches, the
// Poincare statistics and the rotation estimate. Every verdict carries the
// numeric residual and the tolerance it was compared against; failures are
// verdicts, never exceptions.

namespace torint {

struct Verdict {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct Certificate {
    std::vector<Verdict> verdicts;
    std::vector<std::vector<double>> fiber_points;  // where hypotheses were sampled
    double independence_margin = 0.0;               // min |det(X|Y)|, when a Y is given

    bool pass() const {
        return !verdicts.empty() &&
               std::all_of(verdicts.begin(), verdicts.end(),
                           [](const Verdict& v) { return v.pass; });
    }
};

struct CertifyParams {
    int grid_n = 64;
    double tol = kTolHypothesis;
    SearchParams search{};
    double horizon = 1000.0;     // rotation estimate window
    int n_returns = 16;
    int n_seeds = 8;
};

inline constexpr const char* kGridGapNote =
    "grid check only: behaviour between nodes is not certified";

// Hypotheses are sampled on the 3^m lattice of fiber points of U (corners and
// centers per axis) together with the user's fiber point, when given.
inline std::vector<std::vector<double>> fiber_samples(const FiberedSystem& sys,
                                                      std::span<const double> user = {}) {
    std::vector<std::vector<double>> pts;
    if (sys.m == 0) {
        pts.push_back({});
    } else {
        if (static_cast<int>(sys.box.size()) != sys.m)
            throw std::invalid_argument("fiber box dimension does not match m");
        std::vector<int> digit(sys.m, 0);
        while (true) {
            std::vector<double> p(sys.m);
            for (int i = 0; i < sys.m; ++i) {
                auto [lo, hi] = sys.box[i];
                p[i] = lo + 0.5 * digit[i] * (hi - lo);
            }
            pts.push_back(std::move(p));
            int i = 0;
            for (; i < sys.m && digit[i] == 2; ++i) digit[i] = 0;
            if (i == sys.m) break;
            ++digit[i];
        }
    }
    if (!user.empty()) {
        if (static_cast<int>(user.size()) != sys.m)
            throw std::invalid_argument("fiber point dimension does not match m");
        pts.emplace_back(user.begin(), user.end());
    }
    return pts;
}

namespace detail {

// worst case of a symbolic residual over the sampled fiber points
inline double max_sup(const Expr& e, const std::vector<std::vector<double>>& pts, Grid2 grid) {
    double m = 0.0;
    for (const auto& c : pts) m = std::max(m, sup_on_grid(e, c, grid));
    return m;
}

inline double max_sup(const VectorField2& V, const std::vector<std::vector<double>>& pts,
                      Grid2 grid) {
    double m = 0.0;
    for (const auto& c : pts) m = std::max(m, sup_on_grid(V, c, grid));
    return m;
}

inline double min_over(const Expr& e, const std::vector<std::vector<double>>& pts, Grid2 grid) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : pts) m = std::min(m, min_abs_on_grid(e, c, grid));
    return m;
}

} // namespace detail

// Euler-Jacobi side: every declared first integral is conserved, the volume
// is invariant and positive, and X never vanishes.
inline Certificate check_ej(const FiberedSystem& sys, const VolumeForm2& mu,
                            std::span<const double> user = {}, CertifyParams params = {}) {
    Grid2 grid(params.grid_n);
    Certificate cert;
    cert.fiber_points = fiber_samples(sys, user);

    for (size_t i = 0; i < sys.first_integrals.size(); ++i) {
        double r = detail::max_sup(lie_derivative_scalar(sys.X, sys.first_integrals[i]),
                                   cert.fiber_points, grid);
        cert.verdicts.push_back(
            {"EJ1: ||X(f_" + std::to_string(i + 1) + ")||", r, params.tol, r <= params.tol, ""});
    }

    double dv = detail::max_sup(divergence(sys.X, mu), cert.fiber_points, grid);
    cert.verdicts.push_back({"L_X mu: ||div_mu X||", dv, params.tol, dv <= params.tol, ""});

    double rho_min = std::numeric_limits<double>::infinity();
    double x_min = std::numeric_limits<double>::infinity();
    for (const auto& c : cert.fiber_points) {
        for (int ix = 0; ix < grid.n; ++ix)
            for (int iy = 0; iy < grid.n; ++iy)
                rho_min = std::min(rho_min, mu.rho.eval({grid.node(ix), grid.node(iy), c}));
        x_min = std::min(x_min, min_norm_on_grid(sys.X, c, grid));
    }
    cert.verdicts.push_back({"mu positive: min rho", rho_min, 0.0, rho_min > 0.0, kGridGapNote});
    cert.verdicts.push_back(
        {"X never vanishing: min |X|", x_min, kEpsVanish, x_min > kEpsVanish, kGridGapNote});
    return cert;
}

// Bogoyavlensky side for tori of dimension <= 2: at most one extra symmetry
// Y beyond X itself (k = 1 + |Ys| in {1, 2}).
inline Certificate check_b(const FiberedSystem& sys, const std::vector<VectorField2>& Ys,
                           std::span<const double> user = {}, CertifyParams params = {}) {
    if (Ys.size() > 1)
        throw std::invalid_argument("at most one symmetry beyond X on a two-torus fiber");
    Grid2 grid(params.grid_n);
    Certificate cert;
    cert.fiber_points = fiber_samples(sys, user);

    for (size_t i = 0; i < sys.first_integrals.size(); ++i) {
        double r = detail::max_sup(lie_derivative_scalar(sys.X, sys.first_integrals[i]),
                                   cert.fiber_points, grid);
        cert.verdicts.push_back(
            {"B1: ||X(f_" + std::to_string(i + 1) + ")||", r, params.tol, r <= params.tol, ""});
    }

    if (Ys.empty()) {
        cert.verdicts.push_back({"B2: ||[Y,X]||", 0.0, params.tol, true, "vacuous: k = 1, no Y"});
        cert.verdicts.push_back({"B3: ||[Y_i,Y_j]||", 0.0, params.tol, true, "vacuous: k = 1"});
        cert.verdicts.push_back({"B4: ||Y(f)||", 0.0, params.tol, true, "vacuous: k = 1, no Y"});
        cert.independence_margin = std::numeric_limits<double>::infinity();
        return cert;
    }

    const VectorField2& Y = Ys.front();
    double br = detail::max_sup(lie_bracket(Y, sys.X), cert.fiber_points, grid);
    cert.verdicts.push_back({"B2: ||[Y,X]||", br, params.tol, br <= params.tol, ""});
    cert.verdicts.push_back(
        {"B3: ||[Y_i,Y_j]||", 0.0, params.tol, true, "vacuous: single Y on the fiber"});
    for (size_t i = 0; i < sys.first_integrals.size(); ++i) {
        double r = detail::max_sup(lie_derivative_scalar(Y, sys.first_integrals[i]),
                                   cert.fiber_points, grid);
        cert.verdicts.push_back(
            {"B4: ||Y(f_" + std::to_string(i + 1) + ")||", r, params.tol, r <= params.tol, ""});
    }

    double margin = detail::min_over(frame_determinant(sys.X, Y), cert.fiber_points, grid);
    cert.independence_margin = margin;
    cert.verdicts.push_back({"independence: min |det(X|Y)|", margin, kEpsIndep,
                             margin > kEpsIndep, kGridGapNote});
    return cert;
}

// --- classification ---

enum class Tag { BOnT2, BOnS1, EJOnlyWithinTruncation, Inconclusive };

inline const char* tag_name(Tag t) {
    switch (t) {
    case Tag::BOnT2: return "B-on-T2";
    case Tag::BOnS1: return "B-on-S1";
    case Tag::EJOnlyWithinTruncation: return "EJ-only-within-truncation";
    case Tag::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct SectionEvidence {
    std::string section;      // "y = 0" or "x = 0"
    bool transversal = false;
    bool constant = false;
    double spread = 0.0;
};

struct Classification {
    Tag tag = Tag::Inconclusive;
    std::optional<SearchResult> density, integrals, symmetries;
    std::optional<Certificate> ej;
    std::vector<SectionEvidence> sections;
    std::optional<RotationEstimate> rotation;
    std::vector<std::string> notes;

    std::string tag_string() const { return tag_name(tag); }
};

namespace detail {

// exchange the roles of x and y in an expression tree
inline Expr swap_xy(const Expr& e) {
    const Expr::Node& n = e.node();
    using K = Expr::Node::Kind;
    switch (n.kind) {
    case K::Lit:
        return Expr::lit(n.lit);
    case K::Var:
        if (n.var == VarTag::x()) return Expr::y();
        if (n.var == VarTag::y()) return Expr::x();
        return Expr::var(n.var);
    case K::Un:
        return unary(n.un, swap_xy(Expr(n.a)));
    case K::Bin:
        return binary(n.bin, swap_xy(Expr(n.a)), swap_xy(Expr(n.b)));
    case K::Pow:
        return pow(swap_xy(Expr(n.a)), n.exponent);
    }
    return e;
}

// the same dynamics in the chart with x and y exchanged; its y = 0 sections
// are the x = 0 sections of the original field
inline VectorField2 swapped_chart(const VectorField2& X) {
    return {swap_xy(X.vy), swap_xy(X.vx)};
}

inline SectionEvidence section_evidence(const VectorField2& X, std::span<const double> c,
                                        const std::string& label, const CertifyParams& params) {
    SectionEvidence ev;
    ev.section = label;
    try {
        SectionData sd = poincare_section(X, c, 0.0, params.n_returns, params.n_seeds,
                                          params.search.integrator_tol);
        ReturnTimeVerdict v = constant_return_time_test(sd);
        ev.transversal = true;
        ev.constant = v.constant;
        ev.spread = v.spread;
    } catch (const NonTransversalError&) {
        ev.transversal = false;
    }
    return ev;
}

} // namespace detail

// Run the full evidence pipeline on one fiber and tag the system. Tags make
// positive claims only: the searches operate inside the truncation band, so
// an empty kernel is evidence of absence within that function class, never a
// proof of nonexistence.
inline Classification classify(const FiberedSystem& sys, std::span<const double> c = {},
                               CertifyParams params = {}) {
    Classification out;
    Grid2 grid(params.grid_n);

    if (!never_vanishing(sys.X, c, grid)) {
        out.notes.push_back("X vanishes on the fiber grid: searches not applicable");
        return out;
    }

    out.density = find_invariant_density(sys.X, c, params.search);
    out.integrals = find_first_integrals(sys.X, c, params.search);
    out.symmetries = find_symmetries(sys.X, c, params.search);

    // volume evidence: audit the declared volume when present, otherwise
    // carry the search's best positive candidate
    const SearchCandidate* density_cand = nullptr;
    for (const auto& cand : out.density->candidates)
        if (cand.positive && cand.residual <= params.tol) {
            density_cand = &cand;
            break;
        }
    if (sys.volume) {
        out.ej = check_ej(sys, *sys.volume, c, params);
    } else if (density_cand) {
        Certificate cert;
        cert.fiber_points = {std::vector<double>(c.begin(), c.end())};
        cert.verdicts.push_back({"L_X mu: ||div(rho X)||", density_cand->residual, params.tol,
                                 density_cand->residual <= params.tol,
                                 "density from the spectral search, band K = " +
                                     std::to_string(params.search.band)});
        double rho_min = inverse(density_cand->a).min();
        cert.verdicts.push_back(
            {"mu positive: min rho", rho_min, 0.0, rho_min > 0.0, kGridGapNote});
        double x_min = min_norm_on_grid(sys.X, c, grid);
        cert.verdicts.push_back(
            {"X never vanishing: min |X|", x_min, kEpsVanish, x_min > kEpsVanish, kGridGapNote});
        out.ej = cert;
    }

    out.sections.push_back(detail::section_evidence(sys.X, c, "y = 0", params));
    out.sections.push_back(
        detail::section_evidence(detail::swapped_chart(sys.X), c, "x = 0", params));
    out.rotation = rotation_vector(sys.X, c, {0.1, 0.2}, params.horizon,
                                   params.search.integrator_tol);

    const bool has_symmetry = std::any_of(
        out.symmetries->candidates.begin(), out.symmetries->candidates.end(),
        [](const SearchCandidate& s) { return s.independent; });
    const bool has_integral = std::any_of(
        out.integrals->candidates.begin(), out.integrals->candidates.end(),
        [](const SearchCandidate& s) { return s.drift_validated; });
    const bool has_volume = out.ej && out.ej->pass();

    if (has_symmetry) {
        out.tag = Tag::BOnT2;
        bool some_constant = std::any_of(out.sections.begin(), out.sections.end(),
                                         [](const SectionEvidence& s) {
                                             return s.transversal && s.constant;
                                         });
        if (!some_constant)
            out.notes.push_back("no constant-return-time section among {y = 0, x = 0} despite "
                                "a verified symmetry");
    } else if (has_integral) {
        out.tag = Tag::BOnS1;
    } else if (has_volume && out.integrals->candidates.empty() &&
               out.symmetries->candidates.empty()) {
        out.tag = Tag::EJOnlyWithinTruncation;
        out.notes.push_back("no symmetry or first integral inside the truncation band K = " +
                            std::to_string(params.search.band));
    } else {
        out.tag = Tag::Inconclusive;
    }
    return out;
}

} // namespace torint
