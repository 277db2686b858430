#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "torint/geometry.hpp"

// Trajectory integration on the universal cover of T^2, rotation vectors,
// Poincare sections and first-integral drift. Lifts are never reduced
// mod 2pi internally; reduction happens only at output.

namespace torint {

inline constexpr double kEpsTransversal = 1e-8;
inline constexpr double kDefaultIntegratorTol = 1e-10;

struct Vec2d {
    double x = 0.0, y = 0.0;
};

struct IntegrationError : std::runtime_error {
    double t, x, y;
    IntegrationError(double t_, double x_, double y_)
        : std::runtime_error("step size underflow at t = " + std::to_string(t_) + ", state (" +
                             std::to_string(x_) + ", " + std::to_string(y_) + ")"),
          t(t_), x(x_), y(y_) {}
};

namespace detail {

// Dormand-Prince 5(4) embedded pair with PI step-size control.
template <int N>
struct Dopri5 {
    using State = std::array<double, N>;
    using Rhs = std::function<void(double, const State&, State&)>;

    Rhs rhs;
    double tol = kDefaultIntegratorTol;
    size_t steps = 0, rejected = 0;

    // one accepted step from (t, y, f=rhs(t,y)); returns (h_used, y_new, f_new)
    struct StepResult {
        double h;
        State y;
        State f;
    };

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    // Butcher tableau
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // embedded 4th-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double err_old = 1.0;

    StepResult step(double t, const State& y, const State& f1, double& h, double t_end) {
        State k2, k3, k4, k5, k6, k7, ytmp, y5;
        for (;;) {
            if (t + h > t_end) h = t_end - t;
            eval(t + c2 * h, y, h, {a21}, {&f1}, k2);
            eval(t + c3 * h, y, h, {a31, a32}, {&f1, &k2}, k3);
            eval(t + c4 * h, y, h, {a41, a42, a43}, {&f1, &k2, &k3}, k4);
            eval(t + c5 * h, y, h, {a51, a52, a53, a54}, {&f1, &k2, &k3, &k4}, k5);
            eval(t + h, y, h, {a61, a62, a63, a64, a65}, {&f1, &k2, &k3, &k4, &k5}, k6);
            combine(y5, y, h, {b1, 0.0, b3, b4, b5, b6}, {&f1, &k2, &k3, &k4, &k5, &k6});
            rhs(t + h, y5, k7);

            double err = 0.0;
            for (int i = 0; i < N; ++i) {
                double e = h * (e1 * f1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                e7 * k7[i]);
                double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y5[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / N);

            if (err <= 1.0) {
                ++steps;
                double fac = 0.9 * std::pow(std::max(err, 1e-32), -0.17) * std::pow(err_old, 0.04);
                err_old = std::max(err, 1e-4);
                double h_used = h;
                h = h_used * std::clamp(fac, 0.2, 5.0);
                return {h_used, y5, k7};
            }
            ++rejected;
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            if (!(h > 1e-14 * std::max(1.0, std::abs(t))))
                throw IntegrationError(t, y[0], N > 1 ? y[1] : 0.0);
        }
    }

    double initial_step(double t0, const State& y0, const State& f0) const {
        double d0 = norm(y0), d1 = norm(f0);
        double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        return std::min(h, 0.1);
    }

private:
    static double norm(const State& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }
    void eval(double t, const State& y, double h, std::initializer_list<double> coeffs,
              std::initializer_list<const State*> ks, State& out) {
        State ytmp;
        combine(ytmp, y, h, coeffs, ks);
        rhs(t, ytmp, out);
    }
    static void combine(State& out, const State& y, double h, std::initializer_list<double> coeffs,
                        std::initializer_list<const State*> ks) {
        out = y;
        auto c = coeffs.begin();
        for (const State* k : ks) {
            if (*c != 0.0)
                for (int i = 0; i < N; ++i) out[i] += h * (*c) * (*k)[i];
            ++c;
        }
    }
};

} // namespace detail

// Accepted integration steps with values and derivatives; dense output by
// cubic Hermite interpolation between nodes.
struct Trajectory {
    std::vector<double> t;
    std::vector<Vec2d> y;   // lifted states
    std::vector<Vec2d> f;   // derivatives at the nodes
    std::vector<double> fiber;
    double tol = kDefaultIntegratorTol;
    size_t steps = 0, rejected = 0;

    double t_end() const { return t.back(); }

    Vec2d eval(double tq) const {
        size_t i = segment(tq);
        double h = t[i + 1] - t[i];
        double s = (tq - t[i]) / h;
        auto hermite = [&](double y0, double y1, double f0, double f1) {
            double s2 = s * s, s3 = s2 * s;
            return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 +
                   (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1;
        };
        return {hermite(y[i].x, y[i + 1].x, f[i].x, f[i + 1].x),
                hermite(y[i].y, y[i + 1].y, f[i].y, f[i + 1].y)};
    }

private:
    size_t segment(double tq) const {
        auto it = std::upper_bound(t.begin(), t.end(), tq);
        size_t i = it == t.begin() ? 0 : static_cast<size_t>(it - t.begin()) - 1;
        return std::min(i, t.size() - 2);
    }
};

inline Trajectory integrate(const VectorField2& X, std::span<const double> c, Vec2d initial,
                            double T, double tol = kDefaultIntegratorTol) {
    if (!(T > 0.0)) throw std::invalid_argument("integration horizon must be positive");
    detail::Dopri5<2> stepper;
    stepper.tol = tol;
    stepper.rhs = [&](double, const std::array<double, 2>& s, std::array<double, 2>& out) {
        Point p{s[0], s[1], c};
        out[0] = X.vx.eval(p);
        out[1] = X.vy.eval(p);
    };

    Trajectory traj;
    traj.fiber.assign(c.begin(), c.end());
    traj.tol = tol;
    std::array<double, 2> y{initial.x, initial.y}, f;
    stepper.rhs(0.0, y, f);
    double t = 0.0;
    double h = stepper.initial_step(0.0, y, f);
    traj.t.push_back(t);
    traj.y.push_back({y[0], y[1]});
    traj.f.push_back({f[0], f[1]});
    while (t < T) {
        auto res = stepper.step(t, y, f, h, T);
        t += res.h;
        y = res.y;
        f = res.f;
        traj.t.push_back(t);
        traj.y.push_back({y[0], y[1]});
        traj.f.push_back({f[0], f[1]});
    }
    traj.steps = stepper.steps;
    traj.rejected = stepper.rejected;
    return traj;
}

// --- rotation vectors ---

struct RotationEstimate {
    Vec2d omega;                    // filtered mean velocity of the lift
    Vec2d raw;                      // (lift(T) - lift(0)) / T
    std::optional<double> ratio;    // omega.x / omega.y when well defined
    double confidence = 0.0;        // half-width from comparing T and T/2 windows
};

namespace detail {

// Bump weight vanishing to all orders at both endpoints.
inline double birkhoff_weight(double s) {
    if (s <= 1e-9 || s >= 1.0 - 1e-9) return 0.0;
    return std::exp(-1.0 / (s * (1.0 - s)));
}

// Weighted time average of the velocity over [0, T], accumulated inside the
// integration itself (state extended with the weighted sums).
inline Vec2d weighted_velocity_average(const VectorField2& X, std::span<const double> c,
                                       Vec2d initial, double T, double tol) {
    detail::Dopri5<5> stepper;
    stepper.tol = tol;
    stepper.rhs = [&](double t, const std::array<double, 5>& s, std::array<double, 5>& out) {
        Point p{s[0], s[1], c};
        double w = birkhoff_weight(t / T);
        out[0] = X.vx.eval(p);
        out[1] = X.vy.eval(p);
        out[2] = w * out[0];
        out[3] = w * out[1];
        out[4] = w;
    };
    std::array<double, 5> y{initial.x, initial.y, 0.0, 0.0, 0.0}, f;
    stepper.rhs(0.0, y, f);
    double t = 0.0, h = stepper.initial_step(0.0, y, f);
    while (t < T) {
        auto res = stepper.step(t, y, f, h, T);
        t += res.h;
        y = res.y;
        f = res.f;
    }
    return {y[2] / y[4], y[3] / y[4]};
}

} // namespace detail

inline RotationEstimate rotation_vector(const VectorField2& X, std::span<const double> c,
                                        Vec2d initial, double T = 1000.0,
                                        double tol = kDefaultIntegratorTol) {
    RotationEstimate est;
    Vec2d full = detail::weighted_velocity_average(X, c, initial, T, tol);
    Vec2d half = detail::weighted_velocity_average(X, c, initial, T / 2.0, tol);
    est.omega = full;
    est.confidence = std::max(std::abs(full.x - half.x), std::abs(full.y - half.y));

    Trajectory traj = integrate(X, c, initial, T, tol);
    est.raw = {(traj.y.back().x - traj.y.front().x) / T, (traj.y.back().y - traj.y.front().y) / T};
    if (std::abs(est.omega.y) > 1e-8) est.ratio = est.omega.x / est.omega.y;
    return est;
}

// --- Poincare sections ---

struct NonTransversalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SectionData {
    double y0 = 0.0;
    struct SeedRecord {
        double seed_x;
        std::vector<double> crossing_times;
        std::vector<double> crossing_x;    // x mod 2pi at each crossing
    };
    std::vector<SeedRecord> seeds;
    std::vector<double> return_times;      // all T_i across seeds
    std::vector<std::pair<double, double>> return_map;  // (x_i, x_{i+1})

    double min_return() const { return *std::min_element(return_times.begin(), return_times.end()); }
    double max_return() const { return *std::max_element(return_times.begin(), return_times.end()); }
    double mean_return() const {
        double s = 0.0;
        for (double v : return_times) s += v;
        return s / static_cast<double>(return_times.size());
    }
};

namespace detail {

inline double wrap_2pi(double v) {
    double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(v, two_pi);
    return w < 0.0 ? w + two_pi : w;
}

// Locate all crossings of the y-lift through y0 + 2pi m inside the
// trajectory, by sign change on subdivided dense-output intervals followed
// by bisection to time accuracy 1e-10.
inline void collect_crossings(const Trajectory& traj, double y0, std::vector<double>& times) {
    double two_pi = 2.0 * std::numbers::pi;
    for (size_t i = 0; i + 1 < traj.t.size(); ++i) {
        double t0 = traj.t[i], t1 = traj.t[i + 1];
        const int sub = 8;
        for (int s = 0; s < sub; ++s) {
            double ta = t0 + (t1 - t0) * s / sub;
            double tb = t0 + (t1 - t0) * (s + 1) / sub;
            double ya = traj.eval(ta).y, yb = traj.eval(tb).y;
            long ma = static_cast<long>(std::floor((ya - y0) / two_pi));
            long mb = static_cast<long>(std::floor((yb - y0) / two_pi));
            for (long m = std::min(ma, mb) + 1; m <= std::max(ma, mb); ++m) {
                double target = y0 + two_pi * m;
                double lo = ta, hi = tb;
                double glo = traj.eval(lo).y - target;
                while (hi - lo > 1e-10) {
                    double mid = 0.5 * (lo + hi);
                    double gm = traj.eval(mid).y - target;
                    if ((glo <= 0.0) == (gm <= 0.0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                times.push_back(0.5 * (lo + hi));
            }
        }
    }
    std::sort(times.begin(), times.end());
    // de-duplicate crossings found at subinterval boundaries
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                times.end());
}

} // namespace detail

inline SectionData poincare_section(const VectorField2& X, std::span<const double> c, double y0,
                                    int n_returns = 64, int n_seeds = 8,
                                    double tol = kDefaultIntegratorTol) {
    // transversality of the section, checked on section samples
    for (int i = 0; i < 256; ++i) {
        double x = 2.0 * std::numbers::pi * i / 256.0;
        double v = X.vy.eval({x, y0, c});
        if (std::abs(v) <= kEpsTransversal)
            throw NonTransversalError("section y = " + std::to_string(y0) +
                                      " is not transversal: dy/dt = " + std::to_string(v) +
                                      " at x = " + std::to_string(x));
    }

    SectionData sd;
    sd.y0 = y0;
    for (int s = 0; s < n_seeds; ++s) {
        double x0 = 2.0 * std::numbers::pi * s / n_seeds;
        SectionData::SeedRecord rec;
        rec.seed_x = x0;

        double chunk = 64.0;
        double total = 0.0;
        Vec2d state{x0, y0};
        while (static_cast<int>(rec.crossing_times.size()) < n_returns) {
            Trajectory current = integrate(X, c, state, chunk, tol);
            std::vector<double> local;
            detail::collect_crossings(current, y0, local);
            for (double t : local) {
                if (total + t <= 1e-9) continue;  // the seed's own departure
                if (static_cast<int>(rec.crossing_times.size()) >= n_returns) break;
                rec.crossing_times.push_back(total + t);
                rec.crossing_x.push_back(detail::wrap_2pi(current.eval(t).x));
            }
            state = current.y.back();
            total += current.t_end();
            if (total > 1e6)
                throw NonTransversalError("no returns found on section y = " + std::to_string(y0));
        }
        sd.seeds.push_back(std::move(rec));
    }

    for (const auto& rec : sd.seeds) {
        // first crossing is the first return from the seed itself (which lies on the section)
        std::vector<double> full_times = rec.crossing_times;
        std::vector<double> full_x = rec.crossing_x;
        full_times.insert(full_times.begin(), 0.0);
        full_x.insert(full_x.begin(), detail::wrap_2pi(rec.seed_x));
        for (size_t i = 0; i + 1 < full_times.size(); ++i) {
            sd.return_times.push_back(full_times[i + 1] - full_times[i]);
            sd.return_map.emplace_back(full_x[i], full_x[i + 1]);
        }
    }
    return sd;
}

struct ReturnTimeVerdict {
    bool constant = false;
    double spread = 0.0;  // (max - min) / mean
    double rel_tol = 1e-6;
};

inline ReturnTimeVerdict constant_return_time_test(const SectionData& sd, double rel_tol = 1e-6) {
    if (sd.return_times.size() < 16)
        throw std::invalid_argument("constant return time test needs at least 16 return times");
    ReturnTimeVerdict v;
    v.rel_tol = rel_tol;
    v.spread = (sd.max_return() - sd.min_return()) / sd.mean_return();
    v.constant = v.spread <= rel_tol;
    return v;
}

// --- first-integral drift along trajectories ---

inline double drift_check(const std::function<double(double, double)>& f, const Trajectory& traj,
                          double oscillation, int samples = 1024) {
    double t0 = traj.t.front(), t1 = traj.t.back();
    double f0 = f(traj.y.front().x, traj.y.front().y);
    double denom = std::max(oscillation, 1e-12);
    double drift = 0.0;
    for (int i = 0; i <= samples; ++i) {
        double tq = t0 + (t1 - t0) * i / samples;
        Vec2d p = traj.eval(tq);
        drift = std::max(drift, std::abs(f(p.x, p.y) - f0) / denom);
    }
    return drift;
}

inline double oscillation_on_grid(const Expr& f, std::span<const double> c, Grid2 grid) {
    RealGrid g = sample_values(f, c, grid);
    return g.max() - g.min();
}

inline double drift_check(const Expr& f, const Trajectory& traj, std::span<const double> c,
                          int samples = 1024) {
    double osc = oscillation_on_grid(f, c, Grid2(64));
    return drift_check([&](double x, double y) { return f.eval({x, y, c}); }, traj, osc, samples);
}

// --- CSV export ---

inline void trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "t,x_lift,y_lift\n";
    for (size_t i = 0; i < traj.t.size(); ++i)
        os << traj.t[i] << ',' << traj.y[i].x << ',' << traj.y[i].y << '\n';
}

inline void section_csv(const SectionData& sd, std::ostream& os) {
    os << "i,x_i,T_i\n";
    for (size_t i = 0; i < sd.return_times.size(); ++i)
        os << i << ',' << sd.return_map[i].first << ',' << sd.return_times[i] << '\n';
}

} // namespace torint
