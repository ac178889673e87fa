#pragma once

// Quadrature rules shared by the field, propagation and delay code.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "oam/errors.hpp"

namespace oam::quad {

struct Rule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, computed by Newton iteration on P_n and cached.
inline const Rule& gauss_legendre_rule(int n) {
    static std::mutex mtx;
    static std::map<int, Rule> cache;
    std::lock_guard lock(mtx);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = wgt;
        rule.weights[n - 1 - i] = wgt;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

/// Fixed-order Gauss-Legendre over [a, b].
template <class F>
auto gauss_legendre(F&& f, double a, double b, int n) {
    const Rule& rule = gauss_legendre_rule(n);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    using T = decltype(f(mid));
    T sum{};
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F, class T>
void kronrod15(F& f, double a, double b, T& value, double& error) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    T fc = f(mid);
    T resk = fc * wgk[7];
    T resg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        T f1 = f(mid - dx), f2 = f(mid + dx);
        resk += wgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
    }
    value = resk * half;
    using std::abs;  // value types may supply their own abs() via ADL
    error = abs((resk - resg) * half);
}

} // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) with bisection of the worst panel.
/// `breaks` seeds the initial panel set; pass {a, b} for a single interval.
template <class F>
auto adaptive(F&& f, std::span<const double> breaks, double abs_tol, double rel_tol,
              std::size_t max_panels = 200000) {
    using T = decltype(f(breaks[0]));
    struct Panel {
        double a, b;
        T value;
        double error;
    };
    std::vector<Panel> panels;
    panels.reserve(breaks.size() * 2);
    Result<T> out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        Panel p{breaks[i], breaks[i + 1], T{}, 0.0};
        if (p.b <= p.a) continue;
        detail::kronrod15(f, p.a, p.b, p.value, p.error);
        out.evaluations += 15;
        panels.push_back(p);
    }
    auto totals = [&] {
        T v{};
        double e = 0.0;
        for (const auto& p : panels) {
            v += p.value;
            e += p.error;
        }
        return std::pair{v, e};
    };
    auto [value, error] = totals();
    using std::abs;
    // Bisect every panel above the per-panel error budget, sweep by sweep.
    while (error > std::max(abs_tol, rel_tol * abs(value))) {
        if (panels.size() >= max_panels)
            throw ConvergenceError("adaptive quadrature: panel budget exhausted (error " +
                                   std::to_string(error) + ", value " +
                                   std::to_string(abs(value)) + ")");
        const double budget = std::max(abs_tol, rel_tol * abs(value)) / panels.size();
        std::vector<Panel> next;
        next.reserve(panels.size() * 2);
        bool split = false;
        for (const auto& p : panels) {
            if (p.error <= budget || panels.size() + next.size() >= max_panels) {
                next.push_back(p);
                continue;
            }
            const double m = 0.5 * (p.a + p.b);
            if (m <= p.a || m >= p.b) {  // interval collapsed to machine resolution
                next.push_back(p);
                continue;
            }
            Panel l{p.a, m, T{}, 0.0}, r{m, p.b, T{}, 0.0};
            detail::kronrod15(f, l.a, l.b, l.value, l.error);
            detail::kronrod15(f, r.a, r.b, r.value, r.error);
            out.evaluations += 30;
            next.push_back(l);
            next.push_back(r);
            split = true;
        }
        panels.swap(next);
        std::tie(value, error) = totals();
        if (!split)
            throw ConvergenceError("adaptive quadrature: panels collapsed before reaching tolerance");
    }
    out.value = value;
    out.error = error;
    return out;
}

template <class F>
auto adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
              std::size_t max_panels = 200000) {
    const std::array<double, 2> br{a, b};
    return adaptive(std::forward<F>(f), std::span<const double>(br), abs_tol, rel_tol, max_panels);
}

/// Trapezoid rule over sampled data.
template <class T>
T trapezoid(std::span<const double> x, std::span<const T> y) {
    T sum{};
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return sum;
}


/// Composite Simpson rule on a non-uniform grid (exact for quadratics). An odd
/// trailing interval is closed with the quadratic through the last three
/// samples.
template <class T>
T simpson(std::span<const double> x, std::span<const T> y) {
    const std::size_t n = x.size();
    if (n < 2) return T{};
    if (n == 2) return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    T sum{};
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) {
        const double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
        const double hs = h0 + h1;
        sum += hs / 6.0 *
               ((2.0 - h1 / h0) * y[i] + (hs * hs / (h0 * h1)) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
    }
    if (i + 1 < n) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        sum += h1 * ((2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1)) * y[i + 1] +
                     (h1 + 3.0 * h0) / (6.0 * h0) * y[i] -
                     h1 * h1 / (6.0 * h0 * (h0 + h1)) * y[i - 1]);
    }
    return sum;
}

} // namespace oam::quad
