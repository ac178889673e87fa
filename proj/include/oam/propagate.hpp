#pragma once

// Free-space propagation of single-l radial fields through a paraxial ABCD
// system. The azimuthal integral of the Collins kernel is done analytically:
//
//   E1(r) = (i/(lambda B)) 2 pi i^|l| exp(-ik D r^2 / 2B)
//           * int_0^inf E0(r0) exp(-ik A r0^2 / 2B) J_|l|(k r r0 / B) r0 dr0
//
// with the common carrier exp(-ikz) dropped, as in beam.hpp.
//
// J_l comes from specfun::bessel_j (upward recurrence above the turning point,
// Miller's algorithm below it); relative accuracy is ~1e-13 away from zeros for
// l <= 14, far below what the radial quadrature needs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "oam/beam.hpp"
#include "oam/errors.hpp"
#include "oam/interp.hpp"
#include "oam/quadrature.hpp"
#include "oam/specfun.hpp"

namespace oam {

struct ABCDMatrix {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    ABCDMatrix() = default;
    ABCDMatrix(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
            throw DomainError("ABCDMatrix: non-finite element");
        if (std::abs(determinant() - 1.0) > 1e-12)
            throw DomainError("ABCDMatrix: determinant must be 1 (got " + std::to_string(determinant()) + ")");
    }

    double determinant() const { return a * d - b * c; }

    /// Matrix product; `*this` acts after `rhs`.
    ABCDMatrix operator*(const ABCDMatrix& rhs) const {
        return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d, c * rhs.a + d * rhs.c, c * rhs.b + d * rhs.d};
    }
};

inline ABCDMatrix abcd_free_space(double z) {
    if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("abcd_free_space: z must be finite and >= 0");
    return {1.0, z, 0.0, 1.0};
}

struct CollinsOptions {
    int gl_order = 12;              // nodes per panel
    double panel_phase = 2.0 * std::numbers::pi;  // max kernel phase excursion per panel
    int samples_per_panel = 4;      // max input-grid intervals spanned by a panel
    double amp_floor = 1e-6;        // relative amplitude below which sampling is not checked
    double max_phase_step = std::numbers::pi / 2.0;
};

namespace detail {

/// Throws ResolutionError if the sampled phase of `field` advances faster than
/// the grid can follow. Isolated large steps are tolerated (amplitude zero
/// crossings); three or more within any eight consecutive intervals mean the
/// grid aliases a chirp.
inline void check_field_sampling(const RadialField& field, const CollinsOptions& opt) {
    double peak = 0.0;
    for (const auto& a : field.amp) peak = std::max(peak, std::abs(a));
    const double floor = opt.amp_floor * peak;
    constexpr std::size_t window = 8;
    std::vector<char> big(field.amp.size(), 0);
    int count = 0;
    for (std::size_t i = 1; i < field.amp.size(); ++i) {
        const cplx a0 = field.amp[i - 1], a1 = field.amp[i];
        big[i] = std::abs(a0) > floor && std::abs(a1) > floor &&
                 std::abs(std::arg(a1 * std::conj(a0))) > opt.max_phase_step;
        count += big[i];
        if (i > window) count -= big[i - window];
        if (count >= 3) {
            const std::size_t lo = i > window ? i - window : 0;
            std::ostringstream msg;
            msg << "collins_propagate: input field phase undersampled near r = [" << field.grid[lo] << ", "
                << field.grid[i] << "] m; refine the input grid there";
            throw ResolutionError(msg.str());
        }
    }
}

} // namespace detail

/// Propagates `field` through `m` and samples the result on `out_grid`.
/// The output is renormalized; prenorm_power records the captured power.
/// out.z is field.z + m.b (exact for free space).
inline RadialField collins_propagate(const RadialField& field, const ABCDMatrix& m, const BeamParams& params,
                                     std::vector<double> out_grid, const CollinsOptions& opt = {}) {
    if (m.b == 0.0) throw DomainError("collins_propagate: B = 0 (imaging system) is not supported");
    check_grid(field.grid);
    check_grid(out_grid);
    if (field.amp.size() != field.grid.size()) throw DomainError("collins_propagate: field amp/grid size mismatch");
    detail::check_field_sampling(field, opt);

    const int l = std::abs(field.l);
    const double k = params.wavenumber();
    const double kb = k / m.b;
    const double r_out = out_grid.back();
    const CubicSpline<cplx> spline(field.grid, field.amp);

    // Panels: split the input grid until each panel's kernel phase excursion
    // (chirp plus the fastest Bessel oscillation) stays within budget.
    std::vector<double> breaks{field.grid.front()};
    for (std::size_t i = 0; i + 1 < field.grid.size();) {
        const std::size_t j = std::min(field.grid.size() - 1, i + static_cast<std::size_t>(opt.samples_per_panel));
        const double a = field.grid[i], b = field.grid[j];
        const double rate = std::abs(kb) * (std::abs(m.a) * b + r_out);
        const int pieces = std::max(1, static_cast<int>(std::ceil(rate * (b - a) / opt.panel_phase)));
        for (int p = 1; p <= pieces; ++p) breaks.push_back(a + (b - a) * p / pieces);
        i = j;
    }

    const auto& rule = quad::gauss_legendre_rule(opt.gl_order);
    std::vector<double> x;
    std::vector<cplx> c;
    x.reserve((breaks.size() - 1) * rule.nodes.size());
    c.reserve(x.capacity());
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double mid = 0.5 * (breaks[p] + breaks[p + 1]), half = 0.5 * (breaks[p + 1] - breaks[p]);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double r0 = mid + half * rule.nodes[q];
            x.push_back(kb * r0);
            c.push_back(half * rule.weights[q] * r0 * spline(r0) *
                        std::polar(1.0, -0.5 * kb * m.a * r0 * r0));
        }
    }

    const cplx il = std::pow(cplx(0.0, 1.0), l);
    const cplx pref = cplx(0.0, 1.0) * il * (2.0 * std::numbers::pi / (params.wavelength() * m.b));

    RadialField out;
    out.z = field.z + m.b;
    out.l = field.l;
    out.amp.resize(out_grid.size());
    for (std::size_t i = 0; i < out_grid.size(); ++i) {
        const double r = out_grid[i];
        cplx acc = 0.0;
        if (r == 0.0) {
            if (l == 0)
                for (std::size_t q = 0; q < x.size(); ++q) acc += c[q];
        } else {
            for (std::size_t q = 0; q < x.size(); ++q) acc += c[q] * bessel_j(l, x[q] * r);
        }
        out.amp[i] = pref * acc * std::polar(1.0, -0.5 * kb * m.d * r * r);
    }
    out.grid = std::move(out_grid);
    out.normalize();
    return out;
}

/// Free-space convenience overload.
inline RadialField collins_propagate(const RadialField& field, double distance, const BeamParams& params,
                                     std::vector<double> out_grid, const CollinsOptions& opt = {}) {
    return collins_propagate(field, abcd_free_space(distance), params, std::move(out_grid), opt);
}

} // namespace oam
