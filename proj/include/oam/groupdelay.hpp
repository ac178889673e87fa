#pragma once

// Transverse-wavevector expectation values, axial group velocity and the
// accumulated excess path delay of twisted light relative to a Gaussian.
//
// <k_perp^2> = -<E|lap_perp|E> / <E|E>, both integrals over a disk of radius
// r_max. For the ideal SLM field this diverges logarithmically with r_max, so
// the disk (and z_min) are explicit regularization knobs carried in every
// DelayCurve.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oam/beam.hpp"
#include "oam/errors.hpp"
#include "oam/parallel.hpp"
#include "oam/propagate.hpp"
#include "oam/quadrature.hpp"

namespace oam {

/// Coefficients of the closed-form transverse derivatives of the HyGG field.
/// kernel() is the argument scale of the confluent function (s = -i f).
struct DiffTerms {
    cplx g;
    cplx f;

    static DiffTerms at(const BeamParams& params, double z) {
        if (!(z > 0.0)) throw DomainError("DiffTerms: z must be positive");
        const double k = params.wavenumber(), zr = params.rayleigh();
        const double den = z * z + zr * zr;
        return {0.5 * k * cplx(zr, z) / den, 0.5 * k * zr * cplx(zr, z) / (z * den)};
    }

    cplx kernel() const { return cplx(0.0, -1.0) * f; }
};

enum class K2Method { analytic_terms, numeric_laplacian };

inline const char* to_string(K2Method m) {
    return m == K2Method::analytic_terms ? "analytic-terms" : "numeric-laplacian";
}

struct TransverseK2 {
    double value = 0.0;  // rad^2/m^2
    K2Method method = K2Method::analytic_terms;
    double r_max = 0.0;
    double z = 0.0;
    double power = 0.0;          // field power inside r_max before normalization
    double imag_residue = 0.0;   // relative, after the boundary-flux correction
};

struct RegularizationConfig {
    double z_min = 1e-3;          // m
    double r_max_factor = 64.0;   // r_max(z) = factor * max(w(z), r1(z))
    std::optional<double> aperture;  // hard stop radius at the SLM plane, m
    double log_until = 0.1;       // m, end of the logarithmic z section
    int points_per_decade = 48;
    double linear_step = 0.02;    // m

    void validate() const {
        if (!(z_min > 0.0)) throw DomainError("regularization: z_min must be positive");
        if (!(r_max_factor > 1.0)) throw DomainError("regularization: r_max factor must exceed 1");
        if (aperture && !(*aperture > 0.0)) throw DomainError("regularization: aperture must be positive");
        if (points_per_decade < 2 || !(linear_step > 0.0) || !(log_until > 0.0))
            throw DomainError("regularization: invalid z sampling");
    }

    double r_max(const BeamParams& params, int l, double z) const {
        return r_max_factor * std::max(params.beam_radius(z), max_intensity_radius(params, l, z));
    }

    std::string describe() const {
        std::ostringstream os;
        os << "z_min=" << z_min << " m; r_max=" << r_max_factor << "*max(w,r1); aperture=";
        if (aperture) os << *aperture << " m";
        else os << "none";
        return os.str();
    }
};

namespace detail {

/// Numerator (-E* lap E) and power (|E|^2) accumulated together so the
/// adaptive rule refines both. `scale` brings the power to the numerator's
/// magnitude for the error norm.
struct K2Sample {
    cplx num;
    double pow = 0.0;
    double scale = 1.0;

    K2Sample& operator+=(const K2Sample& o) {
        num += o.num;
        pow += o.pow;
        scale = std::max(scale, o.scale);
        return *this;
    }
    friend K2Sample operator+(K2Sample a, const K2Sample& b) { return a += b; }
    friend K2Sample operator-(K2Sample a, const K2Sample& b) {
        a.num -= b.num;
        a.pow -= b.pow;
        a.scale = std::max(a.scale, b.scale);
        return a;
    }
    friend K2Sample operator*(double w, K2Sample a) {
        a.num *= w;
        a.pow *= w;
        return a;
    }
    friend K2Sample operator*(K2Sample a, double w) { return w * a; }
    friend double abs(const K2Sample& a) { return std::abs(a.num) + a.scale * std::abs(a.pow); }
};

}  // namespace detail

struct K2Options {
    double rel_tol = 1e-8;
    double residue_tol = 1e-6;
    double core_extent = 6.0;   // in units of w(z): beyond this the Gaussian part has died out
    double panel_phase = 4.0 * std::numbers::pi;
    double tail_ratio = 1.25;   // geometric panel growth in the smooth tail
    double aperture_max_points = 5e4;  // output samples allowed for the aperture path
};

/// <k_perp^2> of the ideal HyGG field at z, from the closed-form Laplacian.
inline TransverseK2 transverse_k2_analytic(const BeamParams& params, int l, double z, double r_max,
                                           const K2Options& opt = {}) {
    if (!(z > 0.0)) throw DomainError("transverse_k2_analytic: z must be positive");
    const int al = std::abs(l);
    const double r1 = max_intensity_radius(params, al, z);
    if (!(r_max > r1)) throw DomainError("transverse_k2_analytic: r_max must exceed the ring radius");
    const HyggModel model(params, al, z);
    const double k = params.wavenumber();
    const double w = params.beam_radius(z);
    const double scale = 2.0 * (al + 1.0) / (w * w);

    // Core region in u = r^2: the geometric/diffracted interference has phase
    // k u / 2z, i.e. uniform in u. r dr = du / 2.
    const double r_core = std::min(r_max, opt.core_extent * w);
    const double u_core = r_core * r_core;
    const double du = opt.panel_phase * 2.0 * z / k;
    const auto n_core = static_cast<std::size_t>(std::max(1.0, std::ceil(u_core / du)));
    std::vector<double> ubreaks(n_core + 1);
    for (std::size_t i = 0; i <= n_core; ++i) ubreaks[i] = u_core * i / n_core;

    auto core = [&](double u) {
        const double r = std::sqrt(std::max(u, 0.0));
        const auto p = model.evaluate_unchirped(r, true);
        return detail::K2Sample{-std::conj(p.field) * p.laplacian * std::numbers::pi,
                                std::norm(p.field) * std::numbers::pi, scale};
    };
    auto tail = [&](double r) {
        const auto p = model.evaluate_unchirped(r, true);
        const double jac = 2.0 * std::numbers::pi * r;
        return detail::K2Sample{-std::conj(p.field) * p.laplacian * jac, std::norm(p.field) * jac, scale};
    };

    detail::K2Sample total{};
    try {
        total = quad::adaptive(core, ubreaks, 0.0, opt.rel_tol).value;
        if (r_max > r_core) {
            std::vector<double> rbreaks{r_core};
            while (rbreaks.back() * opt.tail_ratio < r_max) rbreaks.push_back(rbreaks.back() * opt.tail_ratio);
            rbreaks.push_back(r_max);
            total += quad::adaptive(tail, rbreaks, 0.0, opt.rel_tol).value;
        }
    } catch (const ConvergenceError& e) {
        std::ostringstream msg;
        msg << "transverse_k2_analytic(l=" << l << ", z=" << z << " m): " << e.what();
        throw ConvergenceError(msg.str());
    }

    // -int E* lap E = int |grad E|^2 - 2 pi r E* E' |_{r_max}; the imaginary
    // part is the boundary flux alone.
    const auto edge = model.evaluate_unchirped(r_max, false);
    const double flux = 2.0 * std::numbers::pi * r_max * std::imag(std::conj(edge.field) * edge.d_dr);
    const double residue = std::abs(total.num.imag() + flux) / std::abs(total.num);

    TransverseK2 out;
    out.method = K2Method::analytic_terms;
    out.r_max = r_max;
    out.z = z;
    out.power = total.pow;
    out.value = total.num.real() / total.pow;
    out.imag_residue = residue;
    if (residue > opt.residue_tol) {
        std::ostringstream msg;
        msg << "transverse_k2_analytic(l=" << l << ", z=" << z << " m): imaginary residue " << residue
            << " exceeds " << opt.residue_tol;
        throw ConsistencyError(msg.str());
    }
    if (!(out.value > 0.0)) throw ConsistencyError("transverse_k2_analytic: non-positive <k_perp^2>");
    return out;
}

/// <k_perp^2> of LG_0^l at z through the same five-term assembly with s = 0:
/// LG_0^l = r^l e^{-g r^2} with the beam's g (no confluent factor).
inline TransverseK2 transverse_k2_lg(const BeamParams& params, int l, double z, double r_max,
                                     const K2Options& opt = {}) {
    if (!(z >= 0.0)) throw DomainError("transverse_k2_lg: z must be nonnegative");
    if (!(r_max > 0.0)) throw DomainError("transverse_k2_lg: r_max must be positive");
    const int al = std::abs(l);
    const double k = params.wavenumber(), zr = params.rayleigh();
    const cplx g = 0.5 * k * cplx(zr, z) / (z * z + zr * zr);
    const double w = params.beam_radius(z);
    const double scale = 2.0 * (al + 1.0) / (w * w);
    auto f = [&](double r) {
        const double r2 = r * r;
        const cplx e = std::pow(r / w, al) * std::exp(-g * r2);  // scaled to stay O(1)
        const cplx lap = e * five_term_laplacian(al, g, 0.0, r2, 1.0, 1.0, 1.0);
        const double jac = 2.0 * std::numbers::pi * r;
        return detail::K2Sample{-std::conj(e) * lap * jac, std::norm(e) * jac, scale};
    };
    std::vector<double> breaks;
    for (int i = 0; i <= 64; ++i) breaks.push_back(r_max * i / 64.0);
    const auto total = quad::adaptive(f, breaks, 0.0, opt.rel_tol).value;
    TransverseK2 out;
    out.method = K2Method::analytic_terms;
    out.r_max = r_max;
    out.z = z;
    out.power = total.pow;
    out.value = total.num.real() / total.pow;
    if (!(out.value > 0.0)) throw ConsistencyError("transverse_k2_lg: non-positive <k_perp^2>");
    return out;
}

namespace detail {

/// Five-point finite-difference weights for the first and second derivative at
/// x0 from arbitrary nodes (Fornberg's algorithm, orders 0..2).
inline void fd_weights(double x0, const double* x, int n, double* d1, double* d2) {
    double c[5][3] = {};
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, 2);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    for (int i = 0; i < n; ++i) {
        d1[i] = c[i][1];
        d2[i] = c[i][2];
    }
}

}  // namespace detail

/// <k_perp^2> of a sampled field from a fourth-order finite-difference
/// Laplacian E'' + E'/r - l^2 E / r^2 on the grid points with r <= r_max.
inline TransverseK2 transverse_k2_numeric(const RadialField& field, double r_max,
                                          double max_phase_step = 0.5) {
    check_grid(field.grid);
    const auto& r = field.grid;
    const auto& e = field.amp;
    std::size_t n = std::upper_bound(r.begin(), r.end(), r_max * (1.0 + 1e-12)) - r.begin();
    if (n < 16) throw ResolutionError("transverse_k2_numeric: fewer than 16 samples inside r_max");
    if (n < r.size()) n = std::min(r.size(), n + 2);  // keep centred stencils at the edge

    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(e[i]));
    // Isolated large steps are amplitude near-zeros (fringe minima) where the
    // complex field is still smooth; three within eight intervals is aliasing.
    constexpr std::size_t window = 8;
    std::vector<char> big(n, 0);
    int count = 0;
    for (std::size_t i = 1; i < n; ++i) {
        big[i] = std::abs(e[i]) >= 1e-6 * peak && std::abs(e[i - 1]) >= 1e-6 * peak &&
                 std::abs(std::arg(e[i] * std::conj(e[i - 1]))) > max_phase_step;
        count += big[i];
        if (i > window) count -= big[i - window];
        if (count >= 3) {
            std::ostringstream msg;
            msg << "transverse_k2_numeric: grid too coarse for the field's phase near r = " << r[i] << " m";
            throw ResolutionError(msg.str());
        }
    }

    const double l2 = double(field.l) * field.l;
    std::vector<double> rr;
    std::vector<cplx> num;
    std::vector<double> pow;
    for (std::size_t i = 0; i < n && r[i] <= r_max * (1.0 + 1e-12); ++i) {
        rr.push_back(r[i]);
        if (r[i] == 0.0) {
            num.emplace_back(0.0);
            pow.push_back(0.0);
            continue;
        }
        const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, n - 5);
        double d1[5], d2[5];
        detail::fd_weights(r[i], &r[lo], 5, d1, d2);
        cplx e1 = 0.0, e2 = 0.0;
        for (int j = 0; j < 5; ++j) {
            e1 += d1[j] * e[lo + j];
            e2 += d2[j] * e[lo + j];
        }
        const cplx lap = e2 + e1 / r[i] - l2 * e[i] / (r[i] * r[i]);
        num.push_back(-std::conj(e[i]) * lap * r[i]);
        pow.push_back(std::norm(e[i]) * r[i]);
    }
    const cplx nsum = quad::simpson<cplx>(rr, num);
    const double psum = quad::simpson<double>(rr, pow);

    TransverseK2 out;
    out.method = K2Method::numeric_laplacian;
    out.r_max = rr.back();
    out.z = field.z;
    out.power = 2.0 * std::numbers::pi * psum;
    out.value = nsum.real() / psum;
    if (!(out.value > 0.0)) throw ConsistencyError("transverse_k2_numeric: non-positive <k_perp^2>");
    return out;
}

/// v = c / (1 + <k_perp^2> / 2k0^2).
inline double group_velocity(const TransverseK2& k2, const BeamParams& params) {
    const double k0 = params.wavenumber();
    return speed_of_light / (1.0 + k2.value / (2.0 * k0 * k0));
}

struct DelayCurve {
    int l = 0;
    std::string label;
    std::vector<double> z;     // m
    std::vector<double> tau;   // excess path relative to l = 0, m
    std::vector<double> k2;    // <k_perp^2> of this mode at each z
    RegularizationConfig reg;
    double richardson = 0.0;   // estimated integration error of the final tau, m

    double at(double zq) const {
        if (z.empty() || zq < z.front() * (1.0 - 1e-12) || zq > z.back() * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "delay curve '" << label << "': z = " << zq << " m outside [" << (z.empty() ? 0 : z.front())
                << ", " << (z.empty() ? 0 : z.back()) << "]";
            throw RangeError(msg.str());
        }
        const std::size_t i = std::clamp<std::size_t>(std::lower_bound(z.begin(), z.end(), zq) - z.begin(), 1,
                                                      z.size() - 1);
        const double t = std::clamp((zq - z[i - 1]) / (z[i] - z[i - 1]), 0.0, 1.0);
        return tau[i - 1] + t * (tau[i] - tau[i - 1]);
    }
};

/// Log-spaced samples from z_min to log_until, then linear steps to z_end.
inline std::vector<double> delay_z_grid(const RegularizationConfig& reg, double z_end) {
    reg.validate();
    if (!(z_end > reg.z_min)) throw DomainError("delay grid: z_end must exceed z_min");
    std::vector<double> z;
    const double log_end = std::min(z_end, reg.log_until);
    if (log_end > reg.z_min) {
        const int n = std::max(1, static_cast<int>(std::ceil(reg.points_per_decade * std::log10(log_end / reg.z_min))));
        for (int i = 0; i <= n; ++i) z.push_back(reg.z_min * std::pow(log_end / reg.z_min, double(i) / n));
    } else {
        z.push_back(reg.z_min);
    }
    z.back() = log_end;
    if (z_end > log_end) {
        const int n = std::max(1, static_cast<int>(std::ceil((z_end - log_end) / reg.linear_step - 1e-9)));
        for (int i = 1; i <= n; ++i) z.push_back(std::min(z_end, log_end + i * reg.linear_step));
        z.back() = z_end;
    }
    return z;
}

namespace detail {

inline std::vector<double> cumulative_trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return out;
}

}  // namespace detail

namespace detail {

/// Output samples the aperture path needs at (l, z); throws ResolutionError
/// when that exceeds the configured limit.
inline std::size_t aperture_samples(const BeamParams& params, int l, double z, const RegularizationConfig& reg,
                                    const K2Options& opt) {
    const double r_max = reg.r_max(params, l, z);
    const double h = std::min(r_max / 2048.0, 0.3 * z / (params.wavenumber() * r_max));
    const double needed = std::ceil(r_max / h);
    if (needed > opt.aperture_max_points) {
        std::ostringstream msg;
        msg << "aperture-regularized <k2> at z = " << z << " m needs " << needed << " radial samples out to r_max = "
            << r_max << " m (limit " << opt.aperture_max_points << "); raise z_min or lower r_max_factor";
        throw ResolutionError(msg.str());
    }
    return static_cast<std::size_t>(needed);
}

} // namespace detail

/// <k2> under the configured regularization. With an aperture the SLM-plane
/// field is clipped, propagated with the Collins integral and differentiated
/// numerically; otherwise the closed form is used.
inline TransverseK2 regularized_k2(const BeamParams& params, int l, double z, const RegularizationConfig& reg,
                                   const K2Options& opt = {}) {
    const double r_max = reg.r_max(params, l, z);
    if (!reg.aperture) return transverse_k2_analytic(params, l, z, r_max, opt);

    const double a = *reg.aperture;
    auto in = initial_field(params, l, radial_grid(a, std::min(a, 0.5e-3), 4096));
    in.normalize();
    // Output grid fine enough for the diffracted chirp k r / z at r_max.
    const auto n = detail::aperture_samples(params, l, z, reg, opt);
    auto field = collins_propagate(in, z, params, radial_grid(r_max, 0.5 * std::max(max_intensity_radius(params, l, z), 0.25 * params.beam_radius(z)), n));
    return transverse_k2_numeric(field, r_max);
}

namespace detail {

/// Trapezoid accumulation of the excess <k2> plus a Richardson check on
/// every other sample.
inline DelayCurve assemble_curve(const BeamParams& params, int l, const std::vector<double>& zs,
                                 std::vector<double> k2, const std::vector<double>& ref_k2,
                                 const RegularizationConfig& reg) {
    DelayCurve curve;
    curve.l = l;
    curve.label = "l=" + std::to_string(l);
    curve.z = zs;
    curve.reg = reg;
    const double k0 = params.wavenumber();
    std::vector<double> excess(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) excess[i] = (k2[i] - ref_k2[i]) / (2.0 * k0 * k0);
    curve.k2 = std::move(k2);
    curve.tau = cumulative_trapezoid(zs, excess);

    if (zs.size() >= 5) {
        std::vector<double> zc, ec;
        for (std::size_t i = 0; i < zs.size(); i += 2) {
            zc.push_back(zs[i]);
            ec.push_back(excess[i]);
        }
        if (zc.back() != zs.back()) {
            zc.push_back(zs.back());
            ec.push_back(excess.back());
        }
        const double coarse = cumulative_trapezoid(zc, ec).back();
        curve.richardson = std::abs(curve.tau.back() - coarse) / 3.0;
        const double scale = std::abs(curve.tau.back());
        if (scale > 0.0 && curve.richardson > 0.02 * scale) {
            std::size_t worst = 1;
            double wv = 0.0;
            for (std::size_t i = 1; i < zs.size(); ++i) {
                const double d = std::abs(excess[i] - excess[i - 1]);
                if (d > wv) { wv = d; worst = i; }
            }
            std::ostringstream msg;
            msg << "accumulated_delay(l=" << l << "): z integration not converged (Richardson error "
                << curve.richardson << " m of " << scale << " m), steepest near z = " << zs[worst] << " m";
            throw ConvergenceError(msg.str());
        }
    }
    return curve;
}

} // namespace detail

/// Delay curves for several modes sharing one l = 0 reference; the (l, z)
/// evaluations are spread over `threads` workers (0 = all cores).
inline std::vector<DelayCurve> delay_curves(const BeamParams& params, const std::vector<int>& ls, double z_end,
                                            const RegularizationConfig& reg, const K2Options& opt = {},
                                            unsigned threads = 1) {
    const auto zs = delay_z_grid(reg, z_end);
    std::vector<int> modes{0};
    for (int l : ls)
        if (l != 0) modes.push_back(l);
    const std::size_t nz = zs.size();
    // Reject an infeasible aperture run before any propagation starts.
    if (reg.aperture)
        for (int l : modes)
            for (double z : zs) detail::aperture_samples(params, l, z, reg, opt);
    std::vector<double> k2(modes.size() * nz);
    parallel_for(k2.size(), threads, [&](std::size_t i) {
        k2[i] = regularized_k2(params, modes[i / nz], zs[i % nz], reg, opt).value;
    });
    const std::vector<double> ref(k2.begin(), k2.begin() + static_cast<std::ptrdiff_t>(nz));
    std::vector<DelayCurve> out;
    for (int l : ls) {
        const auto m = static_cast<std::size_t>(std::find(modes.begin(), modes.end(), l) - modes.begin());
        const auto first = k2.begin() + static_cast<std::ptrdiff_t>(m * nz);
        out.push_back(detail::assemble_curve(params, l, zs, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(nz)),
                                             ref, reg));
    }
    return out;
}

/// Accumulated excess path delay of |l> relative to |0> from z_min to z_end:
/// tau(z) = int (<k2>_l - <k2>_0) / 2k0^2 dz' (positive for slower light).
inline DelayCurve accumulated_delay(const BeamParams& params, int l, double z_end, const RegularizationConfig& reg,
                                    const K2Options& opt = {}) {
    return delay_curves(params, {l}, z_end, reg, opt, 1).front();
}

/// sum |c_l|^2 <k2>_l; cross terms vanish by azimuthal orthogonality.
inline TransverseK2 superposition_k2(const SuperpositionState& state, const std::map<int, TransverseK2>& per_mode) {
    TransverseK2 out;
    bool first = true;
    for (const auto& t : state.terms()) {
        const auto it = per_mode.find(t.l);
        if (it == per_mode.end()) throw LookupError("superposition_k2: no <k2> for l=" + std::to_string(t.l));
        out.value += std::norm(t.coeff) * it->second.value;
        if (first) {
            out.method = it->second.method;
            out.r_max = it->second.r_max;
            out.z = it->second.z;
            first = false;
        }
    }
    return out;
}

/// sum |c_l|^2 tau_l(z). The l = 0 curve is identically zero and may be omitted.
inline double superposition_delay(const SuperpositionState& state, const std::map<int, DelayCurve>& curves,
                                  double z) {
    double out = 0.0;
    for (const auto& t : state.terms()) {
        const auto it = curves.find(t.l);
        if (it == curves.end()) {
            if (t.l == 0) continue;
            throw LookupError("superposition_delay: no delay curve for l=" + std::to_string(t.l));
        }
        out += std::norm(t.coeff) * it->second.at(z);
    }
    return out;
}

} // namespace oam
