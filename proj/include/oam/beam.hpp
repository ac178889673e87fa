#pragma once

// Optical context, superposition states and radially sampled fields: the
// Gaussian field leaving the SLM with a helical phase, its closed-form
// hypergeometric-Gaussian evolution, and pure Laguerre-Gaussian modes.
//
// Conventions: the carrier is e^{-ikz} (forward propagation), the azimuthal
// factor e^{-i l theta} is carried symbolically by RadialField::l, and the
// global carrier phase e^{-ikz} itself is dropped from stored amplitudes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oam/errors.hpp"
#include "oam/quadrature.hpp"
#include "oam/specfun.hpp"

namespace oam {

inline constexpr double speed_of_light = 299792458.0;  // m/s

class BeamParams {
public:
    BeamParams(double wavelength_m, double waist_m) : wavelength_(wavelength_m), waist_(waist_m) {
        if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
            throw DomainError("BeamParams: wavelength must be positive");
        if (!(waist_m > 0.0) || !std::isfinite(waist_m))
            throw DomainError("BeamParams: waist must be positive");
        wavenumber_ = 2.0 * std::numbers::pi / wavelength_;
        rayleigh_ = std::numbers::pi * waist_ * waist_ / wavelength_;
    }

    double wavelength() const noexcept { return wavelength_; }
    double waist() const noexcept { return waist_; }
    double wavenumber() const noexcept { return wavenumber_; }
    double rayleigh() const noexcept { return rayleigh_; }

    /// Gaussian beam radius w(z).
    double beam_radius(double z) const {
        const double t = z / rayleigh_;
        return waist_ * std::sqrt(1.0 + t * t);
    }

private:
    double wavelength_, waist_, wavenumber_, rayleigh_;
};

/// Radius of peak intensity of LG_0^l: sqrt(|l|/2) w(z).
inline double max_intensity_radius(const BeamParams& params, int l, double z) {
    return std::sqrt(std::abs(l) / 2.0) * params.beam_radius(z);
}

struct ModeTerm {
    int l;
    cplx coeff;
};

/// Finite OAM superposition sum_l c_l |l>, normalized and with distinct l.
class SuperpositionState {
public:
    static constexpr double norm_tolerance = 1e-12;

    explicit SuperpositionState(std::vector<ModeTerm> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw DomainError("SuperpositionState: no terms");
        std::set<int> seen;
        double norm = 0.0;
        for (const auto& t : terms_) {
            if (!seen.insert(t.l).second)
                throw DomainError("SuperpositionState: duplicate l = " + std::to_string(t.l));
            norm += std::norm(t.coeff);
        }
        if (std::abs(norm - 1.0) > norm_tolerance)
            throw DomainError("SuperpositionState: sum |c|^2 = " + std::to_string(norm) + " != 1");
    }

    /// Rescales arbitrary amplitudes to unit norm.
    static SuperpositionState normalized(std::vector<ModeTerm> terms) {
        double norm = 0.0;
        for (const auto& t : terms) norm += std::norm(t.coeff);
        if (!(norm > 0.0)) throw DomainError("SuperpositionState: zero vector");
        for (auto& t : terms) t.coeff /= std::sqrt(norm);
        return SuperpositionState(std::move(terms));
    }

    /// alpha|0> + beta|l>.
    static SuperpositionState two_mode(cplx alpha, cplx beta, int l) {
        if (l == 0) throw DomainError("two_mode: helical index must be nonzero");
        return SuperpositionState({{0, alpha}, {l, beta}});
    }

    static SuperpositionState pure(int l) { return SuperpositionState({{l, 1.0}}); }

    const std::vector<ModeTerm>& terms() const noexcept { return terms_; }

    bool contains(int l) const {
        return std::any_of(terms_.begin(), terms_.end(), [l](const ModeTerm& t) { return t.l == l; });
    }

    /// |c_l|^2, zero for absent modes.
    double weight(int l) const {
        for (const auto& t : terms_)
            if (t.l == l) return std::norm(t.coeff);
        return 0.0;
    }

private:
    std::vector<ModeTerm> terms_;
};

/// 2 pi * integral |E|^2 r dr over the sampled grid.
inline double radial_power(std::span<const double> grid, std::span<const cplx> amp) {
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) integrand[i] = std::norm(amp[i]) * grid[i];
    return 2.0 * std::numbers::pi * quad::simpson<double>(grid, integrand);
}

/// Complex amplitude on a radial grid at fixed z with azimuthal index l,
/// normalized to unit power.
struct RadialField {
    double z = 0.0;
    int l = 0;
    std::vector<double> grid;
    std::vector<cplx> amp;
    double prenorm_power = 1.0;  // power before renormalization (diagnostic)

    double power() const { return radial_power(grid, amp); }
    double r_max() const { return grid.back(); }
    std::vector<double> intensity() const {
        std::vector<double> out(amp.size());
        for (std::size_t i = 0; i < amp.size(); ++i) out[i] = std::norm(amp[i]);
        return out;
    }

    /// Scales to unit power and records the prior power.
    void normalize() {
        const double p = power();
        if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("RadialField: zero or non-finite power");
        prenorm_power = p;
        const double s = 1.0 / std::sqrt(p);
        for (auto& a : amp) a *= s;
    }
};

inline void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw DomainError("radial grid is empty");
    if (grid.front() < 0.0) throw DomainError("radial grid has negative radius");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("radial grid must be strictly increasing");
}

/// Default sampling: r = 0, then geometric spacing up to r_dense (resolving the
/// r^l vortex core), then linear spacing to r_max. `n` counts all points.
inline std::vector<double> radial_grid(double r_max, double r_dense, std::size_t n = 4096) {
    if (!(r_max > 0.0)) throw DomainError("radial_grid: r_max must be positive");
    if (n < 16) throw DomainError("radial_grid: need at least 16 points");
    r_dense = std::clamp(r_dense, r_max * 1e-4, r_max * 0.25);
    const std::size_t n_geo = n / 8;
    const std::size_t n_lin = n - 2 - n_geo;  // intervals after r_dense
    const double h = (r_max - r_dense) / n_lin;
    std::vector<double> grid;
    grid.reserve(n);
    grid.push_back(0.0);
    // Geometric ramp from h*1e-3 up to r_dense (exclusive).
    const double r0 = std::min(h * 1e-3, r_dense * 1e-3);
    const double ratio = std::pow(r_dense / r0, 1.0 / n_geo);
    double r = r0;
    for (std::size_t i = 0; i < n_geo; ++i, r *= ratio) grid.push_back(r);
    for (std::size_t i = 0; i <= n_lin; ++i) grid.push_back(r_dense + h * i);
    grid.back() = r_max;
    return grid;
}

/// Grid sized for a field of index l at distance z: r_max = extent * max(w, r1),
/// dense region up to half the peak radius.
inline std::vector<double> default_grid(const BeamParams& params, int l, double z, double extent = 6.0,
                                        std::size_t n = 4096) {
    const double w = params.beam_radius(z);
    const double r1 = max_intensity_radius(params, l, z);
    return radial_grid(extent * std::max(w, r1), 0.5 * std::max(r1, 0.25 * w), n);
}

/// Gaussian field at the SLM plane after the helical phase is imprinted:
/// sqrt(2/pi)/w0 exp(-r^2/w0^2), tagged with l and z = 0.
inline RadialField initial_field(const BeamParams& params, int l, std::vector<double> grid) {
    check_grid(grid);
    RadialField f;
    f.z = 0.0;
    f.l = l;
    f.amp.resize(grid.size());
    const double w0 = params.waist();
    const double c = std::sqrt(2.0 / std::numbers::pi) / w0;
    for (std::size_t i = 0; i < grid.size(); ++i) f.amp[i] = c * std::exp(-grid[i] * grid[i] / (w0 * w0));
    f.grid = std::move(grid);
    f.normalize();
    return f;
}

/// Field value, radial derivative and transverse Laplacian at one radius.
struct FieldPoint {
    cplx field;
    cplx d_dr;
    cplx laplacian;  // full transverse Laplacian including -l^2/r^2
};

/// Transverse Laplacian of r^l e^{-g r^2} F(l/2; l+1; s r^2) e^{-il theta},
/// divided by r^l e^{-g r^2}:
///   -4g(l+1) F0 - 4gs l/(l+1) r^2 F1 + 2 s l F1 + s^2 l/(l+1) r^2 F2 + 4g^2 r^2 F0
/// with Fj = 1F1(l/2+j; l+1+j; s r^2). The -l^2/r^2 azimuthal part is already
/// cancelled inside these terms. With s = 0 (all Fj = 1) this is the
/// Laplacian of the LG_0^l mode r^l e^{-g r^2}.
inline cplx five_term_laplacian(int l, cplx g, cplx s, double r2, cplx f0, cplx f1, cplx f2) {
    const double ld = std::abs(l);
    const double ratio = ld / (ld + 1.0);
    return -4.0 * g * (ld + 1.0) * f0 - 4.0 * g * s * ratio * r2 * f1 + 2.0 * s * ld * f1 +
           s * s * ratio * r2 * f2 + 4.0 * g * g * r2 * f0;
}

/// Closed-form hypergeometric-Gaussian field at distance z > 0 produced from a
/// unit-power Gaussian carrying e^{-i l theta} at z = 0:
///
///   E = P r^l e^{-g r^2} 1F1(l/2; l+1; s r^2)
///     = P r^l e^{-ik r^2/2z} 1F1(l/2+1; l+1; -s r^2)       (Kummer)
///
/// with eps = 1/w0^2 + ik/2z, s = (k/2z)^2/eps and g = s + ik/2z, which equals
/// (k/2)(zR + iz)/(z^2 + zR^2). The second form is evaluated; it never
/// overflows because Re(s) > 0. The chirp e^{-ik r^2/2z} is common to field,
/// derivative and Laplacian and can be omitted when only products E* X are
/// needed.
class HyggModel {
public:
    HyggModel(const BeamParams& params, int l, double z)
        : params_(params), l_(std::abs(l)), z_(z) {
        if (!(z > 0.0)) throw DomainError("hygg: z must be positive (use initial_field at z = 0)");
        const double k = params.wavenumber();
        const double w0 = params.waist();
        eps_ = cplx(1.0 / (w0 * w0), k / (2.0 * z));
        const double kz = k / (2.0 * z);
        s_ = kz * kz / eps_;
        g_ = s_ + cplx(0.0, kz);
        // Prefactor of the Collins integral of sqrt(2/pi)/w0 e^{-r^2/w0^2} e^{-il theta}:
        // (2 pi i^{l+1} / (lambda z)) * Gamma(l/2+1)/(2 l!) * sqrt(2/pi)/w0, times
        // b^l / eps^{1+l/2} = x^{l/2}/eps with x = s r^2 (carried in evaluate()).
        const double lambda = params.wavelength();
        const cplx il1 = std::pow(cplx(0.0, 1.0), l_ + 1);
        pref_ = il1 * (2.0 * std::numbers::pi / (lambda * z)) *
                (std::tgamma(l_ / 2.0 + 1.0) / (2.0 * std::tgamma(l_ + 1.0))) *
                std::sqrt(2.0 / std::numbers::pi) / w0 / eps_;
    }

    int l() const noexcept { return l_; }
    double z() const noexcept { return z_; }
    cplx g() const noexcept { return g_; }
    cplx s() const noexcept { return s_; }
    cplx epsilon() const noexcept { return eps_; }

    cplx chirp(double r) const {
        return std::polar(1.0, -params_.wavenumber() * r * r / (2.0 * z_));
    }

    /// Field, derivative and Laplacian without the common chirp factor.
    FieldPoint evaluate_unchirped(double r, bool with_laplacian = true) const {
        const int l = l_;
        const double a = l / 2.0 + 1.0;
        const cplx x = s_ * (r * r);
        if (r == 0.0) {
            // Only l = 0 (field, Laplacian) and l = 1 (derivative) survive on axis.
            FieldPoint p{0.0, 0.0, 0.0};
            if (l == 0) {
                p.field = pref_;
                p.laplacian = -4.0 * g_ * pref_;
            } else if (l == 1) {
                p.d_dr = pref_ * std::sqrt(s_);
            }
            return p;
        }
        // Geometric and diffracted waves may cancel locally; accuracy is judged
        // against the larger of the two.
        static constexpr KummerOptions kOpt{.relative_to_terms = true};
        const cplx m0 = kummer_1f1(a, l + 1.0, -x, kOpt);
        const cplx m1 = kummer_1f1(a, l + 2.0, -x, kOpt);
        // B = P x^{l/2}: base factor shared by all terms (r^l absorbed in x^{l/2}).
        cplx xl = 1.0;
        for (int i = 0; i < l / 2; ++i) xl *= x;
        if (l % 2) xl *= std::sqrt(x);
        const cplx base = pref_ * xl;

        FieldPoint p;
        p.field = base * m0;
        const double ld = l;
        const double ratio = ld / (ld + 1.0);
        p.d_dr = base * ((ld / r - 2.0 * g_ * r) * m0 + s_ * r * ratio * m1);
        if (with_laplacian) {
            const cplx m2 = l > 0 ? kummer_1f1(a, l + 3.0, -x, kOpt) : cplx(0.0);
            const double r2 = r * r;
            // Fj = e^{s r^2} M(l/2+1; l+1+j; -s r^2); the e^{s r^2} joins e^{-g r^2} in the chirp.
            p.laplacian = base * five_term_laplacian(l, g_, s_, r2, m0, m1, m2);
        }
        return p;
    }

    cplx field(double r) const { return evaluate_unchirped(r, false).field * chirp(r); }

private:
    BeamParams params_;
    int l_;
    double z_;
    cplx eps_, s_, g_, pref_;
};

/// Analytic field at z > 0 sampled on `grid`, renormalized to unit power; the
/// power before renormalization is kept in prenorm_power.
inline RadialField hygg_field(const BeamParams& params, int l, double z, std::vector<double> grid) {
    check_grid(grid);
    const HyggModel model(params, l, z);
    RadialField f;
    f.z = z;
    f.l = l;
    f.amp.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f.amp[i] = model.field(grid[i]);
    f.grid = std::move(grid);
    f.normalize();
    return f;
}

/// Laguerre-Gaussian mode LG_p^l at distance z (carrier e^{-ikz}):
/// (sqrt2 r/w)^l L_p^l(2r^2/w^2) exp(-ik r^2 / 2q) exp(i(2p+l+1) atan(z/zR)), q = z + i zR.
inline RadialField lg_mode(const BeamParams& params, int p, int l, double z, std::vector<double> grid) {
    check_grid(grid);
    if (p < 0) throw DomainError("lg_mode: p must be nonnegative");
    const int al = std::abs(l);
    const double w = params.beam_radius(z);
    const double k = params.wavenumber();
    const cplx q(z, params.rayleigh());
    const double gouy = (2.0 * p + al + 1.0) * std::atan(z / params.rayleigh());
    const double norm = std::sqrt(2.0 * std::tgamma(p + 1.0) / (std::numbers::pi * std::tgamma(p + al + 1.0))) / w;
    RadialField f;
    f.z = z;
    f.l = l;
    f.amp.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid[i];
        const double u = 2.0 * r * r / (w * w);
        const double radial = std::pow(std::sqrt(u), al) * assoc_laguerre(p, al, u);
        f.amp[i] = norm * radial * std::exp(cplx(0.0, -k) * (r * r) / (2.0 * q)) * std::polar(1.0, gouy);
    }
    f.grid = std::move(grid);
    f.normalize();
    return f;
}

/// <a|b> = 2 pi integral conj(a) b r dr; zero when the azimuthal indices differ.
inline cplx overlap(const RadialField& a, const RadialField& b) {
    if (a.grid != b.grid) throw DomainError("overlap: fields sampled on different grids");
    if (a.l != b.l) return 0.0;
    std::vector<cplx> integrand(a.grid.size());
    for (std::size_t i = 0; i < a.grid.size(); ++i) integrand[i] = std::conj(a.amp[i]) * b.amp[i] * a.grid[i];
    return 2.0 * std::numbers::pi * quad::simpson<cplx>(a.grid, integrand);
}

/// Relative L2 distance ||a - b|| / ||b|| on a shared grid.
inline double relative_l2(const RadialField& a, const RadialField& b) {
    if (a.grid != b.grid) throw DomainError("relative_l2: fields sampled on different grids");
    std::vector<cplx> diff(a.amp.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.amp[i] - b.amp[i];
    return std::sqrt(radial_power(a.grid, diff) / radial_power(b.grid, b.amp));
}

} // namespace oam
