#pragma once

// Single-mode-fiber projection of an OAM superposition at the coupling lens.
//
// The fiber accepts the time-reversed field-of-view mode A*(r). An incoming
// state alpha B(r)|0> + beta C(r) e^{-il theta}|l> couples with efficiency
// eta = |alpha|^2 |<A|B>|^2: the helical term integrates to zero over theta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "oam/beam.hpp"
#include "oam/errors.hpp"
#include "oam/interp.hpp"
#include "oam/quadrature.hpp"

namespace oam {

/// Time-reversed fiber mode at the lens plane.
struct FOVField {
    RadialField profile;

    /// Flat-phase Gaussian with the given waist at the lens plane z.
    static FOVField gaussian(double waist, double z, std::vector<double> grid) {
        if (!(waist > 0.0)) throw DomainError("FOVField: waist must be positive");
        check_grid(grid);
        FOVField f;
        f.profile.z = z;
        f.profile.l = 0;
        for (double r : grid) f.profile.amp.emplace_back(std::exp(-r * r / (waist * waist)));
        f.profile.grid = std::move(grid);
        f.profile.normalize();
        return f;
    }
};

struct CollapseResult {
    SuperpositionState post_state;
    double efficiency = 0.0;
    double collapse_epoch = 0.0;  // propagation distance at the lens, m
};

namespace detail {

/// Sum over n equally spaced azimuths of e^{i l theta} d theta; exact zero for
/// 0 < |l| < n up to rounding.
inline cplx azimuthal_integral(int l, int n = 64) {
    cplx s = 0.0;
    for (int j = 0; j < n; ++j) s += std::polar(1.0, l * 2.0 * std::numbers::pi * j / n);
    return s * (2.0 * std::numbers::pi / n);
}

}  // namespace detail

/// Radial overlap 2 pi int conj(A) B r dr / sqrt(P_A P_B), where the powers
/// are over each field's full grid and the overlap stops at `stop` (hard
/// circular aperture) when given.
inline cplx radial_overlap(const RadialField& a, const RadialField& b, std::optional<double> stop = {},
                           double rel_tol = 1e-10) {
    if (std::abs(a.z - b.z) > 1e-9 * std::max(1.0, std::abs(a.z)))
        throw DomainError("coupling: profiles are not at the same plane");
    const CubicSpline<cplx> sa(a.grid, a.amp), sb(b.grid, b.amp);
    const double end = std::min({a.r_max(), b.r_max(), stop.value_or(1e300)});
    // Panels on the union of both sample grids: each panel then sees products
    // of single cubic pieces, which Gauss-Kronrod integrates exactly.
    auto breaks_for = [&](double hi) {
        std::vector<double> br;
        std::merge(a.grid.begin(), a.grid.end(), b.grid.begin(), b.grid.end(), std::back_inserter(br));
        br.erase(std::unique(br.begin(), br.end()), br.end());
        br.erase(std::upper_bound(br.begin(), br.end(), hi), br.end());
        if (br.back() < hi) br.push_back(hi);
        return br;
    };
    const double tp = 2.0 * std::numbers::pi;
    auto ov = quad::adaptive([&](double r) { return std::conj(sa(r)) * sb(r) * (tp * r); }, breaks_for(end), 1e-300,
                             rel_tol);
    auto pa = quad::adaptive([&](double r) { return std::norm(sa(r)) * (tp * r); }, breaks_for(a.r_max()), 1e-300,
                             rel_tol);
    auto pb = quad::adaptive([&](double r) { return std::norm(sb(r)) * (tp * r); }, breaks_for(b.r_max()), 1e-300,
                             rel_tol);
    return ov.value / std::sqrt(pa.value * pb.value);
}

/// eta for `state` with component profiles at the lens plane (key = l; the
/// l = 0 entry is B, others C_l). Helical terms are checked to vanish by
/// azimuthal orthogonality rather than dropped.
inline double coupling_efficiency(const SuperpositionState& state, const std::map<int, RadialField>& profiles,
                                  const FOVField& fov, std::optional<double> aperture = {}) {
    if (aperture && !(*aperture > 0.0)) throw DomainError("coupling: aperture radius must be positive");
    cplx amp = 0.0;
    for (const auto& t : state.terms()) {
        const auto it = profiles.find(t.l);
        if (it == profiles.end()) throw LookupError("coupling: no profile for l=" + std::to_string(t.l));
        const cplx radial = radial_overlap(fov.profile, it->second, aperture);
        // FOV mode carries l = 0, so the theta integral is that of e^{-il theta}.
        const cplx angular = detail::azimuthal_integral(-t.l) / (2.0 * std::numbers::pi);
        const cplx term = t.coeff * radial * angular;
        if (t.l != 0 && std::abs(term) > 1e-10) {
            std::ostringstream msg;
            msg << "coupling: helical term l=" << t.l << " fails azimuthal orthogonality (|value| = " << std::abs(term)
                << ")";
            throw ConsistencyError(msg.str());
        }
        amp += term;
    }
    return std::norm(amp);
}

/// |N_G - N_LG| / (N_G + N_LG).
inline double distinguishability(double n_gauss, double n_lg) {
    if (n_gauss < 0.0 || n_lg < 0.0) throw DomainError("distinguishability: counts must be nonnegative");
    if (n_gauss + n_lg <= 0.0) throw DomainError("distinguishability: no counts");
    return std::abs(n_gauss - n_lg) / (n_gauss + n_lg);
}

/// Post-measurement state sqrt(D)|0> + sqrt(1-D)|l> for a two-mode input.
inline CollapseResult collapse_state(const SuperpositionState& state, double d, double efficiency = -1.0,
                                     double lens_distance = 0.0) {
    if (!(d >= 0.0 && d <= 1.0)) throw DomainError("collapse_state: D must lie in [0, 1]");
    if (state.terms().size() != 2 || !state.contains(0))
        throw DomainError("collapse_state: state must contain exactly the modes {0, l}");
    int l = 0;
    for (const auto& t : state.terms())
        if (t.l != 0) l = t.l;
    if (efficiency < 0.0) efficiency = state.weight(0);
    if (efficiency > 1.0) throw DomainError("collapse_state: efficiency above 1");
    return {SuperpositionState({{0, std::sqrt(d)}, {l, std::sqrt(1.0 - d)}}), efficiency, lens_distance};
}

/// Moves a fraction `leak` of every helical term's weight into |0>
/// (unconverted light reflected by the SLM joins the Gaussian part).
inline SuperpositionState fold_leakage(const SuperpositionState& state, double leak) {
    if (!(leak >= 0.0 && leak <= 1.0)) throw DomainError("leakage fraction must lie in [0, 1]");
    if (leak == 0.0) return state;
    double moved = 0.0;
    std::vector<ModeTerm> terms;
    cplx alpha = 0.0;
    for (const auto& t : state.terms()) {
        if (t.l == 0) {
            alpha = t.coeff;
            continue;
        }
        moved += leak * std::norm(t.coeff);
        terms.push_back({t.l, t.coeff * std::sqrt(1.0 - leak)});
    }
    const double a2 = std::norm(alpha) + moved;
    const cplx phase = std::abs(alpha) > 0.0 ? alpha / std::abs(alpha) : cplx(1.0);
    terms.insert(terms.begin(), {0, phase * std::sqrt(a2)});
    return SuperpositionState::normalized(std::move(terms));
}

struct DistinguishabilityRun {
    double eta_gauss = 0.0;   // efficiency for a pure Gaussian input
    double eta_twisted = 0.0; // efficiency for the |l> input (with leakage)
    long n_gauss = 0;
    long n_lg = 0;
    double d = 0.0;
};

/// Photon-counting estimate of D at the lens plane z: N photons of each kind,
/// counts drawn from Poisson(N eta).
inline DistinguishabilityRun simulate_distinguishability(const BeamParams& params, int l, double z,
                                                         double fov_waist, std::optional<double> aperture,
                                                         double leakage, double photons, std::uint64_t seed) {
    if (l == 0) throw DomainError("simulate_distinguishability: l must be nonzero");
    if (!(photons > 0.0)) throw DomainError("simulate_distinguishability: photon number must be positive");
    const auto grid = default_grid(params, l, z, 8.0, 4096);
    const auto fov = FOVField::gaussian(fov_waist, z, grid);
    std::map<int, RadialField> prof{{0, lg_mode(params, 0, 0, z, grid)}, {l, hygg_field(params, l, z, grid)}};
    DistinguishabilityRun run;
    run.eta_gauss = coupling_efficiency(SuperpositionState::pure(0), prof, fov, aperture);
    const auto twisted = fold_leakage(SuperpositionState::two_mode(0.0, 1.0, l), leakage);
    run.eta_twisted = coupling_efficiency(twisted, prof, fov, aperture);
    std::mt19937_64 rng(seed);
    run.n_gauss = std::poisson_distribution<long>(photons * run.eta_gauss)(rng);
    run.n_lg = run.eta_twisted > 0.0 ? std::poisson_distribution<long>(photons * run.eta_twisted)(rng) : 0;
    run.d = distinguishability(double(run.n_gauss), double(run.n_lg));
    return run;
}

} // namespace oam
