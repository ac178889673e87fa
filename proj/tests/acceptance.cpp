// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oam/commands.hpp"
#include "oam/propagate.hpp"

using namespace oam;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string& name, Verdict& v) {
    std::printf("[%s] %d %s:%s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
    failures += !v.pass;
}

void guarded(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
    Verdict v;
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    report(id, name, v);
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("oam_acceptance_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const char* kDefaults = "wavelength = 795 nm\nwaist = 1.5 mm\n";

}  // namespace

int main() {
    std::ostringstream quiet;
    const BeamParams params(795e-9, 1.5e-3);
    std::vector<DelayCurve> fig1_curves;

    guarded(1, "delay inset values within 30% with tau(2 m)/tau(1.2 m) in [1.4, 1.7]", [&](Verdict& v) {
        auto cfg = parse_config(kDefaults);
        cfg.output = scratch("fig1").string();
        const auto t0 = Clock::now();
        const auto res = run_fig1(cfg, quiet);
        const double dt = seconds_since(t0);
        fig1_curves = res.curves;
        for (const auto& r : res.inset) {
            if (!r.reference_um) continue;
            const double dev = r.tau_um / *r.reference_um - 1.0;
            char buf[96];
            std::snprintf(buf, sizeof buf, " l=%d z=%.1f: %.2f vs %.1f um (%+.1f%%)", r.l, r.z, r.tau_um,
                          *r.reference_um, 100 * dev);
            v.detail << buf;
            v.require(std::abs(dev) <= 0.30, "l=" + std::to_string(r.l) + " outside 30%");
            v.require(r.ratio >= 1.4 && r.ratio <= 1.7, "l=" + std::to_string(r.l) + " ratio");
        }
        v.detail << "; ratios";
        for (const auto& r : res.inset)
            if (r.z == cfg.distances.back()) v.detail << ' ' << std::round(r.ratio * 1000) / 1000;
        v.detail << "; " << std::round(dt) << " s";
        v.require(dt < 300.0, "runtime above 5 min");
    });

    guarded(2, "analytic field vs Collins propagation, relative L2 <= 1e-3", [&](Verdict& v) {
        const auto t0 = Clock::now();
        double worst = 0.0;
        for (int l : {0, 1, 6, 10}) {
            const auto in = initial_field(params, l, radial_grid(6.0 * params.waist(), 0.5e-3, 4096));
            for (double z : {0.3, 1.0, 2.0}) {
                const auto out = collins_propagate(in, z, params, default_grid(params, l, z, 12.0, 4096));
                const double e = relative_l2(out, hygg_field(params, l, z, out.grid));
                worst = std::max(worst, e);
                v.require(e <= 1e-3, "l=" + std::to_string(l) + " z=" + std::to_string(z));
            }
        }
        const double dt = seconds_since(t0);
        v.detail << " worst " << worst << " over 12 cases; " << std::round(dt) << " s";
        v.require(dt < 600.0, "runtime above 10 min");
    });

    guarded(3, "<k_perp^2> of LG modes at the waist = 2(l+1)/w0^2, both paths agree on HyGG", [&](Verdict& v) {
        const double w2 = params.waist() * params.waist();
        double worst_lg = 0.0, worst_pair = 0.0;
        for (int l = 0; l <= 12; ++l) {
            const double expect = 2.0 * (l + 1.0) / w2;
            const double r_max = 8.0 * params.waist();
            const double a = transverse_k2_lg(params, l, 0.0, r_max).value;
            const auto field = lg_mode(params, 0, l, 0.0, radial_grid(r_max, 0.5e-3, 4096));
            const double n = transverse_k2_numeric(field, r_max).value;
            worst_lg = std::max({worst_lg, std::abs(a / expect - 1.0), std::abs(n / expect - 1.0)});
        }
        for (int l : {1, 6, 10, 12})
            for (double z : {0.5, 1.0, 2.0}) {
                const double r_max = 4.0 * std::max(params.beam_radius(z), max_intensity_radius(params, l, z));
                const double a = transverse_k2_analytic(params, l, z, r_max).value;
                const double h = 0.25 * z / (params.wavenumber() * r_max);
                const auto field = hygg_field(params, l, z, radial_grid(r_max, 1e-3, static_cast<std::size_t>(r_max / h)));
                const double n = transverse_k2_numeric(field, r_max).value;
                worst_pair = std::max(worst_pair, std::abs(a - n) / a);
            }
        v.detail << " LG worst deviation " << worst_lg << "; HyGG analytic vs numeric worst " << worst_pair;
        v.require(worst_lg < 0.01, "LG closed form");
        v.require(worst_pair < 0.02, "path agreement");
    });

    guarded(4, "superposition delay linear in |c_l|^2, equal superposition = half", [&](Verdict& v) {
        v.require(!fig1_curves.empty(), "no curves from criterion 1");
        std::map<int, DelayCurve> curves;
        for (const auto& c : fig1_curves) curves[c.l] = c;
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (const auto& [l, c] : curves)
            for (int i = 0; i < 200; ++i) {
                const double z = 0.01 + 1.99 * u(rng);
                const double b2 = u(rng);
                const auto st = SuperpositionState::two_mode(std::sqrt(1.0 - b2), std::sqrt(b2), l);
                const double expect = st.weight(l) * c.at(z);
                const double got = superposition_delay(st, curves, z);
                worst = std::max(worst, std::abs(got - expect) / std::max(std::abs(expect), 1e-300));
                v.require(got == expect, "linearity at l=" + std::to_string(l));
                const auto half = SuperpositionState::two_mode(std::sqrt(0.5), std::sqrt(0.5), l);
                const double h = superposition_delay(half, curves, z);
                v.require(std::abs(h - 0.5 * c.at(z)) <= 4e-16 * std::abs(c.at(z)), "half at l=" + std::to_string(l));
            }
        // Three-mode state: weights add.
        const auto three = SuperpositionState::normalized({{0, 0.5}, {6, 0.5}, {12, std::sqrt(0.5)}});
        const double sum = three.weight(6) * curves.at(6).at(2.0) + three.weight(12) * curves.at(12).at(2.0);
        v.require(superposition_delay(three, curves, 2.0) == sum, "three-mode sum");
        v.detail << " 600 random weights, max relative deviation " << worst;
    });

    guarded(5, "HOM inject-scan-fit round trip and Monte-Carlo coverage", [&](Verdict& v) {
        const auto t0 = Clock::now();
        double worst = 0.0;
        for (int fs : {160, 400}) {
            const auto pair = PhotonPair::preset(fs);
            const auto grid = default_scan_grid(pair);
            const auto ref = coincidence_curve(pair, 0.0, grid);
            for (double d = -30.0; d <= 30.0 + 1e-9; d += 0.5)
                worst = std::max(worst, std::abs(arrival_delay_shift(ref, coincidence_curve(pair, d, grid)).value - d));
        }
        const auto pair = PhotonPair::preset(160);
        int inside = 0;
        std::mt19937_64 seeds(2024);
        std::uniform_real_distribution<double> u(-30.0, 30.0);
        for (int t = 0; t < 1000; ++t) {
            const double truth = u(seeds);
            const auto fit = fit_dip(coincidence_curve(pair, truth, scan_grid(), PoissonNoise{1000.0, seeds()}));
            inside += std::abs(fit.center - truth) <= fit.sigma_center;
        }
        const double dt = seconds_since(t0);
        v.detail << " noiseless worst error " << worst << " um; coverage " << inside / 10.0 << "% of 1000; "
                 << std::round(dt * 10) / 10 << " s";
        v.require(worst < 0.05, "round trip");
        v.require(inside >= 620 && inside <= 740, "coverage");
        v.require(dt < 120.0, "runtime");
    });

    guarded(6, "wavefunction-history prediction exceeds 3x the quoted uncertainty", [&](Verdict& v) {
        v.require(!fig1_curves.empty(), "no curves from criterion 1");
        auto cfg = parse_config(kDefaults);
        cfg.output = scratch("hom").string();
        const auto rows = run_hom_sim(cfg, quiet, &fig1_curves);
        for (const auto& r : rows) {
            char buf[128];
            std::snprintf(buf, sizeof buf, " %s z=%.1f: %.2f vs 0 (measured %.2f+-%.2f)", r.ref.panel.c_str(),
                          r.ref.z, r.wavefunction_um, r.ref.measured, r.ref.sigma);
            v.detail << buf;
            v.require(r.collapsed_um == 0.0, "collapsed prediction nonzero");
            v.require(r.discriminated, "panel " + r.ref.panel + " not discriminated");
        }
        v.require(std::filesystem::exists(std::filesystem::path(cfg.output) / "hom_comparison.csv"), "table");
    });

    guarded(7, "fiber coupling: matched mode, waist mismatch, D at 1 m", [&](Verdict& v) {
        const auto grid = radial_grid(8e-3, 0.5e-3, 4096);
        const auto fov = FOVField::gaussian(0.8e-3, 1.0, grid);
        std::map<int, RadialField> prof{{0, fov.profile}, {10, hygg_field(params, 10, 1.0, grid)}};
        double worst_alpha = 0.0;
        for (double a2 : {1.0, 0.75, 0.5, 0.25}) {
            const auto st = SuperpositionState::two_mode(std::sqrt(a2), std::sqrt(1.0 - a2), 10);
            worst_alpha = std::max(worst_alpha, std::abs(coupling_efficiency(st, prof, fov) - a2));
        }
        double worst_mm = 0.0;
        for (double w1 : {0.4e-3, 0.6e-3, 0.9e-3, 1.5e-3}) {
            const double w2 = 0.75e-3;
            const auto f2 = FOVField::gaussian(w2, 0.0, grid);
            std::map<int, RadialField> p{{0, FOVField::gaussian(w1, 0.0, grid).profile}};
            const double expect = std::pow(2.0 * w1 * w2 / (w1 * w1 + w2 * w2), 2);
            worst_mm = std::max(worst_mm, std::abs(coupling_efficiency(SuperpositionState::pure(0), p, f2) - expect));
        }
        const auto run = simulate_distinguishability(params, 10, 1.0, 0.75e-3, 0.75e-3, 0.0, 1e5, 1);
        v.detail << " |eta - alpha^2| " << worst_alpha << "; mismatch error " << worst_mm << "; D = " << run.d
                 << " (N_G=" << run.n_gauss << ", N_LG=" << run.n_lg << ")";
        v.require(worst_alpha <= 1e-8, "alpha^2");
        v.require(worst_mm <= 1e-6, "closed form");
        v.require(run.d >= 0.98, "distinguishability");
    });

    guarded(8, "identical config and seed give byte-identical CSV/PGM outputs", [&](Verdict& v) {
        auto cfg = parse_config(std::string(kDefaults) +
                                "[regularization]\nz_min = 0.05\nr_max_factor = 4\npoints_per_decade = 8\n"
                                "linear_step = 0.1\n[distances]\nprofile = 0.5, 1\n[profile]\npixels = 96\n"
                                "[slit]\nwidth = 256\nheight = 256\n[sensitivity]\nr_max_factors = 4, 6\n"
                                "z_mins = 0.05\napertures = 3.5 mm\nwaists = 1.5 mm\n[run]\nseed = 7\n");
        std::vector<std::filesystem::path> dirs{scratch("det_a"), scratch("det_b")};
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            cfg.output = dirs[i].string();
            cfg.threads = i == 0 ? 1 : 3;
            const auto curves = run_fig1(cfg, quiet).curves;
            run_delay_curve(cfg, quiet);
            run_hom_sim(cfg, quiet, &curves);
            run_profile(cfg, quiet);
            run_mask(cfg, quiet);
            run_coupling(cfg, quiet);
            run_sensitivity(cfg, quiet);
        }
        int files = 0;
        for (const auto& e : std::filesystem::directory_iterator(dirs[0])) {
            const auto other = dirs[1] / e.path().filename();
            ++files;
            v.require(std::filesystem::exists(other) && slurp(e.path()) == slurp(other),
                      e.path().filename().string() + " differs");
        }
        int files_b = 0;
        for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dirs[1])) ++files_b;
        v.require(files == files_b && files > 0, "file sets differ");
        v.detail << " " << files << " files compared across two runs (1 and 3 worker threads)";
    });

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
