#pragma once

// Scenario drivers behind the oamdelay subcommands. Each writes its files
// into cfg.output, prints a short table to `log`, and returns the numbers it
// wrote so callers can check them without re-reading files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oam/beam.hpp"
#include "oam/config.hpp"
#include "oam/coupling.hpp"
#include "oam/errors.hpp"
#include "oam/groupdelay.hpp"
#include "oam/hologram.hpp"
#include "oam/hom.hpp"

namespace oam {

/// Inset delays (um) of the delay-vs-distance figure at 1.2 m and 2 m.
inline const std::map<int, std::pair<double, double>>& inset_delays() {
    static const std::map<int, std::pair<double, double>> v{{6, {3.8, 6.0}}, {10, {10.0, 15.6}}, {12, {14.0, 21.9}}};
    return v;
}

inline std::optional<double> inset_delay(int l, double z) {
    const auto it = inset_delays().find(std::abs(l));
    if (it == inset_delays().end()) return std::nullopt;
    if (std::abs(z - 1.2) < 1e-9) return it->second.first;
    if (std::abs(z - 2.0) < 1e-9) return it->second.second;
    return std::nullopt;
}

namespace detail {

inline std::string num(double v, int digits = 9) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// CSV file with the resolved configuration as `#` header lines.
class CsvFile {
public:
    CsvFile(const RunConfig& cfg, const std::string& name, const std::string& command,
            const std::vector<std::string>& extra = {})
        : path_((std::filesystem::path(cfg.output) / name).string()), out_(path_) {
        if (!out_) throw IoError("cannot open " + path_ + " for writing");
        out_ << "# oamdelay " << command << "\n";
        for (const auto& l : describe_config(cfg)) out_ << "# " << l << "\n";
        for (const auto& l : extra) out_ << "# " << l << "\n";
    }

    CsvFile& row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            const auto& c = cells[i];
            if (c.find_first_of(",\"\n") != std::string::npos) {
                out_ << '"';
                for (char ch : c) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
                out_ << '"';
            } else {
                out_ << c;
            }
        }
        out_ << "\n";
        if (!out_) throw IoError("write failed for " + path_);
        return *this;
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

inline void ensure_output(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output, ec);
    if (ec || !std::filesystem::is_directory(cfg.output))
        throw IoError("cannot create output directory " + cfg.output);
}

inline std::string zname(double z) {
    std::string s = num(z, 6);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

} // namespace detail

struct InsetRow {
    int l = 0;
    double z = 0.0;
    double tau_um = 0.0;
    std::optional<double> reference_um;
    double ratio = 0.0;  // tau(last distance) / tau(first distance)
};

struct Fig1Result {
    std::vector<DelayCurve> curves;
    std::vector<InsetRow> inset;
};

inline std::vector<InsetRow> inset_rows(const std::vector<DelayCurve>& curves, const std::vector<double>& distances) {
    std::vector<InsetRow> rows;
    for (const auto& c : curves) {
        if (c.l == 0) continue;
        const double first = c.at(distances.front()), last = c.at(distances.back());
        for (double z : distances)
            rows.push_back({c.l, z, 1e6 * c.at(z), inset_delay(c.l, z), first != 0.0 ? last / first : 0.0});
    }
    return rows;
}

inline Fig1Result run_fig1(const RunConfig& cfg, std::ostream& log) {
    detail::ensure_output(cfg);
    Fig1Result res;
    res.curves = delay_curves(cfg.beam(), cfg.modes, cfg.z_end, cfg.reg, {}, cfg.threads);
    res.inset = inset_rows(res.curves, cfg.distances);

    detail::CsvFile curves(cfg, "fig1_curves.csv", "fig1");
    std::vector<std::string> head{"z_m"};
    for (const auto& c : res.curves) head.push_back("tau_l" + std::to_string(c.l) + "_um");
    curves.row(head);
    for (std::size_t i = 0; i < res.curves.front().z.size(); ++i) {
        std::vector<std::string> r{detail::num(res.curves.front().z[i])};
        for (const auto& c : res.curves) r.push_back(detail::num(1e6 * c.tau[i]));
        curves.row(r);
    }

    detail::CsvFile inset(cfg, "fig1_inset.csv", "fig1");
    inset.row({"l", "z_m", "tau_um", "reference_um", "rel_dev", "ratio_last_first"});
    log << "l     z [m]   tau [um]   reference [um]   deviation   ratio\n";
    for (const auto& r : res.inset) {
        const std::string ref = r.reference_um ? detail::num(*r.reference_um) : "";
        const std::string dev = r.reference_um ? detail::num(r.tau_um / *r.reference_um - 1.0, 4) : "";
        inset.row({std::to_string(r.l), detail::num(r.z), detail::num(r.tau_um), ref, dev, detail::num(r.ratio, 6)});
        char line[160];
        std::snprintf(line, sizeof line, "%-5d %-7.3g %-10.4g %-16s %-11s %.4g\n", r.l, r.z, r.tau_um, ref.c_str(),
                      dev.c_str(), r.ratio);
        log << line;
    }
    log << "wrote " << curves.path() << ", " << inset.path() << "\n";
    return res;
}

inline std::vector<DelayCurve> run_delay_curve(const RunConfig& cfg, std::ostream& log) {
    detail::ensure_output(cfg);
    const auto curves = delay_curves(cfg.beam(), cfg.modes, cfg.z_end, cfg.reg, {}, cfg.threads);
    detail::CsvFile out(cfg, "delay_curve.csv", "delay-curve");
    std::vector<std::string> head{"z_m"};
    for (const auto& c : curves) {
        head.push_back("tau_l" + std::to_string(c.l) + "_um");
        head.push_back("tau_state_l" + std::to_string(c.l) + "_um");
        head.push_back("k2_l" + std::to_string(c.l) + "_per_m2");
    }
    out.row(head);
    std::map<int, DelayCurve> by_l;
    for (const auto& c : curves) by_l[c.l] = c;
    for (std::size_t i = 0; i < curves.front().z.size(); ++i) {
        const double z = curves.front().z[i];
        std::vector<std::string> r{detail::num(z)};
        for (const auto& c : curves) {
            r.push_back(detail::num(1e6 * c.tau[i]));
            r.push_back(detail::num(predict_delay(Hypothesis::wavefunction_history, cfg.two_mode(c.l), z, by_l)));
            r.push_back(detail::num(c.k2[i]));
        }
        out.row(r);
    }
    for (const auto& c : curves)
        log << "l=" << c.l << ": tau(" << detail::num(c.z.back(), 4) << " m) = " << detail::num(1e6 * c.tau.back(), 5)
            << " um, superposition (alpha^2=" << cfg.alpha2 << ") "
            << detail::num(predict_delay(Hypothesis::wavefunction_history, cfg.two_mode(c.l), c.z.back(), by_l), 5)
            << " um, Richardson error " << detail::num(1e6 * c.richardson, 3) << " um\n";
    log << "wrote " << out.path() << "\n";
    return curves;
}

struct HomRow {
    ReferenceDelay ref;
    double wavefunction_um = 0.0;
    double collapsed_um = 0.0;
    DelayShift fitted;
    bool discriminated = false;
};

/// Curves for the measured configurations are computed unless supplied.
inline std::vector<HomRow> run_hom_sim(const RunConfig& cfg, std::ostream& log,
                                       const std::vector<DelayCurve>* precomputed = nullptr) {
    detail::ensure_output(cfg);
    const auto table = measured_delays();
    std::map<int, DelayCurve> curves;
    if (precomputed)
        for (const auto& c : *precomputed) curves[std::abs(c.l)] = c;
    std::vector<int> need;
    double z_far = cfg.z_end;
    for (const auto& r : table) {
        z_far = std::max(z_far, r.z);
        for (const auto* s : {&r.reference, &r.signal})
            for (const auto& t : s->terms())
                if (t.l != 0 && !curves.count(std::abs(t.l)) &&
                    std::find(need.begin(), need.end(), std::abs(t.l)) == need.end())
                    need.push_back(std::abs(t.l));
    }
    if (!need.empty())
        for (auto& c : delay_curves(cfg.beam(), need, z_far, cfg.reg, {}, cfg.threads)) curves[c.l] = std::move(c);

    const auto pair = cfg.pair();
    const auto grid = cfg.scan_positions();
    std::vector<HomRow> rows;
    detail::CsvFile out(cfg, "hom_comparison.csv", "hom-sim");
    out.row({"panel", "reference_state", "signal_state", "z_m", "measured_um", "measured_sigma_um",
             "wavefunction_um", "collapsed_um", "fitted_shift_um", "fitted_sigma_um", "separation_in_sigma",
             "discriminated"});
    log << "panel  z [m]  measured [um]   wavefunction [um]  collapsed [um]  fitted [um]  signal\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        HomRow row{table[i], 0.0, 0.0, {}, false};
        const auto& t = table[i];
        const double w_ref = predict_delay(Hypothesis::wavefunction_history, t.reference, t.z, curves);
        const double w_sig = predict_delay(Hypothesis::wavefunction_history, t.signal, t.z, curves);
        row.wavefunction_um = w_sig - w_ref;
        row.collapsed_um = predict_delay(Hypothesis::collapsed_history, t.signal, t.z, curves) -
                           predict_delay(Hypothesis::collapsed_history, t.reference, t.z, curves);
        std::optional<PoissonNoise> nr, ns;
        if (cfg.counts > 0.0) {
            nr = PoissonNoise{cfg.counts, cfg.seed + 2 * i};
            ns = PoissonNoise{cfg.counts, cfg.seed + 2 * i + 1};
        }
        const auto ref_scan = coincidence_curve(pair, w_ref, grid, nr);
        const auto sig_scan = coincidence_curve(pair, w_sig, grid, ns);
        const std::string stem = "hom_" + std::to_string(i + 1);
        const std::vector<std::string> hdr{"oamdelay hom-sim", "panel=" + t.panel, "z_m=" + detail::num(t.z)};
        auto with = [&](const std::string& what, const SuperpositionState& s, double delay) {
            auto h = hdr;
            h.push_back(what + "=" + describe_state(s));
            h.push_back("true_delay_um=" + detail::num(delay));
            for (const auto& l : describe_config(cfg)) h.push_back(l);
            return h;
        };
        write_scan_csv((std::filesystem::path(cfg.output) / (stem + "_reference.csv")).string(), ref_scan,
                       with("reference", t.reference, w_ref));
        write_scan_csv((std::filesystem::path(cfg.output) / (stem + "_signal.csv")).string(), sig_scan,
                       with("signal", t.signal, w_sig));
        row.fitted = arrival_delay_shift(ref_scan, sig_scan);
        const double sep = std::abs(row.wavefunction_um - row.collapsed_um) / t.sigma;
        row.discriminated = sep > 3.0;
        out.row({t.panel, describe_state(t.reference), describe_state(t.signal), detail::num(t.z),
                 detail::num(t.measured), detail::num(t.sigma), detail::num(row.wavefunction_um),
                 detail::num(row.collapsed_um), detail::num(row.fitted.value), detail::num(row.fitted.sigma),
                 detail::num(sep, 4), row.discriminated ? "yes" : "no"});
        char line[200];
        std::snprintf(line, sizeof line, "%-6s %-6.3g %5.2f +- %-7.2f %-18.3f %-15.3f %-12.3f %s\n", t.panel.c_str(),
                      t.z, t.measured, t.sigma, row.wavefunction_um, row.collapsed_um, row.fitted.value,
                      describe_state(t.signal).c_str());
        log << line;
        rows.push_back(row);
    }
    log << "wrote " << out.path() << " and " << 2 * table.size() << " scan files\n";
    return rows;
}

struct ProfileRow {
    int l = 0;
    double z = 0.0;
    double inner_diameter = 0.0;  // m
    double peak_radius = 0.0;     // m
    double aperture_fraction = 0.0;
};

inline std::vector<ProfileRow> run_profile(const RunConfig& cfg, std::ostream& log) {
    detail::ensure_output(cfg);
    const auto params = cfg.beam();
    std::vector<int> ls{0};
    for (int l : cfg.modes)
        if (l != 0) ls.push_back(l);
    std::vector<ProfileRow> rows(ls.size() * cfg.profile_z.size());
    std::vector<GrayImage> images(rows.size());
    parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
        const int l = ls[i / cfg.profile_z.size()];
        const double z = cfg.profile_z[i % cfg.profile_z.size()];
        const double extent = std::max(0.75 * cfg.field_of_view, 6.0 * params.beam_radius(z));
        const auto field = hygg_field(params, l, z, radial_grid(extent, std::min(extent, 4.0 * params.beam_radius(z)),
                                                                8192));
        ProfileRow& r = rows[i];
        r.l = l;
        r.z = z;
        r.inner_diameter = inner_diameter(field, cfg.threshold);
        const auto inten = field.intensity();
        r.peak_radius = field.grid[static_cast<std::size_t>(std::max_element(inten.begin(), inten.end()) - inten.begin())];
        if (cfg.coupling_aperture) {
            double in = 0.0, all = 0.0;
            for (std::size_t k = 1; k < field.grid.size(); ++k) {
                const double a = field.grid[k - 1], b = field.grid[k];
                const double piece = 0.5 * (inten[k - 1] * a + inten[k] * b) * (b - a);
                all += piece;
                if (b <= *cfg.coupling_aperture) in += piece;
            }
            r.aperture_fraction = in / all;
        }
        images[i] = render_intensity(field, cfg.pixels, cfg.pixels, cfg.field_of_view / cfg.pixels);
    });
    detail::CsvFile out(cfg, "profile.csv", "profile",
                        {"inner diameter at threshold " + detail::num(cfg.threshold) + " of peak intensity"});
    out.row({"l", "z_m", "inner_diameter_mm", "peak_radius_mm", "aperture_power_fraction", "image"});
    log << "l     z [m]    inner diameter [mm]  peak radius [mm]  power in aperture\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string img = "profile_l" + std::to_string(r.l) + "_z" + detail::zname(r.z) + "m.pgm";
        write_pgm((std::filesystem::path(cfg.output) / img).string(), images[i]);
        out.row({std::to_string(r.l), detail::num(r.z), detail::num(1e3 * r.inner_diameter),
                 detail::num(1e3 * r.peak_radius), cfg.coupling_aperture ? detail::num(r.aperture_fraction) : "",
                 img});
        char line[160];
        std::snprintf(line, sizeof line, "%-5d %-8.3g %-20.4f %-17.4f %.4g\n", r.l, r.z, 1e3 * r.inner_diameter,
                      1e3 * r.peak_radius, r.aperture_fraction);
        log << line;
    }
    log << "wrote " << out.path() << " and " << rows.size() << " images\n";
    return rows;
}

struct MaskRow {
    int l = 0;
    ModeWeights weights;
    double ring_radius_px = 0.0;
    double levels_per_cycle = 0.0;
};

inline std::vector<MaskRow> run_mask(const RunConfig& cfg, std::ostream& log) {
    detail::ensure_output(cfg);
    detail::CsvFile out(cfg, "mask.csv", "mask");
    out.row({"l", "slit_diameter_px", "slit_radius_mm", "incident_waist_mm", "alpha2", "beta2", "ring_radius_px",
             "levels_per_cycle", "image"});
    std::vector<MaskRow> rows;
    const double half = 0.5 * std::min(cfg.slm_width, cfg.slm_height) - 1.0;
    for (int l : cfg.modes) {
        const SlitSpec spec{l, cfg.slit_diameter, {}};
        const auto mask = make_superposition_mask(spec, cfg.slm_width, cfg.slm_height, cfg.levels, cfg.pitch);
        MaskRow r;
        r.l = l;
        r.weights = mode_weights(spec, cfg.waist, cfg.pitch);
        // Phase-step smoothness on the intensity ring of the incident beam.
        r.ring_radius_px = std::min(half, std::max(0.5 * cfg.slit_diameter + 1.0,
                                                   std::sqrt(std::abs(l) / 2.0) * cfg.waist / cfg.pitch));
        r.levels_per_cycle = l != 0 ? levels_per_cycle(mask, spec, std::round(r.ring_radius_px)) : 0.0;
        const std::string img = "mask_l" + std::to_string(l) + ".pgm";
        write_pgm((std::filesystem::path(cfg.output) / img).string(), mask_image(mask));
        out.row({std::to_string(l), detail::num(cfg.slit_diameter), detail::num(0.5e3 * cfg.slit_diameter * cfg.pitch),
                 detail::num(1e3 * cfg.waist), detail::num(r.weights.alpha2), detail::num(r.weights.beta2),
                 detail::num(std::round(r.ring_radius_px)), detail::num(r.levels_per_cycle, 6), img});
        log << "l=" << l << ": alpha^2 = " << detail::num(r.weights.alpha2, 4)
            << ", beta^2 = " << detail::num(r.weights.beta2, 4) << ", " << detail::num(r.levels_per_cycle, 4)
            << " phase levels per 2pi at r = " << std::round(r.ring_radius_px) << " px\n";
        rows.push_back(r);
    }
    log << "note: the disk model gives alpha^2 = " << detail::num(rows.empty() ? 0.0 : rows.front().weights.alpha2, 3)
        << " for this slit and waist; delay commands use state.alpha2 = " << cfg.alpha2 << " as given\n";
    log << "wrote " << out.path() << "\n";
    return rows;
}

struct CouplingRow {
    int l = 0;
    double z = 0.0;
    DistinguishabilityRun run;
    std::optional<CollapseResult> collapse;
};

inline std::vector<CouplingRow> run_coupling(const RunConfig& cfg, std::ostream& log) {
    detail::ensure_output(cfg);
    const auto params = cfg.beam();
    std::vector<CouplingRow> rows;
    for (int l : cfg.modes) {
        if (l == 0) continue;
        for (double z : cfg.distances) rows.push_back({l, z, {}, std::nullopt});
    }
    parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
        auto& r = rows[i];
        r.run = simulate_distinguishability(params, r.l, r.z, cfg.fov_waist, cfg.coupling_aperture, cfg.leakage,
                                            cfg.photons, cfg.seed + i);
        r.collapse = collapse_state(cfg.two_mode(r.l), r.run.d, cfg.alpha2 * r.run.eta_gauss, r.z);
    });
    detail::CsvFile out(cfg, "coupling.csv", "coupling");
    out.row({"l", "z_m", "eta_gauss", "eta_twisted", "n_gauss", "n_lg", "D", "post_weight_0", "post_weight_l",
             "collapse_efficiency"});
    log << "l     z [m]   eta(G)     eta(LG)      N_G      N_LG   D\n";
    for (const auto& r : rows) {
        out.row({std::to_string(r.l), detail::num(r.z), detail::num(r.run.eta_gauss), detail::num(r.run.eta_twisted),
                 std::to_string(r.run.n_gauss), std::to_string(r.run.n_lg), detail::num(r.run.d),
                 detail::num(r.collapse->post_state.weight(0)), detail::num(r.collapse->post_state.weight(r.l)),
                 detail::num(r.collapse->efficiency)});
        char line[160];
        std::snprintf(line, sizeof line, "%-5d %-7.3g %-10.4g %-12.3g %-8ld %-6ld %.5f\n", r.l, r.z, r.run.eta_gauss,
                      r.run.eta_twisted, r.run.n_gauss, r.run.n_lg, r.run.d);
        log << line;
    }
    log << "wrote " << out.path() << "\n";
    return rows;
}

struct SensitivityRow {
    std::string knob;
    double value = 0.0;
    double z = 0.0;
    std::optional<double> tau_um;
    std::optional<double> reference_um;
    std::string status = "ok";
};

/// Delay of |sensitivity.l> at each distance while one regularization or
/// beam knob moves away from the configured baseline.
inline std::vector<SensitivityRow> run_sensitivity(const RunConfig& cfg, std::ostream& log) {
    detail::ensure_output(cfg);
    struct Case {
        std::string knob;
        double value;
        RegularizationConfig reg;
        double waist;
    };
    std::vector<Case> cases;
    for (double f : cfg.rmax_factors) {
        auto reg = cfg.reg;
        reg.r_max_factor = f;
        cases.push_back({"r_max_factor", f, reg, cfg.waist});
    }
    for (double z : cfg.z_mins) {
        auto reg = cfg.reg;
        reg.z_min = z;
        cases.push_back({"z_min_m", z, reg, cfg.waist});
    }
    for (double a : cfg.apertures) {
        auto reg = cfg.reg;
        reg.aperture = a;
        cases.push_back({"aperture_mm", 1e3 * a, reg, cfg.waist});
    }
    for (double w : cfg.waists) cases.push_back({"waist_mm", 1e3 * w, cfg.reg, w});

    // Identical settings are computed once.
    using Key = std::tuple<double, double, double, double>;
    auto key = [](const Case& c) {
        return Key{c.reg.r_max_factor, c.reg.z_min, c.reg.aperture.value_or(-1.0), c.waist};
    };
    std::map<Key, std::size_t> unique;
    std::vector<const Case*> work;
    for (const auto& c : cases)
        if (unique.emplace(key(c), work.size()).second) work.push_back(&c);
    std::vector<std::optional<DelayCurve>> curves(work.size());
    std::vector<std::string> errors(work.size());
    parallel_for(work.size(), cfg.threads, [&](std::size_t i) {
        try {
            curves[i] = delay_curves(BeamParams(cfg.wavelength, work[i]->waist), {cfg.sensitivity_l}, cfg.z_end,
                                     work[i]->reg, {}, 1)
                            .front();
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    std::vector<SensitivityRow> rows;
    detail::CsvFile out(cfg, "sensitivity.csv", "sensitivity",
                        {"l=" + std::to_string(cfg.sensitivity_l) + "; one knob varied per row, others at baseline"});
    out.row({"knob", "value", "z_m", "tau_um", "reference_um", "rel_dev", "status"});
    log << "knob            value      z [m]   tau [um]   reference [um]  status\n";
    for (const auto& c : cases) {
        const std::size_t i = unique.at(key(c));
        for (double z : cfg.distances) {
            SensitivityRow r{c.knob, c.value, z, {}, inset_delay(cfg.sensitivity_l, z), "ok"};
            if (curves[i]) r.tau_um = 1e6 * curves[i]->at(z);
            else r.status = "failed: " + errors[i];
            const std::string dev =
                r.tau_um && r.reference_um ? detail::num(*r.tau_um / *r.reference_um - 1.0, 4) : "";
            out.row({r.knob, detail::num(r.value), detail::num(z), r.tau_um ? detail::num(*r.tau_um) : "",
                     r.reference_um ? detail::num(*r.reference_um) : "", dev, r.status});
            char line[400];
            std::snprintf(line, sizeof line, "%-15s %-10.4g %-7.3g %-10s %-15s %s\n", r.knob.c_str(), r.value, z,
                          r.tau_um ? detail::num(*r.tau_um, 4).c_str() : "-",
                          r.reference_um ? detail::num(*r.reference_um, 4).c_str() : "-", r.status.c_str());
            log << line;
            rows.push_back(r);
        }
    }
    log << "wrote " << out.path() << "\n";
    return rows;
}

} // namespace oam
