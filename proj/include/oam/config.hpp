#pragma once

// Run configuration: flat `key = value` lines grouped by `[section]`
// headers. `#` and `;` start comments. Keys given before any section header
// are accepted when their name is unique across sections.
//
// Lengths accept a unit suffix (nm, um, mm, cm, m); without one the key's
// wire unit applies (nm for wavelength, mm for waists and apertures, m for
// distances, um for scan positions). Durations accept fs or ps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "oam/beam.hpp"
#include "oam/errors.hpp"
#include "oam/groupdelay.hpp"
#include "oam/hologram.hpp"
#include "oam/hom.hpp"

namespace oam {

struct RunConfig {
    // [beam]
    double wavelength = 0.0;  // m, required
    double waist = 1.5e-3;    // m
    // [state]
    std::vector<int> modes{6, 10, 12};
    double alpha2 = 0.5;      // |0> weight of the two-mode superposition
    // [slit]
    double slit_diameter = 100.0;  // pixels
    double pitch = slm_pixel_pitch;
    int levels = 256;
    int slm_width = 1024, slm_height = 1024;
    // [distances]
    std::vector<double> distances{1.2, 2.0};  // m
    double z_end = 2.0;
    std::vector<double> profile_z{0.001, 0.5, 1.0, 2.0};
    // [regularization]
    RegularizationConfig reg;
    // [hom]
    int pair_fs = 160;
    double visibility = 0.9;
    double counts = 1000.0;   // expected baseline counts per point; 0 = noiseless
    std::optional<double> scan_min, scan_max, scan_step;  // um
    // [coupling]
    double fov_waist = 0.75e-3;
    std::optional<double> coupling_aperture = 0.75e-3;  // radius, m
    double leakage = 0.0;
    double photons = 1e5;
    // [profile]
    int pixels = 256;
    double field_of_view = 12e-3;  // image side length, m
    double threshold = 0.5;
    // [sensitivity]
    int sensitivity_l = 10;
    std::vector<double> rmax_factors{4, 8, 16, 32, 64, 128};
    std::vector<double> z_mins{0.5e-3, 1e-3, 2e-3};
    std::vector<double> apertures{3.5e-3};
    std::vector<double> waists{0.75e-3, 1.5e-3};
    // [run]
    std::uint64_t seed = 1;
    std::string output = "out";
    unsigned threads = 0;

    BeamParams beam() const { return BeamParams(wavelength, waist); }
    PhotonPair pair() const { return PhotonPair::preset(pair_fs, visibility); }

    std::vector<double> scan_positions() const {
        const auto p = pair();
        if (!scan_min && !scan_max && !scan_step) return default_scan_grid(p);
        const auto d = default_scan_grid(p);
        return scan_grid(scan_min.value_or(d.front()), scan_max.value_or(d.back()),
                         scan_step.value_or(d[1] - d[0]));
    }

    /// alpha|0> + beta|l> with the configured weights.
    SuperpositionState two_mode(int l) const {
        return SuperpositionState::two_mode(std::sqrt(alpha2), std::sqrt(1.0 - alpha2), l);
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

enum class Dim { none, length, duration };

struct Entry {
    std::string value;
    int line = 0;
};

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

    double number(const std::string& key, double current, Dim dim = Dim::none, double unit = 1.0) {
        if (!take(key)) return current;
        return parse_number(key, entries_.at(key).value, dim, unit);
    }

    int integer(const std::string& key, int current) {
        if (!take(key)) return current;
        return parse_int(key, entries_.at(key).value);
    }

    std::optional<double> optional_number(const std::string& key, std::optional<double> current, Dim dim,
                                          double unit) {
        if (!take(key)) return current;
        const auto& v = entries_.at(key).value;
        if (lower(v) == "none" || lower(v) == "off") return std::nullopt;
        return parse_number(key, v, dim, unit);
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> current, Dim dim = Dim::none,
                                double unit = 1.0) {
        if (!take(key)) return current;
        std::vector<double> out;
        for (const auto& item : split_list(entries_.at(key).value)) out.push_back(parse_number(key, item, dim, unit));
        if (out.empty()) fail(key, "empty list");
        return out;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> current) {
        if (!take(key)) return current;
        std::vector<int> out;
        for (const auto& item : split_list(entries_.at(key).value)) out.push_back(parse_int(key, item));
        if (out.empty()) fail(key, "empty list");
        return out;
    }

    std::string text(const std::string& key, std::string current) {
        if (!take(key)) return current;
        return entries_.at(key).value;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ParseError(key, line(key), what);
    }

    void check_all_used() const {
        for (const auto& [k, e] : entries_)
            if (!used_.count(k)) throw ParseError(k, e.line, "unknown key");
    }

private:
    bool take(const std::string& key) {
        if (!has(key)) return false;
        used_.insert(key);
        return true;
    }

    double parse_number(const std::string& key, const std::string& text, Dim dim, double unit) const {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &pos);
        } catch (const std::exception&) {
            fail(key, "expected a number, got '" + text + "'");
        }
        const std::string suffix = trim(std::string_view(text).substr(pos));
        if (!suffix.empty()) {
            static const std::map<std::string, double> lengths{
                {"nm", 1e-9}, {"um", 1e-6}, {"µm", 1e-6}, {"μm", 1e-6}, {"mm", 1e-3}, {"cm", 1e-2}, {"m", 1.0}};
            static const std::map<std::string, double> durations{{"fs", 1e-15}, {"ps", 1e-12}};
            const auto& table = dim == Dim::length ? lengths : durations;
            const auto it = table.find(suffix);
            if (dim == Dim::none || it == table.end()) fail(key, "unrecognized unit '" + suffix + "'");
            v *= it->second;
        } else {
            v *= unit;
        }
        if (!std::isfinite(v)) fail(key, "value must be finite");
        return v;
    }

    int parse_int(const std::string& key, const std::string& text) const {
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(text, &pos);
        } catch (const std::exception&) {
            fail(key, "expected an integer, got '" + text + "'");
        }
        if (pos != text.size()) fail(key, "expected an integer, got '" + text + "'");
        return static_cast<int>(v);
    }

    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "beam.wavelength", "beam.waist",
        "state.l", "state.alpha2",
        "slit.diameter", "slit.pitch", "slit.levels", "slit.width", "slit.height",
        "distances.z", "distances.z_end", "distances.profile",
        "regularization.z_min", "regularization.r_max_factor", "regularization.aperture",
        "regularization.log_until", "regularization.points_per_decade", "regularization.linear_step",
        "hom.pair", "hom.visibility", "hom.counts", "hom.scan_min", "hom.scan_max", "hom.scan_step",
        "coupling.fov_waist", "coupling.aperture", "coupling.leakage", "coupling.photons",
        "profile.pixels", "profile.field_of_view", "profile.threshold",
        "sensitivity.l", "sensitivity.r_max_factors", "sensitivity.z_mins", "sensitivity.apertures",
        "sensitivity.waists",
        "run.seed", "run.output", "run.threads"};
    return keys;
}

/// Qualifies a section-less key when exactly one section defines it.
inline std::optional<std::string> qualify(const std::string& bare) {
    std::optional<std::string> hit;
    for (const auto& k : known_keys())
        if (k.substr(k.find('.') + 1) == bare) {
            if (hit) return std::nullopt;
            hit = k;
        }
    return hit;
}

} // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using detail::Dim;
    std::map<std::string, detail::Entry> entries;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto cut = raw.find_first_of("#;");
        const std::string line = detail::trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("", lineno, "malformed section header '" + line + "'");
            section = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("", lineno, "expected 'key = value', got '" + line + "'");
        const std::string name = detail::lower(detail::trim(line.substr(0, eq)));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (name.empty()) throw ParseError("", lineno, "missing key name");
        std::string key = section.empty() ? name : section + "." + name;
        if (section.empty()) {
            const auto q = detail::qualify(name);
            if (!q) throw ParseError(name, lineno, "unknown or ambiguous key outside a section");
            key = *q;
        }
        if (value.empty()) throw ParseError(key, lineno, "missing value");
        if (entries.count(key)) throw ParseError(key, lineno, "duplicate key (first set on line " +
                                                                  std::to_string(entries[key].line) + ")");
        entries[key] = {value, lineno};
    }

    detail::ConfigReader r(std::move(entries));
    RunConfig c;
    if (!r.has("beam.wavelength")) throw ParseError("wavelength", 0, "missing required key");
    c.wavelength = r.number("beam.wavelength", 0.0, Dim::length, 1e-9);
    c.waist = r.number("beam.waist", c.waist, Dim::length, 1e-3);
    try {
        (void)c.beam();
    } catch (const DomainError& e) {
        r.fail(c.wavelength > 0.0 ? "beam.waist" : "beam.wavelength", e.what());
    }

    c.modes = r.integers("state.l", c.modes);
    c.alpha2 = r.number("state.alpha2", c.alpha2);
    if (!(c.alpha2 >= 0.0 && c.alpha2 <= 1.0)) r.fail("state.alpha2", "must lie in [0, 1]");
    for (int l : c.modes)
        if (std::abs(l) > 40) r.fail("state.l", "|l| above 40 is outside the supported range");

    c.slit_diameter = r.number("slit.diameter", c.slit_diameter);
    c.pitch = r.number("slit.pitch", c.pitch, Dim::length, 1e-6);
    c.levels = r.integer("slit.levels", c.levels);
    c.slm_width = r.integer("slit.width", c.slm_width);
    c.slm_height = r.integer("slit.height", c.slm_height);
    if (!(c.slit_diameter >= 0.0)) r.fail("slit.diameter", "must be >= 0");
    if (!(c.pitch > 0.0)) r.fail("slit.pitch", "must be positive");
    if (c.levels < 2) r.fail("slit.levels", "need at least 2 levels");
    if (c.slm_width <= 0 || c.slm_width > 8192) r.fail("slit.width", "must lie in [1, 8192]");
    if (c.slm_height <= 0 || c.slm_height > 8192) r.fail("slit.height", "must lie in [1, 8192]");
    if (c.slit_diameter > std::min(c.slm_width, c.slm_height)) r.fail("slit.diameter", "slit does not fit the SLM");

    c.distances = r.numbers("distances.z", c.distances, Dim::length);
    c.profile_z = r.numbers("distances.profile", c.profile_z, Dim::length);
    double far = 0.0;
    for (double z : c.distances) {
        if (!(z > 0.0)) r.fail("distances.z", "distances must be positive");
        far = std::max(far, z);
    }
    for (double z : c.profile_z)
        if (!(z > 0.0)) r.fail("distances.profile", "distances must be positive");
    c.z_end = r.number("distances.z_end", std::max(c.z_end, far), Dim::length);
    if (c.z_end < far) r.fail("distances.z_end", "must cover every distance in distances.z");

    c.reg.z_min = r.number("regularization.z_min", c.reg.z_min, Dim::length);
    c.reg.r_max_factor = r.number("regularization.r_max_factor", c.reg.r_max_factor);
    c.reg.aperture = r.optional_number("regularization.aperture", c.reg.aperture, Dim::length, 1e-3);
    c.reg.log_until = r.number("regularization.log_until", c.reg.log_until, Dim::length);
    c.reg.points_per_decade = r.integer("regularization.points_per_decade", c.reg.points_per_decade);
    c.reg.linear_step = r.number("regularization.linear_step", c.reg.linear_step, Dim::length);
    try {
        c.reg.validate();
    } catch (const DomainError& e) {
        r.fail("regularization", e.what());
    }
    if (!(c.reg.z_min < c.z_end)) r.fail("regularization.z_min", "must be below distances.z_end");

    const double pair_s = r.number("hom.pair", c.pair_fs * 1e-15, Dim::duration, 1e-15);
    c.pair_fs = static_cast<int>(std::lround(pair_s * 1e15));
    if (c.pair_fs != 160 && c.pair_fs != 400) r.fail("hom.pair", "presets are 160 fs and 400 fs");
    c.visibility = r.number("hom.visibility", c.visibility);
    if (!(c.visibility > 0.0 && c.visibility <= 1.0)) r.fail("hom.visibility", "must lie in (0, 1]");
    c.counts = r.number("hom.counts", c.counts);
    if (!(c.counts >= 0.0)) r.fail("hom.counts", "must be >= 0");
    c.scan_min = r.optional_number("hom.scan_min", c.scan_min, Dim::length, 1e-6);
    c.scan_max = r.optional_number("hom.scan_max", c.scan_max, Dim::length, 1e-6);
    c.scan_step = r.optional_number("hom.scan_step", c.scan_step, Dim::length, 1e-6);
    for (auto* v : {&c.scan_min, &c.scan_max, &c.scan_step})
        if (*v) **v *= 1e6;  // stored in um
    try {
        const auto g = c.scan_positions();
        if (g.size() < 7) r.fail("hom.scan_step", "scan needs at least 7 positions");
    } catch (const DomainError& e) {
        r.fail("hom.scan_step", e.what());
    }

    c.fov_waist = r.number("coupling.fov_waist", c.fov_waist, Dim::length, 1e-3);
    c.coupling_aperture = r.optional_number("coupling.aperture", c.coupling_aperture, Dim::length, 1e-3);
    c.leakage = r.number("coupling.leakage", c.leakage);
    c.photons = r.number("coupling.photons", c.photons);
    if (!(c.fov_waist > 0.0)) r.fail("coupling.fov_waist", "must be positive");
    if (c.coupling_aperture && !(*c.coupling_aperture > 0.0)) r.fail("coupling.aperture", "must be positive");
    if (!(c.leakage >= 0.0 && c.leakage <= 1.0)) r.fail("coupling.leakage", "must lie in [0, 1]");
    if (!(c.photons > 0.0)) r.fail("coupling.photons", "must be positive");

    c.pixels = r.integer("profile.pixels", c.pixels);
    c.field_of_view = r.number("profile.field_of_view", c.field_of_view, Dim::length, 1e-3);
    c.threshold = r.number("profile.threshold", c.threshold);
    if (c.pixels < 8 || c.pixels > 4096) r.fail("profile.pixels", "must lie in [8, 4096]");
    if (!(c.field_of_view > 0.0)) r.fail("profile.field_of_view", "must be positive");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) r.fail("profile.threshold", "must lie in (0, 1)");

    c.sensitivity_l = r.integer("sensitivity.l", c.sensitivity_l);
    if (c.sensitivity_l == 0) r.fail("sensitivity.l", "must be nonzero");
    c.rmax_factors = r.numbers("sensitivity.r_max_factors", c.rmax_factors);
    c.z_mins = r.numbers("sensitivity.z_mins", c.z_mins, Dim::length);
    c.apertures = r.numbers("sensitivity.apertures", c.apertures, Dim::length, 1e-3);
    c.waists = r.numbers("sensitivity.waists", c.waists, Dim::length, 1e-3);
    for (double f : c.rmax_factors)
        if (!(f > 1.0)) r.fail("sensitivity.r_max_factors", "factors must exceed 1");
    for (double z : c.z_mins)
        if (!(z > 0.0 && z < c.z_end)) r.fail("sensitivity.z_mins", "values must lie in (0, z_end)");
    for (double a : c.apertures)
        if (!(a > 0.0)) r.fail("sensitivity.apertures", "radii must be positive");
    for (double w : c.waists)
        if (!(w > 0.0)) r.fail("sensitivity.waists", "waists must be positive");

    if (r.has("run.seed")) {
        const std::string s = r.text("run.seed", "");
        try {
            std::size_t pos = 0;
            c.seed = std::stoull(s, &pos);
            if (pos != s.size() || s.front() == '-') throw std::invalid_argument(s);
        } catch (const std::exception&) {
            r.fail("run.seed", "expected a nonnegative integer, got '" + s + "'");
        }
    }
    c.output = r.text("run.output", c.output);
    const int threads = r.integer("run.threads", 0);
    if (threads < 0) r.fail("run.threads", "must be >= 0 (0 = all cores)");
    c.threads = static_cast<unsigned>(threads);

    r.check_all_used();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

template <class T>
std::string fmt_list(const std::vector<T>& v, double scale = 1.0) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i] * scale);
    return out;
}

} // namespace detail

/// Resolved configuration as `key = value` lines in wire units. run.threads
/// and run.output are omitted because they do not affect results.
inline std::vector<std::string> describe_config(const RunConfig& c) {
    using detail::fmt;
    using detail::fmt_list;
    auto opt = [](const std::optional<double>& v, double scale) { return v ? fmt(*v * scale) : std::string("none"); };
    return {
        "beam.wavelength = " + fmt(c.wavelength * 1e9) + " nm",
        "beam.waist = " + fmt(c.waist * 1e3) + " mm",
        "state.l = " + fmt_list(c.modes),
        "state.alpha2 = " + fmt(c.alpha2),
        "slit.diameter = " + fmt(c.slit_diameter) + " px",
        "slit.pitch = " + fmt(c.pitch * 1e6) + " um",
        "slit.levels = " + std::to_string(c.levels),
        "slit.width = " + std::to_string(c.slm_width),
        "slit.height = " + std::to_string(c.slm_height),
        "distances.z = " + fmt_list(c.distances) + " m",
        "distances.z_end = " + fmt(c.z_end) + " m",
        "distances.profile = " + fmt_list(c.profile_z) + " m",
        "regularization.z_min = " + fmt(c.reg.z_min) + " m",
        "regularization.r_max_factor = " + fmt(c.reg.r_max_factor),
        "regularization.aperture = " + opt(c.reg.aperture, 1e3) + (c.reg.aperture ? " mm" : ""),
        "regularization.log_until = " + fmt(c.reg.log_until) + " m",
        "regularization.points_per_decade = " + std::to_string(c.reg.points_per_decade),
        "regularization.linear_step = " + fmt(c.reg.linear_step) + " m",
        "hom.pair = " + std::to_string(c.pair_fs) + " fs",
        "hom.visibility = " + fmt(c.visibility),
        "hom.counts = " + fmt(c.counts),
        "hom.scan = " + fmt(c.scan_positions().front()) + " .. " + fmt(c.scan_positions().back()) + " um step " +
            fmt(c.scan_positions()[1] - c.scan_positions()[0]) + " um",
        "coupling.fov_waist = " + fmt(c.fov_waist * 1e3) + " mm",
        "coupling.aperture = " + opt(c.coupling_aperture, 1e3) + (c.coupling_aperture ? " mm" : ""),
        "coupling.leakage = " + fmt(c.leakage),
        "coupling.photons = " + fmt(c.photons),
        "profile.pixels = " + std::to_string(c.pixels),
        "profile.field_of_view = " + fmt(c.field_of_view * 1e3) + " mm",
        "profile.threshold = " + fmt(c.threshold),
        "sensitivity.l = " + std::to_string(c.sensitivity_l),
        "sensitivity.r_max_factors = " + fmt_list(c.rmax_factors),
        "sensitivity.z_mins = " + fmt_list(c.z_mins) + " m",
        "sensitivity.apertures = " + fmt_list(c.apertures, 1e3) + " mm",
        "sensitivity.waists = " + fmt_list(c.waists, 1e3) + " mm",
        "run.seed = " + std::to_string(c.seed),
        "regularization: " + c.reg.describe(),
    };
}

} // namespace oam
