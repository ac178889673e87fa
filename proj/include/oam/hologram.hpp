#pragma once

// SLM phase masks for the twisted double slit, disk-partition mode weights,
// and grayscale diagnostics of radial fields.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oam/beam.hpp"
#include "oam/errors.hpp"
#include "oam/interp.hpp"

namespace oam {

inline constexpr double slm_pixel_pitch = 6.4e-6;  // m

struct PhaseMask {
    int width = 0, height = 0;
    double pitch = slm_pixel_pitch;
    int levels = 256;
    std::vector<double> phase;  // row-major, values in [0, 2 pi)

    double at(int x, int y) const { return phase[static_cast<std::size_t>(y) * width + x]; }
};

struct SlitSpec {
    int l = 0;
    double gaussian_slit_diameter = 100.0;  // pixels
    std::optional<std::pair<double, double>> center;  // pixel coordinates; image center if unset
};

struct GrayImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// mod(-l theta, 2 pi) in [0, 2 pi).
inline double helical_phase(int l, double theta) {
    const double tp = 2.0 * std::numbers::pi;
    double p = std::fmod(-l * theta, tp);
    if (p < 0.0) p += tp;
    return p >= tp ? 0.0 : p;
}

/// Rounds a phase to the nearest of `levels` equally spaced values in [0, 2 pi).
inline double quantize_phase(double phase, int levels) {
    const double tp = 2.0 * std::numbers::pi;
    const long q = std::lround(phase / tp * levels) % levels;
    return tp * static_cast<double>(q) / levels;
}

inline std::pair<double, double> mask_center(const SlitSpec& spec, int width, int height) {
    return spec.center.value_or(std::pair{0.5 * (width - 1), 0.5 * (height - 1)});
}

/// Flat phase 0 inside the slit disk (the |0> path), quantized helical phase
/// outside it.
inline PhaseMask make_superposition_mask(const SlitSpec& spec, int width, int height, int levels = 256,
                                         double pitch = slm_pixel_pitch) {
    if (width <= 0 || height <= 0) throw DomainError("mask: dimensions must be positive");
    if (levels < 2) throw DomainError("mask: need at least 2 phase levels");
    if (!(pitch > 0.0)) throw DomainError("mask: pixel pitch must be positive");
    if (!(spec.gaussian_slit_diameter >= 0.0)) throw DomainError("mask: slit diameter must be >= 0");
    const auto [cx, cy] = mask_center(spec, width, height);
    const double rad = 0.5 * spec.gaussian_slit_diameter;
    if (cx - rad < -0.5 || cy - rad < -0.5 || cx + rad > width - 0.5 || cy + rad > height - 0.5)
        throw DomainError("mask: slit disk does not fit inside the mask");
    PhaseMask m;
    m.width = width;
    m.height = height;
    m.pitch = pitch;
    m.levels = levels;
    m.phase.resize(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double dx = x - cx, dy = y - cy;
            double p = 0.0;
            if (dx * dx + dy * dy > rad * rad) p = quantize_phase(helical_phase(spec.l, std::atan2(dy, dx)), levels);
            m.phase[static_cast<std::size_t>(y) * width + x] = p;
        }
    return m;
}

struct ModeWeights {
    double alpha2 = 0.0;  // Gaussian (disk) path
    double beta2 = 0.0;   // helical path
};

/// Power of a Gaussian beam of waist w inside the slit radius R.
inline ModeWeights mode_weights(const SlitSpec& spec, double incident_waist, double pitch = slm_pixel_pitch) {
    if (!(incident_waist > 0.0)) throw DomainError("mode_weights: incident waist must be positive");
    if (!(spec.gaussian_slit_diameter >= 0.0)) throw DomainError("mode_weights: slit diameter must be >= 0");
    const double rad = 0.5 * spec.gaussian_slit_diameter * pitch;
    const double x = 2.0 * rad * rad / (incident_waist * incident_waist);
    ModeWeights w;
    w.beta2 = std::exp(-x);
    w.alpha2 = 1.0 - w.beta2;
    return w;
}

/// Distinct phase values among pixels whose centers lie within half a pixel
/// of `radius` (pixels) from the slit center.
inline std::size_t ring_phase_levels(const PhaseMask& mask, const SlitSpec& spec, double radius) {
    const auto [cx, cy] = mask_center(spec, mask.width, mask.height);
    std::set<double> seen;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (std::abs(std::hypot(x - cx, y - cy) - radius) < 0.5) seen.insert(mask.at(x, y));
    return seen.size();
}

/// Phase-step smoothness: distinct levels per 2 pi cycle on the ring.
inline double levels_per_cycle(const PhaseMask& mask, const SlitSpec& spec, double radius) {
    if (spec.l == 0) throw DomainError("levels_per_cycle: l must be nonzero");
    return static_cast<double>(ring_phase_levels(mask, spec, radius)) / std::abs(spec.l);
}

/// |amp|^2 on a pixel grid centered on the beam axis, scaled to 8 bits.
inline GrayImage render_intensity(const RadialField& field, int width, int height, double scale) {
    if (width <= 0 || height <= 0) throw DomainError("render_intensity: dimensions must be positive");
    if (!(scale > 0.0)) throw DomainError("render_intensity: scale must be positive");
    const auto inten = field.intensity();
    const CubicSpline<double> spline(field.grid, inten);
    const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
    std::vector<double> v(static_cast<std::size_t>(width) * height);
    double peak = 0.0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double r = scale * std::hypot(x - cx, y - cy);
            const double val = r <= field.r_max() ? std::max(0.0, spline(r)) : 0.0;
            v[static_cast<std::size_t>(y) * width + x] = val;
            peak = std::max(peak, val);
        }
    GrayImage img{width, height, std::vector<std::uint8_t>(v.size(), 0)};
    if (peak > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i)
            img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v[i] / peak));
    return img;
}

/// Phase 0..2 pi mapped linearly onto 0..255.
inline GrayImage mask_image(const PhaseMask& mask) {
    GrayImage img{mask.width, mask.height, std::vector<std::uint8_t>(mask.phase.size())};
    for (std::size_t i = 0; i < mask.phase.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(
            std::min(255L, std::lround(mask.phase[i] / (2.0 * std::numbers::pi) * 255.0)));
    return img;
}

/// Twice the smallest radius where the intensity first reaches
/// `threshold_fraction` of its peak (spline bisection between samples).
inline double inner_diameter(const RadialField& field, double threshold_fraction) {
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
        throw DomainError("inner_diameter: threshold fraction must lie in (0, 1)");
    const auto inten = field.intensity();
    const double peak = *std::max_element(inten.begin(), inten.end());
    if (!(peak > 0.0)) throw DomainError("inner_diameter: field has no intensity");
    const double level = threshold_fraction * peak;
    if (inten[0] >= level) return 0.0;
    for (std::size_t i = 1; i < inten.size(); ++i)
        if (inten[i] >= level) {
            const CubicSpline<double> spline(field.grid, inten);
            double lo = field.grid[i - 1], hi = field.grid[i];
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (spline(mid) >= level ? hi : lo) = mid;
            }
            return lo + hi;
        }
    throw DomainError("inner_diameter: threshold never reached");
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed for " + path);
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) throw IoError(path + ": not an 8-bit binary PGM");
    in.get();
    GrayImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw IoError(path + ": truncated PGM");
    return img;
}

} // namespace oam
