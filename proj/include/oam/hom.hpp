#pragma once

// Hong-Ou-Mandel coincidence scans: synthetic dips, Gaussian-dip fitting and
// arrival-delay extraction, plus the two arrival-time hypotheses.
//
// Dip model: R(x) = R0 [1 - V exp(-(x - x0)^2 / (2 w^2))], w = c sigma_t.
// Positions and delays are optical path in um.

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oam/beam.hpp"
#include "oam/errors.hpp"
#include "oam/groupdelay.hpp"

namespace oam {

struct PhotonPair {
    double wavelength = 795e-9;  // m
    double duration = 160e-15;   // sigma_t, s
    double visibility = 0.9;

    static PhotonPair preset(int femtoseconds, double visibility = 0.9) {
        if (femtoseconds != 160 && femtoseconds != 400)
            throw DomainError("PhotonPair: presets are 160 fs and 400 fs");
        PhotonPair p{795e-9, femtoseconds * 1e-15, visibility};
        p.validate();
        return p;
    }

    void validate() const {
        if (!(duration > 0.0)) throw DomainError("PhotonPair: duration must be positive");
        if (!(visibility > 0.0 && visibility <= 1.0)) throw DomainError("PhotonPair: visibility must lie in (0, 1]");
    }

    /// Dip width c sigma_t in um.
    double width_um() const { return speed_of_light * duration * 1e6; }
};

struct PoissonNoise {
    double counts_per_point = 1000.0;  // expected baseline counts
    std::uint64_t seed = 1;
};

struct HOMScan {
    std::vector<double> positions;  // um
    std::vector<double> rates;      // normalized to the baseline
    std::vector<long> counts;       // empty when noiseless
    std::string noise = "none";
    std::optional<std::uint64_t> seed;
    double counts_per_point = 0.0;

    void validate() const {
        if (positions.size() != rates.size()) throw DomainError("HOMScan: positions and rates differ in length");
        if (!counts.empty() && counts.size() != rates.size())
            throw DomainError("HOMScan: counts and rates differ in length");
        for (std::size_t i = 1; i < positions.size(); ++i)
            if (!(positions[i] > positions[i - 1])) throw DomainError("HOMScan: positions must be strictly increasing");
        for (double r : rates)
            if (!(r >= 0.0)) throw DomainError("HOMScan: rates must be nonnegative");
    }
};

inline double dip_model(double x, double r0, double v, double x0, double w) {
    const double u = (x - x0) / w;
    return r0 * (1.0 - v * std::exp(-0.5 * u * u));
}

/// Uniform scan grid; the default +-150 um at 5 um covers the 160 fs dip.
inline std::vector<double> scan_grid(double lo = -150.0, double hi = 150.0, double step = 5.0) {
    if (!(hi > lo) || !(step > 0.0)) throw DomainError("scan_grid: need lo < hi and step > 0");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + step * i);
    return g;
}

/// Grid scaled with the pair duration: +-150 um in 5 um steps at 160 fs.
inline std::vector<double> default_scan_grid(const PhotonPair& pair) {
    pair.validate();
    const double f = std::round(pair.duration * 1e18) / 160e3;  // rounded to 1e-3 fs
    return scan_grid(-150.0 * f, 150.0 * f, 5.0 * f);
}

inline HOMScan coincidence_curve(const PhotonPair& pair, double true_delay, const std::vector<double>& grid,
                                 std::optional<PoissonNoise> noise = {}) {
    pair.validate();
    const double w = pair.width_um();
    if (grid.size() < 7) throw DomainError("coincidence_curve: need at least 7 scan positions");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("coincidence_curve: positions must be strictly increasing");
    if (grid.front() > true_delay - 2.0 * w || grid.back() < true_delay + 2.0 * w) {
        std::ostringstream msg;
        msg << "coincidence_curve: scan [" << grid.front() << ", " << grid.back() << "] um does not cover the dip at "
            << true_delay << " +- 2 c sigma_t = +-" << 2.0 * w << " um";
        throw DomainError(msg.str());
    }
    HOMScan s;
    s.positions = grid;
    for (double x : grid) s.rates.push_back(dip_model(x, 1.0, pair.visibility, true_delay, w));
    if (noise) {
        if (!(noise->counts_per_point > 0.0)) throw DomainError("coincidence_curve: counts per point must be positive");
        std::mt19937_64 rng(noise->seed);
        for (double& r : s.rates) {
            const long n = std::poisson_distribution<long>(noise->counts_per_point * r)(rng);
            s.counts.push_back(n);
            r = n / noise->counts_per_point;
        }
        s.noise = "poisson";
        s.seed = noise->seed;
        s.counts_per_point = noise->counts_per_point;
    }
    return s;
}

struct DipFit {
    double baseline = 0.0, visibility = 0.0, center = 0.0, width = 0.0;
    double sigma_baseline = 0.0, sigma_visibility = 0.0, sigma_center = 0.0, sigma_width = 0.0;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    double chi2 = 0.0;  // weighted residual sum of squares
    int dof = 0;
    int iterations = 0;
};

namespace detail {

struct DipFunctor : Eigen::DenseFunctor<double> {
    const HOMScan* scan;
    std::vector<double> sigma;

    DipFunctor(const HOMScan& s, std::vector<double> sig)
        : Eigen::DenseFunctor<double>(4, static_cast<int>(s.positions.size())), scan(&s), sigma(std::move(sig)) {}

    int operator()(const InputType& p, ValueType& fvec) const {
        for (std::size_t i = 0; i < scan->positions.size(); ++i)
            fvec(static_cast<Eigen::Index>(i)) =
                (dip_model(scan->positions[i], p(0), p(1), p(2), p(3)) - scan->rates[i]) / sigma[i];
        return 0;
    }

    int df(const InputType& p, JacobianType& jac) const {
        for (std::size_t i = 0; i < scan->positions.size(); ++i) {
            const double u = (scan->positions[i] - p(2)) / p(3);
            const double e = std::exp(-0.5 * u * u);
            const auto r = static_cast<Eigen::Index>(i);
            jac(r, 0) = (1.0 - p(1) * e) / sigma[i];
            jac(r, 1) = -p(0) * e / sigma[i];
            jac(r, 2) = -p(0) * p(1) * e * u / p(3) / sigma[i];
            jac(r, 3) = -p(0) * p(1) * e * u * u / p(3) / sigma[i];
        }
        return 0;
    }
};

} // namespace detail

/// Weighted least squares when counts are present (Poisson sigma), otherwise
/// unweighted with the covariance scaled by the residual variance.
inline DipFit fit_dip(const HOMScan& scan) {
    scan.validate();
    const std::size_t n = scan.positions.size();
    if (n < 7) throw FitError("fit_dip: need at least 7 points");
    std::vector<double> sorted = scan.rates;
    std::sort(sorted.begin(), sorted.end());
    const double base = sorted[n / 2];
    const auto imin = static_cast<std::size_t>(std::min_element(scan.rates.begin(), scan.rates.end()) - scan.rates.begin());
    const double depth = base - scan.rates[imin];
    if (!(base > 0.0) || !(depth > 0.0)) throw FitError("fit_dip: scan shows no dip contrast");

    // Initial width: half the span of points below the half-depth level.
    double lo = scan.positions[imin], hi = lo;
    for (std::size_t i = 0; i < n; ++i)
        if (scan.rates[i] < base - 0.5 * depth) {
            lo = std::min(lo, scan.positions[i]);
            hi = std::max(hi, scan.positions[i]);
        }
    const double step = (scan.positions.back() - scan.positions.front()) / (n - 1);
    const double w0 = std::max(0.5 * (hi - lo) / 1.1774, step);

    std::vector<double> sigma(n, 1.0);
    const bool weighted = !scan.counts.empty() && scan.counts_per_point > 0.0;
    if (weighted)
        for (std::size_t i = 0; i < n; ++i)
            sigma[i] = std::sqrt(std::max<double>(scan.counts[i], 1.0)) / scan.counts_per_point;

    detail::DipFunctor f(scan, sigma);
    Eigen::LevenbergMarquardt<detail::DipFunctor> lm(f);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    lm.setMaxfev(2000);
    Eigen::VectorXd p(4);
    p << base, depth / base, scan.positions[imin], w0;
    const auto status = lm.minimize(p);
    // Statuses 6-8 mean the tolerances cannot be met in floating point, which
    // for this well-conditioned model is convergence at rounding level.
    using namespace Eigen::LevenbergMarquardtSpace;
    const bool ok = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                    status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                    status == FtolTooSmall || status == XtolTooSmall || status == GtolTooSmall;
    if (!ok || !(p(3) > 0.0) || !p.allFinite()) {
        std::ostringstream msg;
        msg << "fit_dip: no convergence (status " << static_cast<int>(status) << ", " << lm.iterations()
            << " iterations, start center " << scan.positions[imin] << " um, width " << w0 << " um, ended at center "
            << p(2) << " width " << p(3) << ")";
        throw FitError(msg.str());
    }

    DipFit fit;
    fit.baseline = p(0);
    fit.visibility = p(1);
    fit.center = p(2);
    fit.width = p(3);
    fit.iterations = static_cast<int>(lm.iterations());
    fit.dof = static_cast<int>(n) - 4;
    Eigen::VectorXd resid(n);
    f(p, resid);
    fit.chi2 = resid.squaredNorm();
    Eigen::MatrixXd jac(n, 4);
    f.df(p, jac);
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    Eigen::Matrix4d cov = jtj.ldlt().solve(Eigen::Matrix4d::Identity());
    if (!weighted) cov *= fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
    fit.covariance = cov;
    fit.sigma_baseline = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.sigma_visibility = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.sigma_center = std::sqrt(std::max(0.0, cov(2, 2)));
    fit.sigma_width = std::sqrt(std::max(0.0, cov(3, 3)));
    return fit;
}

struct DelayShift {
    double value = 0.0;  // um
    double sigma = 0.0;  // um, from the two fit covariances
};

inline DelayShift arrival_delay_shift(const HOMScan& reference, const HOMScan& signal) {
    const auto a = fit_dip(reference), b = fit_dip(signal);
    return {b.center - a.center, std::hypot(a.sigma_center, b.sigma_center)};
}

enum class Hypothesis { collapsed_history, wavefunction_history };

inline const char* to_string(Hypothesis h) {
    return h == Hypothesis::collapsed_history ? "collapsed-history" : "wavefunction-history";
}

/// Predicted arrival delay in um. Curves are looked up by l, falling back to
/// -l (the delay does not depend on chirality).
inline double predict_delay(Hypothesis h, const SuperpositionState& state, double z,
                            const std::map<int, DelayCurve>& curves) {
    if (h == Hypothesis::collapsed_history) return 0.0;
    std::map<int, DelayCurve> both = curves;
    for (const auto& [l, c] : curves) both.emplace(-l, c);
    return 1e6 * superposition_delay(state, both, z);
}

/// One quoted arrival-time measurement: signal relative to reference.
struct ReferenceDelay {
    std::string panel;
    SuperpositionState reference;
    SuperpositionState signal;
    double z = 0.0;         // m
    double measured = 0.0;  // um
    double sigma = 0.0;     // um
};

inline std::vector<ReferenceDelay> measured_delays() {
    const double h = std::sqrt(0.5);
    const auto gauss = SuperpositionState::pure(0);
    auto two = [](double a, double b, int l) { return SuperpositionState::two_mode(a, b, l); };
    return {
        {"a", gauss, two(h, h, 12), 1.2, 4.93, 0.61},
        {"a", gauss, two(h, h, 12), 2.0, 7.51, 0.46},
        {"b", gauss, two(h, h, 6), 2.0, 3.76, 0.33},
        {"b", two(h, h, 6), two(h, h, 12), 2.0, 4.12, 0.56},
        {"c", gauss, two(h, h, 10), 2.0, 6.06, 0.36},
        {"c", gauss, two(std::sqrt(0.75), 0.5, 10), 2.0, 3.29, 0.51},
    };
}

inline std::string describe_state(const SuperpositionState& s) {
    std::ostringstream out;
    out << std::setprecision(6);
    bool first = true;
    for (const auto& t : s.terms()) {
        if (!first) out << " + ";
        out << std::abs(t.coeff) << "|" << t.l << ">";
        first = false;
    }
    return out.str();
}

inline void write_scan_csv(std::ostream& out, const HOMScan& scan, const std::vector<std::string>& header = {}) {
    for (const auto& h : header) out << "# " << h << "\n";
    if (scan.seed) out << "# seed=" << *scan.seed << "\n";
    if (!scan.counts.empty()) out << "# counts_per_point=" << scan.counts_per_point << "\n";
    out << (scan.counts.empty() ? "position_um,rate\n" : "position_um,rate,counts\n");
    out << std::setprecision(17);
    for (std::size_t i = 0; i < scan.positions.size(); ++i) {
        out << scan.positions[i] << ',' << scan.rates[i];
        if (!scan.counts.empty()) out << ',' << scan.counts[i];
        out << "\n";
    }
}

inline HOMScan read_scan_csv(std::istream& in, const std::string& name = "scan") {
    HOMScan s;
    std::string line;
    bool header_seen = false, with_counts = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# seed=", 0) == 0) s.seed = std::stoull(line.substr(7));
            if (line.rfind("# counts_per_point=", 0) == 0) s.counts_per_point = std::stod(line.substr(19));
            continue;
        }
        if (!header_seen) {
            if (line == "position_um,rate") {
            } else if (line == "position_um,rate,counts") {
                with_counts = true;
            } else {
                throw IoError(name + ":" + std::to_string(lineno) + ": expected header position_um,rate[,counts]");
            }
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string a, b, c;
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        try {
            s.positions.push_back(std::stod(a));
            s.rates.push_back(std::stod(b));
            if (with_counts) {
                if (!std::getline(row, c, ',')) throw std::invalid_argument("counts");
                s.counts.push_back(std::stol(c));
            }
        } catch (const std::exception&) {
            throw IoError(name + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
        }
    }
    if (!header_seen) throw IoError(name + ": missing header line");
    if (with_counts) s.noise = "poisson";
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw IoError(name + ": " + e.what());
    }
    return s;
}

inline void write_scan_csv(const std::string& path, const HOMScan& scan, const std::vector<std::string>& header = {}) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_scan_csv(out, scan, header);
    if (!out) throw IoError("write failed for " + path);
}

inline HOMScan read_scan_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_scan_csv(in, path);
}

} // namespace oam
