#pragma once

// Special functions: confluent hypergeometric 1F1 with complex argument,
// associated Laguerre polynomials, integer-order Bessel J.
//
// kummer_1f1 regimes (z complex, a and b real):
//   |z| <= 30   power series in double precision. When Re z < 0 the Kummer
//               transformation M(a,b,z) = e^z M(b-a,b,-z) is applied first so
//               that the series terms do not alternate on the real axis.
//   |z| >  30   (or when the series above loses too many digits to
//               cancellation) the two-sided asymptotic expansion
//                 M ~ G(b)/G(a) e^z z^(a-b) S1 + G(b)/G(b-a) (-z)^(-a) S2
//               truncated at its smallest term. The expansions terminate for
//               the half-integer-offset parameters produced by even OAM index.
//   fallback    power series in binary128 arithmetic (up to |z| = 80) when
//               neither route meets the tolerance; covers the band of
//               near-imaginary arguments around |z| ~ 15..45 where the double
//               series cancels and the asymptotic series has not yet
//               converged.
// Every route estimates its own rounding loss from the largest partial term;
// a result is only returned when that estimate is below `rel_tol`.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "oam/errors.hpp"

namespace oam {

using cplx = std::complex<double>;

struct KummerOptions {
    double rel_tol = 1e-12;
    int max_terms = 10000;
    double term_tol = 1e-15;
    // Judge the large-|z| expansion against the size of its two constituent
    // terms rather than their (possibly cancelling) sum. Appropriate when the
    // terms are physically separate waves, e.g. geometric and diffracted light.
    bool relative_to_terms = false;
};

namespace specfun_detail {

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

/// 1/Gamma(x), zero at the poles.
inline double rgamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

struct SeriesOut {
    cplx value;
    double loss;     // estimated relative rounding error
    bool converged;
    int terms;
};

inline SeriesOut taylor_double(double a, double b, cplx z, const KummerOptions& opt) {
    cplx term = 1.0, sum = 1.0;
    double maxabs = 1.0;
    int n = 0;
    bool done = false;
    for (; n < opt.max_terms; ++n) {
        term *= (a + n) / (b + n) * z / double(n + 1);
        sum += term;
        const double at = std::abs(term);
        maxabs = std::max(maxabs, at);
        if (at == 0.0) { done = true; break; }  // a is a nonpositive integer
        if (n + 1 > std::abs(z) && at <= opt.term_tol * std::abs(sum)) { done = true; break; }
    }
    const double s = std::abs(sum);
    const double loss = s > 0 ? maxabs / s * std::numeric_limits<double>::epsilon() * 4.0 : 1.0;
    return {sum, loss, done, n};
}

// Minimal complex type over binary128; only the operations the series needs.
struct Q {
    __float128 re, im;
};
inline Q qmul(Q x, Q y) { return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re}; }
inline Q qadd(Q x, Q y) { return {x.re + y.re, x.im + y.im}; }
inline Q qscale(Q x, __float128 s) { return {x.re * s, x.im * s}; }
inline __float128 qabs2(Q x) { return x.re * x.re + x.im * x.im; }

inline SeriesOut taylor_quad(double a, double b, cplx z, const KummerOptions& opt) {
    const Q zq{z.real(), z.imag()};
    Q term{1, 0}, sum{1, 0};
    __float128 max2 = 1;
    int n = 0;
    bool done = false;
    const __float128 tol2 = __float128(opt.term_tol) * opt.term_tol * __float128(1e-8);
    for (; n < opt.max_terms; ++n) {
        const __float128 ratio = (__float128(a) + n) / ((__float128(b) + n) * (n + 1));
        term = qscale(qmul(term, zq), ratio);
        sum = qadd(sum, term);
        const __float128 t2 = qabs2(term);
        if (t2 > max2) max2 = t2;
        if (t2 == 0) { done = true; break; }
        if (n + 1 > std::abs(z) && t2 <= tol2 * qabs2(sum)) { done = true; break; }
    }
    const double s2 = double(qabs2(sum));
    const double ratio = s2 > 0 ? std::sqrt(double(max2) / s2) : 1e300;
    // binary128 unit roundoff is 2^-113.
    const double loss = ratio * 1.0e-34 * 4.0;
    return {cplx(double(sum.re), double(sum.im)), loss, done, n};
}

/// Asymptotic series sum_n (p)_n (q)_n / n! w^-n, stopped at the smallest term.
inline SeriesOut asymptotic_sum(double p, double q, cplx w, const KummerOptions& opt) {
    cplx term = 1.0, sum = 1.0;
    double prev = 1.0, maxabs = 1.0;
    int n = 0;
    const cplx winv = 1.0 / w;
    for (; n < opt.max_terms; ++n) {
        const cplx next = term * ((p + n) * (q + n) / double(n + 1)) * winv;
        const double an = std::abs(next);
        if (an == 0.0) return {sum, maxabs / std::max(std::abs(sum), 1e-300) * 4e-16, true, n};
        if (an > prev) break;  // divergent tail starts
        term = next;
        sum += term;
        prev = an;
        maxabs = std::max(maxabs, an);
        if (an <= opt.term_tol * std::abs(sum)) break;
    }
    const double s = std::abs(sum);
    const bool converged = prev <= opt.rel_tol * 0.1 * s;
    return {sum, maxabs / std::max(s, 1e-300) * 4e-16 + prev / std::max(s, 1e-300), converged, n};
}

struct AsymOut {
    cplx value;
    double loss;
    bool converged;
    double term_loss = 0.0;  // error relative to |t1| + |t2|
};

inline AsymOut asymptotic(double a, double b, cplx z, const KummerOptions& opt) {
    const double gb = std::tgamma(b);
    cplx t1 = 0.0, t2 = 0.0;
    double loss1 = 0.0, loss2 = 0.0;
    bool ok = true;
    const double ra = rgamma(a), rba = rgamma(b - a);
    const bool real_axis = z.imag() == 0.0;
    bool t1_underflow = false;
    if (ra != 0.0) {
        // Modulus and phase of e^z z^(a-b) are formed separately so that a
        // large Im z is never rounded after adding the logarithmic phase.
        const double log_mod = z.real() + (a - b) * std::log(std::abs(z));
        if (log_mod > 700.0) throw DomainError("kummer_1f1: result overflows double precision");
        if (log_mod > -745.0) {
            auto s1 = asymptotic_sum(b - a, 1.0 - a, z, opt);
            const cplx phase = std::polar(1.0, z.imag()) * std::polar(1.0, (a - b) * std::arg(z));
            t1 = gb * ra * std::exp(log_mod) * phase * s1.value;
            loss1 = s1.loss;
            ok = ok && s1.converged;
        } else {
            t1_underflow = true;
        }
    }
    if (rba != 0.0) {
        // Principal branch of (-z)^(-a): e^{+i pi a} z^{-a} for Im z > 0 and
        // e^{-i pi a} z^{-a} for Im z < 0. On the positive real axis the two
        // continuations are averaged, which is the real Stokes value.
        cplx pw;
        if (real_axis && z.real() > 0.0)
            pw = std::pow(z.real(), -a) * std::cos(std::numbers::pi * a);
        else
            pw = std::exp(-a * std::log(-z));
        auto s2 = asymptotic_sum(a, 1.0 + a - b, -z, opt);
        t2 = gb * rba * pw * s2.value;
        loss2 = s2.loss;
        ok = ok && s2.converged;
    }
    cplx sum = t1 + t2;
    if (real_axis) sum = sum.real();
    const double s = std::abs(sum);
    if (s == 0.0 && t1_underflow && rba == 0.0) return {0.0, 0.0, true};  // e^z-type value below DBL_MIN
    const double abs_err = std::abs(t1) * (loss1 + 4e-16) + std::abs(t2) * (loss2 + 4e-16);
    const double loss = s > 0 ? abs_err / s : 1.0;
    const double parts = std::abs(t1) + std::abs(t2);
    return {sum, loss, ok, parts > 0 ? abs_err / parts : 1.0};
}

} // namespace specfun_detail

/// Confluent hypergeometric function 1F1(a; b; z) (Kummer's M) for real a, b
/// and complex z. Throws DomainError when b is a nonpositive integer or the
/// value overflows, ConvergenceError when no regime reaches opt.rel_tol.
inline cplx kummer_1f1(double a, double b, cplx z, const KummerOptions& opt = {}) {
    using namespace specfun_detail;
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("kummer_1f1: non-finite argument");
    if (is_nonpositive_integer(b)) throw DomainError("kummer_1f1: b must not be a nonpositive integer");
    if (z == cplx(0.0)) return 1.0;

    const double az = std::abs(z);
    std::ostringstream diag;
    auto finish = [&](cplx v) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw DomainError("kummer_1f1: result overflows double precision");
        return v;
    };

    // Polynomial case is exact in the plain series.
    if (is_nonpositive_integer(a)) {
        auto s = taylor_double(a, b, z, opt);
        if (s.loss <= opt.rel_tol) return finish(s.value);
        auto q = taylor_quad(a, b, z, opt);
        if (q.loss <= opt.rel_tol) return finish(q.value);
        throw ConvergenceError("kummer_1f1: polynomial case lost precision");
    }

    const bool flip = z.real() < 0.0;
    const double ap = flip ? b - a : a;
    const cplx zp = flip ? -z : z;
    auto undo = [&](cplx v) { return flip ? std::exp(z) * v : v; };

    if (az <= 30.0) {
        auto s = taylor_double(ap, b, zp, opt);
        if (s.converged && s.loss <= opt.rel_tol) return finish(undo(s.value));
        diag << "series(double): terms=" << s.terms << " loss=" << s.loss << "; ";
    }
    if (az >= 8.0) {
        auto as = asymptotic(a, b, z, opt);
        if (as.converged && (as.loss <= opt.rel_tol || (opt.relative_to_terms && as.term_loss <= opt.rel_tol)))
            return finish(as.value);
        diag << "asymptotic: value=" << as.value << " loss=" << as.loss << "; ";
    }
    if (az <= 80.0) {
        auto q = taylor_quad(ap, b, zp, opt);
        if (q.converged && q.loss <= opt.rel_tol) return finish(undo(q.value));
        diag << "series(binary128): terms=" << q.terms << " loss=" << q.loss << " partial=" << undo(q.value);
    }
    std::ostringstream msg;
    msg << "kummer_1f1(" << a << ", " << b << ", " << z << ") did not converge: " << diag.str();
    throw ConvergenceError(msg.str());
}

/// Associated Laguerre polynomial L_p^l(x) by the three-term recurrence.
inline double assoc_laguerre(unsigned p, unsigned l, double x) {
    double prev = 1.0;
    if (p == 0) return prev;
    double cur = 1.0 + l - x;
    for (unsigned k = 1; k < p; ++k) {
        const double next = ((2.0 * k + 1.0 + l - x) * cur - (k + l) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

namespace detail {

/// Hankel's large-argument expansion for J0 and J1 (x >= 25), sharing one sincos.
inline void bessel_j01_asymptotic(double x, double& j0, double& j1) {
    const double inv8x = 1.0 / (8.0 * x);
    double pq[2][2];  // [order][P, Q]
    for (int nu = 0; nu < 2; ++nu) {
        const double mu = 4.0 * nu * nu;
        double p = 1.0, q = 0.0, term = 1.0;
        for (int k = 1; k < 60; ++k) {
            term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) * inv8x / k;
            if (k % 2 == 1) q += (k % 4 == 1 ? term : -term);
            else p += (k % 4 == 2 ? -term : term);
            if (std::abs(term) < 1e-17) break;
        }
        pq[nu][0] = p;
        pq[nu][1] = q;
    }
    // chi_nu = x - (2 nu + 1) pi / 4; chi_1 = chi_0 - pi/2.
    const double c0 = std::cos(x - 0.25 * std::numbers::pi), s0 = std::sin(x - 0.25 * std::numbers::pi);
    const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
    j0 = amp * (pq[0][0] * c0 - pq[0][1] * s0);
    j1 = amp * (pq[1][0] * s0 + pq[1][1] * c0);  // cos(chi-pi/2)=sin chi, sin(chi-pi/2)=-cos chi
}

} // namespace detail

/// Bessel J_n(x) for integer n.
///
/// x >= 25 and x > n: Hankel asymptotic J0, J1 then upward recurrence (stable
/// in the oscillatory region). Otherwise Miller's downward recurrence
/// normalised with J0 + 2 sum J_2k = 1. Absolute accuracy is ~1e-15 for
/// |n| <= 14; relative accuracy ~1e-13 away from the zeros of J_n.
inline double bessel_j(int n, double x) {
    const int sign_n = (n < 0 && (n % 2) != 0) ? -1 : 1;
    n = std::abs(n);
    double sign = sign_n;
    if (x < 0.0) {
        x = -x;
        if (n % 2 != 0) sign = -sign;
    }
    if (x == 0.0) return n == 0 ? sign : 0.0;

    if (x >= 25.0 && x > n) {
        double jm, j;
        detail::bessel_j01_asymptotic(x, jm, j);
        if (n == 0) return sign * jm;
        for (int k = 1; k < n; ++k) {
            const double jp = 2.0 * k / x * j - jm;
            jm = j;
            j = jp;
        }
        return sign * j;
    }

    const double top = std::max<double>(n, x);
    const int start = 2 * ((static_cast<int>(top) + 20 + static_cast<int>(std::sqrt(60.0 * top))) / 2);
    double jp = 0.0, j = 1.0, result = 0.0, norm = 0.0;
    bool even = false;
    for (int k = start; k > 0; --k) {
        const double jm = 2.0 * k / x * j - jp;
        jp = j;
        j = jm;
        if (std::abs(j) > 1e250) {  // rescale to avoid overflow
            j *= 1e-250;
            jp *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        if (even) norm += j;
        even = !even;
        if (k - 1 == n) result = j;
    }
    norm = 2.0 * norm - j;
    return sign * (n == 0 ? j : result) / norm;
}

} // namespace oam
