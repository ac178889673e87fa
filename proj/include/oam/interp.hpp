#pragma once

#include <algorithm>
#include <complex>
#include <span>
#include <vector>

#include "oam/errors.hpp"

namespace oam {

/// Natural cubic spline through (x_i, y_i) on a strictly increasing grid.
/// Zero outside [x_0, x_n].
template <class T>
class CubicSpline {
public:
    CubicSpline(std::span<const double> x, std::span<const T> y) : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw DomainError("CubicSpline: need matching samples (n >= 2)");
        m_.assign(n, T{});
        if (n == 2) return;
        // Tridiagonal system for second derivatives (Thomas algorithm).
        std::vector<double> c(n, 0.0);
        std::vector<T> d(n, T{});
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
            const T rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
            const double denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = d[i] - c[i] * m_[i + 1];
            if (i == 1) break;
        }
    }

    T operator()(double t) const {
        if (t < x_.front() || t > x_.back()) return T{};
        std::size_t i = std::upper_bound(x_.begin(), x_.end(), t) - x_.begin();
        i = std::clamp<std::size_t>(i, 1, x_.size() - 1);
        const double h = x_[i] - x_[i - 1];
        const double a = (x_[i] - t) / h, b = (t - x_[i - 1]) / h;
        return a * y_[i - 1] + b * y_[i] + ((a * a * a - a) * m_[i - 1] + (b * b * b - b) * m_[i]) * (h * h / 6.0);
    }

private:
    std::vector<double> x_;
    std::vector<T> y_;
    std::vector<T> m_;
};

} // namespace oam
