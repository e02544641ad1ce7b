#pragma once

// Reference implementations kept deliberately independent of the library
// code paths: extended precision where it matters, no shared helpers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

// 1 - tanh(x) via the algebraically equivalent 2 / (e^{2x} + 1), evaluated in
// long double so it can referee the library's double-precision result.
inline double one_minus_tanh(double x) {
    const long double e = expl(2.0L * static_cast<long double>(x));
    return static_cast<double>(2.0L / (e + 1.0L));
}

inline double mean(const std::vector<double>& v) {
    long double acc = 0.0L;
    for (double x : v) acc += x;
    return static_cast<double>(acc / static_cast<long double>(v.size()));
}

inline double pop_std(const std::vector<double>& v) {
    const long double m = mean(v);
    long double acc = 0.0L;
    for (double x : v) acc += (x - m) * (x - m);
    return static_cast<double>(sqrtl(acc / static_cast<long double>(v.size())));
}

// Central finite differences, one coordinate at a time.
inline std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double step = 1e-4) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double hi = f(x);
        x[i] = keep - step;
        const double lo = f(x);
        x[i] = keep;
        g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({1e-8, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) / scale;
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, rel_err(a[i], b[i]));
    return worst;
}

// Chi-square critical values at the 0.99 quantile, for frequency tests.
inline constexpr double kChi2_99_dof2 = 9.21034;

inline double chi2_stat(const std::vector<std::int64_t>& observed,
                        const std::vector<double>& expected) {
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = static_cast<double>(observed[i]) - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

}  // namespace oracle
