#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cnln {

namespace detail {
inline void check_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("metric inputs have different lengths");
}
}  // namespace detail

/// MaxD: max_i |ref_i - num_i|.
inline double max_d(std::span<const double> ref, std::span<const double> num) {
    detail::check_same_length(ref.size(), num.size());
    double m = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = std::abs(ref[i] - num[i]);
        if (std::isnan(d)) return d;
        m = std::max(m, d);
    }
    return m;
}

/// SumD: sum_i |ref_i - num_i|.
inline double sum_d(std::span<const double> ref, std::span<const double> num) {
    detail::check_same_length(ref.size(), num.size());
    double s = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) s += std::abs(ref[i] - num[i]);
    return s;
}

/// SEnD: sum_i C_i |ref_i - num_i|, the deviation measured in energy.
inline double s_en_d(std::span<const double> ref, std::span<const double> num, std::span<const double> capacities) {
    detail::check_same_length(ref.size(), num.size());
    detail::check_same_length(ref.size(), capacities.size());
    double s = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) s += capacities[i] * std::abs(ref[i] - num[i]);
    return s;
}

/// Error of one run against a reference.
struct ErrorReport {
    std::string scheme;  // e.g. "ln3", "euler"
    unsigned stages = 1;
    double h = 0.0;
    std::size_t cells = 0;
    double max_d = 0.0;
    double sum_d = 0.0;
    double s_en_d = 0.0;
    double sum_dn = 0.0;   // sum_d / sqrt(N)
    double s_en_dn = 0.0;  // s_en_d / sqrt(N)
};

/// Fills the sqrt(N)-normalized fields from the raw sums. Call it once per
/// report; the normalized fields are derived, never fed back in.
inline ErrorReport normalize(ErrorReport r) {
    const double root = std::sqrt(static_cast<double>(r.cells));
    r.sum_dn = r.sum_d / root;
    r.s_en_dn = r.s_en_d / root;
    return r;
}

inline ErrorReport make_report(std::string scheme, unsigned stages, double h, std::span<const double> ref,
                               std::span<const double> num, std::span<const double> capacities) {
    ErrorReport r;
    r.scheme = std::move(scheme);
    r.stages = stages;
    r.h = h;
    r.cells = ref.size();
    r.max_d = max_d(ref, num);
    r.sum_d = sum_d(ref, num);
    r.s_en_d = s_en_d(ref, num, capacities);
    return normalize(std::move(r));
}

/// Report for a run that did not produce a usable state.
inline ErrorReport diverged_report(std::string scheme, unsigned stages, double h, std::size_t cells) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {std::move(scheme), stages, h, cells, inf, inf, inf, inf, inf};
}

inline constexpr const char* report_csv_header = "scheme,k,h,N,max_d,sum_d,s_en_d,sum_dn,s_en_dn";

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Inverse of format_double.
inline double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

/// One CSV row in the column order of report_csv_header.
inline std::string to_csv_row(const ErrorReport& r) {
    std::string row = r.scheme;
    row += ',' + std::to_string(r.stages);
    row += ',' + format_double(r.h);
    row += ',' + std::to_string(r.cells);
    for (double v : {r.max_d, r.sum_d, r.s_en_d, r.sum_dn, r.s_en_dn}) row += ',' + format_double(v);
    return row;
}

/// A point of an error-versus-stepsize curve.
struct OrderPoint {
    double h;
    double error;
};

/// Least-squares slope of log(error) against log(h).
///
/// Needs at least three points with strictly decreasing h and positive
/// errors. Points on the spatial-error plateau must be removed first (see
/// trim_plateau), otherwise the slope is biased low.
inline double fit_order(std::span<const OrderPoint> points) {
    if (points.size() < 3) throw std::invalid_argument("order fit needs at least 3 points");
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (!(points[k].error > 0.0) || !std::isfinite(points[k].error))
            throw std::invalid_argument("order fit needs positive finite errors (plateau contamination?)");
        if (!(points[k].h > 0.0)) throw std::invalid_argument("order fit needs positive stepsizes");
        if (k > 0 && !(points[k].h < points[k - 1].h))
            throw std::invalid_argument("order fit needs strictly decreasing stepsizes");
    }
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        sx += std::log(p.h);
        sy += std::log(p.error);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double dx = std::log(p.h) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.error) - my);
    }
    return sxy / sxx;
}

/// Keeps the points whose error is at least `factor` times the plateau.
inline std::vector<OrderPoint> trim_plateau(std::span<const OrderPoint> points, double plateau,
                                            double factor = 10.0) {
    std::vector<OrderPoint> kept;
    for (const auto& p : points)
        if (p.error >= factor * plateau) kept.push_back(p);
    return kept;
}

}  // namespace cnln
