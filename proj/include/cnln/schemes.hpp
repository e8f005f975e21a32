#pragma once

#include "cnln/network.hpp"
#include "cnln/parallel.hpp"
#include "cnln/phi.hpp"
#include "cnln/spectrum.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cnln {

/// Raised when an integration produces a non-finite temperature.
class numerical_blowup : public std::runtime_error {
public:
    numerical_blowup(std::size_t step, double t)
        : std::runtime_error("non-finite temperature after step " + std::to_string(step) +
                             " (t = " + std::to_string(t) + " s)"),
          step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

enum class Family { cn, ln, euler };

inline constexpr unsigned max_stages = 16;
/// Stage counts above this are accepted but flagged in experiment reports.
inline constexpr unsigned recommended_max_stages = 7;

/// Which scheme to run and how many stages per step.
///
/// cn with k stages repeats the constant-neighbour update k times with the
/// refreshed neighbour estimate. ln with k stages is one constant-neighbour
/// predictor followed by k - 1 linear-neighbour correctors, so ln1 and cn1
/// are the same method. Euler ignores k.
struct SchemeSpec {
    Family family = Family::cn;
    unsigned stages = 1;

    static SchemeSpec cn(unsigned k) { return {Family::cn, k}; }
    static SchemeSpec ln(unsigned k) { return {Family::ln, k}; }
    static SchemeSpec euler() { return {Family::euler, 1}; }

    unsigned stage_count() const noexcept { return family == Family::euler ? 1u : stages; }

    std::string id() const {
        switch (family) {
        case Family::cn: return "cn" + std::to_string(stages);
        case Family::ln: return "ln" + std::to_string(stages);
        case Family::euler: return "euler";
        }
        return {};
    }

    friend bool operator==(const SchemeSpec& a, const SchemeSpec& b) noexcept {
        if (a.family != b.family) return false;
        return a.family == Family::euler || a.stages == b.stages;
    }
};

/// Parses "euler", "cnK" or "lnK" with K in [1, 16].
inline SchemeSpec parse_scheme(std::string_view token) {
    if (token == "euler") return SchemeSpec::euler();
    auto bad = [&] {
        return std::invalid_argument("unknown scheme '" + std::string(token) +
                                     "' (expected euler, cnK or lnK with K in 1..16)");
    };
    if (token.size() < 3) throw bad();
    const std::string_view head = token.substr(0, 2);
    const std::string_view digits = token.substr(2);
    unsigned k = 0;
    for (char c : digits) {
        if (c < '0' || c > '9' || k > max_stages) throw bad();
        k = k * 10 + static_cast<unsigned>(c - '0');
    }
    if (k < 1 || k > max_stages || digits.front() == '0') throw bad();
    if (head == "cn") return SchemeSpec::cn(k);
    if (head == "ln") return SchemeSpec::ln(k);
    throw bad();
}

/// Per-cell exponential factors for one stepsize.
///
/// With z_i = m_ii h: E_i = e^z, P1_i = h phi1(z), P2_i = h^2 phi2(z). Then a
/// constant-neighbour stage is u E + a P1 and a linear-neighbour stage adds
/// s P2, where a is the neighbour drive and s its slope over the step.
struct StepPlan {
    double h = 0.0;
    std::vector<double> decay;  // E_i
    std::vector<double> p1;
    std::vector<double> p2;

    std::size_t size() const noexcept { return decay.size(); }
};

inline StepPlan make_plan(const CoefficientSet& coeffs, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("stepsize must be positive and finite");
    const std::size_t n = coeffs.size();
    StepPlan plan;
    plan.h = h;
    plan.decay.resize(n);
    plan.p1.resize(n);
    plan.p2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = coeffs.diagonal[i] * h;
        plan.decay[i] = std::exp(z);
        plan.p1[i] = h * phi1(z);
        plan.p2[i] = h * h * phi2(z);
    }
    return plan;
}

namespace detail {
inline void check_sizes(std::size_t n, std::initializer_list<std::size_t> sizes) {
    for (std::size_t s : sizes)
        if (s != n) throw std::invalid_argument("vector size does not match the cell count");
}
}  // namespace detail

/// One constant-neighbour stage: out_i = u_i E_i + a_i(w) P1_i with
/// a_i(w) = sum_j m_ij w_j + Q_i. Pinned cells copy u_start.
/// `out` must not alias the inputs.
inline void cn_stage(std::span<const double> u_start, std::span<const double> w, const StepPlan& plan,
                     const CoefficientSet& coeffs, std::span<const double> sources, std::span<double> out,
                     unsigned workers = 1) {
    const std::size_t n = coeffs.size();
    detail::check_sizes(n, {u_start.size(), w.size(), plan.size(), sources.size(), out.size()});
    parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            if (coeffs.pinned[i]) {
                out[i] = u_start[i];
                continue;
            }
            double a = 0.0;
            const std::size_t end = coeffs.row_start[i + 1];
            for (std::size_t k = coeffs.row_start[i]; k < end; ++k) a += coeffs.coupling[k] * w[coeffs.neighbour[k]];
            a += sources[i];
            out[i] = u_start[i] * plan.decay[i] + a * plan.p1[i];
        }
    });
}

inline std::vector<double> cn_stage(std::span<const double> u_start, std::span<const double> w,
                                    const StepPlan& plan, const CoefficientSet& coeffs,
                                    std::span<const double> sources, unsigned workers = 1) {
    std::vector<double> out(u_start.size());
    cn_stage(u_start, w, plan, coeffs, sources, out, workers);
    return out;
}

/// One linear-neighbour stage. The neighbours are assumed to move linearly
/// from u_start to w_pred over the step, with slope
/// s_i = sum_j m_ij (w_pred_j - u_start_j) / h (the sources cancel), giving
/// out_i = u_i E_i + a_i(u_start) P1_i + s_i P2_i. Pinned cells copy u_start.
inline void ln_stage(std::span<const double> u_start, std::span<const double> w_pred, const StepPlan& plan,
                     const CoefficientSet& coeffs, std::span<const double> sources, std::span<double> out,
                     unsigned workers = 1) {
    const std::size_t n = coeffs.size();
    detail::check_sizes(n, {u_start.size(), w_pred.size(), plan.size(), sources.size(), out.size()});
    const double inv_h = 1.0 / plan.h;
    parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            if (coeffs.pinned[i]) {
                out[i] = u_start[i];
                continue;
            }
            double a = 0.0;
            double d = 0.0;
            const std::size_t end = coeffs.row_start[i + 1];
            for (std::size_t k = coeffs.row_start[i]; k < end; ++k) {
                const std::size_t j = coeffs.neighbour[k];
                a += coeffs.coupling[k] * u_start[j];
                d += coeffs.coupling[k] * (w_pred[j] - u_start[j]);
            }
            a += sources[i];
            const double s = d * inv_h;
            out[i] = u_start[i] * plan.decay[i] + a * plan.p1[i] + s * plan.p2[i];
        }
    });
}

inline std::vector<double> ln_stage(std::span<const double> u_start, std::span<const double> w_pred,
                                    const StepPlan& plan, const CoefficientSet& coeffs,
                                    std::span<const double> sources, unsigned workers = 1) {
    std::vector<double> out(u_start.size());
    ln_stage(u_start, w_pred, plan, coeffs, sources, out, workers);
    return out;
}

/// Forward Euler: out = u + h (M u + Q) on unpinned cells.
inline void euler_stage(std::span<const double> u, double h, const CoefficientSet& coeffs,
                        std::span<const double> sources, std::span<double> out, unsigned workers = 1) {
    const std::size_t n = coeffs.size();
    detail::check_sizes(n, {u.size(), sources.size(), out.size()});
    parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            if (coeffs.pinned[i]) {
                out[i] = u[i];
                continue;
            }
            double du = coeffs.diagonal[i] * u[i];
            const std::size_t end = coeffs.row_start[i + 1];
            for (std::size_t k = coeffs.row_start[i]; k < end; ++k) du += coeffs.coupling[k] * u[coeffs.neighbour[k]];
            out[i] = u[i] + h * (du + sources[i]);
        }
    });
}

/// Advances a temperature vector by one step of a scheme, reusing scratch
/// buffers between calls.
class Stepper {
public:
    Stepper(const CoefficientSet& coeffs, std::span<const double> sources, SchemeSpec scheme,
            unsigned workers = 1)
        : coeffs_(&coeffs), sources_(sources), scheme_(scheme), workers_(workers),
          a_(coeffs.size()), b_(coeffs.size()) {
        if (scheme.family != Family::euler && (scheme.stages < 1 || scheme.stages > max_stages))
            throw std::invalid_argument("stage count must be in 1..16");
        detail::check_sizes(coeffs.size(), {sources.size()});
    }

    const SchemeSpec& scheme() const noexcept { return scheme_; }

    /// out <- one step from u. `out` may alias `u`.
    void advance(std::span<const double> u, const StepPlan& plan, std::span<double> out) {
        const CoefficientSet& c = *coeffs_;
        if (scheme_.family == Family::euler) {
            euler_stage(u, plan.h, c, sources_, a_, workers_);
        } else {
            // a_ holds the latest stage; the first stage sees w = u.
            cn_stage(u, u, plan, c, sources_, a_, workers_);
            for (unsigned k = 1; k < scheme_.stages; ++k) {
                if (scheme_.family == Family::cn)
                    cn_stage(u, a_, plan, c, sources_, b_, workers_);
                else
                    ln_stage(u, a_, plan, c, sources_, b_, workers_);
                std::swap(a_, b_);
            }
        }
        std::copy(a_.begin(), a_.end(), out.begin());
    }

private:
    const CoefficientSet* coeffs_;
    std::span<const double> sources_;
    SchemeSpec scheme_;
    unsigned workers_;
    std::vector<double> a_;
    std::vector<double> b_;
};

/// One full step of `scheme` from `state`; time advances by plan.h.
inline TemperatureState step(const TemperatureState& state, SchemeSpec scheme, const StepPlan& plan,
                             const CoefficientSet& coeffs, std::span<const double> sources,
                             unsigned workers = 1) {
    detail::check_sizes(coeffs.size(), {state.u.size()});
    Stepper stepper(coeffs, sources, scheme, workers);
    TemperatureState next{std::vector<double>(state.u.size()), state.t + plan.h};
    stepper.advance(state.u, plan, next.u);
    return next;
}

/// Number of steps needed to reach t_final with nominal stepsize h; the last
/// step is shortened so the run ends exactly at t_final.
inline std::size_t step_count(double h, double t_final) {
    const double q = t_final / h;
    const double n = std::ceil(q - 1e-12 * q);
    return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

struct IntegrateOptions {
    unsigned workers = 1;
    /// Called after every step with the new state.
    std::function<void(const TemperatureState&)> observer;
};

/// Integrates du/dt = M u + Q from t = 0 to t_final with nominal step h.
/// Throws numerical_blowup if a state stops being finite.
inline TemperatureState integrate(const CoefficientSet& coeffs, std::span<const double> sources,
                                  std::vector<double> u0, SchemeSpec scheme, double h, double t_final,
                                  const IntegrateOptions& options = {}) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("stepsize must be positive and finite");
    if (!(t_final > 0.0) || !std::isfinite(t_final))
        throw std::invalid_argument("final time must be positive and finite");
    detail::check_sizes(coeffs.size(), {u0.size(), sources.size()});

    const std::size_t n = step_count(h, t_final);
    const StepPlan plan = make_plan(coeffs, std::min(h, t_final));
    const double last = t_final - static_cast<double>(n - 1) * h;
    const bool last_differs =
        std::abs(last - plan.h) > 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n) * plan.h;
    const StepPlan last_plan = (n > 1 && last_differs) ? make_plan(coeffs, last) : StepPlan{};

    Stepper stepper(coeffs, sources, scheme, options.workers);
    TemperatureState state{std::move(u0), 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        const bool final_step = k + 1 == n;
        const StepPlan& p = (final_step && n > 1 && last_differs) ? last_plan : plan;
        stepper.advance(state.u, p, state.u);
        state.t = final_step ? t_final : static_cast<double>(k + 1) * h;
        if (!state.all_finite()) throw numerical_blowup(k + 1, state.t);
        if (options.observer) options.observer(state);
    }
    return state;
}

inline TemperatureState integrate(const CellNetwork& net, SchemeSpec scheme, double h, double t_final,
                                  const IntegrateOptions& options = {}) {
    const CoefficientSet coeffs = assemble(net);
    const std::vector<double> q = net.sources();
    return integrate(coeffs, q, net.initial_state(), scheme, h, t_final, options);
}

/// Largest stable forward-Euler stepsize, 2 / |lambda_m|. Infinite when the
/// spectrum is all zeros.
inline double euler_max_step(const Spectrum& spectrum) {
    if (spectrum.eigenvalues.empty()) throw std::invalid_argument("empty spectrum");
    if (spectrum.largest_magnitude == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 / spectrum.largest_magnitude;
}

/// Weight bracket of the second linear-neighbour stage,
/// (1 - e^{z1}) + (1 - e^{zj}) (phi1(z1) - 1), with z1 = m_11 h < 0 and
/// zj = m_jj h <= 0. Nonnegative on that domain, which is what makes LN2
/// a convex combination of the step-start values.
inline double ln2_weight_bracket(double z1, double zj) noexcept {
    return -std::expm1(z1) + (-std::expm1(zj)) * (phi1(z1) - 1.0);
}

}  // namespace cnln
