#pragma once

#include "cnln/network.hpp"
#include "cnln/phi.hpp"
#include "cnln/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnln {

/// Dense reference computations are limited to this many unpinned cells.
inline constexpr std::size_t dense_cell_limit = 6000;

class reference_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The adaptive oracle ran out of steps before reaching the target time.
class oracle_budget_exceeded : public reference_error {
public:
    using reference_error::reference_error;
};

/// Closed-form solution of the sine-line problem:
/// u(x, t) = 10 sin(x) e^{-t} + 77 sin(2x) e^{-4t}.
inline double analytic_sine(double x, double t) {
    return 10.0 * std::sin(x) * std::exp(-t) + 77.0 * std::sin(2.0 * x) * std::exp(-4.0 * t);
}

namespace detail {

/// The unpinned part of a network in symmetric form.
///
/// With D = diag(C) the coupling matrix is M = D^{-1} L for a symmetric L,
/// so S = D^{1/2} M D^{-1/2} is symmetric with the same eigenvalues:
/// S_ij = 1 / (R_ij sqrt(C_i C_j)), S_ii = m_ii. Pinned cells are removed
/// and their constant pull is folded into an effective source.
struct FreeSystem {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::vector<std::size_t> cells;     // free position -> cell index
    std::vector<std::size_t> position;  // cell index -> free position or npos
    std::vector<double> sqrt_capacity;  // per free position
    std::vector<double> diagonal;       // m_ii per free position
    struct Link { std::size_t a, b; double s; };
    std::vector<Link> links;            // off-diagonal S entries, a < b
    std::vector<double> pinned_drive;   // sum_j m_ij p_j over pinned neighbours
    std::size_t bandwidth = 0;
    std::size_t zero_modes = 0;         // free components without a pinned neighbour

    std::size_t size() const noexcept { return cells.size(); }

    explicit FreeSystem(const CellNetwork& net) {
        validate(net);
        const std::size_t n = net.size();
        position.assign(n, npos);
        for (std::size_t i = 0; i < n; ++i) {
            if (net.cells[i].is_pinned()) continue;
            position[i] = cells.size();
            cells.push_back(i);
        }
        const std::size_t m = cells.size();
        sqrt_capacity.resize(m);
        for (std::size_t a = 0; a < m; ++a) sqrt_capacity[a] = std::sqrt(net.cells[cells[a]].capacity);
        diagonal.assign(m, 0.0);
        pinned_drive.assign(m, 0.0);

        std::vector<std::size_t> parent(m);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::vector<std::uint8_t> grounded(m, 0);

        // Accumulate m_ii in the same per-edge order as a row sum; the exact
        // rounding of the diagonal is irrelevant at reference accuracy.
        for (const Edge& e : net.edges) {
            const std::size_t pi = position[e.i];
            const std::size_t pj = position[e.j];
            if (pi != npos) diagonal[pi] -= 1.0 / (e.resistance * net.cells[e.i].capacity);
            if (pj != npos) diagonal[pj] -= 1.0 / (e.resistance * net.cells[e.j].capacity);
            if (pi != npos && pj != npos) {
                links.push_back({std::min(pi, pj), std::max(pi, pj),
                                 1.0 / (e.resistance * sqrt_capacity[pi] * sqrt_capacity[pj])});
                bandwidth = std::max(bandwidth, pi > pj ? pi - pj : pj - pi);
                parent[find(pi)] = find(pj);
            } else if (pi != npos) {
                pinned_drive[pi] += *net.cells[e.j].pinned / (e.resistance * net.cells[e.i].capacity);
                grounded[pi] = 1;
            } else if (pj != npos) {
                pinned_drive[pj] += *net.cells[e.i].pinned / (e.resistance * net.cells[e.j].capacity);
                grounded[pj] = 1;
            }
        }
        std::vector<std::uint8_t> root_grounded(m, 0);
        for (std::size_t a = 0; a < m; ++a)
            if (grounded[a]) root_grounded[find(a)] = 1;
        for (std::size_t a = 0; a < m; ++a)
            if (find(a) == a && !root_grounded[a]) ++zero_modes;
    }

    /// Dense copy of S.
    Eigen::MatrixXd dense() const {
        const auto m = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index a = 0; a < m; ++a) s(a, a) = diagonal[static_cast<std::size_t>(a)];
        for (const Link& l : links) {
            const auto a = static_cast<Eigen::Index>(l.a);
            const auto b = static_cast<Eigen::Index>(l.b);
            s(b, a) += l.s;
            s(a, b) += l.s;
        }
        return s;
    }

    /// Lower band storage of S, column-major, leading dimension kd + 1.
    std::vector<double> band() const {
        const std::size_t m = size();
        const std::size_t ld = bandwidth + 1;
        std::vector<double> ab(ld * m, 0.0);
        for (std::size_t a = 0; a < m; ++a) ab[a * ld] = diagonal[a];
        for (const Link& l : links) ab[(l.b - l.a) + l.a * ld] += l.s;
        return ab;
    }
};

inline void check_dense_size(std::size_t n) {
    if (n > dense_cell_limit)
        throw reference_error("network has " + std::to_string(n) + " unpinned cells; dense reference limit is " +
                              std::to_string(dense_cell_limit));
}

}  // namespace detail

/// Eigenvalues of the coupling matrix over the unpinned cells.
///
/// Zero eigenvalues are identified structurally: there is exactly one per
/// connected group of unpinned cells that has no pinned neighbour. The
/// remaining eigenvalue of smallest magnitude is lambda_min_nonzero.
/// Narrow-band matrices (such as lattices) use the LAPACK banded
/// eigensolver, everything else a dense Eigen solve.
inline Spectrum spectrum(const CellNetwork& net) {
    const detail::FreeSystem sys(net);
    const std::size_t n = sys.size();
    detail::check_dense_size(n);
    Spectrum sp;
    if (n == 0) return sp;

    sp.eigenvalues.resize(n);
    if (4 * (sys.bandwidth + 1) <= n) {
        std::vector<double> ab = sys.band();
        double z = 0.0;
        const auto ln = static_cast<lapack_int>(n);
        const auto kd = static_cast<lapack_int>(sys.bandwidth);
        const lapack_int info =
            LAPACKE_dsbevd(LAPACK_COL_MAJOR, 'N', 'L', ln, kd, ab.data(), kd + 1, sp.eigenvalues.data(), &z, 1);
        if (info != 0) throw reference_error("eigensolver failed (info = " + std::to_string(info) + ")");
    } else {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.dense(), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw reference_error("eigensolver failed");
        for (std::size_t k = 0; k < n; ++k) sp.eigenvalues[k] = es.eigenvalues()(static_cast<Eigen::Index>(k));
    }

    std::vector<double> mags(n);
    for (std::size_t k = 0; k < n; ++k) mags[k] = std::abs(sp.eigenvalues[k]);
    std::sort(mags.begin(), mags.end());
    sp.largest_magnitude = mags.back();
    sp.zero_count = std::min(sys.zero_modes, n);
    if (sp.zero_count < n && mags[sp.zero_count] > 0.0) {
        sp.smallest_nonzero = mags[sp.zero_count];
        sp.stiffness_ratio = sp.largest_magnitude / sp.smallest_nonzero;
    }
    return sp;
}

/// Exact solution of du/dt = M u + Q by eigendecomposition of the
/// symmetrized matrix. The decomposition is computed once and reused.
///
/// u(t) = D^{-1/2} V [ e^{L t} V^T D^{1/2} u0 + t phi1(L t) V^T D^{1/2} Q ],
/// which never inverts M, so closed (singular) networks are fine.
class ExactSolver {
public:
    explicit ExactSolver(const CellNetwork& net) : sys_(net), n_total_(net.size()) {
        const std::size_t n = sys_.size();
        detail::check_dense_size(n);
        initial_ = net.initial_state();
        sources_.resize(n);
        for (std::size_t a = 0; a < n; ++a) sources_[a] = net.cells[sys_.cells[a]].source + sys_.pinned_drive[a];
        if (n == 0) return;
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys_.dense(), Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success) throw reference_error("eigensolver failed");
        vectors_.assign(es.eigenvectors().data(), es.eigenvectors().data() + n * n);
        values_.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
        // True eigenvalues are <= 0; positive ones are rounding noise.
        for (double& v : values_) v = std::min(v, 0.0);
    }

    /// State at time t starting from the network's initial temperatures.
    std::vector<double> solve(double t) const { return propagate(initial_, t); }

    /// State after time t starting from an arbitrary state (pinned entries are
    /// taken from the network, not from `start`).
    std::vector<double> propagate(std::span<const double> start, double t) const {
        if (start.size() != n_total_) throw std::invalid_argument("state size does not match the network");
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("time must be nonnegative and finite");
        std::vector<double> u(start.begin(), start.end());
        for (std::size_t i = 0; i < n_total_; ++i)
            if (sys_.position[i] == detail::FreeSystem::npos) u[i] = initial_[i];
        if (t == 0.0) return u;

        const std::size_t n = sys_.size();
        std::vector<double> x(n), y(n);
        for (std::size_t a = 0; a < n; ++a) {
            x[a] = sys_.sqrt_capacity[a] * start[sys_.cells[a]];
            y[a] = sys_.sqrt_capacity[a] * sources_[a];
        }
        std::vector<double> g(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double* v = vectors_.data() + k * n;
            double alpha = 0.0;
            double beta = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                alpha += v[a] * x[a];
                beta += v[a] * y[a];
            }
            const double z = values_[k] * t;
            g[k] = std::exp(z) * alpha + t * phi1(z) * beta;
        }
        std::vector<double> r(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double* v = vectors_.data() + k * n;
            const double gk = g[k];
            for (std::size_t a = 0; a < n; ++a) r[a] += v[a] * gk;
        }
        for (std::size_t a = 0; a < n; ++a) {
            const double val = r[a] / sys_.sqrt_capacity[a];
            if (!std::isfinite(val)) throw reference_error("exact solution is not finite");
            u[sys_.cells[a]] = val;
        }
        return u;
    }

    std::span<const double> eigenvalues() const noexcept { return values_; }

private:
    detail::FreeSystem sys_;
    std::size_t n_total_;
    std::vector<double> initial_;
    std::vector<double> sources_;  // per free position, pinned pull included
    std::vector<double> vectors_;
    std::vector<double> values_;
};

inline TemperatureState exact_solve(const CellNetwork& net, double t) {
    if (t == 0.0) return {net.initial_state(), 0.0};
    return {ExactSolver(net).solve(t), t};
}

/// Statistics of one adaptive integration.
struct OracleStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

/// Dormand-Prince 5(4) with an error-per-step controller in the max norm,
/// scaled by tol * (1 + |u|_inf). Any tolerance is accepted; see ode_oracle
/// for the reference-quality entry point.
inline TemperatureState dormand_prince(const CellNetwork& net, double t_final, double tol,
                                       std::size_t max_steps = 2'000'000, OracleStats* stats = nullptr) {
    validate(net);
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("time must be nonnegative and finite");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const CoefficientSet c = assemble(net);
    const std::vector<double> q = net.sources();
    const std::size_t n = net.size();
    TemperatureState st{net.initial_state(), 0.0};
    OracleStats local;
    OracleStats& s = stats ? *stats : local;
    if (t_final == 0.0 || n == 0) return st;

    auto rhs = [&](std::span<const double> u, std::span<double> du) {
        for (std::size_t i = 0; i < n; ++i) {
            if (c.pinned[i]) {
                du[i] = 0.0;
                continue;
            }
            // Difference form: exactly zero for a uniform state.
            double acc = 0.0;
            for (std::size_t k = c.row_start[i]; k < c.row_start[i + 1]; ++k)
                acc += c.coupling[k] * (u[c.neighbour[k]] - u[i]);
            du[i] = acc + q[i];
        }
        ++s.rhs_evaluations;
    };

    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                     a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                     e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), next(n);
    auto& u = st.u;
    rhs(u, k1);

    double stiff = 0.0;
    for (double d : c.diagonal) stiff = std::max(stiff, -d);
    double h = stiff > 0.0 ? std::min(t_final, 0.1 / stiff) : t_final;
    auto inf_norm = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };

    while (st.t < t_final) {
        if (s.accepted + s.rejected >= max_steps)
            throw oracle_budget_exceeded("adaptive oracle exceeded its step budget of " + std::to_string(max_steps) +
                                         " at t = " + std::to_string(st.t));
        const bool last = st.t + h >= t_final;
        if (last) h = t_final - st.t;

        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * a21 * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = u[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = u[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            next[i] = u[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(next, k7);

        const double scale = tol * (1.0 + std::max(inf_norm(u), inf_norm(next)));
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            err = std::max(err, std::abs(ei));
        }
        err /= scale;
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            ++s.accepted;
            st.t = last ? t_final : st.t + h;
            std::swap(u, next);
            std::swap(k1, k7);
        } else {
            ++s.rejected;
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }
    return st;
}

/// Reference-quality adaptive solution with tolerance in [1e-12, 1e-6].
///
/// The per-step tolerance is a tenth of `tol`, so the accumulated error stays
/// near tol * |u|. If the step budget runs out the exception message carries
/// the stiffness ratio (when the network is small enough to compute it).
inline TemperatureState ode_oracle(const CellNetwork& net, double t_final, double tol,
                                   std::size_t max_steps = 2'000'000, OracleStats* stats = nullptr) {
    if (!(tol >= 1e-12 && tol <= 1e-6)) throw std::invalid_argument("oracle tolerance must be in [1e-12, 1e-6]");
    try {
        return dormand_prince(net, t_final, 0.1 * tol, max_steps, stats);
    } catch (const oracle_budget_exceeded& e) {
        std::ostringstream msg;
        msg << e.what();
        try {
            msg << "; stiffness ratio " << spectrum(net).stiffness_ratio;
        } catch (const reference_error&) {
        }
        throw oracle_budget_exceeded(msg.str());
    }
}

}  // namespace cnln
