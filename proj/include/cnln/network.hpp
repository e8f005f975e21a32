#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

namespace cnln {

/// Raised when a cell network violates one of its structural invariants.
class invalid_network : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A lumped thermal cell.
struct Cell {
    double capacity = 1.0;      ///< C_i [J/K], > 0
    double source = 0.0;        ///< Q_i [K/s]
    double initial = 0.0;       ///< u_i(0) [K]
    std::optional<double> pinned;  ///< fixed temperature [K]; the cell is never updated

    bool is_pinned() const noexcept { return pinned.has_value(); }
};

/// Undirected thermal resistance between two distinct cells.
struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double resistance = 1.0;  ///< R_ij [K/W], > 0
};

/// Physical problem definition: cells joined by resistive edges.
///
/// Without pinned cells the network is thermally closed (zero Neumann). A
/// pinned cell acts as a constant-temperature neighbour, which is how Dirichlet
/// boundaries are expressed.
struct CellNetwork {
    std::vector<Cell> cells;
    std::vector<Edge> edges;

    std::size_t size() const noexcept { return cells.size(); }

    /// Temperatures at t = 0, with pinned cells at their pinned value.
    std::vector<double> initial_state() const {
        std::vector<double> u(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            u[i] = cells[i].pinned.value_or(cells[i].initial);
        return u;
    }

    std::vector<double> sources() const {
        std::vector<double> q(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) q[i] = cells[i].source;
        return q;
    }

    std::vector<double> capacities() const {
        std::vector<double> c(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) c[i] = cells[i].capacity;
        return c;
    }
};

/// Temperature vector together with its simulation time.
struct TemperatureState {
    std::vector<double> u;  ///< [K]
    double t = 0.0;         ///< [s]

    bool all_finite() const noexcept {
        for (double v : u)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Checks every CellNetwork invariant and throws invalid_network naming the
/// first violation. Returns the network unchanged when it is legal.
inline const CellNetwork& validate(const CellNetwork& net) {
    const std::size_t n = net.cells.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Cell& c = net.cells[i];
        if (!(c.capacity > 0.0) || !std::isfinite(c.capacity))
            throw invalid_network("cell " + std::to_string(i) + ": non-positive capacity");
        if (!std::isfinite(c.source))
            throw invalid_network("cell " + std::to_string(i) + ": non-finite source");
        if (!std::isfinite(c.initial))
            throw invalid_network("cell " + std::to_string(i) + ": non-finite initial temperature");
        if (c.pinned && !std::isfinite(*c.pinned))
            throw invalid_network("cell " + std::to_string(i) + ": non-finite pinned temperature");
    }

    std::unordered_set<std::uint64_t> seen;
    seen.reserve(net.edges.size() * 2);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const Edge& edge = net.edges[e];
        const std::string tag = "edge " + std::to_string(e) + " (" + std::to_string(edge.i) + ", " +
                                std::to_string(edge.j) + ")";
        if (edge.i >= n || edge.j >= n) throw invalid_network(tag + ": bad cell index");
        if (edge.i == edge.j) throw invalid_network(tag + ": self-edge");
        if (!(edge.resistance > 0.0) || !std::isfinite(edge.resistance))
            throw invalid_network(tag + ": non-positive resistance");
        const auto lo = static_cast<std::uint64_t>(std::min(edge.i, edge.j));
        const auto hi = static_cast<std::uint64_t>(std::max(edge.i, edge.j));
        if (!seen.insert((lo << 32) | hi).second) throw invalid_network(tag + ": duplicate edge");
    }
    return net;
}

/// The coupling coefficients of du/dt = M u + Q in compressed-row form.
///
/// Row i holds m_ij = 1/(R_ij C_i) for every neighbour j. The diagonal is
/// m_ii = -sum_j m_ij accumulated in neighbour order, so the row sum is zero
/// in floating point as well.
struct CoefficientSet {
    std::vector<std::size_t> row_start;  // size N + 1
    std::vector<std::size_t> neighbour;
    std::vector<double> coupling;        // m_ij [1/s]
    std::vector<double> diagonal;        // m_ii [1/s]
    std::vector<double> time_constant;   // tau_i [s], +inf for an isolated cell
    std::vector<std::uint8_t> pinned;

    std::size_t size() const noexcept { return diagonal.size(); }

    std::span<const std::size_t> neighbours(std::size_t i) const noexcept {
        return {neighbour.data() + row_start[i], row_start[i + 1] - row_start[i]};
    }
    std::span<const double> couplings(std::size_t i) const noexcept {
        return {coupling.data() + row_start[i], row_start[i + 1] - row_start[i]};
    }
    bool is_pinned(std::size_t i) const noexcept { return pinned[i] != 0; }

    /// m_ij for a given pair, 0 if i and j are not neighbours.
    double entry(std::size_t i, std::size_t j) const noexcept {
        if (i == j) return diagonal[i];
        const auto nb = neighbours(i);
        for (std::size_t k = 0; k < nb.size(); ++k)
            if (nb[k] == j) return coupling[row_start[i] + k];
        return 0.0;
    }
};

/// Assembles the ODE coefficients of a network (validating it first).
/// Pinned cells get ordinary rows and are flagged; integrators skip them.
inline CoefficientSet assemble(const CellNetwork& net) {
    validate(net);
    const std::size_t n = net.size();
    CoefficientSet cs;
    cs.row_start.assign(n + 1, 0);
    for (const Edge& e : net.edges) {
        ++cs.row_start[e.i + 1];
        ++cs.row_start[e.j + 1];
    }
    for (std::size_t i = 0; i < n; ++i) cs.row_start[i + 1] += cs.row_start[i];

    cs.neighbour.resize(cs.row_start[n]);
    cs.coupling.resize(cs.row_start[n]);
    std::vector<std::size_t> fill(cs.row_start.begin(), cs.row_start.end() - 1);
    for (const Edge& e : net.edges) {
        const std::size_t a = fill[e.i]++;
        cs.neighbour[a] = e.j;
        cs.coupling[a] = 1.0 / (e.resistance * net.cells[e.i].capacity);
        const std::size_t b = fill[e.j]++;
        cs.neighbour[b] = e.i;
        cs.coupling[b] = 1.0 / (e.resistance * net.cells[e.j].capacity);
    }

    cs.diagonal.resize(n);
    cs.time_constant.resize(n);
    cs.pinned.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (double m : cs.couplings(i)) sum += m;
        cs.diagonal[i] = -sum;
        cs.time_constant[i] = sum > 0.0 ? 1.0 / sum : std::numeric_limits<double>::infinity();
        cs.pinned[i] = net.cells[i].is_pinned() ? 1 : 0;
    }
    return cs;
}

// ---------------------------------------------------------------------------
// Test-problem builders
// ---------------------------------------------------------------------------

/// Grid spacing of the sine-line problem on [0, pi].
inline double sine_line_spacing(std::size_t cells) {
    return std::numbers::pi / static_cast<double>(cells - 1);
}

/// 1D homogeneous rod on [0, pi] with u(x, 0) = 10 sin x + 77 sin 2x.
///
/// Cell centres sit at x_i = i * dx with dx = pi / (N - 1). Unit capacities
/// and R = dx^2 / alpha (alpha = 1) give the usual second-difference stencil.
/// With pin_ends the first and last cells are held at 0.
inline CellNetwork build_sine_line(std::size_t cells, bool pin_ends = true) {
    if (cells < 3) throw invalid_network("sine line needs at least 3 cells");
    const double dx = sine_line_spacing(cells);
    CellNetwork net;
    net.cells.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = static_cast<double>(i) * dx;
        net.cells[i].capacity = 1.0;
        net.cells[i].initial = 10.0 * std::sin(x) + 77.0 * std::sin(2.0 * x);
    }
    if (pin_ends) {
        net.cells.front().initial = 0.0;
        net.cells.front().pinned = 0.0;
        net.cells.back().initial = 0.0;
        net.cells.back().pinned = 0.0;
    }
    const double resistance = dx * dx;
    net.edges.reserve(cells - 1);
    for (std::size_t i = 0; i + 1 < cells; ++i) net.edges.push_back({i, i + 1, resistance});
    return net;
}

/// Platform-stable uniform variates on the open interval (0, 1).
///
/// std::mt19937_64 has a fully specified output sequence; the conversion to
/// double uses the top 53 bits plus a half ulp offset, so no draw is 0 or 1.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        const std::uint64_t bits = engine_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }
    double next(double lo, double hi) { return lo + (hi - lo) * next(); }

private:
    std::mt19937_64 engine_;
};

/// Either a constant value or a uniform draw on (lo, hi) per cell.
struct ValueSpec {
    struct Constant { double value = 0.0; };
    struct Uniform { double lo = 0.0; double hi = 1.0; };
    std::variant<Constant, Uniform> dist = Constant{};

    static ValueSpec constant(double v) { return {Constant{v}}; }
    static ValueSpec uniform(double lo, double hi) { return {Uniform{lo, hi}}; }
};

/// Parameters of a rectangular random lattice.
struct LatticeSpec {
    std::size_t nx = 50;
    std::size_t ny = 20;
    double exponent_lo = -1.0;  ///< C, R_x, R_y are 10^U with U ~ uniform(lo, hi)
    double exponent_hi = 1.0;
    ValueSpec initial = ValueSpec::uniform(0.0, 1000.0);
    ValueSpec source = ValueSpec::uniform(-500.0, 500.0);
    std::uint64_t seed = 1;
};

/// Cell index of lattice site (x, y). y runs fastest, so the coupling
/// matrix has bandwidth ny.
inline std::size_t lattice_index(const LatticeSpec& spec, std::size_t x, std::size_t y) {
    return x * spec.ny + y;
}

/// Rectangular lattice of nx * ny cells with log-uniform capacities and
/// resistances.
///
/// Draw order from one UniformStream: N capacities, N east resistances, N
/// north resistances (all in cell-index order), then N initial temperatures
/// and N sources for whichever of those is uniform. The east draw of cell i
/// labels the edge to (x + 1, y), the north draw the edge to (x, y + 1);
/// draws facing the lattice boundary are discarded.
inline CellNetwork build_random_lattice(const LatticeSpec& spec) {
    if (spec.nx == 0 || spec.ny == 0) throw invalid_network("empty lattice");
    if (!(spec.exponent_lo <= spec.exponent_hi))
        throw invalid_network("lattice exponent range is inverted");
    const std::size_t n = spec.nx * spec.ny;
    UniformStream rng(spec.seed);
    auto log_uniform = [&] { return std::pow(10.0, rng.next(spec.exponent_lo, spec.exponent_hi)); };

    CellNetwork net;
    net.cells.resize(n);
    std::vector<double> r_east(n), r_north(n);
    for (auto& c : net.cells) c.capacity = log_uniform();
    for (auto& r : r_east) r = log_uniform();
    for (auto& r : r_north) r = log_uniform();

    auto fill = [&](const ValueSpec& vs, auto member) {
        if (const auto* k = std::get_if<ValueSpec::Constant>(&vs.dist)) {
            for (auto& c : net.cells) c.*member = k->value;
        } else {
            const auto& u = std::get<ValueSpec::Uniform>(vs.dist);
            for (auto& c : net.cells) c.*member = rng.next(u.lo, u.hi);
        }
    };
    fill(spec.initial, &Cell::initial);
    fill(spec.source, &Cell::source);

    net.edges.reserve(2 * n);
    for (std::size_t x = 0; x < spec.nx; ++x) {
        for (std::size_t y = 0; y < spec.ny; ++y) {
            const std::size_t i = lattice_index(spec, x, y);
            if (x + 1 < spec.nx) net.edges.push_back({i, lattice_index(spec, x + 1, y), r_east[i]});
            if (y + 1 < spec.ny) net.edges.push_back({i, lattice_index(spec, x, y + 1), r_north[i]});
        }
    }
    return net;
}

/// The 1000-cell lattice of the first random study.
inline LatticeSpec moderate_lattice(std::uint64_t seed) {
    LatticeSpec s;
    s.nx = 50;
    s.ny = 20;
    s.exponent_lo = -1.0;
    s.exponent_hi = 1.0;
    s.initial = ValueSpec::uniform(0.0, 1000.0);
    s.source = ValueSpec::uniform(-500.0, 500.0);
    s.seed = seed;
    return s;
}

/// The 5000-cell, strongly stiff lattice of the second random study.
inline LatticeSpec stiff_lattice(std::uint64_t seed) {
    LatticeSpec s;
    s.nx = 250;
    s.ny = 20;
    s.exponent_lo = -3.0;
    s.exponent_hi = 3.0;
    s.initial = ValueSpec::constant(0.0);
    s.source = ValueSpec::uniform(-500.0, 500.0);
    s.seed = seed;
    return s;
}

}  // namespace cnln
