#pragma once

#include "cnln/cnln.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cnln::testing {

/// Two cells with C = 1 joined by R = 1, u0 = (a, b).
inline CellNetwork two_cell(double a = 0.0, double b = 1.0) {
    CellNetwork net;
    net.cells = {{1.0, 0.0, a, {}}, {1.0, 0.0, b, {}}};
    net.edges = {{0, 1, 1.0}};
    return net;
}

inline CellNetwork isolated_cell(double u, double q) {
    CellNetwork net;
    net.cells = {{1.0, q, u, {}}};
    return net;
}

/// Chain of n cells with unit C and R.
inline CellNetwork unit_chain(std::size_t n) {
    CellNetwork net;
    net.cells.assign(n, Cell{1.0, 0.0, 0.0, {}});
    for (std::size_t i = 0; i + 1 < n; ++i) net.edges.push_back({i, i + 1, 1.0});
    return net;
}

/// Random connected network: a spanning chain in shuffled order plus extra
/// random edges. Capacities and resistances are log-uniform over
/// [10^-spread, 10^spread]. Sources are zero unless `with_sources`.
inline CellNetwork random_network(std::uint64_t seed, std::size_t n, double spread = 1.0, bool with_sources = false,
                                  std::size_t extra_edges = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> expo(-spread, spread);
    std::uniform_real_distribution<double> temp(0.0, 100.0);
    std::uniform_real_distribution<double> src(-50.0, 50.0);
    CellNetwork net;
    net.cells.resize(n);
    for (auto& c : net.cells) {
        c.capacity = std::pow(10.0, expo(rng));
        c.initial = temp(rng);
        c.source = with_sources ? src(rng) : 0.0;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::pair<std::size_t, std::size_t>> used;
    auto has = [&](std::size_t a, std::size_t b) {
        return std::find(used.begin(), used.end(), std::make_pair(std::min(a, b), std::max(a, b))) != used.end();
    };
    for (std::size_t k = 0; k + 1 < n; ++k) {
        net.edges.push_back({order[k], order[k + 1], std::pow(10.0, expo(rng))});
        used.emplace_back(std::min(order[k], order[k + 1]), std::max(order[k], order[k + 1]));
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t e = 0; e < extra_edges && n > 2; ++e) {
        const std::size_t a = pick(rng), b = pick(rng);
        if (a == b || has(a, b)) continue;
        net.edges.push_back({a, b, std::pow(10.0, expo(rng))});
        used.emplace_back(std::min(a, b), std::max(a, b));
    }
    return net;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace cnln::testing
