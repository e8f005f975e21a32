#pragma once

#include "cnln/network.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace cnln {

// Network file, version 1:
//
//   {
//     "format": "cnln-network",
//     "version": 1,
//     "cells": [ {"id": 0, "C": 1.0, "Q": 0.0, "u0": 0.0, "pinned": 0.0}, ... ],
//     "edges": [ {"i": 0, "j": 1, "R": 1.0}, ... ]
//   }
//
// Units: C [J/K], Q [K/s], u0 and pinned [K], R [K/W]. "pinned" is optional.
// Cell ids must be exactly 0..N-1 (any order).

inline constexpr const char* network_format_tag = "cnln-network";
inline constexpr int network_format_version = 1;

inline nlohmann::json to_json(const CellNetwork& net) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t i = 0; i < net.cells.size(); ++i) {
        const Cell& c = net.cells[i];
        nlohmann::json jc = {{"id", i}, {"C", c.capacity}, {"Q", c.source}, {"u0", c.initial}};
        if (c.pinned) jc["pinned"] = *c.pinned;
        cells.push_back(std::move(jc));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : net.edges) edges.push_back({{"i", e.i}, {"j", e.j}, {"R", e.resistance}});
    return {{"format", network_format_tag},
            {"version", network_format_version},
            {"cells", std::move(cells)},
            {"edges", std::move(edges)}};
}

inline CellNetwork network_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string{}) != network_format_tag)
            throw invalid_network("not a cnln-network document");
        const int version = doc.at("version").get<int>();
        if (version != network_format_version)
            throw invalid_network("unsupported network format version " + std::to_string(version));

        const auto& cells = doc.at("cells");
        CellNetwork net;
        net.cells.resize(cells.size());
        std::vector<bool> filled(cells.size(), false);
        for (const auto& jc : cells) {
            const auto id = jc.at("id").get<std::size_t>();
            if (id >= cells.size() || filled[id])
                throw invalid_network("cell ids must be a permutation of 0..N-1 (bad id " +
                                      std::to_string(id) + ")");
            filled[id] = true;
            Cell& c = net.cells[id];
            c.capacity = jc.at("C").get<double>();
            c.source = jc.value("Q", 0.0);
            c.initial = jc.value("u0", 0.0);
            if (jc.contains("pinned") && !jc.at("pinned").is_null()) c.pinned = jc.at("pinned").get<double>();
        }
        for (const auto& je : doc.at("edges"))
            net.edges.push_back({je.at("i").get<std::size_t>(), je.at("j").get<std::size_t>(),
                                 je.at("R").get<double>()});
        validate(net);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_network(std::string("malformed network document: ") + e.what());
    }
}

inline void write_network(std::ostream& os, const CellNetwork& net) { os << to_json(net).dump(1) << '\n'; }

inline CellNetwork read_network(std::istream& is) {
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_network(std::string("network file is not valid JSON: ") + e.what());
    }
    return network_from_json(doc);
}

inline void save_network(const std::string& path, const CellNetwork& net) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_network(os, net);
}

inline CellNetwork load_network(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_network("cannot open network file " + path);
    return read_network(is);
}

}  // namespace cnln
