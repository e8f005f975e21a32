// cnln: command-line front end for the constant/linear-neighbour solvers.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
// blow-up of an explicit Euler run.

#include "cnln/cnln.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cnln;

constexpr int exit_ok = 0;
constexpr int exit_invalid = 1;
constexpr int exit_blowup = 2;

struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<SchemeSpec> parse_schemes(const std::string& list) {
    std::vector<SchemeSpec> out;
    for (const auto& tok : split(list, ',')) out.push_back(parse_scheme(tok));
    return out;
}

std::vector<double> parse_doubles(const std::string& list, const std::string& flag) {
    std::vector<double> out;
    for (const auto& tok : split(list, ',')) {
        double v = 0.0;
        try {
            v = parse_double(tok);
        } catch (const std::invalid_argument&) {
            throw usage_error(flag + ": '" + tok + "' is not a number");
        }
        if (!(v > 0.0) || !std::isfinite(v)) throw usage_error(flag + ": values must be positive");
        out.push_back(v);
    }
    return out;
}

/// "const:V" or "uniform:LO:HI".
ValueSpec parse_value_spec(const std::string& s, const std::string& flag) {
    const auto parts = split(s, ':');
    try {
        if (parts.size() == 2 && parts[0] == "const") return ValueSpec::constant(parse_double(parts[1]));
        if (parts.size() == 3 && parts[0] == "uniform")
            return ValueSpec::uniform(parse_double(parts[1]), parse_double(parts[2]));
    } catch (const std::invalid_argument&) {
    }
    throw usage_error(flag + ": expected const:V or uniform:LO:HI, got '" + s + "'");
}

/// Writes to the file, or to stdout for an empty path or "-".
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    std::ofstream os(path);
    if (!os) throw usage_error("cannot open " + path + " for writing");
    fn(os);
}

std::string euler_hint(const CellNetwork& net) {
    try {
        std::ostringstream os;
        os << "; euler_max_step = " << format_double(euler_max_step(spectrum(net))) << " s";
        return os.str();
    } catch (const std::exception&) {
        return {};
    }
}

void add_threads(CLI::App* app, unsigned& threads) {
    app->add_option("--threads", threads, "Worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit constant/linear-neighbour solvers for heat conduction on cell networks.\n"
                 "Units: capacity C [J/K], resistance R [K/W], source Q [K/s], temperature u [K], time t and h [s]."};
    app.require_subcommand(1);
    unsigned threads = default_workers();

    // solve
    auto* solve = app.add_subcommand("solve", "Integrate a network file and write the final temperatures as CSV");
    solve->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
    std::string net_path, scheme_tok, out_path;
    double h = 0.0, t_final = 1.0;
    solve->add_option("--network", net_path, "Network file (JSON)")->required();
    solve->add_option("--scheme", scheme_tok, "euler, cnK or lnK with K in 1..16 (ln1 = cn1)")->required();
    solve->add_option("--h", h, "Stepsize h [s], > 0")->required()->check(CLI::PositiveNumber);
    solve->add_option("--t-final", t_final, "Final time [s], > 0")->check(CLI::PositiveNumber);
    solve->add_option("--out", out_path, "Output CSV (cell,temperature [K]); stdout if omitted");
    add_threads(solve, threads);

    // verify-sine
    auto* verify = app.add_subcommand("verify-sine", "Stepsize study on the sine-line rod with a known solution");
    std::size_t sine_n = 101;
    std::string v_schemes = "cn1,cn2,cn3,ln2,ln3";
    std::string v_hlist = "0.1,0.05,0.025,0.0125,0.00625,0.003125,0.0015625,0.00078125";
    std::string v_ref = "pde";
    std::string v_out;
    double v_tfinal = 1.0;
    verify->add_option("--n", sine_n, "Number of cells (>= 3), spacing pi/(N-1)")->check(CLI::Range(3, 1000000));
    verify->add_option("--schemes", v_schemes, "Comma-separated scheme list");
    verify->add_option("--h-list", v_hlist, "Comma-separated stepsizes h [s]");
    verify->add_option("--reference", v_ref, "pde: closed form (includes spatial error); ode: exact ODE solution")
        ->check(CLI::IsMember({"pde", "ode"}));
    verify->add_option("--t-final", v_tfinal, "Final time [s]")->check(CLI::PositiveNumber);
    verify->add_option("--out", v_out, "Sweep CSV output path");
    add_threads(verify, threads);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Error sweeps over stepsize, iteration count, or fixed GITC");
    std::string s_net, s_preset, s_mode = "h", s_schemes = "cn1,cn2,cn3,ln2,ln3", s_hlist, s_ref = "exact", s_out;
    std::string s_stages;
    std::uint64_t s_seed = 1, s_gitc = 420;
    unsigned s_maxk = 7;
    double s_tfinal = 1.0;
    bool s_nocheck = false;
    auto* s_net_opt = sweep->add_option("--network", s_net, "Network file (JSON)");
    sweep->add_option("--preset", s_preset, "paper-sine | paper-table-1 | paper-table-2")
        ->check(CLI::IsMember({"paper-sine", "paper-table-1", "paper-table-2"}))
        ->excludes(s_net_opt);
    sweep->add_option("--seed", s_seed, "Lattice seed for the table presets");
    sweep->add_option("--mode", s_mode, "h | iteration | gitc")->check(CLI::IsMember({"h", "iteration", "gitc"}));
    sweep->add_option("--schemes", s_schemes, "Schemes for --mode h");
    sweep->add_option("--h-list", s_hlist, "Stepsizes h [s] for --mode h and iteration");
    sweep->add_option("--gitc", s_gitc, "Global iteration counter for --mode gitc")->check(CLI::PositiveNumber);
    sweep->add_option("--stages", s_stages, "LN stage counts for --mode gitc (default 1..7)");
    sweep->add_option("--max-stages", s_maxk, "k range 1..K for --mode iteration")->check(CLI::Range(1, 16));
    sweep->add_option("--t-final", s_tfinal, "Final time [s]")->check(CLI::PositiveNumber);
    sweep->add_option("--reference", s_ref, "exact | oracle | pde (pde only for the sine line)")
        ->check(CLI::IsMember({"exact", "oracle", "pde"}));
    sweep->add_flag("--no-check", s_nocheck, "Skip the exact-vs-oracle consistency check");
    sweep->add_option("--out", s_out, "Sweep CSV output path; stdout if omitted");
    add_threads(sweep, threads);

    // bench
    auto* bench = app.add_subcommand("bench", "Solver comparison table over several lattice seeds");
    std::string b_preset, b_out;
    std::size_t b_seeds = 20;
    std::uint64_t b_first = 1;
    bench->add_option("--preset", b_preset, "paper-table-1 (1000 cells) | paper-table-2 (5000 cells)")
        ->required()
        ->check(CLI::IsMember({"paper-table-1", "paper-table-2"}));
    bench->add_option("--seeds", b_seeds, "Number of seeds")->check(CLI::Range(1, 100000));
    bench->add_option("--first-seed", b_first, "First seed; seeds are consecutive");
    bench->add_option("--out", b_out, "CSV output path; stdout if omitted");
    add_threads(bench, threads);

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "Largest eigenvalue magnitude [1/s], stiffness ratio, Euler limit [s]");
    std::string sp_net;
    spec->add_option("--network", sp_net, "Network file (JSON)")->required();

    // gen-lattice
    auto* gen = app.add_subcommand("gen-lattice", "Write a random rectangular lattice network file");
    LatticeSpec lat = moderate_lattice(1);
    std::vector<double> exp_range{-1.0, 1.0};
    std::string g_u0 = "uniform:0:1000", g_q = "uniform:-500:500", g_out, g_preset;
    gen->add_option("--nx", lat.nx, "Cells along x")->check(CLI::PositiveNumber);
    gen->add_option("--ny", lat.ny, "Cells along y")->check(CLI::PositiveNumber);
    gen->add_option("--exp-range", exp_range, "Decimal exponent range: C [J/K] and R [K/W] are 10^U(lo,hi)")
        ->expected(2);
    gen->add_option("--u0", g_u0, "Initial temperature [K]: const:V or uniform:LO:HI");
    gen->add_option("--q", g_q, "Source [K/s]: const:V or uniform:LO:HI");
    gen->add_option("--seed", lat.seed, "Seed of the mt19937_64 stream");
    gen->add_option("--preset", g_preset, "paper-table-1 | paper-table-2 (overrides the shape flags)")
        ->check(CLI::IsMember({"paper-table-1", "paper-table-2"}));
    gen->add_option("--out", g_out, "Output network file; stdout if omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    }

    try {
        if (*solve) {
            const SchemeSpec scheme = parse_scheme(scheme_tok);
            const CellNetwork net = load_network(net_path);
            TemperatureState st;
            try {
                IntegrateOptions opt;
                opt.workers = threads;
                st = integrate(net, scheme, h, t_final, opt);
            } catch (const numerical_blowup& e) {
                std::cerr << "error: " << e.what() << euler_hint(net) << '\n';
                return exit_blowup;
            }
            emit(out_path, [&](std::ostream& os) {
                os << "cell,temperature\n";
                for (std::size_t i = 0; i < st.u.size(); ++i) os << i << ',' << format_double(st.u[i]) << '\n';
            });
            return exit_ok;
        }

        if (*verify) {
            SweepConfig cfg;
            cfg.problem = SineLineProblem{sine_n, true};
            cfg.schemes = parse_schemes(v_schemes);
            cfg.steps = parse_doubles(v_hlist, "--h-list");
            cfg.t_final = v_tfinal;
            cfg.reference = v_ref == "pde" ? ReferenceKind::pde : ReferenceKind::exact;
            cfg.workers = threads;
            const SweepResult r = run_h_sweep(cfg);

            // Spatial error of the discretization: points within 10x of it are plateau.
            const Problem p = make_problem(cfg.problem);
            const double plateau =
                cfg.reference == ReferenceKind::pde ? max_d(sine_closed_form(p, v_tfinal), exact_solve(p.network, v_tfinal).u) : 0.0;
            std::cout << "# spatial error plateau: " << format_double(plateau) << '\n';
            std::cout << "scheme,fitted_order,points\n";
            for (const auto& s : cfg.schemes) {
                std::vector<OrderPoint> pts;
                for (const auto& rep : r.reports)
                    if (rep.scheme == s.id()) pts.push_back({rep.h, rep.max_d});
                std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.h > b.h; });
                const auto kept = plateau > 0.0 ? trim_plateau(pts, plateau) : pts;
                std::cout << s.id() << ',';
                if (kept.size() >= 3) std::cout << format_double(fit_order(kept));
                else std::cout << "n/a";
                std::cout << ',' << kept.size() << '\n';
            }
            if (!v_out.empty()) emit(v_out, [&](std::ostream& os) { write_sweep_csv(os, r); });
            return exit_ok;
        }

        if (*sweep) {
            SweepConfig cfg;
            cfg.t_final = s_tfinal;
            cfg.workers = threads;
            cfg.check_reference = !s_nocheck;
            cfg.max_stages = s_maxk;
            cfg.gitc = s_gitc;
            cfg.reference = s_ref == "exact" ? ReferenceKind::exact
                            : s_ref == "oracle" ? ReferenceKind::oracle
                                                : ReferenceKind::pde;
            std::vector<double> default_h;
            if (!s_net.empty()) {
                cfg.problem = load_network(s_net);
                default_h = {0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
            } else if (s_preset == "paper-table-2") {
                cfg.problem = stiff_lattice(s_seed);
                default_h = {0.002, 0.001, 5e-4, 2e-4, 1e-4};
                if (s_gitc == 420) cfg.gitc = 840;
            } else if (s_preset == "paper-table-1") {
                cfg.problem = moderate_lattice(s_seed);
                default_h = {0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
            } else if (s_preset == "paper-sine") {
                cfg.problem = SineLineProblem{101, true};
                default_h = {0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625, 0.00078125};
                if (s_ref == "exact") cfg.reference = ReferenceKind::pde;
            } else {
                throw usage_error("sweep needs --network or --preset");
            }
            cfg.steps = s_hlist.empty() ? default_h : parse_doubles(s_hlist, "--h-list");
            cfg.schemes = parse_schemes(s_schemes);
            for (const auto& tok : split(s_stages, ',')) {
                const long k = std::stol(tok);
                if (k < 1 || k > 16) throw usage_error("--stages: values must be in 1..16");
                cfg.stage_counts.push_back(static_cast<unsigned>(k));
            }
            SweepResult r;
            if (s_mode == "h") r = run_h_sweep(cfg);
            else if (s_mode == "iteration") r = run_iteration_sweep(cfg);
            else r = run_gitc_sweep(cfg);
            emit(s_out, [&](std::ostream& os) { write_sweep_csv(os, r); });
            return exit_ok;
        }

        if (*bench) {
            std::vector<std::uint64_t> seeds;
            for (std::size_t k = 0; k < b_seeds; ++k) seeds.push_back(b_first + k);
            BenchConfig cfg = bench_preset(b_preset == "paper-table-1" ? 1 : 2, seeds);
            cfg.workers = threads;
            const auto rows = run_benchmark(cfg);
            auto all = rows;
            const auto summary = summarize(rows);
            all.insert(all.end(), summary.begin(), summary.end());
            emit(b_out, [&](std::ostream& os) {
                write_bench_csv(os, all, {"bench: " + b_preset, "seeds: " + std::to_string(b_first) + ".." +
                                                                     std::to_string(b_first + b_seeds - 1),
                                          "cost: stage evaluations x N"});
            });
            for (const auto& s : summary)
                std::cerr << "wall clock (informational), mean per seed: " << s.solver << ": " << s.seconds << " s\n";
            return exit_ok;
        }

        if (*spec) {
            const CellNetwork net = load_network(sp_net);
            const Spectrum sp = spectrum(net);
            std::cout << "cells: " << sp.size() << '\n'
                      << "lambda_max_magnitude: " << format_double(sp.largest_magnitude) << '\n'
                      << "stiffness_ratio: " << format_double(sp.stiffness_ratio) << '\n'
                      << "euler_max_step: " << format_double(euler_max_step(sp)) << '\n'
                      << "smallest_nonzero_magnitude: " << format_double(sp.smallest_nonzero) << '\n'
                      << "zero_eigenvalues: " << sp.zero_count << '\n';
            return exit_ok;
        }

        if (*gen) {
            if (g_preset == "paper-table-1") {
                lat = moderate_lattice(lat.seed);
            } else if (g_preset == "paper-table-2") {
                lat = stiff_lattice(lat.seed);
            } else {
                lat.exponent_lo = exp_range[0];
                lat.exponent_hi = exp_range[1];
                lat.initial = parse_value_spec(g_u0, "--u0");
                lat.source = parse_value_spec(g_q, "--q");
            }
            const CellNetwork net = build_random_lattice(lat);
            emit(g_out, [&](std::ostream& os) { write_network(os, net); });
            return exit_ok;
        }
    } catch (const numerical_blowup& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_blowup;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    }
    return exit_invalid;
}
