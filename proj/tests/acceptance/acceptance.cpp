// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "../support.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

using namespace cnln;
using cnln::testing::max_abs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

// 1. Fitted order against the exact solution of the discrete system.
Outcome order_of_accuracy() {
    SweepConfig cfg;
    cfg.problem = SineLineProblem{101, true};
    cfg.reference = ReferenceKind::exact;
    cfg.schemes = {SchemeSpec::cn(1), SchemeSpec::cn(2), SchemeSpec::cn(3), SchemeSpec::ln(2), SchemeSpec::ln(3)};
    for (int k = 0; k <= 7; ++k) cfg.steps.push_back(0.1 / std::pow(2.0, k));
    const SweepResult r = run_h_sweep(cfg);
    Outcome o{true, ""};
    for (const auto& s : cfg.schemes) {
        const double p = fitted_order(r.reports, s.id());
        const bool ok = s.family == Family::cn ? (p >= 0.8 && p <= 1.25) : (p >= 1.75 && p <= 2.6);
        o.pass = o.pass && ok;
        o.detail += s.id() + "=" + fmt(p) + " ";
    }
    return o;
}

// 2. Plateau of the error against the continuous solution.
struct PlateauRun {
    bool flattened = false;
    double plateau = 0.0;
    double h = 0.0;
};

// Halves h until two consecutive halvings change the error by less than 10%,
// checking only once h <= 1e-4 so the slow pre-asymptotic range is not
// mistaken for a plateau.
PlateauRun find_plateau(std::size_t cells, SchemeSpec scheme) {
    const Problem p = make_problem(SineLineProblem{cells, true});
    const std::vector<double> ref = sine_closed_form(p, 1.0);
    const CoefficientSet c = assemble(p.network);
    const auto q = p.network.sources();
    const auto u0 = p.network.initial_state();
    std::vector<double> errs;
    PlateauRun out;
    for (int k = 0; k <= 30; ++k) {
        const double h = 0.1 / std::pow(2.0, k);
        errs.push_back(max_d(ref, integrate(c, q, u0, scheme, h, 1.0).u));
        out.plateau = errs.back();
        out.h = h;
        const std::size_t n = errs.size();
        if (h <= 1e-4 && n >= 3 && errs[n - 2] / errs[n - 1] < 1.1 && errs[n - 3] / errs[n - 2] < 1.1 &&
            errs[n - 1] / errs[n - 2] < 1.1) {
            out.flattened = true;
            return out;
        }
    }
    return out;
}

Outcome plateau_reproduction() {
    Outcome o{true, ""};
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (SchemeSpec s : {SchemeSpec::cn(1), SchemeSpec::cn(2), SchemeSpec::cn(3), SchemeSpec::ln(2), SchemeSpec::ln(3)}) {
        const PlateauRun r = find_plateau(101, s);
        o.pass = o.pass && r.flattened;
        lo = std::min(lo, r.plateau);
        hi = std::max(hi, r.plateau);
        o.detail += s.id() + "=" + fmt(r.plateau) + (r.flattened ? "" : "(not flat)") + "@h=" + fmt(r.h) + " ";
    }
    o.pass = o.pass && hi / lo <= 2.0;
    o.detail += "spread=" + fmt(hi / lo) + " ";
    for (SchemeSpec s : {SchemeSpec::ln(2), SchemeSpec::ln(3)}) {
        const PlateauRun coarse = find_plateau(101, s);
        const PlateauRun fine = find_plateau(201, s);
        const double ratio = coarse.plateau / fine.plateau;
        o.pass = o.pass && fine.flattened && ratio >= 3.0 && ratio <= 5.5;
        o.detail += s.id() + " N101/N201=" + fmt(ratio) + " ";
    }
    return o;
}

std::vector<SchemeSpec> bounded_schemes() {
    std::vector<SchemeSpec> out;
    for (unsigned k = 1; k <= 5; ++k) out.push_back(SchemeSpec::cn(k));
    for (unsigned k = 2; k <= 7; ++k) out.push_back(SchemeSpec::ln(k));
    return out;
}

// 3. Iterates stay inside the initial range for Q = 0.
Outcome max_min_principle() {
    std::size_t cases = 0, failures = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const CellNetwork net = cnln::testing::random_network(100 + seed, 15 + 5 * seed, 2.0, false, 4 * seed);
        const CoefficientSet c = assemble(net);
        const double hmax = euler_max_step(spectrum(net));
        const auto u0 = net.initial_state();
        const double lo = *std::min_element(u0.begin(), u0.end());
        const double hi = *std::max_element(u0.begin(), u0.end());
        const double tol = 1e-10 * (hi - lo);
        for (int a = 0; a <= 9; ++a) {
            const double h = hmax * std::pow(10.0, -3.0 + a);  // 1e-3 .. 1e6 times h_max
            const int steps = 5 + 10 * static_cast<int>(seed);
            for (SchemeSpec s : bounded_schemes()) {
                bool bad = false;
                IntegrateOptions opt;
                opt.observer = [&](const TemperatureState& st) {
                    for (double v : st.u) bad = bad || v < lo - tol || v > hi + tol;
                };
                integrate(c, zeros(net.size()), u0, s, h, steps * h, opt);
                failures += bad;
                ++cases;
            }
        }
    }
    return {cases >= 200 && failures == 0, std::to_string(cases) + " cases, " + std::to_string(failures) + " failures"};
}

// 4. Scalar scan of the LN2 weight bracket.
Outcome bracket_nonnegativity() {
    std::vector<double> grid{0.0};
    for (int e = -160; e <= 160; ++e) grid.push_back(-std::pow(10.0, e / 20.0));
    std::size_t violations = 0, points = 0;
    double worst = 0.0;
    for (double z1 : grid) {
        if (!(z1 < 0.0)) continue;
        for (double zj : grid) {
            const double b = ln2_weight_bracket(z1, zj);
            worst = std::min(worst, b);
            violations += b < -1e-12;
            ++points;
        }
    }
    return {violations == 0, std::to_string(points) + " points, min=" + fmt(worst)};
}

// 5. Exact solve and Dormand-Prince oracle agree.
Outcome dual_oracle() {
    double worst = 0.0;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t n = 10 + (seed * 53) % 91;
        const CellNetwork net = cnln::testing::random_network(500 + seed, n, 1.0, true, n / 3);
        const CoefficientSet c = assemble(net);
        const double tmax = *std::max_element(c.time_constant.begin(), c.time_constant.end());
        const double t = std::min(5.0 * tmax, 20.0);
        const auto a = exact_solve(net, t).u;
        const auto b = ode_oracle(net, t, 1e-10).u;
        const double rel = max_d(a, b) / (1.0 + max_abs(a));
        worst = std::max(worst, rel);
        ok = ok && rel <= 1e-8;
    }
    double two = 0.0;
    const CellNetwork tc = cnln::testing::two_cell();
    for (double t : {0.1, 0.5, 1.0, 3.0}) {
        const double e = std::exp(-2.0 * t);
        const std::vector<double> want{0.5 - 0.5 * e, 0.5 + 0.5 * e};
        two = std::max({two, max_d(want, exact_solve(tc, t).u), max_d(want, ode_oracle(tc, t, 1e-10).u)});
    }
    ok = ok && two <= 1e-10;
    return {ok, "random worst rel gap=" + fmt(worst) + ", two-cell worst=" + fmt(two)};
}

// 6. Explicit Euler on a symmetric ring.
Outcome euler_threshold() {
    CellNetwork net = cnln::testing::unit_chain(12);
    net.edges.push_back({11, 0, 1.0});
    for (std::size_t i = 0; i < 12; ++i) net.cells[i].initial = std::cos(0.7 + 2.0 * static_cast<double>(i));
    const double hmax = euler_max_step(spectrum(net));
    const double init = max_abs(net.initial_state());
    double norm2 = 0.0;
    for (double v : net.initial_state()) norm2 += v * v;

    double peak = 0.0;
    IntegrateOptions track;
    track.observer = [&](const TemperatureState& s) { peak = std::max(peak, max_abs(s.u)); };
    integrate(net, SchemeSpec::euler(), 0.99 * hmax, 1000 * 0.99 * hmax, track);
    const bool bounded = peak <= std::sqrt(norm2) * (1.0 + 1e-12);

    double grown = 0.0;
    try {
        grown = max_abs(integrate(net, SchemeSpec::euler(), 1.01 * hmax, 10000 * 1.01 * hmax).u) / init;
    } catch (const numerical_blowup&) {
        grown = std::numeric_limits<double>::infinity();
    }
    return {bounded && grown > 1e6,
            "h_max=" + fmt(hmax) + ", peak/init at 0.99=" + fmt(peak / init) + ", growth at 1.01=" + fmt(grown)};
}

// 7. Median errors over 20 moderate lattices.
Outcome table_one() {
    BenchConfig cfg;
    cfg.lattice = moderate_lattice(0);
    for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
    cfg.solvers = {BenchSolver{BenchSolver::Kind::scheme, SchemeSpec::ln(3), 0.01, 0.0, 0.0},
                   BenchSolver{BenchSolver::Kind::scheme, SchemeSpec::cn(2), 0.02, 0.0, 0.0}};
    const auto summary = summarize(run_benchmark(cfg));
    const double ln3 = summary[0].max_d, cn2 = summary[1].max_d;
    return {ln3 >= 0.05 && ln3 <= 20.0 && ln3 < cn2, "median max_d ln3(0.01)=" + fmt(ln3) + ", cn2(0.02)=" + fmt(cn2)};
}

// 8. Fixed GITC study.
Outcome gitc_study() {
    int wins = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SweepConfig cfg;
        cfg.problem = moderate_lattice(seed);
        cfg.gitc = 420;
        cfg.stage_counts = {2, 3, 4, 5, 6, 7};
        cfg.check_reference = seed == 1;
        const SweepResult r = run_gitc_sweep(cfg);
        double best = std::numeric_limits<double>::infinity(), ln3 = 0.0;
        for (const auto& rep : r.reports) {
            best = std::min(best, rep.max_d);
            if (rep.scheme == "ln3") ln3 = rep.max_d;
        }
        wins += ln3 == best;
        worst = std::max(worst, ln3 / best);
    }
    return {wins >= 12 && worst <= 3.0, "ln3 best in " + std::to_string(wins) + "/20, worst ratio=" + fmt(worst)};
}

// 9. Stiffness ratios of both lattice configurations.
Outcome stiffness_ratios() {
    std::vector<double> moderate, stiff;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        moderate.push_back(spectrum(build_random_lattice(moderate_lattice(seed))).stiffness_ratio);
        stiff.push_back(spectrum(build_random_lattice(stiff_lattice(seed))).stiffness_ratio);
    }
    const double m = median(moderate), s = median(stiff);
    return {m >= 1e4 && m <= 1e7 && s >= 1e10 && s <= 1e14, "median moderate=" + fmt(m) + ", stiff=" + fmt(s)};
}

// 10. Structural identities and CLI determinism.
int run_cli(const std::string& args) {
    const int status = std::system((std::string(CNLN_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome identities_and_determinism() {
    bool ident = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const CellNetwork net = cnln::testing::random_network(seed, 30, 2.0, true, 20);
        for (double h : {1e-3, 0.1, 10.0})
            ident = ident && integrate(net, SchemeSpec::ln(1), h, 20 * h).u == integrate(net, SchemeSpec::cn(1), h, 20 * h).u;
    }
    bool fixed = true;
    CellNetwork uni = cnln::testing::random_network(7, 40, 2.0, false, 30);
    for (auto& c : uni.cells) c.initial = 42.0;
    for (SchemeSpec s : bounded_schemes())
        for (double v : integrate(uni, s, 0.3, 30.0).u) fixed = fixed && std::abs(v - 42.0) <= 1e-12 * 42.0;

    const fs::path dir = fs::temp_directory_path() / "cnln_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& n) { return (dir / n).string(); };
    bool det = run_cli("gen-lattice --preset paper-table-1 --seed 9 --out " + p("a.json")) == 0 &&
               run_cli("gen-lattice --preset paper-table-1 --seed 9 --out " + p("b.json")) == 0 &&
               slurp(p("a.json")) == slurp(p("b.json"));
    const std::vector<std::string> commands{
        "solve --network " + p("a.json") + " --scheme ln3 --h 0.01",
        "sweep --network " + p("a.json") + " --mode h --schemes cn2,ln3,euler --h-list 0.02,0.005 --no-check",
        "sweep --preset paper-table-1 --seed 9 --mode gitc --gitc 420",
        "sweep --preset paper-sine --mode iteration --h-list 0.01 --max-stages 4",
        "bench --preset paper-table-1 --seeds 2 --first-seed 3",
    };
    for (std::size_t i = 0; i < commands.size(); ++i) {
        std::string first;
        for (unsigned threads : {1u, 3u, 8u}) {
            const std::string out = p("run" + std::to_string(i) + "_" + std::to_string(threads) + ".csv");
            det = det && run_cli(commands[i] + " --threads " + std::to_string(threads) + " --out " + out) == 0;
            const std::string text = slurp(out);
            if (threads == 1) first = text;
            det = det && !text.empty() && text == first;
        }
    }
    fs::remove_all(dir);
    return {ident && fixed && det, std::string("ln1==cn1 ") + (ident ? "yes" : "no") + ", fixed point " +
                                       (fixed ? "yes" : "no") + ", cli deterministic " + (det ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"order of accuracy on the sine line", order_of_accuracy},
        {"spatial error plateau", plateau_reproduction},
        {"max-min principle", max_min_principle},
        {"LN2 bracket nonnegativity", bracket_nonnegativity},
        {"dual oracle agreement", dual_oracle},
        {"Euler threshold", euler_threshold},
        {"moderate lattice error table", table_one},
        {"fixed GITC study", gitc_study},
        {"stiffness ratios", stiffness_ratios},
        {"identities and CLI determinism", identities_and_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
                  << o.detail << ")" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
