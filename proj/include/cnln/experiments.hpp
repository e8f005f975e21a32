#pragma once

#include "cnln/metrics.hpp"
#include "cnln/network.hpp"
#include "cnln/reference.hpp"
#include "cnln/schemes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cnln {

// ---------------------------------------------------------------------------
// Problems and references
// ---------------------------------------------------------------------------

struct SineLineProblem {
    std::size_t cells = 101;
    bool pin_ends = true;
};

using ProblemSpec = std::variant<SineLineProblem, LatticeSpec, CellNetwork>;

/// A built problem. `spacing` is set for the sine line, whose closed-form
/// solution is available at the cell centres x_i = i * spacing.
struct Problem {
    CellNetwork network;
    std::string label;
    std::optional<double> spacing;
};

inline Problem make_problem(const ProblemSpec& spec) {
    if (const auto* s = std::get_if<SineLineProblem>(&spec)) {
        return {build_sine_line(s->cells, s->pin_ends), "sine-line N=" + std::to_string(s->cells),
                sine_line_spacing(s->cells)};
    }
    if (const auto* l = std::get_if<LatticeSpec>(&spec)) {
        std::ostringstream label;
        label << "lattice " << l->nx << "x" << l->ny << " exp=[" << format_double(l->exponent_lo) << ","
              << format_double(l->exponent_hi) << "] seed=" << l->seed;
        return {build_random_lattice(*l), label.str(), std::nullopt};
    }
    const auto& net = std::get<CellNetwork>(spec);
    validate(net);
    return {net, "network N=" + std::to_string(net.size()), std::nullopt};
}

enum class ReferenceKind {
    exact,   ///< matrix-exponential solution of the ODE system
    oracle,  ///< adaptive Dormand-Prince solution of the ODE system
    pde,     ///< closed-form PDE solution (sine line only; includes spatial error)
};

inline std::string to_string(ReferenceKind k) {
    switch (k) {
    case ReferenceKind::exact: return "exact";
    case ReferenceKind::oracle: return "oracle";
    case ReferenceKind::pde: return "pde";
    }
    return {};
}

struct ReferenceSolution {
    std::vector<double> u;
    /// max |exact - oracle| when the consistency check ran.
    std::optional<double> oracle_gap;
};

/// Closed-form PDE values at the sine-line cell centres.
inline std::vector<double> sine_closed_form(const Problem& p, double t) {
    if (!p.spacing) throw std::invalid_argument("closed-form reference is only defined for the sine line");
    std::vector<double> u(p.network.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = analytic_sine(static_cast<double>(i) * *p.spacing, t);
    return u;
}

/// Computes the reference state at t_final. With `check` the exact and
/// oracle solutions are both computed and must agree to
/// 100 * tol * (1 + |u|_inf); a disagreement throws reference_error.
inline ReferenceSolution compute_reference(const Problem& p, ReferenceKind kind, double t_final, bool check,
                                           double oracle_tol = 1e-10) {
    ReferenceSolution ref;
    std::optional<std::vector<double>> exact;
    std::optional<std::vector<double>> oracle;
    if (check || kind == ReferenceKind::exact) exact = exact_solve(p.network, t_final).u;
    if (check || kind == ReferenceKind::oracle) oracle = ode_oracle(p.network, t_final, oracle_tol).u;
    if (check) {
        const double gap = max_d(*exact, *oracle);
        double norm = 0.0;
        for (double v : *exact) norm = std::max(norm, std::abs(v));
        ref.oracle_gap = gap;
        if (!(gap <= 100.0 * oracle_tol * (1.0 + norm))) {
            std::ostringstream msg;
            msg << "reference oracles disagree on " << p.label << ": max |exact - oracle| = " << gap;
            throw reference_error(msg.str());
        }
    }
    switch (kind) {
    case ReferenceKind::exact: ref.u = std::move(*exact); break;
    case ReferenceKind::oracle: ref.u = std::move(*oracle); break;
    case ReferenceKind::pde: ref.u = sine_closed_form(p, t_final); break;
    }
    return ref;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepConfig {
    ProblemSpec problem = SineLineProblem{};
    std::vector<SchemeSpec> schemes;     ///< h sweep
    std::vector<double> steps;           ///< h values [s]
    std::optional<std::uint64_t> gitc;   ///< total stage budget for the GITC sweep
    std::vector<unsigned> stage_counts;  ///< GITC sweep: LN stage counts (default 1..7)
    unsigned max_stages = 7;             ///< iteration sweep: k = 1..max_stages
    double t_final = 1.0;                ///< [s]
    ReferenceKind reference = ReferenceKind::exact;
    double oracle_tol = 1e-10;
    bool check_reference = true;
    unsigned workers = 1;
};

struct SweepResult {
    std::vector<std::string> metadata;  ///< written as "# key: value" lines
    std::vector<ErrorReport> reports;
};

namespace detail {

struct SweepJob {
    SchemeSpec scheme;
    double h;
};

inline SweepResult run_jobs(const SweepConfig& cfg, const std::vector<SweepJob>& jobs, const std::string& kind) {
    if (!(cfg.t_final > 0.0)) throw std::invalid_argument("final time must be positive");
    SweepResult out;
    out.metadata.push_back("sweep: " + kind);
    if (jobs.empty()) return out;

    const Problem p = make_problem(cfg.problem);
    const ReferenceSolution ref = compute_reference(p, cfg.reference, cfg.t_final, cfg.check_reference, cfg.oracle_tol);
    out.metadata.push_back("problem: " + p.label);
    out.metadata.push_back("t_final: " + format_double(cfg.t_final));
    out.metadata.push_back("reference: " + to_string(cfg.reference));
    if (ref.oracle_gap) out.metadata.push_back("reference check: max|exact-oracle| = " + format_double(*ref.oracle_gap));
    else out.metadata.push_back("reference check: skipped");

    const CoefficientSet coeffs = assemble(p.network);
    const std::vector<double> q = p.network.sources();
    const std::vector<double> u0 = p.network.initial_state();
    const std::vector<double> cap = p.network.capacities();

    out.reports.resize(jobs.size());
    parallel_tasks(jobs.size(), cfg.workers, [&](std::size_t i) {
        const SweepJob& job = jobs[i];
        try {
            const TemperatureState st = integrate(coeffs, q, u0, job.scheme, job.h, cfg.t_final);
            out.reports[i] = make_report(job.scheme.id(), job.scheme.stage_count(), job.h, ref.u, st.u, cap);
        } catch (const numerical_blowup&) {
            out.reports[i] = diverged_report(job.scheme.id(), job.scheme.stage_count(), job.h, p.network.size());
        }
    });
    for (const SweepJob& job : jobs) {
        if (job.scheme.family != Family::euler && job.scheme.stages > recommended_max_stages) {
            out.metadata.push_back("note: " + job.scheme.id() + " exceeds " + std::to_string(recommended_max_stages) +
                                   " stages per step");
            break;
        }
    }
    return out;
}

}  // namespace detail

/// Error of every (scheme, h) pair against the configured reference at t_final.
inline SweepResult run_h_sweep(const SweepConfig& cfg) {
    std::vector<detail::SweepJob> jobs;
    for (const SchemeSpec& s : cfg.schemes)
        for (double h : cfg.steps) jobs.push_back({s, h});
    return detail::run_jobs(cfg, jobs, "h");
}

/// CN and LN families with k = 1..max_stages at every configured h.
inline SweepResult run_iteration_sweep(const SweepConfig& cfg) {
    if (cfg.max_stages < 1 || cfg.max_stages > max_stages) throw std::invalid_argument("max stages must be in 1..16");
    std::vector<detail::SweepJob> jobs;
    for (Family f : {Family::cn, Family::ln})
        for (unsigned k = 1; k <= cfg.max_stages; ++k)
            for (double h : cfg.steps) jobs.push_back({{f, k}, h});
    return detail::run_jobs(cfg, jobs, "iteration");
}

/// LNk with h = t_final * k / GITC, so every run performs GITC stages.
inline SweepResult run_gitc_sweep(const SweepConfig& cfg) {
    if (!cfg.gitc || *cfg.gitc == 0) throw std::invalid_argument("GITC sweep needs a positive GITC");
    std::vector<unsigned> ks = cfg.stage_counts;
    if (ks.empty())
        for (unsigned k = 1; k <= 7; ++k) ks.push_back(k);
    std::vector<detail::SweepJob> jobs;
    for (unsigned k : ks) {
        if (k < 1 || k > max_stages) throw std::invalid_argument("stage count must be in 1..16");
        if (*cfg.gitc % k != 0)
            throw std::invalid_argument("GITC " + std::to_string(*cfg.gitc) + " is not divisible by stage count " +
                                        std::to_string(k));
        jobs.push_back({SchemeSpec::ln(k), cfg.t_final * static_cast<double>(k) / static_cast<double>(*cfg.gitc)});
    }
    SweepResult r = detail::run_jobs(cfg, jobs, "gitc");
    r.metadata.push_back("gitc: " + std::to_string(*cfg.gitc));
    return r;
}

/// Fitted order of one scheme's curve from sweep reports (largest h first).
/// Points below `floor` are dropped before fitting.
inline double fitted_order(const std::vector<ErrorReport>& reports, const std::string& scheme, double floor = 0.0) {
    std::vector<OrderPoint> pts;
    for (const auto& r : reports)
        if (r.scheme == scheme && r.max_d >= floor) pts.push_back({r.h, r.max_d});
    std::sort(pts.begin(), pts.end(), [](const OrderPoint& a, const OrderPoint& b) { return a.h > b.h; });
    return fit_order(pts);
}

// ---------------------------------------------------------------------------
// Tidy CSV
// ---------------------------------------------------------------------------

/// Writes the plot-ready CSV: "# " metadata lines, the header, then one row
/// per (scheme, k, h) in sweep order.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    for (const auto& m : r.metadata) os << "# " << m << '\n';
    os << report_csv_header << '\n';
    for (const auto& rep : r.reports) os << to_csv_row(rep) << '\n';
}

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}
}  // namespace detail

inline SweepResult read_sweep_csv(std::istream& is) {
    SweepResult r;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            r.metadata.push_back(line.substr(2));
            continue;
        }
        if (!header) {
            if (line != report_csv_header) throw std::invalid_argument("unexpected CSV header: " + line);
            header = true;
            continue;
        }
        const auto c = detail::split_csv(line);
        if (c.size() != 9) throw std::invalid_argument("malformed CSV row: " + line);
        ErrorReport rep;
        rep.scheme = c[0];
        rep.stages = static_cast<unsigned>(std::stoul(c[1]));
        rep.h = parse_double(c[2]);
        rep.cells = static_cast<std::size_t>(std::stoull(c[3]));
        rep.max_d = parse_double(c[4]);
        rep.sum_d = parse_double(c[5]);
        rep.s_en_d = parse_double(c[6]);
        rep.sum_dn = parse_double(c[7]);
        rep.s_en_dn = parse_double(c[8]);
        r.reports.push_back(std::move(rep));
    }
    if (!header) throw std::invalid_argument("CSV has no header line");
    return r;
}

// ---------------------------------------------------------------------------
// Benchmark tables
// ---------------------------------------------------------------------------

/// One solver of a benchmark table.
struct BenchSolver {
    enum class Kind { scheme, adaptive };
    Kind kind = Kind::scheme;
    SchemeSpec scheme;
    double h = 0.0;             ///< fixed stepsize [s], or
    double h_over_euler = 0.0;  ///< if > 0: h = h_over_euler * euler_max_step
    double tol = 1e-3;          ///< adaptive solver tolerance

    std::string label() const {
        if (kind == Kind::adaptive) return "dp45 tol=" + format_double(tol);
        if (h_over_euler > 0.0) return scheme.id() + " h=" + format_double(h_over_euler) + "*hmax";
        return scheme.id() + " h=" + format_double(h);
    }
};

struct BenchConfig {
    LatticeSpec lattice;
    std::vector<std::uint64_t> seeds{1};
    std::vector<BenchSolver> solvers;
    double t_final = 1.0;
    bool check_reference = false;
    std::size_t adaptive_budget = 20000;
    unsigned workers = 1;
};

struct BenchRow {
    std::string seed;  ///< seed number, or "median" for summary rows
    std::string solver;
    double h = 0.0;
    double cost = 0.0;  ///< stage (or right-hand-side) evaluations times N
    double max_d = 0.0;
    double sum_d = 0.0;
    double s_en_d = 0.0;
    std::string status;  ///< ok | unstable | budget-exceeded, or "ok=a/b" in summaries
    double seconds = 0.0;  ///< wall clock, informational only (never written to CSV)
};

inline constexpr const char* bench_csv_header = "seed,solver,h,cost,max_d,sum_d,s_en_d,status";

/// Runs every solver on every seed's lattice against the exact solution.
inline std::vector<BenchRow> run_benchmark(const BenchConfig& cfg) {
    struct Job {
        std::size_t seed_index;
        std::size_t solver_index;
    };
    std::vector<BenchRow> rows(cfg.seeds.size() * cfg.solvers.size());
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        LatticeSpec spec = cfg.lattice;
        spec.seed = cfg.seeds[s];
        const Problem p = make_problem(spec);
        const ReferenceSolution ref = compute_reference(p, ReferenceKind::exact, cfg.t_final, cfg.check_reference);
        const CoefficientSet coeffs = assemble(p.network);
        const std::vector<double> q = p.network.sources();
        const std::vector<double> u0 = p.network.initial_state();
        const std::vector<double> cap = p.network.capacities();
        const double n = static_cast<double>(p.network.size());

        bool need_hmax = false;
        for (const auto& sv : cfg.solvers)
            need_hmax = need_hmax || (sv.kind == BenchSolver::Kind::scheme && sv.scheme.family == Family::euler);
        const double hmax = need_hmax ? euler_max_step(spectrum(p.network)) : 0.0;

        parallel_tasks(cfg.solvers.size(), cfg.workers, [&](std::size_t k) {
            const BenchSolver& sv = cfg.solvers[k];
            BenchRow row;
            row.seed = std::to_string(cfg.seeds[s]);
            row.solver = sv.label();
            const auto t0 = std::chrono::steady_clock::now();
            try {
                if (sv.kind == BenchSolver::Kind::adaptive) {
                    OracleStats stats;
                    const TemperatureState st = dormand_prince(p.network, cfg.t_final, sv.tol, cfg.adaptive_budget, &stats);
                    row.cost = static_cast<double>(stats.rhs_evaluations) * n;
                    row.h = cfg.t_final / static_cast<double>(std::max<std::size_t>(1, stats.accepted));
                    row.max_d = max_d(ref.u, st.u);
                    row.sum_d = sum_d(ref.u, st.u);
                    row.s_en_d = s_en_d(ref.u, st.u, cap);
                    row.status = "ok";
                } else {
                    row.h = sv.h_over_euler > 0.0 ? sv.h_over_euler * hmax : sv.h;
                    row.cost = static_cast<double>(step_count(row.h, cfg.t_final)) * sv.scheme.stage_count() * n;
                    const TemperatureState st = integrate(coeffs, q, u0, sv.scheme, row.h, cfg.t_final);
                    row.max_d = max_d(ref.u, st.u);
                    row.sum_d = sum_d(ref.u, st.u);
                    row.s_en_d = s_en_d(ref.u, st.u, cap);
                    row.status = (sv.scheme.family == Family::euler && row.h > hmax) ? "unstable" : "ok";
                }
            } catch (const numerical_blowup&) {
                row.max_d = row.sum_d = row.s_en_d = std::numeric_limits<double>::infinity();
                row.status = "unstable";
            } catch (const oracle_budget_exceeded&) {
                row.max_d = row.sum_d = row.s_en_d = std::numeric_limits<double>::infinity();
                row.status = "budget-exceeded";
            }
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rows[s * cfg.solvers.size() + k] = std::move(row);
        });
    }
    return rows;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// One "median" row per solver, in first-appearance order.
inline std::vector<BenchRow> summarize(const std::vector<BenchRow>& rows) {
    std::vector<std::string> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.solver) == order.end()) order.push_back(r.solver);
    std::vector<BenchRow> out;
    for (const auto& name : order) {
        std::vector<double> h, cost, md, sd, ed;
        std::size_t ok = 0, total = 0;
        double secs = 0.0;
        for (const auto& r : rows) {
            if (r.solver != name) continue;
            h.push_back(r.h);
            cost.push_back(r.cost);
            md.push_back(r.max_d);
            sd.push_back(r.sum_d);
            ed.push_back(r.s_en_d);
            ok += r.status == "ok";
            ++total;
            secs += r.seconds;
        }
        out.push_back({"median", name, median(h), median(cost), median(md), median(sd), median(ed),
                       "ok=" + std::to_string(ok) + "/" + std::to_string(total), secs / static_cast<double>(total)});
    }
    return out;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows,
                            const std::vector<std::string>& metadata = {}) {
    for (const auto& m : metadata) os << "# " << m << '\n';
    os << bench_csv_header << '\n';
    for (const auto& r : rows) {
        os << r.seed << ',' << r.solver << ',' << format_double(r.h) << ',' << format_double(r.cost) << ','
           << format_double(r.max_d) << ',' << format_double(r.sum_d) << ',' << format_double(r.s_en_d) << ','
           << r.status << '\n';
    }
}

/// Table presets: 1 is the 1000-cell moderate lattice, 2 the 5000-cell stiff one.
inline BenchConfig bench_preset(int table, std::vector<std::uint64_t> seeds) {
    BenchConfig cfg;
    cfg.seeds = std::move(seeds);
    auto fixed = [](SchemeSpec s, double h) { return BenchSolver{BenchSolver::Kind::scheme, s, h, 0.0, 0.0}; };
    auto relative = [](double f) {
        return BenchSolver{BenchSolver::Kind::scheme, SchemeSpec::euler(), 0.0, f, 0.0};
    };
    BenchSolver adaptive{BenchSolver::Kind::adaptive, SchemeSpec::euler(), 0.0, 0.0, 1e-3};
    if (table == 1) {
        cfg.lattice = moderate_lattice(0);
        cfg.solvers = {fixed(SchemeSpec::cn(2), 0.02), fixed(SchemeSpec::ln(3), 0.05), fixed(SchemeSpec::ln(3), 0.01),
                       fixed(SchemeSpec::euler(), 0.02), relative(0.5), adaptive};
    } else if (table == 2) {
        cfg.lattice = stiff_lattice(0);
        cfg.solvers = {fixed(SchemeSpec::cn(2), 0.002), fixed(SchemeSpec::cn(1), 2e-4), fixed(SchemeSpec::cn(2), 1e-4),
                       fixed(SchemeSpec::ln(4), 1e-4),  fixed(SchemeSpec::ln(3), 2e-5), fixed(SchemeSpec::ln(3), 1e-5),
                       fixed(SchemeSpec::euler(), 0.002), adaptive};
    } else {
        throw std::invalid_argument("unknown benchmark table " + std::to_string(table));
    }
    return cfg;
}

}  // namespace cnln
