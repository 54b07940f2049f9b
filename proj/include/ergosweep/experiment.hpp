#pragma once

// Experiment drivers behind the command-line tool: flat key = value
// configuration, convergence study against the closed form, parameter sweeps
// over alpha and gamma, single solves and Monte Carlo runs. Every command
// writes its primary output (CSV or JSON) to a stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "exact_solution.hpp"
#include "fast_sweep_solver.hpp"
#include "hjb_discretization.hpp"
#include "levy_model.hpp"
#include "parallel.hpp"
#include "path_simulator.hpp"
#include "robust_hjbi.hpp"

namespace ergosweep {

enum class ConvergeMode { Solver, Exact };
enum class SimPolicy { Exact, Null, Solved };

struct ExperimentConfig {
    // jump model
    double alpha = 0.5;
    double lambda = 0.2;
    double tempering = 0.0;
    // control problem
    ControlParams control{};
    // solver
    std::size_t m = 100;
    SweepConfig sweep{};
    // convergence study
    std::vector<std::size_t> m_list{50, 100, 200, 400, 800, 1600};
    ConvergeMode converge_mode = ConvergeMode::Solver;
    // alpha sweep
    double alpha_min = 0.01;
    double alpha_max = 0.99;
    double alpha_step = 0.01;
    // gamma sweep (log-spaced, inclusive)
    double gamma_min = 1e-3;
    double gamma_max = 10.0;
    std::size_t gamma_points = 13;
    // simulation
    PathConfig path{};
    SimPolicy policy = SimPolicy::Exact;
    std::string path_dump;
    // parallelism hint, never changes results
    unsigned threads = 1;

    JumpModel jump_model() const {
        return tempering > 0.0 ? JumpModel::tempered(alpha, lambda, tempering)
                               : JumpModel::stable(alpha, lambda);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("config field '" + key + "': expected a real number, got '" + value + "'");
    }
}

inline std::uint64_t parse_count(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        throw config_error("config field '" + key + "': expected a non-negative integer, got '" +
                           value + "'");
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw config_error("config field '" + key + "': integer out of range");
    }
}

inline std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<std::size_t>(parse_count(key, trim(item))));
    if (out.empty())
        throw config_error("config field '" + key + "': empty list");
    return out;
}

} // namespace detail

/// Reads `key = value` lines; `#` starts a comment. Unknown keys are errors.
inline ExperimentConfig parse_config(std::istream& in) {
    using detail::parse_count;
    using detail::parse_real;
    ExperimentConfig cfg;
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
        {"alpha", [&](auto& k, auto& v) { cfg.alpha = parse_real(k, v); }},
        {"lambda", [&](auto& k, auto& v) { cfg.lambda = parse_real(k, v); }},
        {"tempering", [&](auto& k, auto& v) { cfg.tempering = parse_real(k, v); }},
        {"mu", [&](auto& k, auto& v) { cfg.control.mu = parse_real(k, v); }},
        {"c", [&](auto& k, auto& v) { cfg.control.c = parse_real(k, v); }},
        {"d", [&](auto& k, auto& v) { cfg.control.d = parse_real(k, v); }},
        {"capital_lambda", [&](auto& k, auto& v) { cfg.control.capital_lambda = parse_real(k, v); }},
        {"gamma", [&](auto& k, auto& v) { cfg.control.gamma = parse_real(k, v); }},
        {"action_set",
         [&](auto& k, auto& v) {
             if (v == "xi1" || v == "Xi1")
                 cfg.control.action_set = ActionSet::Xi1;
             else if (v == "xi2" || v == "Xi2")
                 cfg.control.action_set = ActionSet::Xi2;
             else
                 throw config_error("config field '" + k + "': expected xi1 or xi2, got '" + v + "'");
         }},
        {"m", [&](auto& k, auto& v) { cfg.m = parse_count(k, v); }},
        {"relaxation", [&](auto& k, auto& v) { cfg.sweep.relaxation = parse_real(k, v); }},
        {"tol",
         [&](auto& k, auto& v) { cfg.sweep.tol_phi = cfg.sweep.tol_h = parse_real(k, v); }},
        {"max_iters", [&](auto& k, auto& v) { cfg.sweep.max_iters = parse_count(k, v); }},
        {"m_list", [&](auto& k, auto& v) { cfg.m_list = detail::parse_count_list(k, v); }},
        {"converge_mode",
         [&](auto& k, auto& v) {
             if (v == "solver")
                 cfg.converge_mode = ConvergeMode::Solver;
             else if (v == "exact")
                 cfg.converge_mode = ConvergeMode::Exact;
             else
                 throw config_error("config field '" + k + "': expected solver or exact");
         }},
        {"alpha_min", [&](auto& k, auto& v) { cfg.alpha_min = parse_real(k, v); }},
        {"alpha_max", [&](auto& k, auto& v) { cfg.alpha_max = parse_real(k, v); }},
        {"alpha_step", [&](auto& k, auto& v) { cfg.alpha_step = parse_real(k, v); }},
        {"gamma_min", [&](auto& k, auto& v) { cfg.gamma_min = parse_real(k, v); }},
        {"gamma_max", [&](auto& k, auto& v) { cfg.gamma_max = parse_real(k, v); }},
        {"gamma_points", [&](auto& k, auto& v) { cfg.gamma_points = parse_count(k, v); }},
        {"seed", [&](auto& k, auto& v) { cfg.path.master_seed = parse_count(k, v); }},
        {"dt", [&](auto& k, auto& v) { cfg.path.dt = parse_real(k, v); }},
        {"horizon", [&](auto& k, auto& v) { cfg.path.horizon = parse_real(k, v); }},
        {"n_paths", [&](auto& k, auto& v) { cfg.path.n_paths = parse_count(k, v); }},
        {"x0", [&](auto& k, auto& v) { cfg.path.x0 = parse_real(k, v); }},
        {"policy",
         [&](auto& k, auto& v) {
             if (v == "exact")
                 cfg.policy = SimPolicy::Exact;
             else if (v == "null")
                 cfg.policy = SimPolicy::Null;
             else if (v == "solved")
                 cfg.policy = SimPolicy::Solved;
             else
                 throw config_error("config field '" + k + "': expected exact, null or solved");
         }},
        {"path_dump", [&](auto&, auto& v) { cfg.path_dump = v; }},
        {"threads",
         [&](auto& k, auto& v) { cfg.threads = static_cast<unsigned>(parse_count(k, v)); }},
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->second(key, value);
    }

    // Field-level validation up front so every command fails the same way.
    try {
        cfg.jump_model();
        cfg.control.validate();
    } catch (const domain_error& e) {
        throw config_error(e.what());
    }
    cfg.sweep.validate();
    if (cfg.m < 2)
        throw config_error("config field 'm': at least 2 cells required");
    if (!(cfg.alpha_min > 0.0 && cfg.alpha_max < 1.0 && cfg.alpha_min <= cfg.alpha_max &&
          cfg.alpha_step > 0.0))
        throw config_error("config fields 'alpha_min/alpha_max/alpha_step': need 0 < min <= max < 1, step > 0");
    if (!(cfg.gamma_min > 0.0 && cfg.gamma_min <= cfg.gamma_max) || cfg.gamma_points == 0)
        throw config_error("config fields 'gamma_min/gamma_max/gamma_points': need 0 < min <= max, points >= 1");
    cfg.path.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file '" + path + "'");
    return parse_config(in);
}

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

} // namespace detail

// ---------------------------------------------------------------------------
// exact

struct ExactReport {
    ExactSolution solution;
    std::vector<double> x;
    std::vector<double> phi;
};

inline ExactReport run_exact(const ExperimentConfig& cfg) {
    ControlParams params = cfg.control;
    params.action_set = ActionSet::Xi2;
    ExactReport report;
    report.solution = exact_solution(cfg.jump_model(), params);
    const Grid grid(cfg.m);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        report.x.push_back(grid.x(i));
        report.phi.push_back(exact_potential(grid.x(i), report.solution));
    }
    return report;
}

inline void write_exact_json(const ExactReport& r, std::ostream& out) {
    nlohmann::json j;
    j["kappa"] = r.solution.kappa;
    j["h_hat"] = r.solution.h_hat;
    j["alpha"] = r.solution.alpha;
    j["x"] = r.x;
    j["phi"] = r.phi;
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// solve

inline DiscreteSolution run_solve(const ExperimentConfig& cfg) {
    const auto system = build(cfg.m, cfg.control, cfg.jump_model());
    if (cfg.control.gamma > 0.0)
        return solve_robust(system, cfg.control.gamma, cfg.sweep);
    return solve(system, cfg.sweep);
}

inline void write_solution_csv(const DiscreteSolution& sol, const Grid& grid, std::ostream& out) {
    out << "i,x,phi,eta,a_star\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << i << ',' << detail::num(grid.x(i)) << ',' << detail::num(sol.phi[i]) << ','
            << detail::num(sol.eta_star[i]) << ','
            << (sol.a_star ? detail::num((*sol.a_star)[i]) : std::string{}) << '\n';
    }
}

inline nlohmann::json solution_summary(const DiscreteSolution& sol, const Grid& grid) {
    nlohmann::json j;
    j["H"] = sol.h_value;
    j["iterations"] = sol.iters;
    j["residual"] = sol.final_residual;
    try {
        const auto xb = extract_threshold(sol, grid);
        j["x_bar"] = xb ? nlohmann::json(*xb) : nlohmann::json(nullptr);
    } catch (const threshold_structure_error& e) {
        j["x_bar"] = nullptr;
        j["threshold_error"] = e.what();
    }
    return j;
}

// ---------------------------------------------------------------------------
// converge

struct ConvergenceRow {
    std::size_t m = 0;
    double h_value = 0.0;
    double err_phi = 0.0;
    double err_h = 0.0;
    std::optional<double> rate_phi;  // log2(e_M / e_2M), defined when 2M follows M
    std::optional<double> rate_h;
    std::size_t iters = 0;
};

struct ConvergenceReport {
    ExactSolution exact;
    std::vector<ConvergenceRow> rows;
};

inline std::optional<double> convergence_rate(double coarse, double fine) {
    if (!(coarse > 0.0) || !(fine > 0.0))
        return std::nullopt;
    return std::log2(coarse / fine);
}

inline void fill_rates(ConvergenceReport& report) {
    auto& rows = report.rows;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        if (rows[k + 1].m != 2 * rows[k].m)
            continue;
        rows[k].rate_phi = convergence_rate(rows[k].err_phi, rows[k + 1].err_phi);
        rows[k].rate_h = convergence_rate(rows[k].err_h, rows[k + 1].err_h);
    }
}

inline ConvergenceRow measure_against_exact(const DiscreteSolution& sol, const Grid& grid,
                                            const ExactSolution& exact) {
    ConvergenceRow row;
    row.m = grid.m;
    row.h_value = sol.h_value;
    row.iters = sol.iters;
    row.err_h = std::abs(sol.h_value - exact.h_hat);
    for (std::size_t i = 0; i < grid.size(); ++i)
        row.err_phi = std::max(row.err_phi, std::abs(sol.phi[i] - exact_potential(grid.x(i), exact)));
    return row;
}

/// Solves at every resolution in cfg.m_list (Xi2, stable measure) and
/// compares with the closed form. On solver failure the rows completed before
/// the failing resolution are handed to `partial` and the error is rethrown.
inline ConvergenceReport run_converge(const ExperimentConfig& cfg,
                                      const std::function<void(const ConvergenceReport&)>& partial = {}) {
    ControlParams params = cfg.control;
    params.action_set = ActionSet::Xi2;
    if (params.gamma != 0.0)
        throw config_error("converge: the closed form is ambiguity neutral; set gamma = 0");
    const JumpModel model = cfg.jump_model();
    ConvergenceReport report;
    report.exact = exact_solution(model, params);

    const auto& ms = cfg.m_list;
    std::vector<std::optional<ConvergenceRow>> rows(ms.size());
    std::vector<std::exception_ptr> failures(ms.size());
    parallel_for(ms.size(), cfg.threads, [&](std::size_t k) {
        try {
            const Grid grid(ms[k]);
            DiscreteSolution sol;
            if (cfg.converge_mode == ConvergeMode::Exact) {
                sol.h_value = report.exact.h_hat;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    sol.phi.push_back(exact_potential(grid.x(i), report.exact));
            } else {
                sol = solve(build(grid, params, model), cfg.sweep);
            }
            rows[k] = measure_against_exact(sol, grid, report.exact);
        } catch (...) {
            failures[k] = std::current_exception();
        }
    });
    for (std::size_t k = 0; k < ms.size(); ++k) {
        if (failures[k]) {
            fill_rates(report);
            if (partial)
                partial(report);
            std::rethrow_exception(failures[k]);
        }
        report.rows.push_back(*rows[k]);
    }
    fill_rates(report);
    return report;
}

inline void write_convergence_csv(const ConvergenceReport& report, std::ostream& out) {
    out << "M,err_phi,err_H,rate_phi,rate_H\n";
    for (const auto& r : report.rows)
        out << r.m << ',' << detail::num(r.err_phi) << ',' << detail::num(r.err_h) << ','
            << detail::opt_num(r.rate_phi) << ',' << detail::opt_num(r.rate_h) << '\n';
}

// ---------------------------------------------------------------------------
// sweeps

struct AmbiguitySummary {
    double min = 1.0;
    std::optional<double> below;  // a* at x_bar - h
    std::optional<double> above;  // a* at x_bar + h
};

struct SweepRecord {
    double param = 0.0;
    double h_value = std::nan("");
    std::optional<double> x_bar;
    std::optional<AmbiguitySummary> ambiguity;
    std::string error;  // non-empty when this point failed

    bool ok() const { return error.empty(); }
};

inline std::vector<double> alpha_grid(const ExperimentConfig& cfg) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(
        std::floor((cfg.alpha_max - cfg.alpha_min) / cfg.alpha_step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k)
        out.push_back(cfg.alpha_min + static_cast<double>(k) * cfg.alpha_step);
    return out;
}

inline std::vector<double> gamma_grid(const ExperimentConfig& cfg) {
    if (cfg.gamma_points == 1)
        return {cfg.gamma_min};
    std::vector<double> out;
    const double lo = std::log10(cfg.gamma_min);
    const double hi = std::log10(cfg.gamma_max);
    for (std::size_t k = 0; k < cfg.gamma_points; ++k)
        out.push_back(std::pow(10.0, lo + (hi - lo) * static_cast<double>(k) /
                                              static_cast<double>(cfg.gamma_points - 1)));
    return out;
}

namespace detail {

inline void record_solution(SweepRecord& rec, const DiscreteSolution& sol, const Grid& grid) {
    rec.h_value = sol.h_value;
    rec.x_bar = extract_threshold(sol, grid);
    if (sol.a_star) {
        const auto& a = *sol.a_star;
        AmbiguitySummary s;
        s.min = *std::min_element(a.begin(), a.end());
        if (rec.x_bar) {
            const auto i = static_cast<std::size_t>(std::llround(*rec.x_bar / grid.h));
            if (i > 0)
                s.below = a[i - 1];
            if (i + 1 < a.size())
                s.above = a[i + 1];
        }
        rec.ambiguity = s;
    }
}

template <class SolveFn>
std::vector<SweepRecord> run_sweep(const std::vector<double>& values, unsigned threads,
                                   SolveFn&& solve_at) {
    std::vector<SweepRecord> records(values.size());
    parallel_for(values.size(), threads, [&](std::size_t k) {
        SweepRecord& rec = records[k];
        rec.param = values[k];
        try {
            solve_at(rec);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });
    return records;
}

} // namespace detail

/// H and x_bar over the alpha grid with Xi1 and the stable measure rescaled
/// by lambda -> alpha lambda at every point.
inline std::vector<SweepRecord> run_alpha_sweep(const ExperimentConfig& cfg) {
    ControlParams params = cfg.control;
    params.action_set = ActionSet::Xi1;
    const Grid grid(cfg.m);
    return detail::run_sweep(alpha_grid(cfg), cfg.threads, [&](SweepRecord& rec) {
        const JumpModel model = normalized(JumpModel::stable(rec.param, cfg.lambda));
        const auto system = build(grid, params, model);
        const auto sol = params.gamma > 0.0 ? solve_robust(system, params.gamma, cfg.sweep)
                                            : solve(system, cfg.sweep);
        detail::record_solution(rec, sol, grid);
    });
}

/// H, x_bar and the worst-case ambiguity over log-spaced gamma, Xi1.
inline std::vector<SweepRecord> run_gamma_sweep(const ExperimentConfig& cfg) {
    ControlParams params = cfg.control;
    params.action_set = ActionSet::Xi1;
    const Grid grid(cfg.m);
    const auto system = build(grid, params, cfg.jump_model());
    return detail::run_sweep(gamma_grid(cfg), cfg.threads, [&](SweepRecord& rec) {
        const auto sol = solve_robust(system, rec.param, cfg.sweep);
        detail::record_solution(rec, sol, grid);
    });
}

inline void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& out,
                            bool with_ambiguity) {
    out << "param,H,x_bar,has_threshold";
    if (with_ambiguity)
        out << ",a_min,a_below,a_above";
    out << '\n';
    for (const auto& r : records) {
        out << detail::num(r.param) << ',' << detail::num(r.h_value) << ','
            << detail::opt_num(r.x_bar) << ',' << (r.x_bar ? 1 : 0);
        if (with_ambiguity) {
            if (r.ambiguity)
                out << ',' << detail::num(r.ambiguity->min) << ','
                    << detail::opt_num(r.ambiguity->below) << ','
                    << detail::opt_num(r.ambiguity->above);
            else
                out << ",,,";
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// simulate

inline Policy make_policy(const ExperimentConfig& cfg) {
    switch (cfg.policy) {
    case SimPolicy::Null:
        return null_policy();
    case SimPolicy::Exact: {
        ControlParams params = cfg.control;
        params.action_set = ActionSet::Xi2;
        return exact_policy_rule(kappa(cfg.jump_model(), params.mu), params);
    }
    case SimPolicy::Solved:
        return table_policy(run_solve(cfg), cfg.control.action_set);
    }
    throw config_error("simulate: unknown policy");
}

inline PathStats run_simulate(const ExperimentConfig& cfg) {
    const Policy policy = make_policy(cfg);
    if (!cfg.path_dump.empty()) {
        std::ofstream dump(cfg.path_dump);
        if (!dump)
            throw config_error("config field 'path_dump': cannot open '" + cfg.path_dump + "'");
        simulate_path(cfg.control, cfg.jump_model(), policy, cfg.path, 0, &dump);
    }
    return simulate(cfg.control, cfg.jump_model(), policy, cfg.path, cfg.threads);
}

inline void write_path_stats_json(const PathStats& s, std::ostream& out) {
    nlohmann::json j;
    j["ergodic_cost_mean"] = s.ergodic_cost_mean;
    j["ergodic_cost_stderr"] = s.ergodic_cost_stderr;
    j["occupation_zero_fraction"] = s.occupation_zero_fraction;
    j["replenish_count_rate"] = s.replenish_count_rate;
    j["proportional_cost_rate"] = s.proportional_cost_rate;
    out << j.dump(2) << '\n';
}

} // namespace ergosweep
