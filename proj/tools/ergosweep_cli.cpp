// Command-line front end for the ergodic sediment-replenishment solver.
//
//   ergosweep exact       --config FILE [--out FILE]
//   ergosweep solve       --config FILE [--out FILE]
//   ergosweep converge    --config FILE [--out FILE] [--threads N]
//   ergosweep alpha-sweep --config FILE [--out FILE] [--threads N]
//   ergosweep gamma-sweep --config FILE [--out FILE] [--threads N]
//   ergosweep simulate    --config FILE [--out FILE] [--seed S] [--threads N]
//
// Exit status: 0 on success, 2 on invalid input, 3 when the solver fails to
// converge, 1 for anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ergosweep/ergosweep.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

ergosweep::ExperimentConfig load(const Options& opt) {
    auto cfg = ergosweep::load_config(opt.config);
    if (opt.seed)
        cfg.path.master_seed = *opt.seed;
    if (opt.threads)
        cfg.threads = *opt.threads;
    return cfg;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw ergosweep::config_error("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

int cmd_exact(const Options& opt) {
    const auto report = ergosweep::run_exact(load(opt));
    Output out(opt.out);
    ergosweep::write_exact_json(report, out.stream());
    return 0;
}

int cmd_solve(const Options& opt) {
    const auto cfg = load(opt);
    const auto sol = ergosweep::run_solve(cfg);
    const ergosweep::Grid grid(cfg.m);
    Output out(opt.out);
    ergosweep::write_solution_csv(sol, grid, out.stream());
    std::cerr << ergosweep::solution_summary(sol, grid).dump() << '\n';
    return 0;
}

int cmd_converge(const Options& opt) {
    const auto cfg = load(opt);
    Output out(opt.out);
    const auto report = ergosweep::run_converge(cfg, [&](const ergosweep::ConvergenceReport& partial) {
        ergosweep::write_convergence_csv(partial, out.stream());
    });
    ergosweep::write_convergence_csv(report, out.stream());
    std::fprintf(stderr, "kappa = %.17g, H_hat = %.17g\n", report.exact.kappa, report.exact.h_hat);
    return 0;
}

int report_sweep(const std::vector<ergosweep::SweepRecord>& records, const Options& opt,
                 bool with_ambiguity) {
    Output out(opt.out);
    ergosweep::write_sweep_csv(records, out.stream(), with_ambiguity);
    int failed = 0;
    for (const auto& r : records) {
        if (!r.ok()) {
            std::fprintf(stderr, "point %.17g failed: %s\n", r.param, r.error.c_str());
            ++failed;
        }
    }
    return failed == 0 ? 0 : 3;
}

int cmd_alpha_sweep(const Options& opt) {
    return report_sweep(ergosweep::run_alpha_sweep(load(opt)), opt, false);
}

int cmd_gamma_sweep(const Options& opt) {
    return report_sweep(ergosweep::run_gamma_sweep(load(opt)), opt, true);
}

int cmd_simulate(const Options& opt) {
    const auto stats = ergosweep::run_simulate(load(opt));
    Output out(opt.out);
    ergosweep::write_path_stats_json(stats, out.stream());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ergodic replenishment control of a jump-driven storage process"};
    app.require_subcommand(1);

    Options opt;
    int (*handler)(const Options&) = nullptr;

    auto add = [&](const char* name, const char* help, int (*fn)(const Options&),
                   bool threaded, bool seeded) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "key = value configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output file (default: stdout)");
        if (threaded)
            sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
        if (seeded)
            sub->add_option("--seed", opt.seed, "master seed overriding the config");
        sub->callback([&handler, fn] { handler = fn; });
    };
    add("exact", "closed-form kappa, H and potential", cmd_exact, false, false);
    add("solve", "fast-sweep solve on one grid", cmd_solve, false, false);
    add("converge", "grid refinement study against the closed form", cmd_converge, true, false);
    add("alpha-sweep", "H and threshold over alpha (normalized measure)", cmd_alpha_sweep, true, false);
    add("gamma-sweep", "H, threshold and worst-case ambiguity over gamma", cmd_gamma_sweep, true, false);
    add("simulate", "Monte Carlo ergodic cost of a policy", cmd_simulate, true, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return handler(opt);
    } catch (const ergosweep::non_convergence_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ergosweep::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ergosweep::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ergosweep::unsupported_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
