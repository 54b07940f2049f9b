#pragma once

// Monte Carlo simulation of the controlled storage process
//
//   dX = -S(X) [X > 0] dt - dL^,   dL^ = min{dL, X-},
//
// with S(x) = mu x^{1-alpha}, L a one-sided stable (or tempered stable)
// subordinator and replenishment X -> X + eta(X) at the arrival times of an
// independent Poisson process of intensity Lambda. The time-averaged cost is
// the time spent at X = 0 plus c eta + d per replenishment, divided by T.
//
// Per time step of length dt: the exact subordinator increment is applied
// first, then the drift flow x^alpha -> x^alpha - mu alpha t runs to the end
// of the step, interrupted at each observation time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

#include "errors.hpp"
#include "exact_solution.hpp"
#include "fast_sweep_solver.hpp"
#include "levy_model.hpp"
#include "parallel.hpp"

namespace ergosweep {

struct PathConfig {
    double dt = 0.01;
    double horizon = 1000.0;
    double x0 = 0.5;
    std::size_t n_paths = 1;
    std::uint64_t master_seed = 12345;

    void validate() const {
        if (!(dt > 0.0) || !(horizon > 0.0))
            throw config_error("path config: dt and horizon must be positive");
        if (!(x0 >= 0.0 && x0 <= 1.0))
            throw config_error("path config: x0 must lie in [0,1]");
        if (n_paths == 0)
            throw config_error("path config: n_paths must be at least 1");
        if (dt > horizon)
            throw config_error("path config: dt exceeds the horizon");
    }

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
};

struct PathStats {
    double ergodic_cost_mean = 0.0;
    double ergodic_cost_stderr = 0.0;
    double occupation_zero_fraction = 0.0;
    double replenish_count_rate = 0.0;
    double proportional_cost_rate = 0.0;
};

// Per-path random stream: 64-bit Mersenne twister with uniforms built from
// the top 53 bits, so draws are reproducible across standard libraries.
class PathRng {
public:
    explicit PathRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer applied to (master, index).
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace detail {

// Kanter's representation of a positive stable variable with
// E[exp(-u S)] = exp(-u^alpha).
inline double unit_positive_stable(double alpha, PathRng& rng) {
    const double u = std::numbers::pi * rng.uniform();
    const double e = rng.exponential(1.0);
    const double a = alpha;
    return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) *
           std::pow(std::sin((1.0 - a) * u) / e, (1.0 - a) / a);
}

} // namespace detail

/// Increment L_{t+dt} - L_t, exact in law. Tempered increments are obtained
/// by accepting a stable draw s with probability exp(-b s).
inline double stable_increment(const JumpModel& model, double dt, PathRng& rng) {
    if (!(dt > 0.0))
        throw domain_error("stable_increment: dt must be positive");
    const double a = model.alpha;
    const double scale =
        std::pow(dt * model.lambda * std::tgamma(1.0 - a) / a, 1.0 / a);
    if (model.tempering == 0.0)
        return scale * detail::unit_positive_stable(a, rng);
    for (;;) {
        const double s = scale * detail::unit_positive_stable(a, rng);
        if (rng.uniform() <= std::exp(-model.tempering * s))
            return s;
    }
}

/// Exact solution of dx/dt = -mu x^{1-alpha} stopped at 0.
inline double drift_flow(double x, double t, double mu, double alpha) {
    if (x <= 0.0 || mu == 0.0)
        return x;
    const double level = std::pow(x, alpha) - mu * alpha * t;
    return level > 0.0 ? std::pow(level, 1.0 / alpha) : 0.0;
}

/// Time for the drift alone to empty the storage from x.
inline double drift_hitting_time(double x, double mu, double alpha) {
    if (x <= 0.0)
        return 0.0;
    if (mu == 0.0)
        return std::numeric_limits<double>::infinity();
    return std::pow(x, alpha) / (mu * alpha);
}

inline double apply_jump(double x, double jump) { return x - std::min(x, jump); }

/// Drift over dt followed by a truncated jump.
inline double step(double x, double dt, double jump, double mu, double alpha) {
    return apply_jump(drift_flow(x, dt, mu, alpha), jump);
}

/// Replenishment amount as a function of the observed state.
using Policy = std::function<double(double)>;

inline Policy null_policy() {
    return [](double) { return 0.0; };
}

/// Full replenishment at depletion when c + d <= kappa.
inline Policy exact_policy_rule(double kappa, const ControlParams& params) {
    const ControlParams p = params;
    return [kappa, p](double x) { return exact_policy(x, kappa, p); };
}

/// Policy read off a solved grid at the nearest node. Acting always means
/// filling to 1; under Xi2 it is only admissible at x = 0.
inline Policy table_policy(const DiscreteSolution& solution, ActionSet action_set) {
    const std::vector<double> eta = solution.eta_star;
    const double m = static_cast<double>(eta.size() - 1);
    return [eta, m, action_set](double x) {
        if (action_set == ActionSet::Xi2 && x != 0.0)
            return 0.0;
        const auto i = static_cast<std::size_t>(std::llround(std::clamp(x, 0.0, 1.0) * m));
        return eta[i] > 0.0 ? 1.0 - x : 0.0;
    };
}

struct PathTally {
    double zero_time = 0.0;
    double replenish_cost = 0.0;
    double proportional_cost = 0.0;
    std::size_t replenish_count = 0;
    double elapsed = 0.0;

    double ergodic_cost() const { return (zero_time + replenish_cost) / elapsed; }
};

/// One path. When `dump` is given, writes rows t,x,event,cost_increment.
inline PathTally simulate_path(const ControlParams& params, const JumpModel& model,
                               const Policy& policy, const PathConfig& config,
                               std::uint64_t path_index, std::ostream* dump = nullptr) {
    PathRng rng(child_seed(config.master_seed, path_index));
    const double mu = params.mu;
    const double a = model.alpha;
    const double lam = params.capital_lambda;
    const std::size_t n_steps = config.steps();

    PathTally tally;
    double x = config.x0;
    double next_obs = rng.exponential(lam);

    auto row = [dump](double t, double xv, const char* event, double cost) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.10f,%.17g,%s,%.17g\n", t, xv, event, cost);
        *dump << buf;
    };
    if (dump)
        *dump << "t,x,event,cost_increment\n";

    auto advance = [&](double duration) {
        if (duration <= 0.0)
            return;
        if (x <= 0.0) {
            tally.zero_time += duration;
            return;
        }
        const double hit = drift_hitting_time(x, mu, a);
        if (hit <= duration) {
            tally.zero_time += duration - hit;
            x = 0.0;
        } else {
            x = drift_flow(x, duration, mu, a);
        }
    };

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t0 = static_cast<double>(n) * config.dt;
        const double t1 = static_cast<double>(n + 1) * config.dt;
        x = apply_jump(x, stable_increment(model, config.dt, rng));
        if (dump)
            row(t0, x, "jump", 0.0);
        double s = t0;
        while (next_obs <= t1) {
            advance(next_obs - s);
            s = next_obs;
            const double eta = policy(x);
            double cost = 0.0;
            if (eta > 0.0) {
                cost = params.c * eta + params.d;
                tally.replenish_cost += cost;
                tally.proportional_cost += params.c * eta;
                ++tally.replenish_count;
                x = std::min(1.0, x + eta);
            }
            if (dump)
                row(s, x, "observe", cost);
            next_obs += rng.exponential(lam);
        }
        advance(t1 - s);
        if (dump)
            row(t1, x, "drift", 0.0);
    }
    tally.elapsed = static_cast<double>(n_steps) * config.dt;
    return tally;
}

/// Ensemble statistics over config.n_paths independent paths. `threads` only
/// changes wall time: path p always uses child_seed(master_seed, p) and the
/// reduction runs in path order.
inline PathStats simulate(const ControlParams& params, const JumpModel& model,
                          const Policy& policy, const PathConfig& config,
                          unsigned threads = 1) {
    params.validate();
    model.validate();
    config.validate();
    std::vector<PathTally> tallies(config.n_paths);
    parallel_for(config.n_paths, threads, [&](std::size_t p) {
        tallies[p] = simulate_path(params, model, policy, config, p);
    });

    const double n = static_cast<double>(config.n_paths);
    PathStats stats;
    for (const auto& t : tallies) {
        stats.ergodic_cost_mean += t.ergodic_cost();
        stats.occupation_zero_fraction += t.zero_time / t.elapsed;
        stats.replenish_count_rate += static_cast<double>(t.replenish_count) / t.elapsed;
        stats.proportional_cost_rate += t.proportional_cost / t.elapsed;
    }
    stats.ergodic_cost_mean /= n;
    stats.occupation_zero_fraction /= n;
    stats.replenish_count_rate /= n;
    stats.proportional_cost_rate /= n;
    if (config.n_paths > 1) {
        double ss = 0.0;
        for (const auto& t : tallies) {
            const double dev = t.ergodic_cost() - stats.ergodic_cost_mean;
            ss += dev * dev;
        }
        stats.ergodic_cost_stderr = std::sqrt(ss / (n - 1.0) / n);
    }
    return stats;
}

} // namespace ergosweep
