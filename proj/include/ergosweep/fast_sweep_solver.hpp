#pragma once

// Relaxed Gauss-Seidel fast sweep for the discrete ergodic HJB system.
//
// Each outer iteration first fixes H from the node-0 equation, then sweeps
// i = 1..M once (the drift is upwinded towards x = 0, so information flows
// upward), replacing
//
//   Phi_i <- R Phi_i + (1 - R) (G_i(Phi) - H) / F_i
//
// with the newest available entries of Phi inside G_i. Phi_0 = 0 is never
// touched. The iteration stops when both max_i |dPhi_i| and |dH| fall below
// their tolerances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "hjb_discretization.hpp"

namespace ergosweep {

struct SweepConfig {
    double relaxation = 0.5;
    double tol_phi = 1e-10;
    double tol_h = 1e-10;
    std::size_t max_iters = 1'000'000;
    std::vector<double> initial_guess;  // empty: start from Phi = 0

    void validate() const {
        if (!(relaxation > 0.0 && relaxation < 1.0))
            throw config_error("sweep: relaxation must lie in (0,1)");
        if (!(tol_phi > 0.0) || !(tol_h > 0.0))
            throw config_error("sweep: tolerances must be positive");
        if (max_iters == 0)
            throw config_error("sweep: max_iters must be positive");
    }
};

struct DiscreteSolution {
    double h_value = 0.0;
    std::vector<double> phi;
    std::vector<double> eta_star;
    std::optional<std::vector<double>> a_star;
    std::size_t iters = 0;
    double final_residual = 0.0;
};

namespace detail {

// Dot product with four interleaved partial sums.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < n; ++k)
        s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

inline std::vector<double> starting_potential(const DiscretizedSystem& system,
                                              const SweepConfig& config) {
    const std::size_t n = system.grid().size();
    if (config.initial_guess.empty())
        return std::vector<double>(n, 0.0);
    if (config.initial_guess.size() != n)
        throw config_error("sweep: initial guess must have M+1 entries");
    if (config.initial_guess.front() != 0.0)
        throw config_error("sweep: initial guess must vanish at x = 0");
    return config.initial_guess;
}

// bracket(phi_i, min_value) is the replenishment term of the equation; the
// sweep moves Lambda Phi_i into F_i and keeps Lambda Phi_i - bracket in G_i.
template <class Bracket>
DiscreteSolution fast_sweep(const DiscretizedSystem& system, const SweepConfig& config,
                            Bracket&& bracket, double gamma) {
    config.validate();
    const std::size_t m = system.m();
    const double h = system.h();
    const double lam = system.params().capital_lambda;
    const double relax = config.relaxation;
    const auto drift = system.drift_coeff();
    const auto f = system.f_diag();
    const auto cum_moment = system.cum_moment();
    const auto folded = system.folded_weight();
    const double half_w1 = 0.5 * system.quad_weight()[1];

    std::vector<double> phi = starting_potential(system, config);

    auto node_zero_h = [&](std::span<const double> p) {
        return 1.0 - bracket(0.0, replenishment_min(system, 0, p).value);
    };

    double h_prev = node_zero_h(phi);
    double max_update = 0.0;
    double h_update = 0.0;
    for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
        const double h_now = node_zero_h(phi);
        max_update = 0.0;
        for (std::size_t i = 1; i <= m; ++i) {
            const double pi = phi[i];
            const double below = phi[i - 1];
            const double conv = dot(folded.data() + (m - i + 1), phi.data() + 1, i - 1) +
                                half_w1 * pi;
            const double mn = replenishment_min(system, i, phi).value;
            const double g = lam * pi - bracket(pi, mn) + drift[i] * below / h + conv +
                             cum_moment[i] * (pi - below) / h;
            const double next = relax * pi + (1.0 - relax) * (g - h_now) / f[i];
            max_update = std::max(max_update, std::abs(next - pi));
            phi[i] = next;
        }
        h_update = std::abs(h_now - h_prev);
        h_prev = h_now;

        if (!std::isfinite(max_update))
            throw non_convergence_error(iter, max_update, h_update,
                                        std::numeric_limits<double>::infinity());
        if (max_update < config.tol_phi && h_update < config.tol_h) {
            DiscreteSolution sol;
            sol.h_value = node_zero_h(phi);
            sol.iters = iter;
            sol.eta_star.assign(m + 1, 0.0);
            for (std::size_t i = 0; i <= m; ++i)
                sol.eta_star[i] =
                    static_cast<double>(replenishment_min(system, i, phi).k_star) * h;
            sol.final_residual = residual(system, phi, sol.h_value, gamma);
            sol.phi = std::move(phi);
            return sol;
        }
    }
    throw non_convergence_error(config.max_iters, max_update, h_update,
                                residual(system, phi, h_prev, gamma));
}

} // namespace detail

inline DiscreteSolution solve(const DiscretizedSystem& system, const SweepConfig& config = {}) {
    const double lam = system.params().capital_lambda;
    return detail::fast_sweep(
        system, config, [lam](double phi_i, double min_value) { return lam * (phi_i - min_value); },
        0.0);
}

/// Threshold x_bar of a policy replenishing on [0, x_bar] and idling above;
/// empty when the policy never acts.
inline std::optional<double> extract_threshold(const DiscreteSolution& solution,
                                               const Grid& grid) {
    const auto& eta = solution.eta_star;
    if (eta.size() != grid.size())
        throw config_error("extract_threshold: solution does not match grid");
    std::size_t acting = 0;
    while (acting < eta.size() && eta[acting] > 0.0)
        ++acting;
    for (std::size_t i = acting; i < eta.size(); ++i) {
        if (eta[i] > 0.0)
            throw threshold_structure_error(
                "extract_threshold: replenishment region is not an interval [0, x_bar] "
                "(action resumes at x = " + std::to_string(grid.x(i)) + ")");
    }
    if (acting == 0)
        return std::nullopt;
    return grid.x(acting - 1);
}

} // namespace ergosweep
