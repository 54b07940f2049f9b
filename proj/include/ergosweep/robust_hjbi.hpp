#pragma once

// Ambiguity-averse variant: the observation intensity Lambda is distorted by
// an adversarial factor a > 0 penalized through relative entropy with weight
// 1/gamma. Maximizing over a in closed form turns the replenishment bracket
// Lambda q (q = Phi - min{...} >= 0) into (Lambda/gamma)(1 - exp(-gamma q)),
// attained at a* = exp(-gamma q).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "fast_sweep_solver.hpp"
#include "hjb_discretization.hpp"

namespace ergosweep {

struct RobustTermParams {
    double gamma = 1.0;
    double capital_lambda = 0.25;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw domain_error("robust term: gamma must be positive and finite");
        if (!(capital_lambda > 0.0))
            throw domain_error("robust term: observation intensity must be positive");
    }
};

// Split used by the sweep: `leading` joins F_i Phi_i, `remainder` joins G_i
// with the opposite sign. leading + remainder = value.
struct RobustTerm {
    double leading = 0.0;    // Lambda Phi_i
    double remainder = 0.0;  // -Lambda Phi_i + (Lambda/gamma)(1 - exp(-gamma q))
    double value = 0.0;      // (Lambda/gamma)(1 - exp(-gamma q))
};

namespace detail {
// Exponent clamp for gaps outside [0, |Phi|_inf + c + d].
constexpr double max_exponent = 700.0;

inline double clamped_gap_exponent(double gamma, double gap) {
    return std::clamp(-gamma * gap, -max_exponent, max_exponent);
}
} // namespace detail

inline RobustTerm robust_replenishment_term(double phi_i, double min_value,
                                            const RobustTermParams& p) {
    const double lam = p.capital_lambda;
    const double value = -lam / p.gamma * std::expm1(detail::clamped_gap_exponent(p.gamma, phi_i - min_value));
    const double leading = lam * phi_i;
    return {leading, value - leading, value};
}

/// a*_i = exp(-gamma (Phi_i - min_k {Phi_{i+k} + c k h + d [k > 0]})).
inline std::vector<double> worst_case_ambiguity(std::span<const double> phi,
                                                const DiscretizedSystem& system, double gamma) {
    if (!(gamma >= 0.0))
        throw domain_error("worst_case_ambiguity: gamma must be non-negative");
    if (phi.size() != system.grid().size())
        throw config_error("worst_case_ambiguity: potential vector must have M+1 entries");
    std::vector<double> a(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double gap = phi[i] - replenishment_min(system, i, phi).value;
        a[i] = std::exp(detail::clamped_gap_exponent(gamma, gap));
    }
    return a;
}

/// Fast sweep for the HJBI system. Node 0 gives
/// H = 1 - (Lambda/gamma)(1 - exp(gamma min{0, Phi_M + c + d, ...})).
inline DiscreteSolution solve_robust(const DiscretizedSystem& system, const RobustTermParams& p,
                                     const SweepConfig& config = {}) {
    p.validate();
    if (p.capital_lambda != system.params().capital_lambda)
        throw config_error("solve_robust: observation intensity differs from the discretized system");
    auto bracket = [&p](double phi_i, double min_value) {
        return robust_replenishment_term(phi_i, min_value, p).value;
    };
    DiscreteSolution sol = detail::fast_sweep(system, config, bracket, p.gamma);
    sol.a_star = worst_case_ambiguity(sol.phi, system, p.gamma);
    return sol;
}

inline DiscreteSolution solve_robust(const DiscretizedSystem& system, double gamma,
                                     const SweepConfig& config = {}) {
    return solve_robust(system, RobustTermParams{gamma, system.params().capital_lambda}, config);
}

} // namespace ergosweep
