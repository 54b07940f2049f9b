#pragma once

// Closed-form solution of the ergodic problem for a stable subordinator,
// drift S(x) = mu x^{1-alpha} and replenishment allowed only at depletion.
//
//   H_hat   = (1 + Lambda min{c + d, kappa}) / (1 + kappa Lambda)
//   Phi_hat = -kappa H_hat x^alpha
//
// It is the reference the finite-difference solver is measured against.

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "levy_model.hpp"

namespace ergosweep {

// Xi1: {0, 1-x} at every state. Xi2: {0, 1} at x = 0 and {0} elsewhere.
enum class ActionSet { Xi1, Xi2 };

struct ControlParams {
    double c = 0.15;               // proportional replenishment cost
    double d = 0.05;               // fixed replenishment cost
    double mu = 0.10;              // drift scale in S(x) = mu x^{1-alpha}
    double capital_lambda = 0.25;  // observation intensity
    double gamma = 0.0;            // ambiguity aversion, 0 = neutral
    ActionSet action_set = ActionSet::Xi2;

    void validate() const {
        if (!(c > 0.0) || !(d > 0.0))
            throw domain_error("control params: c and d must be positive");
        if (!(capital_lambda > 0.0))
            throw domain_error("control params: observation intensity must be positive");
        if (!(mu >= 0.0))
            throw domain_error("control params: mu must be non-negative");
        if (!(gamma >= 0.0))
            throw domain_error("control params: gamma must be non-negative");
    }

    double total_cost() const noexcept { return c + d; }

    /// Upper bound 1 + Lambda (c + d) on any time-averaged cost.
    double cost_bound() const noexcept { return 1.0 + capital_lambda * (c + d); }
};

struct ExactSolution {
    double kappa = 0.0;
    double h_hat = 0.0;
    double alpha = 0.0;
};

inline double effective_hamiltonian(double kappa, const ControlParams& params) {
    if (params.action_set != ActionSet::Xi2)
        throw unsupported_error("effective_hamiltonian: closed form exists only for Xi2");
    if (!(kappa > 0.0))
        throw domain_error("effective_hamiltonian: kappa must be positive");
    const double lam = params.capital_lambda;
    return (1.0 + lam * std::min(params.total_cost(), kappa)) / (1.0 + kappa * lam);
}

inline ExactSolution exact_solution(const JumpModel& model, const ControlParams& params) {
    params.validate();
    const double k = kappa(model, params.mu);
    return {k, effective_hamiltonian(k, params), model.alpha};
}

inline double exact_potential(double x, const ExactSolution& sol) {
    if (!(x >= 0.0 && x <= 1.0))
        throw domain_error("exact_potential: x must lie in [0,1]");
    if (x == 0.0)
        return 0.0;
    return -sol.kappa * sol.h_hat * std::pow(x, sol.alpha);
}

/// Replenish fully at depletion when c + d <= kappa; ties act.
inline double exact_policy(double x, double kappa, const ControlParams& params) {
    if (params.action_set != ActionSet::Xi2)
        throw unsupported_error("exact_policy: closed form exists only for Xi2");
    return (x == 0.0 && params.total_cost() <= kappa) ? 1.0 : 0.0;
}

} // namespace ergosweep
