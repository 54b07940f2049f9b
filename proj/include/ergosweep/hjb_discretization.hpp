#pragma once

// Finite-difference form of the ergodic HJB equation on the uniform grid
// x_i = i h, h = 1/M. At a node i > 0 the discrete equation reads
//
//   H + B_i(Phi) + D_i (Phi_i - Phi_{i-1}) / h + sum_{j=1..i} I_j + T_i Phi_i = 0
//
// where D_i = S(x_i) + int_0^{x_i} z nu(dz) is the upwinded drift, T_i =
// nu((x_i, inf)) the decay coefficient, B_i the replenishment bracket and
//
//   I_j = (Phi_i - (Phi_{i-j} + Phi_{i-j+1})/2 - z_j (Phi_i - Phi_{i-1})/h) w_j,
//   z_j = (j - 1/2) h,   w_j = nu-density(z_j) h,
//
// the midpoint rule for the compensated jump integral over cell [(j-1)h, jh].
// Node 0 carries H + B_0(Phi) - 1 = 0 with Phi_0 = 0 held fixed.
//
// The fast sweep writes each row as H + F_i Phi_i - G_i(Phi) = 0; every
// coefficient of Phi_i with a positive sign goes to F_i:
//
//   F_i = Lambda + D_i / h + T_i + sum_{j<=i} w_j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "exact_solution.hpp"
#include "levy_model.hpp"

namespace ergosweep {

struct Grid {
    std::size_t m = 0;
    double h = 0.0;

    explicit Grid(std::size_t cells) : m(cells), h(1.0 / static_cast<double>(cells)) {
        if (cells < 2)
            throw config_error("grid: at least 2 cells required, got " + std::to_string(cells));
    }

    std::size_t size() const noexcept { return m + 1; }
    double x(std::size_t i) const noexcept {
        return i == m ? 1.0 : static_cast<double>(i) * h;
    }
};

using DriftFunction = std::function<double(double)>;

/// S(x) = mu x^{1-alpha}, the drift for which the exact solution exists.
inline DriftFunction power_drift(double mu, double alpha) {
    return [mu, alpha](double x) { return x > 0.0 ? mu * std::pow(x, 1.0 - alpha) : 0.0; };
}

struct ReplenishmentChoice {
    double value = 0.0;      // min_k Phi_{i+k} + c k h + d [k > 0]
    std::size_t k_star = 0;  // minimizing jump in grid cells
};

class DiscretizedSystem {
public:
    DiscretizedSystem(Grid grid, ControlParams params, JumpModel model, DriftFunction drift)
        : grid_(grid), params_(params), model_(model) {
        params_.validate();
        model_.validate();
        if (!drift)
            drift = power_drift(params_.mu, model_.alpha);
        assemble(drift);
    }

    const Grid& grid() const noexcept { return grid_; }
    const ControlParams& params() const noexcept { return params_; }
    const JumpModel& model() const noexcept { return model_; }
    std::size_t m() const noexcept { return grid_.m; }
    double h() const noexcept { return grid_.h; }

    std::span<const double> drift_coeff() const noexcept { return drift_coeff_; }
    std::span<const double> decay_coeff() const noexcept { return decay_coeff_; }
    // Indexed by cell j = 1..M; entry 0 is unused.
    std::span<const double> quad_node() const noexcept { return quad_node_; }
    std::span<const double> quad_weight() const noexcept { return quad_weight_; }
    // Prefix sums over j <= i of w_j and z_j w_j.
    std::span<const double> cum_weight() const noexcept { return cum_weight_; }
    std::span<const double> cum_moment() const noexcept { return cum_moment_; }
    std::span<const double> f_diag() const noexcept { return f_diag_; }

    /// Weights of the neighbour average folded onto single nodes and stored
    /// back to front: sum_j w_j (Phi_{i-j} + Phi_{i-j+1})/2 equals
    /// sum_{k=1}^{i-1} folded[M-i+k] Phi_k + w_1/2 Phi_i  (Phi_0 = 0).
    std::span<const double> folded_weight() const noexcept { return folded_weight_; }

    /// Admissible replenishment jumps (in cells) at node i.
    template <class F>
    void for_each_action(std::size_t i, F&& f) const {
        f(std::size_t{0});
        const std::size_t m = grid_.m;
        if (params_.action_set == ActionSet::Xi1) {
            if (i < m)
                f(m - i);
        } else if (i == 0) {
            f(m);
        }
    }

private:
    void assemble(const DriftFunction& drift) {
        const std::size_t n = grid_.size();
        const std::size_t m = grid_.m;
        const double h = grid_.h;

        drift_coeff_.assign(n, 0.0);
        decay_coeff_.assign(n, 0.0);
        quad_node_.assign(n, 0.0);
        quad_weight_.assign(n, 0.0);
        cum_weight_.assign(n, 0.0);
        cum_moment_.assign(n, 0.0);
        f_diag_.assign(n, 0.0);
        folded_weight_.assign(n, 0.0);

        for (std::size_t j = 1; j <= m; ++j) {
            const double z = (static_cast<double>(j) - 0.5) * h;
            quad_node_[j] = z;
            quad_weight_[j] = density(model_, z) * h;
            cum_weight_[j] = cum_weight_[j - 1] + quad_weight_[j];
            cum_moment_[j] = cum_moment_[j - 1] + z * quad_weight_[j];
        }
        for (std::size_t i = 1; i <= m; ++i) {
            const double x = grid_.x(i);
            const double s = drift(x);
            if (!(s >= 0.0) || !std::isfinite(s))
                throw domain_error("discretization: drift must be non-negative and finite");
            drift_coeff_[i] = s + compensator_drift(model_, x);
            decay_coeff_[i] = tail_mass(model_, x);
            f_diag_[i] = params_.capital_lambda + drift_coeff_[i] / h + decay_coeff_[i] +
                         cum_weight_[i];
        }
        for (std::size_t q = 1; q < m; ++q) {
            const std::size_t j = m - q;
            folded_weight_[q] = 0.5 * (quad_weight_[j] + quad_weight_[j + 1]);
        }
    }

    Grid grid_;
    ControlParams params_;
    JumpModel model_;
    std::vector<double> drift_coeff_;
    std::vector<double> decay_coeff_;
    std::vector<double> quad_node_;
    std::vector<double> quad_weight_;
    std::vector<double> cum_weight_;
    std::vector<double> cum_moment_;
    std::vector<double> f_diag_;
    std::vector<double> folded_weight_;
};

inline DiscretizedSystem build(const Grid& grid, const ControlParams& params,
                               const JumpModel& model, DriftFunction drift = {}) {
    return DiscretizedSystem(grid, params, model, std::move(drift));
}

inline DiscretizedSystem build(std::size_t m, const ControlParams& params,
                               const JumpModel& model, DriftFunction drift = {}) {
    return build(Grid(m), params, model, std::move(drift));
}

namespace detail {

inline void check_phi(const DiscretizedSystem& system, std::span<const double> phi) {
    if (phi.size() != system.grid().size())
        throw config_error("potential vector must have M+1 entries");
}

} // namespace detail

/// Compensated jump integral at node i >= 1, summed cell by cell.
inline double nonlocal_sum(const DiscretizedSystem& system, std::size_t i,
                           std::span<const double> phi) {
    if (i == 0)
        throw domain_error("nonlocal_sum: node 0 carries no jump term");
    detail::check_phi(system, phi);
    const auto z = system.quad_node();
    const auto w = system.quad_weight();
    const double slope = (phi[i] - phi[i - 1]) / system.h();
    double sum = 0.0;
    for (std::size_t j = 1; j <= i; ++j)
        sum += (phi[i] - 0.5 * (phi[i - j] + phi[i - j + 1]) - z[j] * slope) * w[j];
    return sum;
}

/// min over admissible k of Phi_{i+k} + c k h + d [k > 0]; ties keep k = 0.
inline ReplenishmentChoice replenishment_min(const DiscretizedSystem& system, std::size_t i,
                                             std::span<const double> phi) {
    const auto& p = system.params();
    const double h = system.h();
    ReplenishmentChoice best{phi[i], 0};
    system.for_each_action(i, [&](std::size_t k) {
        if (k == 0)
            return;
        const double v = phi[i + k] + p.c * static_cast<double>(k) * h + p.d;
        if (v < best.value)
            best = {v, k};
    });
    return best;
}

/// Replenishment bracket for a gap q = Phi_i - min >= 0: Lambda q when
/// ambiguity neutral, (Lambda/gamma)(1 - exp(-gamma q)) otherwise.
inline double replenishment_bracket(double gap, double capital_lambda, double gamma) {
    if (gamma <= 0.0)
        return capital_lambda * gap;
    return -capital_lambda / gamma * std::expm1(-gamma * gap);
}

/// Left-hand side of the discrete equation at node i.
inline double row_residual(const DiscretizedSystem& system, std::size_t i,
                           std::span<const double> phi, double h_value, double gamma = 0.0) {
    const auto& p = system.params();
    const double gap = phi[i] - replenishment_min(system, i, phi).value;
    double r = h_value + replenishment_bracket(gap, p.capital_lambda, gamma);
    if (i == 0)
        return r - 1.0;
    r += system.drift_coeff()[i] * (phi[i] - phi[i - 1]) / system.h();
    r += nonlocal_sum(system, i, phi);
    r += system.decay_coeff()[i] * phi[i];
    return r;
}

/// max_i |row_residual|, gamma > 0 selecting the ambiguity-averse bracket.
inline double residual(const DiscretizedSystem& system, std::span<const double> phi,
                       double h_value, double gamma = 0.0) {
    detail::check_phi(system, phi);
    double worst = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i)
        worst = std::max(worst, std::abs(row_residual(system, i, phi, h_value, gamma)));
    return worst;
}

} // namespace ergosweep
