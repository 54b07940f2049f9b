#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ergosweep/fast_sweep_solver.hpp"

using namespace ergosweep;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Discrete equation at node i >= 1 assembled from scratch: stable density
// evaluated at (j - 1/2) h, upwind drift mu x^{1-a} + lambda/(1-a) x^{1-a},
// decay lambda/a x^{-a}, bracket Lambda (Phi_i - min).
double oracle_row(std::size_t m, std::size_t i, const std::vector<double>& phi, double h_value,
                  double a, double lam, const ControlParams& p) {
    const double h = 1.0 / static_cast<double>(m);
    const double x = i == m ? 1.0 : static_cast<double>(i) * h;
    double best = phi[i];
    if (p.action_set == ActionSet::Xi1 && i < m)
        best = std::min(best, phi[m] + p.c * (1.0 - x) + p.d);
    if (p.action_set == ActionSet::Xi2 && i == 0)
        best = std::min(best, phi[m] + p.c + p.d);
    double r = h_value + p.capital_lambda * (phi[i] - best);
    if (i == 0)
        return r - 1.0;
    const double slope = (phi[i] - phi[i - 1]) / h;
    r += (p.mu * std::pow(x, 1 - a) + lam / (1 - a) * std::pow(x, 1 - a)) * slope;
    for (std::size_t j = 1; j <= i; ++j) {
        const double z = (static_cast<double>(j) - 0.5) * h;
        const double w = lam * std::pow(z, -a - 1) * h;
        r += (phi[i] - 0.5 * (phi[i - j] + phi[i - j + 1]) - z * slope) * w;
    }
    r += lam / a * std::pow(x, -a) * phi[i];
    return r;
}

double oracle_residual(std::size_t m, const DiscreteSolution& s, double a, double lam,
                       const ControlParams& p) {
    double worst = 0.0;
    for (std::size_t i = 0; i <= m; ++i)
        worst = std::max(worst, std::abs(oracle_row(m, i, s.phi, s.h_value, a, lam, p)));
    return worst;
}

struct TinyOracle {
    double h_value, phi1, phi2;
};

// M = 2, Xi2. For fixed H the interior rows are linear in (Phi_1, Phi_2);
// Cramer's rule gives Phi(H) and bisection closes the node-0 equation
// H = 1 + Lambda min{0, Phi_2 + c + d}.
TinyOracle tiny_oracle(double a, double lam, const ControlParams& p) {
    auto interior = [&](double h_value) {
        std::vector<double> e1{0.0, 1.0, 0.0}, e2{0.0, 0.0, 1.0}, zero{0.0, 0.0, 0.0};
        auto row = [&](std::size_t i, const std::vector<double>& v, double hv) {
            return oracle_row(2, i, v, hv, a, lam, p);
        };
        // row_i(Phi) = H + A_i1 Phi_1 + A_i2 Phi_2 (linear, no action away from 0)
        const double a11 = row(1, e1, 0.0), a12 = row(1, e2, 0.0);
        const double a21 = row(2, e1, 0.0), a22 = row(2, e2, 0.0);
        const double b1 = -row(1, zero, h_value), b2 = -row(2, zero, h_value);
        const double det = a11 * a22 - a12 * a21;
        return std::pair{(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det};
    };
    double lo = 0.0, hi = 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double phi2 = interior(mid).second;
        const double g = mid - 1.0 - p.capital_lambda * std::min(0.0, phi2 + p.c + p.d);
        (g > 0.0 ? hi : lo) = mid;
    }
    const double hv = 0.5 * (lo + hi);
    const auto [p1, p2] = interior(hv);
    return {hv, p1, p2};
}

} // namespace

TEST_CASE("M = 2 solve matches the bisection oracle", "[sweep]") {
    for (double a : {0.2, 0.5, 0.8}) {
        ControlParams p;
        const auto sol = solve(build(2, p, JumpModel::stable(a, 0.2)));
        const auto o = tiny_oracle(a, 0.2, p);
        INFO("alpha = " << a);
        CHECK_THAT(sol.h_value, WithinAbs(o.h_value, 1e-9));
        CHECK(sol.phi[0] == 0.0);
        CHECK_THAT(sol.phi[1], WithinAbs(o.phi1, 1e-9));
        CHECK_THAT(sol.phi[2], WithinAbs(o.phi2, 1e-9));
    }
}

TEST_CASE("solutions satisfy the independently assembled equations", "[sweep]") {
    for (auto set : {ActionSet::Xi1, ActionSet::Xi2}) {
        ControlParams p;
        p.action_set = set;
        for (double a : {0.3, 0.7}) {
            const std::size_t m = 24;
            const auto sol = solve(build(m, p, JumpModel::stable(a, 0.2)));
            INFO("alpha = " << a << " set " << static_cast<int>(set));
            CHECK(oracle_residual(m, sol, a, 0.2, p) < 1e-7);
            CHECK(sol.final_residual < 1e-7);
        }
    }
}

TEST_CASE("solution does not depend on relaxation or starting guess", "[sweep]") {
    const auto sys = build(40, ControlParams{}, JumpModel::stable(0.5, 0.2));
    SweepConfig slow;
    slow.relaxation = 0.8;
    const auto a = solve(sys);
    const auto b = solve(sys, slow);
    SweepConfig warm;
    warm.initial_guess.assign(41, 0.0);
    for (std::size_t i = 1; i <= 40; ++i)
        warm.initial_guess[i] = -0.5 * sys.grid().x(i);
    const auto c = solve(sys, warm);
    CHECK_THAT(b.h_value, WithinAbs(a.h_value, 1e-8));
    CHECK_THAT(c.h_value, WithinAbs(a.h_value, 1e-8));
    for (std::size_t i = 0; i <= 40; ++i) {
        CHECK_THAT(b.phi[i], WithinAbs(a.phi[i], 1e-7));
        CHECK_THAT(c.phi[i], WithinAbs(a.phi[i], 1e-7));
    }
}

TEST_CASE("neutral Xi2 solve approaches the closed form", "[sweep]") {
    const auto model = JumpModel::stable(0.5, 0.2);
    const ControlParams p;
    const auto exact = exact_solution(model, p);
    const auto sol = solve(build(200, p, model));
    CHECK_THAT(sol.h_value, WithinAbs(exact.h_hat, 1e-3));
    double err = 0.0;
    for (std::size_t i = 0; i <= 200; ++i)
        err = std::max(err, std::abs(sol.phi[i] - exact_potential(i / 200.0, exact)));
    CHECK(err < 0.03);
    // c + d < kappa: replenish at depletion only
    CHECK(sol.eta_star[0] == 1.0);
    for (std::size_t i = 1; i <= 200; ++i)
        CHECK(sol.eta_star[i] == 0.0);
    const auto xb = extract_threshold(sol, Grid(200));
    REQUIRE(xb.has_value());
    CHECK(*xb == 0.0);
}

TEST_CASE("potential is non-increasing and H is bounded", "[sweep]") {
    for (auto set : {ActionSet::Xi1, ActionSet::Xi2}) {
        ControlParams p;
        p.action_set = set;
        const auto sol = solve(build(100, p, JumpModel::stable(0.4, 0.3)));
        CHECK(sol.h_value > 0.0);
        CHECK(sol.h_value <= p.cost_bound());
        for (std::size_t i = 1; i <= 100; ++i)
            CHECK(sol.phi[i] <= sol.phi[i - 1] + 1e-12);
    }
}

TEST_CASE("threshold extraction", "[sweep]") {
    const Grid g(4);
    DiscreteSolution s;
    s.eta_star = {1.0, 0.75, 0.0, 0.0, 0.0};
    CHECK(extract_threshold(s, g) == 0.25);
    s.eta_star = {0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK_FALSE(extract_threshold(s, g).has_value());
    s.eta_star = {1.0, 0.0, 0.5, 0.0, 0.0};
    CHECK_THROWS_AS(extract_threshold(s, g), threshold_structure_error);
    s.eta_star = {1.0};
    CHECK_THROWS_AS(extract_threshold(s, g), config_error);
}

TEST_CASE("iteration cap raises non-convergence with diagnostics", "[sweep]") {
    SweepConfig cfg;
    cfg.max_iters = 3;
    const auto sys = build(50, ControlParams{}, JumpModel::stable(0.5, 0.2));
    try {
        solve(sys, cfg);
        FAIL("expected non-convergence");
    } catch (const non_convergence_error& e) {
        CHECK(e.iterations() == 3);
        CHECK(e.last_phi_update() > 0.0);
        CHECK(e.last_residual() > 0.0);
    }
}

TEST_CASE("invalid sweep settings are rejected", "[sweep]") {
    const auto sys = build(10, ControlParams{}, JumpModel::stable(0.5, 0.2));
    SweepConfig cfg;
    cfg.relaxation = 1.0;
    CHECK_THROWS_AS(solve(sys, cfg), config_error);
    cfg = {};
    cfg.tol_phi = 0.0;
    CHECK_THROWS_AS(solve(sys, cfg), config_error);
    cfg = {};
    cfg.initial_guess.assign(5, 0.0);
    CHECK_THROWS_AS(solve(sys, cfg), config_error);
    cfg.initial_guess.assign(11, 0.0);
    cfg.initial_guess[0] = 1.0;
    CHECK_THROWS_AS(solve(sys, cfg), config_error);
}

TEST_CASE("tempered measure solves and stays below the stable cost", "[sweep]") {
    ControlParams p;
    p.action_set = ActionSet::Xi1;
    const auto stable = solve(build(60, p, JumpModel::stable(0.5, 0.2)));
    const auto tempered = solve(build(60, p, JumpModel::tempered(0.5, 0.2, 3.0)));
    CHECK(tempered.final_residual < 1e-7);
    CHECK(tempered.h_value < stable.h_value);
}
