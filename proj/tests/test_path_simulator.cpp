#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ergosweep/path_simulator.hpp"

using namespace ergosweep;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct LaplaceEstimate {
    double mean, stderr_;
};

LaplaceEstimate empirical_laplace(const JumpModel& m, double dt, double u, std::size_t n,
                                  std::uint64_t seed) {
    PathRng rng(seed);
    double s = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = std::exp(-u * stable_increment(m, dt, rng));
        s += v;
        ss += v * v;
    }
    const double mean = s / static_cast<double>(n);
    const double var = ss / static_cast<double>(n) - mean * mean;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

} // namespace

TEST_CASE("uniform draws stay strictly inside (0, 1)", "[rng]") {
    PathRng rng(1);
    for (int k = 0; k < 100000; ++k) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("child seeds differ and are reproducible", "[rng]") {
    CHECK(child_seed(5, 0) == child_seed(5, 0));
    CHECK(child_seed(5, 0) != child_seed(5, 1));
    CHECK(child_seed(5, 0) != child_seed(6, 0));
}

TEST_CASE("stable increments have the stable Laplace transform", "[sampler]") {
    for (double a : {0.3, 0.5, 0.8}) {
        const auto m = JumpModel::stable(a, 0.2);
        for (double u : {0.5, 5.0, 50.0}) {
            const auto est = empirical_laplace(m, 0.01, u, 200000, 99);
            const double expected = std::exp(-0.01 * laplace_exponent(m, u));
            INFO("alpha = " << a << " u = " << u);
            CHECK(std::abs(est.mean - expected) < 4.0 * est.stderr_ + 1e-12);
        }
    }
}

TEST_CASE("tempered increments have the tempered Laplace transform", "[sampler]") {
    const auto m = JumpModel::tempered(0.6, 0.4, 2.0);
    for (double u : {1.0, 10.0}) {
        const auto est = empirical_laplace(m, 0.05, u, 200000, 3);
        const double expected = std::exp(-0.05 * laplace_exponent(m, u));
        CHECK(std::abs(est.mean - expected) < 4.0 * est.stderr_ + 1e-12);
    }
}

TEST_CASE("drift flow solves the depletion ODE", "[dynamics]") {
    const double mu = 0.3, a = 0.4;
    // fine RK4 reference for dx/dt = -mu x^{1-a}
    double x = 0.8;
    const double dt = 1e-4;
    for (int k = 0; k < 5000; ++k) {
        auto f = [&](double y) { return y > 0.0 ? -mu * std::pow(y, 1 - a) : 0.0; };
        const double k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2),
                     k4 = f(x + dt * k3);
        x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    CHECK_THAT(drift_flow(0.8, 0.5, mu, a), WithinRel(x, 1e-9));
    const double hit = drift_hitting_time(0.8, mu, a);
    CHECK_THAT(drift_flow(0.8, hit * (1 - 1e-9), mu, a), WithinAbs(0.0, 1e-6));
    CHECK(drift_flow(0.8, hit * 1.01, mu, a) == 0.0);
    CHECK(drift_flow(0.0, 1.0, mu, a) == 0.0);
    CHECK(drift_flow(0.5, 1.0, 0.0, a) == 0.5);
    CHECK(std::isinf(drift_hitting_time(0.5, 0.0, a)));
}

TEST_CASE("jumps are truncated at the current storage", "[dynamics]") {
    CHECK_THAT(apply_jump(0.5, 0.2), WithinAbs(0.3, 1e-15));
    CHECK(apply_jump(0.5, 3.0) == 0.0);
    CHECK_THAT(step(0.5, 0.0, 0.1, 0.1, 0.5), WithinAbs(0.4, 1e-15));
}

TEST_CASE("table policy follows the solved action set", "[policy]") {
    DiscreteSolution s;
    s.eta_star = {1.0, 0.75, 0.0, 0.0, 0.0};
    const auto xi1 = table_policy(s, ActionSet::Xi1);
    CHECK(xi1(0.0) == 1.0);
    CHECK_THAT(xi1(0.24), WithinAbs(0.76, 1e-15));
    CHECK(xi1(0.6) == 0.0);
    const auto xi2 = table_policy(s, ActionSet::Xi2);
    CHECK(xi2(0.0) == 1.0);
    CHECK(xi2(0.24) == 0.0);
    CHECK(null_policy()(0.0) == 0.0);
}

TEST_CASE("ensemble statistics are independent of the thread count", "[simulate]") {
    PathConfig cfg;
    cfg.horizon = 50.0;
    cfg.n_paths = 6;
    const auto model = JumpModel::stable(0.5, 0.2);
    const ControlParams p;
    const auto policy = exact_policy_rule(kappa(model, p.mu), p);
    const auto one = simulate(p, model, policy, cfg, 1);
    const auto three = simulate(p, model, policy, cfg, 3);
    CHECK(one.ergodic_cost_mean == three.ergodic_cost_mean);
    CHECK(one.ergodic_cost_stderr == three.ergodic_cost_stderr);
    CHECK(one.replenish_count_rate == three.replenish_count_rate);
}

TEST_CASE("cost accounting is consistent", "[simulate]") {
    PathConfig cfg;
    cfg.horizon = 200.0;
    cfg.n_paths = 4;
    const auto model = JumpModel::stable(0.5, 0.2);
    const ControlParams p;
    const auto st = simulate(p, model, exact_policy_rule(kappa(model, p.mu), p), cfg);
    CHECK(st.occupation_zero_fraction > 0.0);
    CHECK(st.occupation_zero_fraction < 1.0);
    // every replenishment under this policy fills from 0 to 1
    CHECK_THAT(st.ergodic_cost_mean,
               WithinRel(st.occupation_zero_fraction + (p.c + p.d) * st.replenish_count_rate, 1e-12));
    CHECK_THAT(st.proportional_cost_rate, WithinRel(p.c * st.replenish_count_rate, 1e-12));
}

TEST_CASE("without replenishment the storage ends up depleted", "[simulate]") {
    PathConfig cfg;
    cfg.horizon = 2000.0;
    cfg.n_paths = 2;
    const auto st = simulate(ControlParams{}, JumpModel::stable(0.5, 0.2), null_policy(), cfg);
    CHECK(st.replenish_count_rate == 0.0);
    CHECK(st.occupation_zero_fraction > 0.99);
    CHECK(st.ergodic_cost_mean == st.occupation_zero_fraction);
}

TEST_CASE("path dump writes one row per event", "[simulate]") {
    PathConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 0.1;
    const auto model = JumpModel::stable(0.5, 0.2);
    std::ostringstream out;
    const auto tally = simulate_path(ControlParams{}, model, null_policy(), cfg, 0, &out);
    CHECK(tally.elapsed == 1.0);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,x,event,cost_increment");
    int jumps = 0, drifts = 0;
    while (std::getline(in, line)) {
        if (line.find(",jump,") != std::string::npos)
            ++jumps;
        if (line.find(",drift,") != std::string::npos)
            ++drifts;
    }
    CHECK(jumps == 10);
    CHECK(drifts == 10);
}

TEST_CASE("invalid path settings are rejected", "[simulate]") {
    PathConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = {};
    cfg.x0 = 1.5;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = {};
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    PathRng rng(1);
    CHECK_THROWS_AS(stable_increment(JumpModel::stable(0.5, 0.2), 0.0, rng), domain_error);
}
