#pragma once

// Levy measures of the flushing subordinator and the closed-form constants
// of the pure stable case.
//
//   stable:          nu(dz) = lambda z^{-(alpha+1)} dz
//   tempered stable: nu(dz) = lambda z^{-(alpha+1)} e^{-b z} dz
//
// with 0 < alpha < 1, so the process has infinite activity and finite
// variation.

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"

namespace ergosweep {

enum class JumpKind { Stable, TemperedStable };

struct JumpModel {
    JumpKind kind = JumpKind::Stable;
    double alpha = 0.5;
    double lambda = 0.2;
    double tempering = 0.0;

    static JumpModel stable(double alpha, double lambda) {
        JumpModel m{JumpKind::Stable, alpha, lambda, 0.0};
        m.validate();
        return m;
    }

    static JumpModel tempered(double alpha, double lambda, double tempering) {
        JumpModel m{JumpKind::TemperedStable, alpha, lambda, tempering};
        m.validate();
        return m;
    }

    bool is_stable() const noexcept { return kind == JumpKind::Stable; }

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw domain_error("jump model: alpha must lie in (0,1), got " +
                               std::to_string(alpha));
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw domain_error("jump model: lambda must be positive and finite");
        if (!(tempering >= 0.0) || !std::isfinite(tempering))
            throw domain_error("jump model: tempering must be non-negative");
        if (kind == JumpKind::Stable && tempering != 0.0)
            throw domain_error("jump model: stable kind requires tempering = 0");
    }

    friend bool operator==(const JumpModel&, const JumpModel&) = default;
};

/// Levy density at z > 0.
inline double density(const JumpModel& model, double z) {
    if (!(z > 0.0))
        throw domain_error("density: jump size must be positive");
    const double power = model.lambda * std::pow(z, -(model.alpha + 1.0));
    return model.tempering > 0.0 ? power * std::exp(-model.tempering * z) : power;
}

/// nu((1, inf)) = lambda / alpha for the stable measure.
inline double tail_mass_above_one(const JumpModel& model) {
    if (!model.is_stable())
        throw unsupported_error("tail_mass_above_one: only the stable measure has this closed form");
    return model.lambda / model.alpha;
}

/// Rescales lambda -> alpha * lambda. After rescaling every alpha has unit
/// mass of jumps larger than one.
inline JumpModel normalized(const JumpModel& model) {
    if (!model.is_stable())
        throw unsupported_error("normalized: only defined for the stable measure");
    JumpModel out = model;
    out.lambda = model.alpha * model.lambda;
    return out;
}

/// nu((x, inf)): coefficient of the decay term after compensation.
inline double tail_mass(const JumpModel& model, double x) {
    if (!(x > 0.0))
        throw domain_error("tail_mass: x must be positive");
    const double a = model.alpha;
    if (model.tempering == 0.0)
        return model.lambda / a * std::pow(x, -a);
    // Gamma(-a, y) = (y^{-a} e^{-y} - Gamma(1-a, y)) / a
    const double b = model.tempering;
    const double y = b * x;
    return model.lambda / a *
           (std::pow(x, -a) * std::exp(-y) -
            std::pow(b, a) * boost::math::tgamma(1.0 - a, y));
}

/// int_{(0,x)} z nu(dz): coefficient of the drift shifted out of the
/// compensated jump integral.
inline double compensator_drift(const JumpModel& model, double x) {
    if (x < 0.0)
        throw domain_error("compensator_drift: x must be non-negative");
    if (x == 0.0)
        return 0.0;
    const double a = model.alpha;
    if (model.tempering == 0.0)
        return model.lambda / (1.0 - a) * std::pow(x, 1.0 - a);
    const double b = model.tempering;
    return model.lambda * std::pow(b, a - 1.0) * boost::math::tgamma_lower(1.0 - a, b * x);
}

/// Laplace exponent psi(u) with E[exp(-u L_t)] = exp(-t psi(u)).
inline double laplace_exponent(const JumpModel& model, double u) {
    if (u < 0.0)
        throw domain_error("laplace_exponent: u must be non-negative");
    const double a = model.alpha;
    const double scale = model.lambda * std::tgamma(1.0 - a) / a;
    if (model.tempering == 0.0)
        return scale * std::pow(u, a);
    const double b = model.tempering;
    return scale * (std::pow(b + u, a) - std::pow(b, a));
}

namespace detail {

// 1 - (1-u)^a - a u, evaluated without cancellation for small u.
inline double i_alpha_numerator(double a, double u) {
    return -std::expm1(a * std::log1p(-u)) - a * u;
}

inline void check_alpha(double alpha, const char* where) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error(std::string(where) + ": alpha must lie in (0,1)");
}

} // namespace detail

/// I_alpha = int_0^1 (1 - (1-u)^alpha - alpha u) u^{-1-alpha} du.
///
/// The integrand is non-negative (t -> t^alpha is concave) and behaves like
/// alpha(1-alpha)/2 u^{1-alpha} at the origin. The piece on [0, eps] is taken
/// from the series, the rest by adaptive Gauss-Kronrod.
inline double i_alpha(double alpha, double tol = 1e-12) {
    detail::check_alpha(alpha, "i_alpha");
    const double a = alpha;
    constexpr double eps = 1e-4;

    // int_0^eps a(1-a)/2 u^{1-a} [1 + (2-a)/3 u + (2-a)(3-a)/12 u^2] du
    const double lead = 0.5 * a * (1.0 - a);
    const double head =
        lead * (std::pow(eps, 2.0 - a) / (2.0 - a) +
                (2.0 - a) / 3.0 * std::pow(eps, 3.0 - a) / (3.0 - a) +
                (2.0 - a) * (3.0 - a) / 12.0 * std::pow(eps, 4.0 - a) / (4.0 - a));

    auto integrand = [a](double u) {
        return detail::i_alpha_numerator(a, u) * std::pow(u, -1.0 - a);
    };
    double err = 0.0;
    const double body = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, eps, 1.0, 20, tol, &err);
    return head + body;
}

/// kappa = 1 / (mu alpha + lambda (alpha/(1-alpha) + 1/alpha + I_alpha)).
inline double kappa(double alpha, double mu, double lambda) {
    detail::check_alpha(alpha, "kappa");
    if (!std::isfinite(mu) || !std::isfinite(lambda))
        throw domain_error("kappa: non-finite input");
    if (mu < 0.0 || !(lambda > 0.0))
        throw domain_error("kappa: requires mu >= 0 and lambda > 0");
    const double bracket = alpha / (1.0 - alpha) + 1.0 / alpha + i_alpha(alpha);
    return 1.0 / (mu * alpha + lambda * bracket);
}

inline double kappa(const JumpModel& model, double mu) {
    if (!model.is_stable())
        throw unsupported_error("kappa: closed form only covers the stable measure");
    return kappa(model.alpha, mu, model.lambda);
}

} // namespace ergosweep
