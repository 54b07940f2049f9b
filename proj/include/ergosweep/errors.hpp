#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergosweep {

// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Invalid or inconsistent configuration (grid size, config file keys, ...).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operation requested on a model it has no closed form for.
class unsupported_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Fast sweep hit its iteration cap before both stopping criteria held.
class non_convergence_error : public std::runtime_error {
public:
    non_convergence_error(std::size_t iterations, double last_phi_update,
                          double last_h_update, double last_residual)
        : std::runtime_error("fast sweep did not converge after " +
                             std::to_string(iterations) +
                             " iterations (max |dPhi| = " +
                             std::to_string(last_phi_update) +
                             ", |dH| = " + std::to_string(last_h_update) +
                             ", residual = " + std::to_string(last_residual) + ")"),
          iterations_(iterations),
          last_phi_update_(last_phi_update),
          last_h_update_(last_h_update),
          last_residual_(last_residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double last_phi_update() const noexcept { return last_phi_update_; }
    double last_h_update() const noexcept { return last_h_update_; }
    double last_residual() const noexcept { return last_residual_; }

private:
    std::size_t iterations_;
    double last_phi_update_;
    double last_h_update_;
    double last_residual_;
};

// The replenishment region of a solved policy is not of the form [0, x_bar].
class threshold_structure_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ergosweep
