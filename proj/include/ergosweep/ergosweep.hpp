#pragma once

#include "errors.hpp"
#include "levy_model.hpp"
#include "exact_solution.hpp"
#include "hjb_discretization.hpp"
#include "fast_sweep_solver.hpp"
#include "robust_hjbi.hpp"
#include "parallel.hpp"
#include "path_simulator.hpp"
#include "experiment.hpp"
