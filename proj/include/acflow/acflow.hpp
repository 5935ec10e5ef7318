/**
 * @file acflow.hpp
 * @brief Umbrella header for the artificial-compression flow library.
 */
#pragma once

#include "acflow/grid.hpp"
#include "acflow/operators.hpp"
#include "acflow/sparse.hpp"
#include "acflow/linsolve.hpp"
#include "acflow/assemble.hpp"
#include "acflow/controllers.hpp"
#include "acflow/ode_filter.hpp"
#include "acflow/ac_stepper.hpp"
#include "acflow/energy.hpp"
#include "acflow/scenario.hpp"
#include "acflow/run_config.hpp"
#include "acflow/drivers.hpp"
