#pragma once

#include "mfga/solver/bound.hpp"
#include "mfga/solver/csv.hpp"
#include "mfga/solver/estimators.hpp"
#include "mfga/solver/fbsde.hpp"
#include "mfga/solver/grid.hpp"
#include "mfga/solver/mfg_solver.hpp"
#include "mfga/solver/residual.hpp"
#include "mfga/solver/riccati.hpp"
