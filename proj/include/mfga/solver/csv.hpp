#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "mfga/solver/fbsde.hpp"
#include "mfga/solver/mfg_solver.hpp"

namespace mfga {

/// Shortest round-trip-safe rendering, 17 significant digits.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns t,x,rho,u,ux,uxx; every t_stride-th level and x_stride-th node,
/// always including the last level.
inline void write_solution_csv(std::ostream &os, const MfgSolution &sol, std::size_t t_stride = 50,
                               std::size_t x_stride = 10) {
  t_stride = std::max<std::size_t>(1, t_stride);
  x_stride = std::max<std::size_t>(1, x_stride);
  os << "t,x,rho,u,ux,uxx\n";
  const std::size_t L = sol.levels();
  for (std::size_t k = 0; k < L; ++k) {
    if (k % t_stride != 0 && k != L - 1)
      continue;
    for (std::size_t i = 0; i < sol.grid.n; i += x_stride)
      os << fmt17(sol.t_grid[k]) << ',' << fmt17(sol.grid.x(i)) << ',' << fmt17(sol.density(k, i)) << ','
         << fmt17(sol.u[k][i]) << ',' << fmt17(sol.ux[k][i]) << ',' << fmt17(sol.uxx[k][i]) << '\n';
  }
}

inline void write_flow_csv(std::ostream &os, const FlowTrace &tr) {
  os << "t,I,Ibar,Gamma,mean_dX2\n";
  for (std::size_t k = 0; k < tr.t_grid.size(); ++k)
    os << fmt17(tr.t_grid[k]) << ',' << fmt17(tr.i_series[k]) << ',' << fmt17(tr.ibar_series[k]) << ','
       << fmt17(tr.gamma_series[k]) << ',' << fmt17(tr.mean_dx2[k]) << '\n';
}

} // namespace mfga
