#pragma once

#include <vector>

namespace holdpp {

// Parameters of the critically-damped higher-order Langevin forward process.
// The state stacks n variable blocks of dimension d: the data block q followed
// by n-1 auxiliary blocks (velocity, acceleration, ...).
struct HoldParams {
  int order = 1;                // n, number of variable blocks
  int dim = 1;                  // d, dimension of each block
  std::vector<double> gammas;   // coupling rates, length order-1
  double xi = 4.0;              // damping rate on the last block
  double inv_mass = 1.0;        // L^{-1}, stationary per-coordinate variance
  double beta = 1.0;            // auxiliary-variable variance factor
  double eps_num = 1e-3;        // initial variance of the data block
  double horizon = 1.0;         // T, diffusion end time

  int state_dim() const { return order * dim; }
  double aux_var() const { return beta * inv_mass; }

  // Throws std::invalid_argument on any violated constraint.
  void validate() const;
};

}  // namespace holdpp
