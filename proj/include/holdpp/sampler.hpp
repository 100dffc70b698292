#pragma once

#include <Eigen/Dense>
#include <vector>

#include "holdpp/block_matrix.hpp"
#include "holdpp/params.hpp"
#include "holdpp/score_net.hpp"

namespace holdpp {

struct IntegratorConfig {
  enum class Scheme { kProbabilityFlow, kReverseSde };
  int steps = 500;
  Scheme scheme = Scheme::kProbabilityFlow;
  double t_end = 0.0;  // <= 0 means 1e-3 * horizon
};

// i.i.d. draws from the stationary law N(0, L^{-1} I_{nd}).
std::vector<State> sample_prior(const HoldParams& params, Rng& rng, int count);

// One explicit Euler step of the deterministic reverse process
//   dx = (F x - xi L^{-1} S_theta(x, t)) dt,   dt < 0,
// where S_theta stacks zeros in blocks 1..n-1 and the score in block n.
State probability_flow_step(const HoldParams& params, const ScoreFn& score,
                            const State& x, double t, double dt);

// Euler-Maruyama step of the reverse SDE, drift F x - 2 xi L^{-1} S_theta,
// noise injected only in the last block with per-step std sqrt(2 xi L^{-1} |dt|).
State reverse_sde_step(const HoldParams& params, const ScoreFn& score,
                       const State& x, double t, double dt, Rng& rng);

// Integrates count paths from t = horizon down to t_end on a uniform grid and
// returns the data blocks of the final states.
std::vector<Eigen::VectorXd> generate(const HoldParams& params,
                                      const ScoreFn& score,
                                      const IntegratorConfig& cfg, Rng& rng,
                                      int count);

// Same integration with all paths advanced in lockstep through the network's
// batched forward pass. Returns the data blocks as columns (d x count).
Eigen::MatrixXd generate_batch(const HoldParams& params,
                               const ScoreNetwork& net,
                               const IntegratorConfig& cfg, Rng& rng,
                               int count);

}  // namespace holdpp
