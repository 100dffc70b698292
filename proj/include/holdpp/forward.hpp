#pragma once

#include <Eigen/Dense>

#include "holdpp/block_matrix.hpp"
#include "holdpp/params.hpp"

namespace holdpp {

// Mean, covariance factor and its Cholesky factor of the forward law at a
// fixed time. cov holds S_t with Sigma_t = S_t (x) I_d; chol holds the lower
// triangular l_t with L_t = l_t (x) I_d.
struct GaussianMoments {
  State mean;
  BlockScalarMatrix cov;
  BlockScalarMatrix chol;
  double time = 0.0;
};

// Drift factor F: F[i][i+1] = gamma_i, F[i+1][i] = -gamma_i, F[n-1][n-1] = -xi.
BlockScalarMatrix build_drift(const HoldParams& params);

// Diffusion factor G: single entry sqrt(2*xi*inv_mass) at (n-1, n-1).
BlockScalarMatrix build_diffusion(const HoldParams& params);

// S_0 = diag(eps_num, beta/L, ..., beta/L).
BlockScalarMatrix initial_cov(const HoldParams& params);

// Lower Cholesky factor; retries once with 1e-12 jitter on the diagonal, then
// fails reporting the time and the smallest eigenvalue.
BlockScalarMatrix cholesky_factor(const BlockScalarMatrix& cov, double time);

GaussianMoments forward_moments(const HoldParams& params, const State& x0,
                                double t);

// x_t = mu_t + (l_t (x) I_d) * noise, noise of length n*d.
State sample_forward(const HoldParams& params, const State& x0, double t,
                     const Eigen::VectorXd& noise);

// Last d-block of the conditional score -Sigma_t^{-1}(x_t - mu_t), which
// collapses to -noise_last / l_t[n-1][n-1].
Eigen::VectorXd conditional_score_last_block(const GaussianMoments& moments,
                                             const Eigen::VectorXd& noise_last);

struct DampingReport {
  Eigen::VectorXcd eigenvalues;
  bool critically_damped = false;  // all real, negative, equal to rel tol 1e-6
};

DampingReport critical_damping_diagnostic(const BlockScalarMatrix& drift);

}  // namespace holdpp
