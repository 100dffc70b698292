#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "holdpp/block_matrix.hpp"
#include "holdpp/params.hpp"

namespace holdpp {

// Renyi-differential-privacy accountant for the forward mechanism
// f(x) = exp(Ft) x + eta, eta ~ N(0, Sigma_t).

struct PrivacyReport {
  std::vector<double> t_grid;
  std::vector<double> delta_f;  // sensitivity per grid point
  double alpha = 2.0;
  double delta2f = 0.0;         // squared data diameter
  double epsilon_bound = 0.0;   // alpha * delta_f(0) / 2
  double epsilon_approx = 0.0;  // alpha * delta2f / (2 eps_num)
  double aux_mse = 0.0;         // beta L^{-1} (n-1), per data dimension
};

// R_t = L^{-1} (exp(Ft)^T exp(Ft))^{-1} + S_0 - L^{-1} I.
BlockScalarMatrix effective_correlation(const HoldParams& params, double t);

// Delta f_t for a worst-case difference confined to the data block:
// delta2f * (R_t^{-1})[0][0].
double sensitivity(const HoldParams& params, double t, double delta2f);

// alpha * Delta f_t / 2; requires alpha > 1.
double rdp_epsilon(const HoldParams& params, double t, double delta2f,
                   double alpha);

// Equal-covariance Gaussian Renyi divergence (alpha/2) v^T Sigma^{-1} v for a
// mean shift v of length n*d and Sigma = S (x) I_d.
double gaussian_renyi_divergence(const Eigen::VectorXd& mean_shift,
                                 const BlockScalarMatrix& cov, int dim,
                                 double alpha);

// Expected squared error of guessing zero auxiliary variables, per data
// dimension: beta L^{-1} (n-1).
double aux_guess_mse(const HoldParams& params);

PrivacyReport make_privacy_report(const HoldParams& params,
                                  const std::vector<double>& t_grid,
                                  double delta2f, double alpha);

std::string privacy_report_to_json(const PrivacyReport& report);
void write_sensitivity_csv(const PrivacyReport& report,
                           const std::string& path);

}  // namespace holdpp
