#include "holdpp/privacy.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "holdpp/forward.hpp"
#include "holdpp/matrix_exp.hpp"

namespace holdpp {

BlockScalarMatrix effective_correlation(const HoldParams& params, double t) {
  params.validate();
  if (!(t >= 0) || !std::isfinite(t))
    throw std::invalid_argument("effective_correlation: t must be >= 0");
  const int n = params.order;
  // R_0 = S_0 exactly; the general formula loses digits to cancellation at 0.
  if (t == 0.0) return initial_cov(params);
  const Eigen::MatrixXd e = matrix_exp(build_drift(params).entries(), t);
  const Eigen::MatrixXd gram = e.transpose() * e;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible())
    throw std::runtime_error("effective_correlation: singular exp(Ft)^T exp(Ft)");
  Eigen::MatrixXd r = params.inv_mass * lu.inverse() +
                      initial_cov(params).entries() -
                      params.inv_mass * Eigen::MatrixXd::Identity(n, n);
  return BlockScalarMatrix(0.5 * (r + r.transpose()));
}

double sensitivity(const HoldParams& params, double t, double delta2f) {
  if (!(delta2f >= 0))
    throw std::invalid_argument("sensitivity: delta2f must be >= 0");
  if (delta2f == 0.0) return 0.0;
  const BlockScalarMatrix r_inv = effective_correlation(params, t).inverse();
  return delta2f * r_inv(0, 0);
}

double rdp_epsilon(const HoldParams& params, double t, double delta2f,
                   double alpha) {
  if (!(alpha > 1))
    throw std::invalid_argument("rdp_epsilon: alpha must be > 1");
  return alpha * sensitivity(params, t, delta2f) / 2.0;
}

double gaussian_renyi_divergence(const Eigen::VectorXd& mean_shift,
                                 const BlockScalarMatrix& cov, int dim,
                                 double alpha) {
  if (!(alpha > 1))
    throw std::invalid_argument(
        "gaussian_renyi_divergence: alpha must be > 1");
  const int n = cov.order();
  if (mean_shift.size() != static_cast<Eigen::Index>(n) * dim)
    throw std::invalid_argument(
        "gaussian_renyi_divergence: shift length mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov.entries());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "gaussian_renyi_divergence: covariance not positive definite");
  const Eigen::MatrixXd s_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  // v^T (S^{-1} (x) I_d) v = sum_{ij} S^{-1}(i,j) <v_i, v_j>.
  double quad = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      quad += s_inv(i, j) *
              mean_shift.segment(i * dim, dim)
                  .dot(mean_shift.segment(j * dim, dim));
  return 0.5 * alpha * quad;
}

double aux_guess_mse(const HoldParams& params) {
  params.validate();
  return params.aux_var() * (params.order - 1);
}

PrivacyReport make_privacy_report(const HoldParams& params,
                                  const std::vector<double>& t_grid,
                                  double delta2f, double alpha) {
  if (t_grid.empty())
    throw std::invalid_argument("make_privacy_report: empty time grid");
  PrivacyReport report;
  report.t_grid = t_grid;
  report.alpha = alpha;
  report.delta2f = delta2f;
  for (double t : t_grid)
    report.delta_f.push_back(sensitivity(params, t, delta2f));
  report.epsilon_bound = alpha * sensitivity(params, 0.0, delta2f) / 2.0;
  report.epsilon_approx = alpha * delta2f / (2.0 * params.eps_num);
  report.aux_mse = aux_guess_mse(params);
  return report;
}

std::string privacy_report_to_json(const PrivacyReport& report) {
  nlohmann::json j;
  j["t_grid"] = report.t_grid;
  j["delta_f"] = report.delta_f;
  j["alpha"] = report.alpha;
  j["delta2f"] = report.delta2f;
  j["epsilon_bound"] = report.epsilon_bound;
  j["epsilon_approx"] = report.epsilon_approx;
  j["aux_mse"] = report.aux_mse;
  return j.dump(2);
}

void write_sensitivity_csv(const PrivacyReport& report,
                           const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_sensitivity_csv: cannot open " + path);
  out << "t,delta_f\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.t_grid.size(); ++i)
    out << report.t_grid[i] << "," << report.delta_f[i] << "\n";
}

}  // namespace holdpp
