#include "holdpp/forward.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "holdpp/matrix_exp.hpp"

namespace holdpp {

BlockScalarMatrix build_drift(const HoldParams& params) {
  params.validate();
  const int n = params.order;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    f(i, i + 1) = params.gammas[i];
    f(i + 1, i) = -params.gammas[i];
  }
  f(n - 1, n - 1) = -params.xi;
  return BlockScalarMatrix(f);
}

BlockScalarMatrix build_diffusion(const HoldParams& params) {
  params.validate();
  const int n = params.order;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  g(n - 1, n - 1) = std::sqrt(2.0 * params.xi * params.inv_mass);
  return BlockScalarMatrix(g);
}

BlockScalarMatrix initial_cov(const HoldParams& params) {
  params.validate();
  Eigen::VectorXd diag =
      Eigen::VectorXd::Constant(params.order, params.aux_var());
  diag(0) = params.eps_num;
  return BlockScalarMatrix(diag.asDiagonal());
}

BlockScalarMatrix cholesky_factor(const BlockScalarMatrix& cov, double time) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov.entries());
  if (llt.info() == Eigen::Success)
    return BlockScalarMatrix(Eigen::MatrixXd(llt.matrixL()));

  const int n = cov.order();
  Eigen::MatrixXd jittered =
      cov.entries() + 1e-12 * Eigen::MatrixXd::Identity(n, n);
  llt.compute(jittered);
  if (llt.info() == Eigen::Success)
    return BlockScalarMatrix(Eigen::MatrixXd(llt.matrixL()));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.entries());
  std::ostringstream msg;
  msg << "cholesky_factor: covariance not positive definite at t=" << time
      << " (smallest eigenvalue " << es.eigenvalues().minCoeff() << ")";
  throw std::runtime_error(msg.str());
}

GaussianMoments forward_moments(const HoldParams& params, const State& x0,
                                double t) {
  params.validate();
  if (!(t >= 0) || !std::isfinite(t))
    throw std::invalid_argument("forward_moments: t must be finite and >= 0");
  if (x0.order != params.order || x0.dim != params.dim)
    throw std::invalid_argument("forward_moments: state shape mismatch");

  const BlockScalarMatrix exp_ft = matrix_exp(build_drift(params), t);
  const BlockScalarMatrix s0 = initial_cov(params);
  const BlockScalarMatrix linv =
      params.inv_mass * BlockScalarMatrix::Identity(params.order);

  GaussianMoments m;
  m.time = t;
  m.mean = exp_ft * x0;
  BlockScalarMatrix cov = linv + exp_ft * (s0 - linv) * exp_ft.transpose();
  // Symmetrize against roundoff before factoring.
  m.cov = BlockScalarMatrix(
      0.5 * (cov.entries() + cov.entries().transpose()));
  m.chol = cholesky_factor(m.cov, t);
  return m;
}

State sample_forward(const HoldParams& params, const State& x0, double t,
                     const Eigen::VectorXd& noise) {
  if (noise.size() != params.state_dim())
    throw std::invalid_argument("sample_forward: noise length mismatch");
  const GaussianMoments m = forward_moments(params, x0, t);
  return State(params.order, params.dim,
               m.mean.flat + m.chol.apply(noise, params.dim));
}

Eigen::VectorXd conditional_score_last_block(
    const GaussianMoments& moments, const Eigen::VectorXd& noise_last) {
  const int n = moments.chol.order();
  const double l_nn = moments.chol(n - 1, n - 1);
  if (!(l_nn > 0))
    throw std::runtime_error(
        "conditional_score_last_block: nonpositive Cholesky corner");
  return -noise_last / l_nn;
}

DampingReport critical_damping_diagnostic(const BlockScalarMatrix& drift) {
  DampingReport report;
  Eigen::EigenSolver<Eigen::MatrixXd> es(drift.entries());
  report.eigenvalues = es.eigenvalues();

  constexpr double kRelTol = 1e-6;
  const double scale = report.eigenvalues.cwiseAbs().maxCoeff();
  bool ok = scale > 0;
  for (Eigen::Index i = 0; ok && i < report.eigenvalues.size(); ++i) {
    const auto ev = report.eigenvalues(i);
    if (std::abs(ev.imag()) > kRelTol * scale || ev.real() >= 0) ok = false;
  }
  if (ok) {
    const double lo = report.eigenvalues.real().minCoeff();
    const double hi = report.eigenvalues.real().maxCoeff();
    ok = (hi - lo) <= kRelTol * scale;
  }
  report.critically_damped = ok;
  return report;
}

}  // namespace holdpp
