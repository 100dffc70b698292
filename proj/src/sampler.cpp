#include "holdpp/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "holdpp/forward.hpp"

namespace holdpp {

namespace {
// F x - scale * S_theta(x, t), the shared drift shape of both reverse schemes.
State reverse_drift(const BlockScalarMatrix& drift_factor,
                    const HoldParams& params, const ScoreFn& score,
                    const State& x, double t, double score_scale) {
  State out = drift_factor * x;
  out.block(params.order - 1) -= score_scale * score(x, t);
  return out;
}
}  // namespace

std::vector<State> sample_prior(const HoldParams& params, Rng& rng,
                                int count) {
  params.validate();
  if (count < 1) throw std::invalid_argument("sample_prior: count must be >= 1");
  std::normal_distribution<double> normal(0.0, std::sqrt(params.inv_mass));
  std::vector<State> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    State s(params.order, params.dim);
    for (Eigen::Index k = 0; k < s.flat.size(); ++k) s.flat(k) = normal(rng);
    out.push_back(std::move(s));
  }
  return out;
}

State probability_flow_step(const HoldParams& params, const ScoreFn& score,
                            const State& x, double t, double dt) {
  const BlockScalarMatrix f = build_drift(params);
  State d = reverse_drift(f, params, score, x, t, params.xi * params.inv_mass);
  State next(x.order, x.dim, x.flat + dt * d.flat);
  if (!next.flat.allFinite())
    throw std::runtime_error("probability_flow_step: non-finite state");
  return next;
}

State reverse_sde_step(const HoldParams& params, const ScoreFn& score,
                       const State& x, double t, double dt, Rng& rng) {
  const BlockScalarMatrix f = build_drift(params);
  State d = reverse_drift(f, params, score, x, t,
                          2.0 * params.xi * params.inv_mass);
  State next(x.order, x.dim, x.flat + dt * d.flat);
  const double noise_std =
      std::sqrt(2.0 * params.xi * params.inv_mass * std::abs(dt));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < params.dim; ++k)
    next.block(params.order - 1)(k) += noise_std * normal(rng);
  if (!next.flat.allFinite())
    throw std::runtime_error("reverse_sde_step: non-finite state");
  return next;
}

std::vector<Eigen::VectorXd> generate(const HoldParams& params,
                                      const ScoreFn& score,
                                      const IntegratorConfig& cfg, Rng& rng,
                                      int count) {
  params.validate();
  if (cfg.steps < 1) throw std::invalid_argument("generate: steps must be >= 1");
  const double t_end = cfg.t_end > 0 ? cfg.t_end : 1e-3 * params.horizon;
  if (!(t_end < params.horizon))
    throw std::invalid_argument("generate: t_end must be below the horizon");
  const double dt = -(params.horizon - t_end) / cfg.steps;

  std::vector<State> states = sample_prior(params, rng, count);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (State& x : states) {
    double t = params.horizon;
    for (int k = 0; k < cfg.steps; ++k) {
      if (cfg.scheme == IntegratorConfig::Scheme::kProbabilityFlow)
        x = probability_flow_step(params, score, x, t, dt);
      else
        x = reverse_sde_step(params, score, x, t, dt, rng);
      t += dt;
    }
    out.push_back(Eigen::VectorXd(x.block(0)));
  }
  return out;
}

Eigen::MatrixXd generate_batch(const HoldParams& params,
                               const ScoreNetwork& net,
                               const IntegratorConfig& cfg, Rng& rng,
                               int count) {
  params.validate();
  if (count < 1) throw std::invalid_argument("generate_batch: count must be >= 1");
  if (cfg.steps < 1)
    throw std::invalid_argument("generate_batch: steps must be >= 1");
  const double t_end = cfg.t_end > 0 ? cfg.t_end : 1e-3 * params.horizon;
  if (!(t_end < params.horizon))
    throw std::invalid_argument("generate_batch: t_end must be below the horizon");
  const double dt = -(params.horizon - t_end) / cfg.steps;
  const int n = params.order, d = params.dim;
  const Eigen::MatrixXd f = build_drift(params).entries();
  const bool stochastic = cfg.scheme == IntegratorConfig::Scheme::kReverseSde;
  const double score_scale =
      (stochastic ? 2.0 : 1.0) * params.xi * params.inv_mass;
  const double noise_std =
      std::sqrt(2.0 * params.xi * params.inv_mass * std::abs(dt));

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n * d, count);
  const double prior_std = std::sqrt(params.inv_mass);
  for (Eigen::Index k = 0; k < x.size(); ++k)
    x.data()[k] = prior_std * normal(rng);

  double t = params.horizon;
  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::MatrixXd scores = net.forward_batch(
        x, Eigen::VectorXd::Constant(count, t), params.horizon);
    Eigen::MatrixXd drift = Eigen::MatrixXd::Zero(n * d, count);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (f(i, j) != 0.0)
          drift.middleRows(i * d, d) += f(i, j) * x.middleRows(j * d, d);
    drift.bottomRows(d) -= score_scale * scores;
    x += dt * drift;
    if (stochastic)
      for (int c = 0; c < count; ++c)
        for (int k = 0; k < d; ++k)
          x((n - 1) * d + k, c) += noise_std * normal(rng);
    if (!x.allFinite())
      throw std::runtime_error("generate_batch: non-finite state at step " +
                               std::to_string(step));
    t += dt;
  }
  return x.topRows(d);
}

}  // namespace holdpp
