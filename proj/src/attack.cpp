#include "holdpp/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "holdpp/forward.hpp"

namespace holdpp {

namespace {
double p_norm(const Eigen::VectorXd& v, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (!(p > 0)) throw std::invalid_argument("attack: norm order must be > 0");
  if (p == 2.0) return v.norm();
  return std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}
}  // namespace

double attack_metric(const HoldParams& params, const ScoreFn& score,
                     const State& x_t, double t, double p) {
  params.validate();
  if (!x_t.flat.allFinite())
    throw std::runtime_error("attack_metric: non-finite state");
  State v = build_drift(params) * x_t;
  v.block(params.order - 1) -=
      params.xi * params.inv_mass * score(x_t, t);
  if (!v.flat.allFinite())
    throw std::runtime_error("attack_metric: non-finite drift residual");
  return p_norm(v.flat, p);
}

std::function<State(double)> deterministic_forward_estimate(
    const HoldParams& params, const ScoreFn& score, const Eigen::VectorXd& q0,
    const Eigen::MatrixXd& aux_eps) {
  params.validate();
  if (q0.size() != params.dim)
    throw std::invalid_argument(
        "deterministic_forward_estimate: data dimension mismatch");
  const int n = params.order, d = params.dim;

  State x0 = State::from_data(q0, n);
  const double l0_nn = std::sqrt(params.aux_var());
  Eigen::VectorXd eps_full = Eigen::VectorXd::Zero(n * d);
  if (aux_eps.size() > 0) {
    if (aux_eps.rows() != d || aux_eps.cols() != n - 1)
      throw std::invalid_argument(
          "deterministic_forward_estimate: aux_eps must be d x (n-1)");
    for (int i = 1; i < n; ++i)
      eps_full.segment(i * d - d, d) = aux_eps.col(i - 1);
  }
  eps_full.tail(d) = (n == 1)
                         ? Eigen::VectorXd(-score(x0, 0.0) *
                                           std::sqrt(params.eps_num))
                         : Eigen::VectorXd(-score(x0, 0.0) * l0_nn);

  return [params, x0, eps_full](double t) {
    const GaussianMoments m = forward_moments(params, x0, t);
    return State(params.order, params.dim,
                 m.mean.flat + m.chol.apply(eps_full, params.dim));
  };
}

double rank_auroc(const std::vector<double>& member_stats,
                  const std::vector<double>& holdout_stats) {
  if (member_stats.empty() || holdout_stats.empty())
    throw std::invalid_argument("rank_auroc: empty sample");
  // Sort both sides and sweep to count member < holdout pairs in O(N log N).
  std::vector<double> m = member_stats, h = holdout_stats;
  std::sort(m.begin(), m.end());
  std::sort(h.begin(), h.end());
  double wins = 0.0;
  std::size_t below = 0, tied_lo = 0;
  for (double hv : h) {
    while (below < m.size() && m[below] < hv) ++below;
    tied_lo = below;
    while (tied_lo < m.size() && m[tied_lo] == hv) ++tied_lo;
    wins += static_cast<double>(below) + 0.5 * (tied_lo - below);
  }
  return wins / (static_cast<double>(m.size()) * h.size());
}

std::vector<std::pair<double, double>> roc_curve(
    const std::vector<double>& member_stats,
    const std::vector<double>& holdout_stats) {
  struct Tagged {
    double value;
    bool member;
  };
  std::vector<Tagged> all;
  all.reserve(member_stats.size() + holdout_stats.size());
  for (double v : member_stats) all.push_back({v, true});
  for (double v : holdout_stats) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.value < b.value; });

  const double num_m = static_cast<double>(member_stats.size());
  const double num_h = static_cast<double>(holdout_stats.size());
  std::vector<std::pair<double, double>> roc{{0.0, 0.0}};
  std::size_t i = 0, cum_m = 0, cum_h = 0;
  while (i < all.size()) {
    const double v = all[i].value;
    for (; i < all.size() && all[i].value == v; ++i)
      (all[i].member ? cum_m : cum_h)++;
    roc.emplace_back(cum_h / num_h, cum_m / num_m);
  }
  return roc;
}

AttackReport run_pia(const HoldParams& params, const ScoreFn& score,
                     const Eigen::MatrixXd& members,
                     const Eigen::MatrixXd& holdouts, const AttackConfig& cfg,
                     Rng* rng) {
  params.validate();
  if (members.cols() == 0 || holdouts.cols() == 0)
    throw std::invalid_argument("run_pia: empty dataset");
  if (members.rows() != params.dim || holdouts.rows() != params.dim)
    throw std::invalid_argument("run_pia: data dimension mismatch");
  if (cfg.n_time < 1) throw std::invalid_argument("run_pia: n_time must be >= 1");
  if (cfg.stochastic_eps && params.order > 1 && rng == nullptr)
    throw std::invalid_argument("run_pia: stochastic_eps needs an rng");

  const Eigen::Index total = members.cols() + holdouts.cols();
  AttackReport report;
  report.metric.resize(total, cfg.n_time);
  report.mean_stat.resize(total);
  report.labels.reserve(total);

  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    const bool is_member = idx < members.cols();
    const Eigen::VectorXd q0 =
        is_member ? members.col(idx) : holdouts.col(idx - members.cols());
    Eigen::MatrixXd aux_eps;
    if (cfg.stochastic_eps && params.order > 1) {
      aux_eps.resize(params.dim, params.order - 1);
      for (Eigen::Index k = 0; k < aux_eps.size(); ++k)
        aux_eps.data()[k] = normal(*rng);
    }
    auto trajectory =
        deterministic_forward_estimate(params, score, q0, aux_eps);
    for (int k = 1; k <= cfg.n_time; ++k) {
      const double t = (k - 1) * params.horizon / cfg.n_time;
      report.metric(idx, k - 1) =
          attack_metric(params, score, trajectory(t), t, cfg.p);
    }
    report.labels.push_back(is_member ? 1 : 0);
  }
  report.mean_stat = report.metric.rowwise().mean();

  std::vector<double> member_stats, holdout_stats;
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    const double stat =
        cfg.use_mean ? report.mean_stat(idx) : report.metric(idx, 0);
    (report.labels[idx] ? member_stats : holdout_stats).push_back(stat);
  }
  report.roc = roc_curve(member_stats, holdout_stats);
  report.auroc = rank_auroc(member_stats, holdout_stats);
  return report;
}

double per_time_auroc(const AttackReport& report, int k) {
  if (k < 1 || k > report.metric.cols())
    throw std::out_of_range("per_time_auroc: timestep index out of range");
  std::vector<double> member_stats, holdout_stats;
  for (Eigen::Index idx = 0; idx < report.metric.rows(); ++idx)
    (report.labels[idx] ? member_stats : holdout_stats)
        .push_back(report.metric(idx, k - 1));
  return rank_auroc(member_stats, holdout_stats);
}

std::string attack_report_to_json(const AttackReport& report) {
  nlohmann::json j;
  j["auroc"] = report.auroc;
  j["labels"] = report.labels;
  std::vector<std::vector<double>> metric(report.metric.rows());
  for (Eigen::Index i = 0; i < report.metric.rows(); ++i)
    metric[i].assign(report.metric.row(i).begin(), report.metric.row(i).end());
  j["metric"] = metric;
  j["mean_stat"] = std::vector<double>(report.mean_stat.begin(),
                                       report.mean_stat.end());
  std::vector<std::vector<double>> roc;
  for (const auto& [fpr, tpr] : report.roc) roc.push_back({fpr, tpr});
  j["roc"] = roc;
  return j.dump(2);
}

void write_roc_csv(const AttackReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_roc_csv: cannot open " + path);
  out << "fpr,tpr\n";
  out.precision(17);
  for (const auto& [fpr, tpr] : report.roc) out << fpr << "," << tpr << "\n";
}

}  // namespace holdpp
