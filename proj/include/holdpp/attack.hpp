#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "holdpp/block_matrix.hpp"
#include "holdpp/params.hpp"
#include "holdpp/score_net.hpp"

namespace holdpp {

struct AttackConfig {
  int n_time = 10;
  double p = 2.0;  // norm order; infinity for the max norm
  bool use_mean = true;  // threshold the per-point mean over timesteps
  bool stochastic_eps = false;  // draw eps_1..eps_{n-1} instead of zeros
};

struct AttackReport {
  Eigen::MatrixXd metric;    // points x n_time
  Eigen::VectorXd mean_stat; // row means of metric
  std::vector<int> labels;   // 1 = member, 0 = holdout
  std::vector<std::pair<double, double>> roc;  // (FPR, TPR)
  double auroc = 0.0;
};

// p-norm over all nd coordinates of F x_t - xi L^{-1} S_theta(x_t, t).
double attack_metric(const HoldParams& params, const ScoreFn& score,
                     const State& x_t, double t, double p = 2.0);

// Deterministic trajectory reconstruction: x_0 = (q0, 0, ..., 0), the last
// noise block is estimated from the score at time zero, all other noise
// blocks are eps (zeros in the deterministic attack). Returns t -> x_t.
std::function<State(double)> deterministic_forward_estimate(
    const HoldParams& params, const ScoreFn& score, const Eigen::VectorXd& q0,
    const Eigen::MatrixXd& aux_eps = Eigen::MatrixXd());

// Full attack over the timestep grid t_k = (k-1) T / n_time, k = 1..n_time.
// Classification rule: member iff statistic < threshold. AUROC uses the rank
// (Mann-Whitney) formulation with ties counted one half.
AttackReport run_pia(const HoldParams& params, const ScoreFn& score,
                     const Eigen::MatrixXd& members,
                     const Eigen::MatrixXd& holdouts, const AttackConfig& cfg,
                     Rng* rng = nullptr);

// AUROC from a single timestep column (1-based k).
double per_time_auroc(const AttackReport& report, int k);

// Rank AUROC of "lower statistic means member" for two score samples.
double rank_auroc(const std::vector<double>& member_stats,
                  const std::vector<double>& holdout_stats);

// ROC points for the rule "member iff stat < tau", from (0,0) to (1,1);
// trapezoidal area equals rank_auroc.
std::vector<std::pair<double, double>> roc_curve(
    const std::vector<double>& member_stats,
    const std::vector<double>& holdout_stats);

std::string attack_report_to_json(const AttackReport& report);
void write_roc_csv(const AttackReport& report, const std::string& path);

}  // namespace holdpp
