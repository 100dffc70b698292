#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "holdpp/attack.hpp"
#include "holdpp/forward.hpp"
#include "holdpp/matrix_exp.hpp"
#include "test_util.hpp"

using namespace holdpp;
using namespace holdpp::testutil;

namespace {

ScoreFn zero_score(int dim) {
  return [dim](const State&, double) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(dim));
  };
}

// Smooth nonzero score for oracle comparisons.
ScoreFn toy_score(int dim) {
  return [dim](const State& x, double t) {
    Eigen::VectorXd s(dim);
    for (int i = 0; i < dim; ++i)
      s(i) = std::sin(x.flat(i) + t) + 0.3 * x.flat.sum();
    return s;
  };
}

// O(N^2) Mann-Whitney oracle with half-weight ties.
double pair_count_auroc(const std::vector<double>& members,
                        const std::vector<double>& holdouts) {
  double wins = 0.0;
  for (double m : members)
    for (double h : holdouts) {
      if (m < h)
        wins += 1.0;
      else if (m == h)
        wins += 0.5;
    }
  return wins / (static_cast<double>(members.size()) * holdouts.size());
}

double trapezoid_area(const std::vector<std::pair<double, double>>& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += 0.5 * (roc[i].first - roc[i - 1].first) *
            (roc[i].second + roc[i - 1].second);
  return area;
}

}  // namespace

TEST_CASE("attack metric closed forms for a scalar model") {
  HoldParams p;
  p.xi = 3.0;
  State x(1, 1);
  x.flat << 0.7;
  // Zero score: residual is just F x = -xi x.
  CHECK(attack_metric(p, zero_score(1), x, 0.2) ==
        doctest::Approx(p.xi * 0.7));
  // Constant score s: residual -xi x - xi L^{-1} s.
  ScoreFn constant = [](const State&, double) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, 2.0));
  };
  CHECK(attack_metric(p, constant, x, 0.2) ==
        doctest::Approx(std::abs(-p.xi * 0.7 - p.xi * p.inv_mass * 2.0)));
}

TEST_CASE("attack metric norm orders") {
  HoldParams p;
  p.order = 2;
  p.dim = 1;
  p.gammas = {1.0};
  p.xi = 2.0;
  State x(2, 1);
  x.flat << 1.0, -2.0;
  // F x = (gamma*v, -gamma*q - xi*v) = (-2, 3); score zero.
  CHECK(attack_metric(p, zero_score(1), x, 0.1, 2.0) ==
        doctest::Approx(std::sqrt(4.0 + 9.0)));
  CHECK(attack_metric(p, zero_score(1), x, 0.1, 1.0) == doctest::Approx(5.0));
  CHECK(attack_metric(p, zero_score(1), x, 0.1,
                      std::numeric_limits<double>::infinity()) ==
        doctest::Approx(3.0));
}

TEST_CASE("attack metric matches a dense nd x nd recomputation") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + int(rng() % 3), d = 1 + int(rng() % 3);
    HoldParams p = random_params(rng, n, d);
    State x(n, d, random_vector(rng, n * d));
    const ScoreFn score = toy_score(d);

    Eigen::VectorXd res = build_drift(p).dense(d) * x.flat;
    res.tail(d) -= p.xi * p.inv_mass * score(x, 0.4);
    CHECK(attack_metric(p, score, x, 0.4) ==
          doctest::Approx(res.norm()).epsilon(1e-12));
  }
}

TEST_CASE("deterministic estimate with zero score follows the mean path") {
  std::mt19937_64 rng(22);
  HoldParams p = random_params(rng, 3, 2);
  Eigen::VectorXd q0 = random_vector(rng, 2);
  auto traj = deterministic_forward_estimate(p, zero_score(2), q0);
  const State x0 = State::from_data(q0, 3);
  for (double t : {0.0, 0.3, 0.9}) {
    const State expected = forward_moments(p, x0, t).mean;
    CHECK((traj(t).flat - expected.flat).norm() < 1e-12);
  }
}

TEST_CASE("deterministic estimate matches a dense reconstruction") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 1 + int(rng() % 3), d = 1 + int(rng() % 3);
    HoldParams p = random_params(rng, n, d);
    Eigen::VectorXd q0 = random_vector(rng, d);
    const ScoreFn score = toy_score(d);

    Eigen::MatrixXd aux;
    if (n > 1) aux = random_matrix(rng, d, n - 1);
    auto traj = deterministic_forward_estimate(p, score, q0, aux);

    // Independent dense recomputation of the same trajectory.
    const State x0 = State::from_data(q0, n);
    Eigen::VectorXd eps = Eigen::VectorXd::Zero(n * d);
    // Columns of aux fill blocks 1..n-1 (1-based), i.e. everything before
    // the last block, which is reconstructed from the score.
    for (int i = 1; i < n; ++i) eps.segment((i - 1) * d, d) = aux.col(i - 1);
    const double l0 = (n == 1) ? std::sqrt(p.eps_num)
                               : std::sqrt(p.beta * p.inv_mass);
    eps.tail(d) = -score(x0, 0.0) * l0;

    const Eigen::MatrixXd f_dense = build_drift(p).dense(d);
    const Eigen::MatrixXd s0 = initial_cov(p).dense(d);
    const Eigen::MatrixXd linv =
        p.inv_mass * Eigen::MatrixXd::Identity(n * d, n * d);
    for (double t : {0.05, 0.6}) {
      const Eigen::MatrixXd et = matrix_exp(f_dense, t);
      const Eigen::MatrixXd sigma =
          linv + et * (s0 - linv) * et.transpose();
      const Eigen::MatrixXd chol =
          Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
      const Eigen::VectorXd expected = et * x0.flat + chol * eps;
      CHECK((traj(t).flat - expected).norm() / expected.norm() < 1e-10);
    }
  }
}

TEST_CASE("deterministic estimate argument checks") {
  HoldParams p;
  p.order = 2;
  p.dim = 2;
  p.gammas = {1.0};
  p.xi = 2.0;
  Eigen::VectorXd q_bad(3);
  q_bad.setZero();
  CHECK_THROWS_AS(deterministic_forward_estimate(p, zero_score(2), q_bad),
                  std::invalid_argument);
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd aux_bad = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(
      deterministic_forward_estimate(p, zero_score(2), q0, aux_bad),
      std::invalid_argument);
}

TEST_CASE("rank auroc hand examples") {
  CHECK(rank_auroc({1.0, 2.0}, {3.0, 4.0}) == 1.0);  // perfect separation
  CHECK(rank_auroc({3.0, 4.0}, {1.0, 2.0}) == 0.0);  // perfectly wrong
  CHECK(rank_auroc({1.0, 1.0}, {1.0, 1.0}) == 0.5);  // all ties
  CHECK(rank_auroc({1.0, 2.0}, {1.5, 2.5}) == 0.75);
  CHECK(rank_auroc({1.0, 2.0}, {2.0, 3.0}) == doctest::Approx(0.875));
  CHECK_THROWS_AS(rank_auroc({}, {1.0}), std::invalid_argument);
}

TEST_CASE("rank auroc agrees with the quadratic pair-count oracle") {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<int> coarse(0, 9);  // forces many ties
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> m(37), h(53);
    for (auto& v : m) v = coarse(rng);
    for (auto& v : h) v = coarse(rng);
    CHECK(rank_auroc(m, h) == doctest::Approx(pair_count_auroc(m, h)).epsilon(1e-14));
  }
}

TEST_CASE("rank auroc invariants") {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> coarse(0, 20);
  std::vector<double> m(40), h(40);
  for (auto& v : m) v = coarse(rng);
  for (auto& v : h) v = coarse(rng);

  // Swapping the roles complements the area.
  CHECK(rank_auroc(m, h) + rank_auroc(h, m) == doctest::Approx(1.0).epsilon(1e-14));

  // Strictly increasing transforms leave the ranking unchanged.
  auto transformed = [](std::vector<double> v) {
    for (auto& x : v) x = std::exp(0.3 * x) + x * x * x;
    return v;
  };
  CHECK(rank_auroc(m, h) ==
        doctest::Approx(rank_auroc(transformed(m), transformed(h)))
            .epsilon(1e-14));

  // Trapezoidal area under the ROC equals the rank statistic.
  CHECK(std::abs(trapezoid_area(roc_curve(m, h)) - rank_auroc(m, h)) < 1e-12);
}

TEST_CASE("roc curve endpoints and monotonicity") {
  std::mt19937_64 rng(26);
  std::vector<double> m(15), h(25);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (auto& v : m) v = coarse(rng);
  for (auto& v : h) v = coarse(rng);
  auto roc = roc_curve(m, h);
  CHECK(roc.front() == std::pair{0.0, 0.0});
  CHECK(roc.back() == std::pair{1.0, 1.0});
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].first >= roc[i - 1].first);
    CHECK(roc[i].second >= roc[i - 1].second);
  }
}

TEST_CASE("pia separates near and far points under a zero score") {
  // With a zero score the statistic is ||F e^{Ft} x0||, increasing in |q0|,
  // so points closer to the origin are always called members first.
  HoldParams p;
  p.xi = 4.0;
  Eigen::MatrixXd members(1, 3), holdouts(1, 3);
  members << 0.1, -0.2, 0.3;
  holdouts << 1.0, -1.5, 2.0;
  AttackConfig cfg;
  AttackReport report = run_pia(p, zero_score(1), members, holdouts, cfg);
  CHECK(report.auroc == 1.0);
  CHECK(report.metric.rows() == 6);
  CHECK(report.metric.cols() == cfg.n_time);
  CHECK(report.labels == std::vector<int>{1, 1, 1, 0, 0, 0});
  // Row means actually are the means of the metric rows.
  for (int i = 0; i < 6; ++i)
    CHECK(report.mean_stat(i) ==
          doctest::Approx(report.metric.row(i).mean()).epsilon(1e-14));

  // Identical member and holdout sets are indistinguishable.
  AttackReport flat = run_pia(p, zero_score(1), members, members, cfg);
  CHECK(flat.auroc == 0.5);
}

TEST_CASE("pia metric column matches the direct per-timestep statistic") {
  std::mt19937_64 rng(27);
  HoldParams p = random_params(rng, 2, 2);
  Eigen::MatrixXd members = random_matrix(rng, 2, 4);
  Eigen::MatrixXd holdouts = random_matrix(rng, 2, 5);
  const ScoreFn score = toy_score(2);
  AttackConfig cfg;
  cfg.n_time = 5;
  AttackReport report = run_pia(p, score, members, holdouts, cfg);

  // Recompute column k = 3 (t = 2T/5) independently.
  const int k = 3;
  const double t = (k - 1) * p.horizon / cfg.n_time;
  for (int j = 0; j < 4; ++j) {
    auto traj = deterministic_forward_estimate(p, score, members.col(j));
    CHECK(report.metric(j, k - 1) ==
          doctest::Approx(attack_metric(p, score, traj(t), t, cfg.p))
              .epsilon(1e-13));
  }

  // per_time_auroc is the rank statistic of that column.
  std::vector<double> m_col, h_col;
  for (int i = 0; i < report.metric.rows(); ++i)
    (report.labels[i] ? m_col : h_col).push_back(report.metric(i, k - 1));
  CHECK(per_time_auroc(report, k) == rank_auroc(m_col, h_col));
  CHECK_THROWS_AS(per_time_auroc(report, 0), std::out_of_range);
  CHECK_THROWS_AS(per_time_auroc(report, 6), std::out_of_range);
}

TEST_CASE("pia argument checks and stochastic noise plumbing") {
  HoldParams p;
  p.order = 2;
  p.dim = 1;
  p.gammas = {1.0};
  p.xi = 2.0;
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(1, 3);
  AttackConfig cfg;
  CHECK_THROWS_AS(run_pia(p, zero_score(1), Eigen::MatrixXd(1, 0), pts, cfg),
                  std::invalid_argument);
  cfg.stochastic_eps = true;
  CHECK_THROWS_AS(run_pia(p, zero_score(1), pts, pts, cfg),
                  std::invalid_argument);
  Rng rng(1);
  AttackReport stoch = run_pia(p, zero_score(1), pts, pts, cfg, &rng);
  CHECK(stoch.metric.allFinite());

  // Stochastic runs differ across rng states; deterministic runs do not.
  Rng rng2(2);
  AttackReport stoch2 = run_pia(p, zero_score(1), pts, pts, cfg, &rng2);
  CHECK(stoch.metric != stoch2.metric);
  cfg.stochastic_eps = false;
  AttackReport det1 = run_pia(p, zero_score(1), pts, pts, cfg);
  AttackReport det2 = run_pia(p, zero_score(1), pts, pts, cfg);
  CHECK(det1.metric == det2.metric);
}

TEST_CASE("attack report serialization") {
  HoldParams p;
  p.xi = 4.0;
  Eigen::MatrixXd members(1, 2), holdouts(1, 2);
  members << 0.1, 0.2;
  holdouts << 1.0, 2.0;
  AttackConfig cfg;
  cfg.n_time = 3;
  AttackReport report = run_pia(p, zero_score(1), members, holdouts, cfg);

  const auto j = nlohmann::json::parse(attack_report_to_json(report));
  CHECK(j["auroc"].get<double>() == report.auroc);
  CHECK(j["labels"].size() == 4);
  CHECK(j["metric"].size() == 4);
  CHECK(j["metric"][0].size() == 3);
  CHECK(j["roc"].size() == report.roc.size());

  const std::string path = "roc_test_tmp.csv";
  write_roc_csv(report, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "fpr,tpr");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == static_cast<int>(report.roc.size()));
  in.close();
  std::remove(path.c_str());
}
