#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "holdpp/forward.hpp"
#include "holdpp/matrix_exp.hpp"
#include "holdpp/privacy.hpp"
#include "test_util.hpp"

using namespace holdpp;
using namespace holdpp::testutil;

namespace {

// Renyi divergence between two Gaussians with equal covariance by direct
// quadrature of (1/(alpha-1)) log int p^alpha q^(1-alpha).
double renyi_quadrature_1d(double shift, double var, double alpha) {
  const double sigma = std::sqrt(var);
  const double lo = -10.0 * sigma, hi = shift + 10.0 * sigma;
  const int steps = 20000;
  const double h = (hi - lo) / steps;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  auto integrand = [&](double x) {
    const double log_p = -0.5 * x * x / var;
    const double log_q = -0.5 * (x - shift) * (x - shift) / var;
    return norm * std::exp(alpha * log_p + (1.0 - alpha) * log_q);
  };
  double sum = 0.5 * (integrand(lo) + integrand(hi));
  for (int i = 1; i < steps; ++i) sum += integrand(lo + i * h);
  return std::log(sum * h) / (alpha - 1.0);
}

double renyi_quadrature_2d(const Eigen::Vector2d& shift,
                           const Eigen::Matrix2d& sigma, double alpha) {
  const Eigen::Matrix2d prec = sigma.inverse();
  const double norm =
      1.0 / (2.0 * std::numbers::pi * std::sqrt(sigma.determinant()));
  const double span = 9.0 * std::sqrt(sigma.diagonal().maxCoeff());
  const int steps = 600;
  const double h = 2.0 * span / steps;
  double sum = 0.0;
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j) {
      Eigen::Vector2d x(-span + i * h + shift(0) / 2.0,
                        -span + j * h + shift(1) / 2.0);
      const double log_p = -0.5 * x.dot(prec * x);
      const Eigen::Vector2d y = x - shift;
      const double log_q = -0.5 * y.dot(prec * y);
      sum += norm * std::exp(alpha * log_p + (1.0 - alpha) * log_q);
    }
  return std::log(sum * h * h) / (alpha - 1.0);
}

}  // namespace

TEST_CASE("effective correlation at time zero is the initial covariance") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    HoldParams p = random_params(rng, 1 + int(rng() % 4), 1);
    const Eigen::MatrixXd r0 = effective_correlation(p, 0.0).entries();
    const Eigen::MatrixXd s0 = initial_cov(p).entries();
    CHECK((r0 - s0).cwiseAbs().maxCoeff() < 1e-14);
  }
  HoldParams p = random_params(rng, 2, 1);
  CHECK_THROWS_AS(effective_correlation(p, -0.1), std::invalid_argument);
}

TEST_CASE("simplified correlation formula equals the defining formula") {
  // Definition: R_t = (exp(Ft)^T S_t^{-1} exp(Ft))^{-1} with
  // S_t = L^{-1} I + exp(Ft)(S_0 - L^{-1} I)exp(Ft)^T.
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + int(rng() % 4);
    HoldParams p = random_params(rng, n, 1);
    std::uniform_real_distribution<double> time(0.0, 2.0);
    const double t = time(rng);

    const Eigen::MatrixXd e = matrix_exp(build_drift(p).entries(), t);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd s_t =
        p.inv_mass * eye +
        e * (initial_cov(p).entries() - p.inv_mass * eye) * e.transpose();
    const Eigen::MatrixXd defining =
        (e.transpose() * s_t.inverse() * e).inverse();

    const Eigen::MatrixXd simplified = effective_correlation(p, t).entries();
    CHECK((simplified - defining).norm() / defining.norm() < 1e-9);
  }
}

TEST_CASE("scalar effective correlation closed form") {
  HoldParams p;
  p.xi = 1.0;
  p.inv_mass = 1.0;
  p.eps_num = 0.01;
  const double t = 1.0;
  // n=1: exp(Ft) = e^{-xi t}, so R_t = L^{-1} e^{2 xi t} + eps_num - L^{-1}.
  const double expected = std::exp(2.0 * t) + 0.01 - 1.0;
  CHECK(effective_correlation(p, t)(0, 0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sensitivity closed forms and monotonicity") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    HoldParams p = random_params(rng, 1 + int(rng() % 4), 1);
    // t=0 with diagonal S_0: (S_0^{-1})[0][0] = 1/eps_num.
    CHECK(sensitivity(p, 0.0, 4.0) ==
          doctest::Approx(4.0 / p.eps_num).epsilon(1e-12));
    CHECK(sensitivity(p, 0.7, 0.0) == 0.0);

    // Lemma 2: strictly decreasing along any increasing grid.
    double prev = sensitivity(p, 0.0, 1.0);
    for (int k = 1; k <= 10; ++k) {
      const double cur = sensitivity(p, 0.2 * k, 1.0);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("rdp epsilon examples and argument checks") {
  HoldParams p;
  p.xi = 2.0;
  p.eps_num = 1e-3;
  CHECK(rdp_epsilon(p, 0.0, 4.0, 2.0) == 4000.0);
  CHECK_THROWS_AS(rdp_epsilon(p, 0.0, 4.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rdp_epsilon(p, 0.0, 4.0, 0.5), std::invalid_argument);
  // alpha -> 1+ limit: epsilon -> Delta f / 2.
  const double df = sensitivity(p, 0.3, 4.0);
  CHECK(rdp_epsilon(p, 0.3, 4.0, 1.0 + 1e-9) ==
        doctest::Approx(df / 2.0).epsilon(1e-8));
}

TEST_CASE("bound chain near-equality for small numerical stabilizer") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    HoldParams p = random_params(rng, 2 + int(rng() % 3), 1);
    p.eps_num = 1e-4 * p.beta * p.inv_mass;
    const double df0 = sensitivity(p, 0.0, 4.0);
    CHECK(std::abs(df0 - 4.0 / p.eps_num) / df0 < 1e-6);
  }
}

TEST_CASE("gaussian renyi divergence closed forms") {
  BlockScalarMatrix unit = BlockScalarMatrix::Identity(1);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(gaussian_renyi_divergence(zero, unit, 1, 2.0) == 0.0);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  CHECK(gaussian_renyi_divergence(one, unit, 1, 2.0) == doctest::Approx(1.0));

  // Nonnegative and increasing in alpha.
  double prev = 0.0;
  for (double alpha : {1.5, 2.0, 3.0, 5.0}) {
    const double d = gaussian_renyi_divergence(one, unit, 1, alpha);
    CHECK(d > prev);
    prev = d;
  }

  CHECK_THROWS_AS(gaussian_renyi_divergence(one, unit, 1, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(gaussian_renyi_divergence(one, unit, 2, 2.0),
                  std::invalid_argument);  // length mismatch
  BlockScalarMatrix indefinite(
      (Eigen::MatrixXd(2, 2) << 1.0, 2.0, 2.0, 1.0).finished());
  Eigen::VectorXd v2 = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(gaussian_renyi_divergence(v2, indefinite, 1, 2.0),
                  std::runtime_error);
}

TEST_CASE("gaussian renyi divergence matches quadrature") {
  // Scalar case.
  const double var = 0.7, shift = 0.9, alpha = 2.5;
  BlockScalarMatrix cov1(Eigen::MatrixXd::Constant(1, 1, var));
  Eigen::VectorXd v1 = Eigen::VectorXd::Constant(1, shift);
  const double exact1 = gaussian_renyi_divergence(v1, cov1, 1, alpha);
  CHECK(exact1 ==
        doctest::Approx(renyi_quadrature_1d(shift, var, alpha)).epsilon(0.01));

  // 2-d case with a correlated block factor (n=2, d=1).
  Eigen::Matrix2d s;
  s << 1.0, 0.4, 0.4, 0.8;
  BlockScalarMatrix cov2(s);
  Eigen::VectorXd v2(2);
  v2 << 0.6, -0.3;
  const double exact2 = gaussian_renyi_divergence(v2, cov2, 1, 2.0);
  CHECK(exact2 ==
        doctest::Approx(renyi_quadrature_2d(v2, s, 2.0)).epsilon(0.01));
}

TEST_CASE("auxiliary guess mse closed forms and Monte Carlo") {
  HoldParams p1;
  p1.xi = 1.0;
  CHECK(aux_guess_mse(p1) == 0.0);  // n = 1, nothing to guess

  HoldParams p3;
  p3.order = 3;
  p3.dim = 2;
  p3.gammas = {1.0, 2.0};
  p3.xi = 3.0;
  p3.beta = 10.0;
  p3.inv_mass = 1.0;
  CHECK(aux_guess_mse(p3) == doctest::Approx(20.0));

  // Guessing zero for aux ~ N(0, beta L^{-1} I_{(n-1)d}):
  // E||guess - truth||^2 = beta L^{-1} (n-1) d.
  std::mt19937_64 rng(35);
  std::normal_distribution<double> aux(0.0, std::sqrt(p3.aux_var()));
  const int draws = 100000, coords = (p3.order - 1) * p3.dim;
  double total = 0.0;
  for (int i = 0; i < draws; ++i)
    for (int c = 0; c < coords; ++c) {
      const double z = aux(rng);
      total += z * z;
    }
  CHECK(total / draws ==
        doctest::Approx(aux_guess_mse(p3) * p3.dim).epsilon(0.02));
}

TEST_CASE("privacy report invariants and serialization") {
  HoldParams p;
  p.order = 2;
  p.dim = 2;
  p.gammas = {2.0};
  p.xi = 4.0;
  p.beta = 10.0;
  p.eps_num = 1e-3;
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(k * 0.05);
  PrivacyReport report = make_privacy_report(p, grid, 4.0, 2.0);

  CHECK(report.delta_f.size() == grid.size());
  for (std::size_t k = 1; k < report.delta_f.size(); ++k)
    CHECK(report.delta_f[k] <= report.delta_f[k - 1]);
  for (double df : report.delta_f)
    CHECK(report.epsilon_bound >= report.alpha * df / 2.0);
  CHECK(report.epsilon_bound == doctest::Approx(2.0 * report.delta_f[0] / 2.0));
  CHECK(report.epsilon_approx == doctest::Approx(2.0 * 4.0 / (2.0 * 1e-3)));
  CHECK(report.aux_mse == doctest::Approx(10.0));

  const auto j = nlohmann::json::parse(privacy_report_to_json(report));
  CHECK(j["delta_f"].size() == grid.size());
  CHECK(j["alpha"].get<double>() == 2.0);
  CHECK(j["aux_mse"].get<double>() == doctest::Approx(10.0));

  const std::string path = "sensitivity_test_tmp.csv";
  write_sensitivity_csv(report, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,delta_f");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == static_cast<int>(grid.size()));
  in.close();
  std::remove(path.c_str());

  CHECK_THROWS_AS(make_privacy_report(p, {}, 4.0, 2.0), std::invalid_argument);
}
