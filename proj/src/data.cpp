#include "holdpp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace holdpp {

Eigen::MatrixXd generate_spiral(const SpiralConfig& cfg) {
  if (cfg.count < 2)
    throw std::invalid_argument("generate_spiral: count must be >= 2");
  if (!(cfg.turns > 0) || cfg.noise_std < 0)
    throw std::invalid_argument("generate_spiral: bad turns or noise_std");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double extent = 2.0 * M_PI * cfg.turns;

  Eigen::MatrixXd out(2, cfg.count);
  for (int i = 0; i < cfg.count; ++i) {
    const double theta = extent * std::sqrt(uniform(rng));
    out(0, i) = theta * std::cos(theta) / extent + cfg.noise_std * normal(rng);
    out(1, i) = theta * std::sin(theta) / extent + cfg.noise_std * normal(rng);
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split(const Eigen::MatrixXd& data,
                                                  double member_fraction,
                                                  uint64_t seed) {
  if (!(member_fraction > 0.0 && member_fraction < 1.0))
    throw std::invalid_argument("split: member_fraction must be in (0, 1)");
  const Eigen::Index total = data.cols();
  const Eigen::Index members =
      static_cast<Eigen::Index>(std::llround(member_fraction * total));
  if (members < 1 || members >= total)
    throw std::invalid_argument("split: degenerate split sizes");

  std::vector<Eigen::Index> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  Eigen::MatrixXd a(data.rows(), members), b(data.rows(), total - members);
  for (Eigen::Index i = 0; i < members; ++i) a.col(i) = data.col(idx[i]);
  for (Eigen::Index i = members; i < total; ++i)
    b.col(i - members) = data.col(idx[i]);
  return {std::move(a), std::move(b)};
}

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 || b.cols() == 0)
    throw std::invalid_argument("energy_distance: empty input");
  if (a.rows() != b.rows())
    throw std::invalid_argument("energy_distance: dimension mismatch");

  auto mean_cross = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      for (Eigen::Index j = 0; j < y.cols(); ++j)
        sum += (x.col(i) - y.col(j)).norm();
    return sum / (static_cast<double>(x.cols()) * y.cols());
  };
  return 2.0 * mean_cross(a, b) - mean_cross(a, a) - mean_cross(b, b);
}

void write_dataset_csv(const Eigen::MatrixXd& data, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  for (Eigen::Index k = 0; k < data.rows(); ++k)
    out << (k ? "," : "") << "x" << k;
  out << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    for (Eigen::Index k = 0; k < data.rows(); ++k)
      out << (k ? "," : "") << data(k, i);
    out << "\n";
  }
}

Eigen::MatrixXd read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_dataset_csv: empty file " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("read_dataset_csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw std::runtime_error("read_dataset_csv: no data rows in " + path);

  Eigen::MatrixXd out(rows.front().size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) out(k, i) = rows[i][k];
  return out;
}

}  // namespace holdpp
