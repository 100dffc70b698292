#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

namespace holdpp {

struct SpiralConfig {
  int count = 2000;
  double turns = 2.0;       // angular extent in full rotations
  double noise_std = 0.05;
  uint64_t seed = 0;
};

// 2-D spiral: u ~ U(0,1), theta = 2*pi*turns*sqrt(u),
// point = (theta cos theta, theta sin theta) / (2*pi*turns) + noise.
// Noiseless points lie in the closed unit disk. Columns are points.
Eigen::MatrixXd generate_spiral(const SpiralConfig& cfg);

// Seeded shuffle split into disjoint, exhaustive (members, holdouts).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split(const Eigen::MatrixXd& data,
                                                  double member_fraction,
                                                  uint64_t seed);

// Two-sample energy distance 2 E|a-b| - E|a-a'| - E|b-b'| via exact double
// sums (V-statistic).
double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// CSV with a one-line header x0,...,x{d-1}; one row per point.
void write_dataset_csv(const Eigen::MatrixXd& data, const std::string& path);
Eigen::MatrixXd read_dataset_csv(const std::string& path);

}  // namespace holdpp
