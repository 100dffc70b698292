#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "holdpp/block_matrix.hpp"
#include "holdpp/params.hpp"

namespace holdpp {

using Rng = std::mt19937_64;

// Score estimate as a function of the joint state and time.
using ScoreFn = std::function<Eigen::VectorXd(const State&, double)>;

// Fully connected score network s_theta(x_t, t) -> R^d. Hidden layers apply
// an affine map, layer normalization on the pre-activation, then ReLU; the
// output layer is linear. Time enters as appended features
// [t/T, sin(2*pi*t/T), cos(2*pi*t/T)].
class ScoreNetwork {
 public:
  static constexpr int kTimeFeatures = 3;

  // depth counts affine layers (depth-1 hidden blocks plus the output map).
  ScoreNetwork(int order, int dim, int depth, int width, uint64_t seed);

  int order() const { return order_; }
  int dim() const { return dim_; }
  int depth() const { return depth_; }
  int width() const { return width_; }
  int input_dim() const { return order_ * dim_ + kTimeFeatures; }

  Eigen::Index param_count() const { return params_.size(); }
  Eigen::VectorXd& raw_params() { return params_; }
  const Eigen::VectorXd& raw_params() const { return params_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x, double t,
                          double horizon) const;

  struct ForwardCache;
  // Columns are samples; times has one entry per column.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& times, double horizon,
                                ForwardCache* cache = nullptr) const;

  // Gradient of sum_j <upstream_j, forward(x_j, t_j)> with respect to the
  // flat parameter vector, from a cache produced by forward_batch.
  Eigen::VectorXd gradient_batch(const ForwardCache& cache,
                                 const Eigen::MatrixXd& upstream) const;

  // Single-sample convenience wrapper around the batched path.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, double t, double horizon,
                           const Eigen::VectorXd& upstream) const;

  void save_checkpoint(const std::string& path) const;
  static ScoreNetwork load_checkpoint(const std::string& path);
  static ScoreNetwork load_checkpoint(const std::string& path,
                                      int expected_order, int expected_dim);

  struct LayerView {
    Eigen::Map<const Eigen::MatrixXd> w;
    Eigen::Map<const Eigen::VectorXd> b;
  };

 private:
  friend struct ScoreNetworkAccess;
  int order_, dim_, depth_, width_;
  Eigen::VectorXd params_;

  struct LayerSpec {
    Eigen::Index w_off, b_off, g_off, gb_off;  // g/gb only for hidden layers
    int in, out;
    bool has_norm;
  };
  std::vector<LayerSpec> layout_;
  void build_layout();
  void init_params(uint64_t seed);
};

struct ScoreNetwork::ForwardCache {
  Eigen::MatrixXd input;                 // input_dim x B
  std::vector<Eigen::MatrixXd> act_in;   // per layer, input activations
  std::vector<Eigen::MatrixXd> pre_ln;   // hidden: z before normalization
  std::vector<Eigen::MatrixXd> norm;     // hidden: (z - mean)/s
  std::vector<Eigen::RowVectorXd> inv_std;  // hidden: 1/s per column
  std::vector<Eigen::MatrixXd> post;     // hidden: g.*norm + gb (pre-ReLU)
};

struct TrainConfig {
  int epochs = 5000;
  int batch_size = 128;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  double t_min = 0.0;  // <= 0 means 1e-3 * horizon
  double t_max = 0.0;  // <= 0 means horizon
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct DsmResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Bias-corrected adaptive-moment update on a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

// Denoising score-matching loss on the last block:
//   mean_j || l_t[n-1][n-1] * s_theta(x_t, t) + eps_n ||^2
// with t ~ U(t_min, t_max), aux blocks ~ N(0, beta/L), eps ~ N(0, I).
DsmResult dsm_loss(const ScoreNetwork& net, const HoldParams& params,
                   const Eigen::MatrixXd& q0_batch, double t_min, double t_max,
                   Rng& rng);

// Loss only, for an arbitrary score oracle s(x_t, t, eps_n, l_nn) -> R^d.
// Shares the batch construction with dsm_loss.
using DsmScoreOracle = std::function<Eigen::VectorXd(
    const Eigen::VectorXd& x_t, double t, const Eigen::VectorXd& eps_last,
    double l_nn)>;
double dsm_loss_value(const DsmScoreOracle& oracle, const HoldParams& params,
                      const Eigen::MatrixXd& q0_batch, double t_min,
                      double t_max, Rng& rng);

struct TrainResult {
  std::vector<double> loss_trace;  // one entry per epoch
};

// Minibatch Adam; one uniformly drawn batch per epoch. Deterministic for a
// fixed config and seed. Throws on a non-finite loss, naming the epoch.
TrainResult train(ScoreNetwork& net, const HoldParams& params,
                  const Eigen::MatrixXd& dataset, const TrainConfig& cfg);

// Adapts a network (or any score oracle) to the ScoreFn interface.
ScoreFn make_score_fn(const ScoreNetwork& net, double horizon);

}  // namespace holdpp
