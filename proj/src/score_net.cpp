#include "holdpp/score_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "holdpp/forward.hpp"

namespace holdpp {

namespace {
constexpr double kLnEps = 1e-5;
constexpr char kMagic[8] = {'H', 'P', 'P', 'S', 'C', 'K', 'T', '1'};
constexpr uint32_t kCheckpointVersion = 1;

Eigen::VectorXd time_features(double t, double horizon) {
  const double u = t / horizon;
  Eigen::VectorXd f(ScoreNetwork::kTimeFeatures);
  f << u, std::sin(2.0 * M_PI * u), std::cos(2.0 * M_PI * u);
  return f;
}
}  // namespace

ScoreNetwork::ScoreNetwork(int order, int dim, int depth, int width,
                           uint64_t seed)
    : order_(order), dim_(dim), depth_(depth), width_(width) {
  if (order < 1 || dim < 1 || depth < 1 || width < 1)
    throw std::invalid_argument("ScoreNetwork: bad architecture");
  build_layout();
  init_params(seed);
}

void ScoreNetwork::build_layout() {
  layout_.clear();
  Eigen::Index off = 0;
  for (int l = 0; l < depth_; ++l) {
    LayerSpec spec{};
    spec.in = (l == 0) ? input_dim() : width_;
    spec.out = (l == depth_ - 1) ? dim_ : width_;
    spec.has_norm = (l != depth_ - 1);
    spec.w_off = off;
    off += static_cast<Eigen::Index>(spec.out) * spec.in;
    spec.b_off = off;
    off += spec.out;
    if (spec.has_norm) {
      spec.g_off = off;
      off += spec.out;
      spec.gb_off = off;
      off += spec.out;
    }
    layout_.push_back(spec);
  }
  params_ = Eigen::VectorXd::Zero(off);
}

void ScoreNetwork::init_params(uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& spec : layout_) {
    const double scale =
        spec.has_norm ? std::sqrt(2.0 / spec.in) : std::sqrt(1.0 / spec.in);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(spec.out) * spec.in;
         ++i)
      params_(spec.w_off + i) = scale * normal(rng);
    params_.segment(spec.b_off, spec.out).setZero();
    if (spec.has_norm) {
      params_.segment(spec.g_off, spec.out).setOnes();
      params_.segment(spec.gb_off, spec.out).setZero();
    }
  }
}

Eigen::MatrixXd ScoreNetwork::forward_batch(const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& times,
                                            double horizon,
                                            ForwardCache* cache) const {
  const Eigen::Index batch = x.cols();
  if (x.rows() != order_ * dim_ || times.size() != batch)
    throw std::invalid_argument("forward_batch: shape mismatch");
  if (!x.allFinite() || !times.allFinite())
    throw std::runtime_error("forward_batch: non-finite input");

  Eigen::MatrixXd a(input_dim(), batch);
  a.topRows(order_ * dim_) = x;
  for (Eigen::Index j = 0; j < batch; ++j)
    a.col(j).tail(kTimeFeatures) = time_features(times(j), horizon);

  if (cache) {
    *cache = ForwardCache{};
    cache->input = a;
  }

  for (const auto& spec : layout_) {
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + spec.w_off, spec.out,
                                        spec.in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + spec.b_off, spec.out);
    if (cache) cache->act_in.push_back(a);
    Eigen::MatrixXd z = (w * a).colwise() + b;
    if (!spec.has_norm) {
      a = std::move(z);
      continue;
    }
    Eigen::Map<const Eigen::VectorXd> g(params_.data() + spec.g_off, spec.out);
    Eigen::Map<const Eigen::VectorXd> gb(params_.data() + spec.gb_off,
                                         spec.out);
    Eigen::RowVectorXd mean = z.colwise().mean();
    Eigen::MatrixXd centered = z.rowwise() - mean;
    Eigen::RowVectorXd inv_std =
        (centered.colwise().squaredNorm() / spec.out).array() + kLnEps;
    inv_std = inv_std.array().sqrt().inverse();
    Eigen::MatrixXd norm = centered.array().rowwise() * inv_std.array();
    Eigen::MatrixXd post = (norm.array().colwise() * g.array()).colwise() +
                           gb.array();
    if (cache) {
      cache->pre_ln.push_back(z);
      cache->norm.push_back(norm);
      cache->inv_std.push_back(inv_std);
      cache->post.push_back(post);
    }
    a = post.cwiseMax(0.0);
  }
  return a;
}

Eigen::VectorXd ScoreNetwork::forward(const Eigen::VectorXd& x, double t,
                                      double horizon) const {
  Eigen::VectorXd ts(1);
  ts << t;
  return forward_batch(x, ts, horizon).col(0);
}

Eigen::VectorXd ScoreNetwork::gradient_batch(
    const ForwardCache& cache, const Eigen::MatrixXd& upstream) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = upstream;  // d<U,y>/dz for the current layer output

  for (int l = depth_ - 1; l >= 0; --l) {
    const auto& spec = layout_[l];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + spec.w_off, spec.out,
                                        spec.in);
    if (spec.has_norm) {
      const Eigen::MatrixXd& post = cache.post[l];
      const Eigen::MatrixXd& norm = cache.norm[l];
      const Eigen::RowVectorXd& inv_std = cache.inv_std[l];
      Eigen::Map<const Eigen::VectorXd> g(params_.data() + spec.g_off,
                                          spec.out);
      // Through ReLU.
      Eigen::MatrixXd dh =
          (post.array() > 0.0).cast<double>() * delta.array();
      // Norm-scale parameters.
      grad.segment(spec.g_off, spec.out) +=
          (dh.array() * norm.array()).rowwise().sum().matrix();
      grad.segment(spec.gb_off, spec.out) += dh.rowwise().sum();
      // Through layer normalization.
      Eigen::MatrixXd dn = dh.array().colwise() * g.array();
      Eigen::RowVectorXd mean_dn = dn.colwise().mean();
      Eigen::RowVectorXd mean_dn_norm =
          (dn.array() * norm.array()).colwise().mean();
      Eigen::MatrixXd dz =
          ((dn.rowwise() - mean_dn).array() -
           norm.array().rowwise() * mean_dn_norm.array())
              .rowwise() *
          inv_std.array();
      delta = std::move(dz);
    }
    const Eigen::MatrixXd& a = cache.act_in[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + spec.w_off, spec.out, spec.in);
    gw += delta * a.transpose();
    grad.segment(spec.b_off, spec.out) += delta.rowwise().sum();
    if (l > 0) delta = w.transpose() * delta;
  }
  return grad;
}

Eigen::VectorXd ScoreNetwork::gradient(const Eigen::VectorXd& x, double t,
                                       double horizon,
                                       const Eigen::VectorXd& upstream) const {
  ForwardCache cache;
  Eigen::VectorXd ts(1);
  ts << t;
  forward_batch(x, ts, horizon, &cache);
  return gradient_batch(cache, upstream);
}

void ScoreNetwork::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  auto write_u32 = [&](uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  write_u32(kCheckpointVersion);
  write_u32(static_cast<uint32_t>(order_));
  write_u32(static_cast<uint32_t>(dim_));
  write_u32(static_cast<uint32_t>(depth_));
  write_u32(static_cast<uint32_t>(width_));
  write_u32(static_cast<uint32_t>(kTimeFeatures));
  const uint64_t count = static_cast<uint64_t>(params_.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

ScoreNetwork ScoreNetwork::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: corrupt file " + path);
  auto read_u32 = [&]() {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  const uint32_t version = read_u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  const int order = static_cast<int>(read_u32());
  const int dim = static_cast<int>(read_u32());
  const int depth = static_cast<int>(read_u32());
  const int width = static_cast<int>(read_u32());
  const uint32_t time_features = read_u32();
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || time_features != kTimeFeatures)
    throw std::runtime_error("checkpoint: corrupt header in " + path);

  ScoreNetwork net(order, dim, depth, width, /*seed=*/0);
  if (count != static_cast<uint64_t>(net.param_count()))
    throw std::runtime_error("checkpoint: parameter count mismatch in " +
                             path);
  in.read(reinterpret_cast<char*>(net.params_.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(count * sizeof(double)))
    throw std::runtime_error("checkpoint: truncated file " + path);
  return net;
}

ScoreNetwork ScoreNetwork::load_checkpoint(const std::string& path,
                                           int expected_order,
                                           int expected_dim) {
  ScoreNetwork net = load_checkpoint(path);
  if (net.order() != expected_order || net.dim() != expected_dim)
    throw std::runtime_error(
        "checkpoint: dimension mismatch, expected order*dim " +
        std::to_string(expected_order) + "*" + std::to_string(expected_dim) +
        ", file has " + std::to_string(net.order()) + "*" +
        std::to_string(net.dim()));
  return net;
}

namespace {

// One sampled denoising batch: states, times, last noise blocks, and the
// Cholesky corner per sample.
struct DsmBatch {
  Eigen::MatrixXd xt;
  Eigen::VectorXd times;
  Eigen::MatrixXd eps_last;
  Eigen::VectorXd l_nn;
};

DsmBatch make_dsm_batch(const HoldParams& params,
                        const Eigen::MatrixXd& q0_batch, double t_min,
                        double t_max, Rng& rng) {
  params.validate();
  const Eigen::Index batch = q0_batch.cols();
  if (batch == 0) throw std::invalid_argument("dsm_loss: empty batch");
  if (q0_batch.rows() != params.dim)
    throw std::invalid_argument("dsm_loss: data dimension mismatch");
  const int n = params.order, d = params.dim;

  std::uniform_real_distribution<double> time_dist(t_min, t_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double aux_std = std::sqrt(params.aux_var());

  DsmBatch out;
  out.xt.resize(n * d, batch);
  out.times.resize(batch);
  out.eps_last.resize(d, batch);
  out.l_nn.resize(batch);

  for (Eigen::Index j = 0; j < batch; ++j) {
    const double t = time_dist(rng);
    out.times(j) = t;
    State x0(n, d);
    x0.block(0) = q0_batch.col(j);
    for (int i = 1; i < n; ++i)
      for (int k = 0; k < d; ++k) x0.block(i)(k) = aux_std * normal(rng);
    Eigen::VectorXd noise(n * d);
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise(k) = normal(rng);

    const GaussianMoments m = forward_moments(params, x0, t);
    out.xt.col(j) = m.mean.flat + m.chol.apply(noise, d);
    out.eps_last.col(j) = noise.tail(d);
    out.l_nn(j) = m.chol(n - 1, n - 1);
  }
  return out;
}

}  // namespace

DsmResult dsm_loss(const ScoreNetwork& net, const HoldParams& params,
                   const Eigen::MatrixXd& q0_batch, double t_min, double t_max,
                   Rng& rng) {
  DsmBatch b = make_dsm_batch(params, q0_batch, t_min, t_max, rng);
  const Eigen::Index batch = q0_batch.cols();
  const Eigen::MatrixXd& xt = b.xt;
  const Eigen::VectorXd& times = b.times;
  const Eigen::MatrixXd& eps_last = b.eps_last;
  const Eigen::VectorXd& l_nn = b.l_nn;

  ScoreNetwork::ForwardCache cache;
  Eigen::MatrixXd scores =
      net.forward_batch(xt, times, params.horizon, &cache);
  Eigen::MatrixXd residual =
      (scores.array().rowwise() * l_nn.transpose().array()) +
      eps_last.array();

  DsmResult result;
  result.loss = residual.squaredNorm() / static_cast<double>(batch);
  Eigen::MatrixXd upstream =
      (2.0 / static_cast<double>(batch)) *
      (residual.array().rowwise() * l_nn.transpose().array()).matrix();
  result.grad = net.gradient_batch(cache, upstream);
  return result;
}

double dsm_loss_value(const DsmScoreOracle& oracle, const HoldParams& params,
                      const Eigen::MatrixXd& q0_batch, double t_min,
                      double t_max, Rng& rng) {
  DsmBatch b = make_dsm_batch(params, q0_batch, t_min, t_max, rng);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < q0_batch.cols(); ++j) {
    Eigen::VectorXd s =
        oracle(b.xt.col(j), b.times(j), b.eps_last.col(j), b.l_nn(j));
    loss += (b.l_nn(j) * s + b.eps_last.col(j)).squaredNorm();
  }
  return loss / static_cast<double>(q0_batch.cols());
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double learning_rate,
                             double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void AdamOptimizer::step(Eigen::VectorXd& params,
                         const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("AdamOptimizer: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_.array() = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

TrainResult train(ScoreNetwork& net, const HoldParams& params,
                  const Eigen::MatrixXd& dataset, const TrainConfig& cfg) {
  params.validate();
  if (dataset.cols() == 0) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("train: epochs and batch_size must be >= 1");
  const double t_min =
      cfg.t_min > 0 ? cfg.t_min : 1e-3 * params.horizon;
  const double t_max = cfg.t_max > 0 ? cfg.t_max : params.horizon;
  if (!(t_min < t_max && t_max <= params.horizon))
    throw std::invalid_argument("train: need 0 < t_min < t_max <= horizon");

  Rng rng(cfg.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, dataset.cols() - 1);

  AdamOptimizer opt(net.param_count(), cfg.learning_rate, cfg.adam_beta1,
                    cfg.adam_beta2, cfg.adam_eps);
  Eigen::MatrixXd batch(params.dim, cfg.batch_size);

  TrainResult result;
  result.loss_trace.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int j = 0; j < cfg.batch_size; ++j)
      batch.col(j) = dataset.col(pick(rng));
    DsmResult dsm = dsm_loss(net, params, batch, t_min, t_max, rng);
    if (!std::isfinite(dsm.loss))
      throw std::runtime_error("train: non-finite loss at epoch " +
                               std::to_string(epoch));
    result.loss_trace.push_back(dsm.loss);
    opt.step(net.raw_params(), dsm.grad);
  }
  return result;
}

ScoreFn make_score_fn(const ScoreNetwork& net, double horizon) {
  return [&net, horizon](const State& x, double t) {
    return net.forward(x.flat, t, horizon);
  };
}

}  // namespace holdpp
