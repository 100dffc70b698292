#include "holdpp/block_matrix.hpp"

#include <stdexcept>

namespace holdpp {

BlockScalarMatrix::BlockScalarMatrix(Eigen::MatrixXd entries)
    : m_(std::move(entries)) {
  if (m_.rows() != m_.cols())
    throw std::invalid_argument("BlockScalarMatrix: factor must be square");
}

BlockScalarMatrix BlockScalarMatrix::Identity(int order) {
  return BlockScalarMatrix(Eigen::MatrixXd::Identity(order, order));
}

BlockScalarMatrix BlockScalarMatrix::Zero(int order) {
  return BlockScalarMatrix(Eigen::MatrixXd::Zero(order, order));
}

BlockScalarMatrix BlockScalarMatrix::transpose() const {
  return BlockScalarMatrix(m_.transpose());
}

BlockScalarMatrix BlockScalarMatrix::inverse() const {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m_);
  if (!lu.isInvertible())
    throw std::runtime_error("BlockScalarMatrix: singular factor");
  return BlockScalarMatrix(lu.inverse());
}

Eigen::VectorXd BlockScalarMatrix::apply(const Eigen::VectorXd& flat,
                                         int dim) const {
  const int n = order();
  if (flat.size() != static_cast<Eigen::Index>(n) * dim)
    throw std::invalid_argument("BlockScalarMatrix::apply: size mismatch");
  // Blocks as columns of a d x n matrix; (A (x) I_d) x maps to X * A^T.
  Eigen::Map<const Eigen::MatrixXd> x(flat.data(), dim, n);
  Eigen::MatrixXd y = x * m_.transpose();
  return Eigen::Map<Eigen::VectorXd>(y.data(), flat.size());
}

Eigen::MatrixXd BlockScalarMatrix::dense(int dim) const {
  const int n = order();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * dim, n * dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.block(i * dim, j * dim, dim, dim) =
          m_(i, j) * Eigen::MatrixXd::Identity(dim, dim);
  return out;
}

BlockScalarMatrix operator*(const BlockScalarMatrix& a,
                            const BlockScalarMatrix& b) {
  return BlockScalarMatrix(a.m_ * b.m_);
}

BlockScalarMatrix operator+(const BlockScalarMatrix& a,
                            const BlockScalarMatrix& b) {
  return BlockScalarMatrix(a.m_ + b.m_);
}

BlockScalarMatrix operator-(const BlockScalarMatrix& a,
                            const BlockScalarMatrix& b) {
  return BlockScalarMatrix(a.m_ - b.m_);
}

BlockScalarMatrix operator*(double s, const BlockScalarMatrix& a) {
  return BlockScalarMatrix(s * a.m_);
}

State::State(int order_, int dim_)
    : order(order_), dim(dim_), flat(Eigen::VectorXd::Zero(order_ * dim_)) {}

State::State(int order_, int dim_, Eigen::VectorXd flat_)
    : order(order_), dim(dim_), flat(std::move(flat_)) {
  if (flat.size() != static_cast<Eigen::Index>(order) * dim)
    throw std::invalid_argument("State: flat length must be order*dim");
}

Eigen::VectorBlock<Eigen::VectorXd> State::block(int i) {
  return flat.segment(i * dim, dim);
}

Eigen::VectorBlock<const Eigen::VectorXd> State::block(int i) const {
  return flat.segment(i * dim, dim);
}

State State::from_data(const Eigen::VectorXd& q, int order) {
  State s(order, static_cast<int>(q.size()));
  s.block(0) = q;
  return s;
}

State operator*(const BlockScalarMatrix& a, const State& x) {
  return State(x.order, x.dim, a.apply(x.flat, x.dim));
}

}  // namespace holdpp
