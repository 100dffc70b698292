#pragma once

#include <Eigen/Dense>

namespace holdpp {

// n x n factor A standing for the Kronecker product A (x) I_d. All algebra on
// the full nd x nd operator reduces to algebra on the factor, so everything
// here stays in n x n space.
class BlockScalarMatrix {
 public:
  BlockScalarMatrix() = default;
  explicit BlockScalarMatrix(Eigen::MatrixXd entries);

  static BlockScalarMatrix Identity(int order);
  static BlockScalarMatrix Zero(int order);

  int order() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& entries() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  BlockScalarMatrix transpose() const;
  BlockScalarMatrix inverse() const;

  // Applies (A (x) I_d) to a block-major flat vector of length order*dim.
  Eigen::VectorXd apply(const Eigen::VectorXd& flat, int dim) const;

  // Expands to the dense nd x nd matrix A (x) I_d. Test/oracle use only.
  Eigen::MatrixXd dense(int dim) const;

  friend BlockScalarMatrix operator*(const BlockScalarMatrix& a,
                                     const BlockScalarMatrix& b);
  friend BlockScalarMatrix operator+(const BlockScalarMatrix& a,
                                     const BlockScalarMatrix& b);
  friend BlockScalarMatrix operator-(const BlockScalarMatrix& a,
                                     const BlockScalarMatrix& b);
  friend BlockScalarMatrix operator*(double s, const BlockScalarMatrix& a);

 private:
  Eigen::MatrixXd m_;
};

// One point of the joint process: n blocks of dimension d, flattened
// block-major (data block first).
struct State {
  int order = 0;
  int dim = 0;
  Eigen::VectorXd flat;  // length order*dim

  State() = default;
  State(int order_, int dim_);
  State(int order_, int dim_, Eigen::VectorXd flat_);

  Eigen::VectorBlock<Eigen::VectorXd> block(int i);
  Eigen::VectorBlock<const Eigen::VectorXd> block(int i) const;

  // x0 = (q, 0, ..., 0)
  static State from_data(const Eigen::VectorXd& q, int order);
};

State operator*(const BlockScalarMatrix& a, const State& x);

}  // namespace holdpp
