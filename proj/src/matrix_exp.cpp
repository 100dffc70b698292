#include "holdpp/matrix_exp.hpp"

#include <cmath>
#include <stdexcept>

namespace holdpp {

namespace {

// Pade [13/13] coefficients (Higham 2005).
constexpr double kPade13[] = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

Eigen::MatrixXd pade13(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a2 * a4;
  const auto& b = kPade13;
  Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
           b[3] * a2 + b[1] * id);
  Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                      b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, double t) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("matrix_exp: matrix must be square");
  if (!a.allFinite() || !std::isfinite(t))
    throw std::runtime_error("matrix_exp: non-finite input");

  Eigen::MatrixXd at = a * t;
  const double norm = at.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  // theta_13 for the [13/13] approximant; scale below it.
  constexpr double kTheta13 = 5.371920351148152;
  int squarings = 0;
  if (norm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
    at /= std::pow(2.0, squarings);
  }
  Eigen::MatrixXd e = pade13(at);
  for (int i = 0; i < squarings; ++i) e = e * e;
  return e;
}

BlockScalarMatrix matrix_exp(const BlockScalarMatrix& a, double t) {
  return BlockScalarMatrix(matrix_exp(a.entries(), t));
}

}  // namespace holdpp
