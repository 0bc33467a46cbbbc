#include "pinnbo/spd_factor.hpp"

#include <cmath>

namespace pinnbo {

SpdFactor::SpdFactor(const Mat& a) : n_(a.rows()) {
  if (a.rows() != a.cols()) throw std::invalid_argument("SpdFactor: matrix must be square");
  if (n_ == 0) return;
  if (!a.allFinite()) throw NumericalError("SpdFactor: non-finite matrix entries");

  llt_.compute(a);
  if (llt_.info() == Eigen::Success) return;

  const double scale = std::max(a.diagonal().cwiseAbs().mean(), 1e-300);
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-12); rel *= 10.0) {
    jitter_ = rel * scale;
    Mat shifted = a;
    shifted.diagonal().array() += jitter_;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success) return;
  }
  throw NumericalError("SpdFactor: matrix is not positive definite after jitter escalation");
}

Vec SpdFactor::solve(const Vec& b) const {
  if (n_ == 0) return Vec(0);
  return llt_.solve(b);
}

Mat SpdFactor::solve(const Mat& b) const {
  if (n_ == 0) return Mat(0, b.cols());
  return llt_.solve(b);
}

Vec SpdFactor::half_solve(const Vec& b) const {
  if (n_ == 0) return Vec(0);
  return llt_.matrixL().solve(b);
}

double SpdFactor::log_det() const {
  if (n_ == 0) return 0.0;
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double spd_log_det(const Mat& a) { return SpdFactor(a).log_det(); }

Mat symmetrized(const Mat& a) { return 0.5 * (a + a.transpose()); }

}  // namespace pinnbo
