#pragma once

#include "pinnbo/common.hpp"

namespace pinnbo {

// Cholesky factorization of a symmetric positive-definite matrix with
// jitter escalation. Jitter starts at 1e-10 * mean diagonal and grows by
// 10x up to 1e-6 * mean diagonal before giving up.
class SpdFactor {
 public:
  SpdFactor() = default;
  explicit SpdFactor(const Mat& a);

  Index size() const { return n_; }
  double jitter() const { return jitter_; }

  Vec solve(const Vec& b) const;
  Mat solve(const Mat& b) const;
  double log_det() const;
  /// L^{-1} b, so that b^T A^{-1} b = |L^{-1} b|^2.
  Vec half_solve(const Vec& b) const;

 private:
  Eigen::LLT<Mat> llt_;
  Index n_ = 0;
  double jitter_ = 0.0;
};

/// log det(A) of a symmetric PD matrix, via SpdFactor.
double spd_log_det(const Mat& a);

/// Symmetric part (A + A^T) / 2.
Mat symmetrized(const Mat& a);

}  // namespace pinnbo
