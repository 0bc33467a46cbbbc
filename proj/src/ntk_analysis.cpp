#include "pinnbo/ntk_analysis.hpp"

#include <cmath>

namespace pinnbo {

FeatureBank::FeatureBank(Mat phi, Mat omega) : phi_(std::move(phi)), omega_(std::move(omega)) {
  if (phi_.cols() != omega_.cols()) throw std::invalid_argument("FeatureBank: phi and omega widths differ");
}

void FeatureBank::add_phi(const Vec& row) {
  if (row.size() != p()) throw std::invalid_argument("FeatureBank: phi row has the wrong length");
  if (!row.allFinite()) throw NumericalError("FeatureBank: non-finite phi row");
  phi_.conservativeResize(phi_.rows() + 1, Eigen::NoChange);
  phi_.row(phi_.rows() - 1) = row.transpose();
}

void FeatureBank::add_omega(const Vec& row) {
  if (row.size() != p()) throw std::invalid_argument("FeatureBank: omega row has the wrong length");
  if (!row.allFinite()) throw NumericalError("FeatureBank: non-finite omega row");
  omega_.conservativeResize(omega_.rows() + 1, Eigen::NoChange);
  omega_.row(omega_.rows() - 1) = row.transpose();
}

FeatureBank FeatureBank::prefix(Index t) const {
  if (t < 0 || t > this->t()) throw std::out_of_range("FeatureBank::prefix: row count out of range");
  return FeatureBank(phi_.topRows(t), omega_);
}

double FeatureBank::omega_norm_max() const {
  if (omega_.rows() == 0) return 0.0;
  return omega_.rowwise().norm().maxCoeff();
}

Mat KernelBlocks::regularized() const {
  const Index t = this->t();
  const Index r = n_r();
  Mat k(t + r, t + r);
  k.topLeftCorner(t, t) = uu;
  k.topLeftCorner(t, t).diagonal().array() += lambda1;
  k.topRightCorner(t, r) = ur;
  k.bottomLeftCorner(r, t) = ru;
  k.bottomRightCorner(r, r) = rr;
  k.bottomRightCorner(r, r).diagonal().array() += lambda2;
  return k;
}

KernelBlocks gram_blocks(const FeatureBank& bank, double lambda1, double lambda2) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::invalid_argument("gram_blocks: regularizers must be positive");
  if (!bank.phi().allFinite() || !bank.omega().allFinite()) throw NumericalError("gram_blocks: non-finite features");
  KernelBlocks b;
  b.uu = symmetrized(bank.phi() * bank.phi().transpose());
  b.ur = bank.phi() * bank.omega().transpose();
  b.ru = b.ur.transpose();
  b.rr = symmetrized(bank.omega() * bank.omega().transpose());
  b.lambda1 = lambda1;
  b.lambda2 = lambda2;
  return b;
}

void AnalysisConfig::validate() const {
  if (!(r1 >= 0.0) || !(r2 >= 0.0)) throw std::invalid_argument("AnalysisConfig: noise scales must be non-negative");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::invalid_argument("AnalysisConfig: regularizers must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("AnalysisConfig: delta must lie in (0, 1)");
  if (!(c_r > 0.0)) throw std::invalid_argument("AnalysisConfig: c_r must be positive");
  if (!(nu_min > 0.0)) throw std::invalid_argument("AnalysisConfig: nu_min must be positive");
}

double AnalysisConfig::r_tilde() const { return std::hypot(r1 / lambda1, r2 / lambda2); }

// ---------------------------------------------------------------------------

PosteriorModel::PosteriorModel(const FeatureBank& bank, const KernelBlocks& blocks, const Vec& y, const Vec& u) {
  if (y.size() != bank.t() || u.size() != bank.n_r()) throw std::invalid_argument("posterior: target sizes differ from the bank");
  if (blocks.t() != bank.t() || blocks.n_r() != bank.n_r()) throw std::invalid_argument("posterior: blocks do not match the bank");
  xi_.resize(bank.t() + bank.n_r(), bank.p());
  xi_ << bank.phi(), bank.omega();
  factor_ = SpdFactor(blocks.regularized());
  Vec target(y.size() + u.size());
  target << y, u;
  alpha_ = factor_.solve(target);
}

Posterior PosteriorModel::at(const Vec& phi_x) const {
  if (phi_x.size() != xi_.cols()) throw std::invalid_argument("posterior: feature length mismatch");
  const Vec k = xi_ * phi_x;
  Posterior out;
  out.mean = k.dot(alpha_);
  out.variance = std::max(0.0, phi_x.squaredNorm() - factor_.half_solve(k).squaredNorm());
  return out;
}

Posterior posterior(const KernelBlocks& blocks, const FeatureBank& bank, const Vec& phi_x, const Vec& y,
                    const Vec& u) {
  return PosteriorModel(bank, blocks, y, u).at(phi_x);
}

Posterior joint_gaussian_oracle(const FeatureBank& bank, double lambda1, double lambda2, const Vec& phi_x,
                                const Vec& y, const Vec& u) {
  const Index t = bank.t();
  const Index r = bank.n_r();
  if (y.size() != t || u.size() != r || phi_x.size() != bank.p()) {
    throw std::invalid_argument("joint_gaussian_oracle: size mismatch");
  }
  // rows: f(x), Y_1..Y_t, U_1..U_r
  Mat z(1 + t + r, bank.p());
  z << phi_x.transpose(), bank.phi(), bank.omega();
  Mat cov = z * z.transpose();
  cov.diagonal().segment(1, t).array() += lambda1;
  cov.diagonal().segment(1 + t, r).array() += lambda2;

  Eigen::FullPivLU<Mat> lu(cov);
  if (!lu.isInvertible()) throw NumericalError("joint_gaussian_oracle: singular joint covariance");
  const Mat precision = lu.inverse();
  const double p00 = precision(0, 0);
  if (!(p00 > 0.0) || !std::isfinite(p00)) throw NumericalError("joint_gaussian_oracle: degenerate precision");

  Vec obs(t + r);
  obs << y, u;
  Posterior out;
  out.variance = 1.0 / p00;
  out.mean = -precision.row(0).tail(t + r).dot(obs) / p00;
  return out;
}

double interaction_information(const FeatureBank& bank, double lambda1, double lambda2) {
  if (bank.t() == 0 || bank.n_r() == 0) return 0.0;
  const KernelBlocks b = gram_blocks(bank, lambda1, lambda2);
  const Index t = b.t();
  const Index r = b.n_r();
  const double s = 1.0 / std::sqrt(lambda1 * lambda2);

  Mat uu = b.uu / lambda1;
  uu.diagonal().array() += 1.0;
  Mat rr = b.rr / lambda2;
  rr.diagonal().array() += 1.0;
  Mat joint(t + r, t + r);
  joint << uu, s * b.ur, s * b.ru, rr;

  const double value = 0.5 * (spd_log_det(uu) + spd_log_det(rr) - spd_log_det(joint));
  if (!std::isfinite(value)) throw NumericalError("interaction_information: non-finite log-determinant");
  return value;
}

double info_gain(const KernelBlocks& blocks) {
  if (blocks.t() == 0) return 0.0;
  Mat a = blocks.uu / blocks.lambda1;
  a.diagonal().array() += 1.0;
  return 0.5 * spd_log_det(a);
}

double nu_t_raw(double gamma, double interaction, const AnalysisConfig& cfg) {
  return cfg.r_tilde() * std::sqrt(std::max(0.0, 2.0 * gamma - 2.0 * interaction) + std::log(1.0 / cfg.delta));
}

double nu_t(double gamma, double interaction, const AnalysisConfig& cfg) {
  return std::max(cfg.nu_min, nu_t_raw(gamma, interaction, cfg));
}

double compute_I0(const KernelBlocks& blocks) {
  if (blocks.t() == 0 || blocks.n_r() == 0) return 0.0;
  Mat s = blocks.rr;
  s.diagonal().array() += blocks.lambda2;
  const SpdFactor kuu(blocks.uu);
  const Mat schur = symmetrized(s - blocks.ru * kuu.solve(blocks.ur));
  const double value = 0.5 * (spd_log_det(s) - spd_log_det(schur));
  if (!std::isfinite(value)) throw NumericalError("compute_I0: non-finite log-determinant");
  return value;
}

double min_eigenvalue(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("min_eigenvalue: eigen solver failed");
  return es.eigenvalues()[0];
}

double max_eigenvalue(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("max_eigenvalue: eigen solver failed");
  return es.eigenvalues()[a.rows() - 1];
}

// ---------------------------------------------------------------------------

namespace {

double log_abs_det(const Mat& a) {
  Eigen::PartialPivLU<Mat> lu(a);
  return lu.matrixLU().diagonal().array().abs().log().sum();
}

double relative_gap(double lhs, double rhs) {
  return std::abs(std::expm1(lhs - rhs));
}

Mat random_psd(Index p, Rng& rng) {
  Mat g(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) g(i, j) = normal_draw(rng);
  return g * g.transpose() / static_cast<double>(p);
}

}  // namespace

double det_ratio_discrepancy(const Mat& u, const Mat& k) {
  const Index p = u.cols();
  const Mat eye = Mat::Identity(p, p);
  const Mat kt = k * (u.transpose() * u + eye).inverse();
  const Mat a = kt + eye;
  const Mat b = k + eye;
  const double lhs = log_abs_det(u * a.inverse() * u.transpose()) - log_abs_det(u * b.inverse() * u.transpose());
  const double rhs = log_abs_det(b) - log_abs_det(a);
  return relative_gap(lhs, rhs);
}

double det_ratio_corollary_discrepancy(const Mat& u, const Mat& k) {
  const Index p = u.cols();
  const Mat eye = Mat::Identity(p, p);
  const Mat a = k + eye;
  const Mat b = k + u.transpose() * u + eye;
  const double lhs = log_abs_det(u * a.inverse() * u.transpose()) - log_abs_det(u * b.inverse() * u.transpose());
  const double rhs = log_abs_det(b) - log_abs_det(a);
  return relative_gap(lhs, rhs);
}

IdentityReport identity_suite(const FeatureBank& bank, double lambda1, double lambda2, Rng& rng) {
  const Index p = bank.p();
  const Index n = bank.t() + bank.n_r();
  if (n > p) throw std::invalid_argument("identity_suite: needs p >= t + N_r");
  IdentityReport report;

  Mat xi(n, p);
  xi << bank.phi(), bank.omega();
  Mat scaled(n, p);
  scaled << bank.phi() / std::sqrt(lambda1), bank.omega() / std::sqrt(lambda2);

  const SpdFactor khat(gram_blocks(bank, lambda1, lambda2).regularized());
  const Mat lhs = xi.transpose() * khat.solve(xi);
  Mat inner = scaled.transpose() * scaled;
  inner.diagonal().array() += 1.0;
  const Mat rhs = Mat::Identity(p, p) - inner.llt().solve(Mat::Identity(p, p));
  report.woodbury = (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300);

  if (n > 0) {
    const Mat k = random_psd(p, rng);
    report.det_ratio = det_ratio_discrepancy(scaled, k);
    report.det_ratio_corollary = det_ratio_corollary_discrepancy(scaled, k);
  }
  return report;
}

VarianceSumBound variance_sum_bound(const FeatureBank& bank, double lambda2) {
  const Index big_t = bank.t();
  if (big_t == 0) throw std::invalid_argument("variance_sum_bound: the run has no expensive rows");
  VarianceSumBound out;
  out.lambda1 = 1.0 + 1.0 / static_cast<double>(big_t);

  const Vec u0 = Vec::Zero(bank.n_r());
  for (Index t = 0; t < big_t; ++t) {
    const FeatureBank before = bank.prefix(t);
    const KernelBlocks b = gram_blocks(before, out.lambda1, lambda2);
    const PosteriorModel model(before, b, Vec::Zero(t), u0);
    out.sigma_sum += std::sqrt(model.at(bank.phi().row(t).transpose()).variance);
  }

  const KernelBlocks full = gram_blocks(bank, out.lambda1, lambda2);
  out.gamma = info_gain(full);
  out.i0 = compute_I0(full);
  const double l = bank.omega_norm_max();
  out.slack = static_cast<double>(bank.n_r()) * l * l / (2.0 * (1.0 + min_eigenvalue(full.uu) / out.lambda1));
  out.bound = std::sqrt(2.0 * static_cast<double>(big_t) * std::max(0.0, out.gamma - out.i0 + out.slack));
  out.holds = out.sigma_sum <= out.bound;
  return out;
}

}  // namespace pinnbo
