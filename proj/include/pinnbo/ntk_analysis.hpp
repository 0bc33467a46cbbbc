#pragma once

#include "pinnbo/common.hpp"
#include "pinnbo/spd_factor.hpp"

#include <vector>

namespace pinnbo {

/// Empirical tangent features at initialization: rows phi(x_i)^T of the
/// expensive points and rows omega(z_j)^T of the collocation points.
class FeatureBank {
 public:
  FeatureBank() = default;
  explicit FeatureBank(Index p) : phi_(0, p), omega_(0, p) {}
  FeatureBank(Mat phi, Mat omega);

  Index p() const { return phi_.cols(); }
  Index t() const { return phi_.rows(); }
  Index n_r() const { return omega_.rows(); }
  const Mat& phi() const { return phi_; }
  const Mat& omega() const { return omega_; }

  void add_phi(const Vec& row);
  void add_omega(const Vec& row);

  /// First `t` expensive rows with all collocation rows.
  FeatureBank prefix(Index t) const;
  /// max_j |omega(z_j)|_2, the empirical bound on the operator features.
  double omega_norm_max() const;

 private:
  Mat phi_;
  Mat omega_;
};

struct KernelBlocks {
  Mat uu;
  Mat ur;
  Mat ru;
  Mat rr;
  double lambda1 = 1.0;
  double lambda2 = 1.0;

  Index t() const { return uu.rows(); }
  Index n_r() const { return rr.rows(); }
  /// [[K_uu + l1 I, K_ur], [K_ru, K_rr + l2 I]]
  Mat regularized() const;
};

KernelBlocks gram_blocks(const FeatureBank& bank, double lambda1, double lambda2);

struct AnalysisConfig {
  double r1 = 1.0;
  double r2 = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double delta = 0.1;
  double rkhs_bound = 1.0;
  double c_r = 1.0;
  double nu_min = 1e-3;

  void validate() const;
  /// sqrt((R1/l1)^2 + (R2/l2)^2)
  double r_tilde() const;
};

struct RunDiagnostics {
  std::vector<double> gamma;
  std::vector<double> interaction;
  std::vector<double> nu;
  std::vector<double> sigma;
  double i0 = 0.0;
  double omega_norm_max = 0.0;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Posterior of f at arbitrary points given Y (expensive) and U (collocation)
/// observations. The block kernel is factorized once.
class PosteriorModel {
 public:
  PosteriorModel(const FeatureBank& bank, const KernelBlocks& blocks, const Vec& y, const Vec& u);

  Posterior at(const Vec& phi_x) const;

 private:
  Mat xi_;
  SpdFactor factor_;
  Vec alpha_;
};

Posterior posterior(const KernelBlocks& blocks, const FeatureBank& bank, const Vec& phi_x, const Vec& y,
                    const Vec& u);

/// Conditions the joint covariance of (f(x), Y, U) through its precision
/// matrix. Independent of PosteriorModel; used to cross-check it.
Posterior joint_gaussian_oracle(const FeatureBank& bank, double lambda1, double lambda2, const Vec& phi_x,
                                const Vec& y, const Vec& u);

/// I(f; Y; U) in the (t + N_r)-sized dual. Exactly 0 when t = 0 or N_r = 0.
double interaction_information(const FeatureBank& bank, double lambda1, double lambda2);

/// 1/2 log det(K_uu / l1 + I)
double info_gain(const KernelBlocks& blocks);

double nu_t_raw(double gamma, double interaction, const AnalysisConfig& cfg);
/// nu_t_raw clamped below at cfg.nu_min.
double nu_t(double gamma, double interaction, const AnalysisConfig& cfg);

/// 1/2 log det(K_rr + l2 I) / det(K_rr + l2 I - K_ru K_uu^{-1} K_ur)
double compute_I0(const KernelBlocks& blocks);

/// Smallest eigenvalue of a symmetric matrix (0 for an empty one).
double min_eigenvalue(const Mat& a);
/// Largest eigenvalue of a symmetric matrix (0 for an empty one).
double max_eigenvalue(const Mat& a);

struct IdentityReport {
  double woodbury = 0.0;         // xi^T Khat^{-1} xi vs I - (Xi^T Xi + I)^{-1}
  double det_ratio = 0.0;
  double det_ratio_corollary = 0.0;
};

/// Relative discrepancies of the three matrix identities on the bank's
/// features and a random PSD matrix K drawn from `rng`. Needs p >= t + N_r.
IdentityReport identity_suite(const FeatureBank& bank, double lambda1, double lambda2, Rng& rng);

/// log det(u (Kt + I)^{-1} u^T) - log det(u (K + I)^{-1} u^T) against
/// log det(K + I) - log det(Kt + I), with Kt = K (u^T u + I)^{-1}.
double det_ratio_discrepancy(const Mat& u, const Mat& k);
/// log det(u (K + I)^{-1} u^T) - log det(u (K + u^T u + I)^{-1} u^T) against
/// log det(K + u^T u + I) - log det(K + I).
double det_ratio_corollary_discrepancy(const Mat& u, const Mat& k);

struct VarianceSumBound {
  double sigma_sum = 0.0;
  double bound = 0.0;
  double gamma = 0.0;
  double i0 = 0.0;
  double slack = 0.0;  // N_r L^2 / (2 (1 + rho_min / l1))
  double lambda1 = 0.0;
  bool holds = false;
};

/// Replays a run: sigma_t is the posterior deviation at x_t given rows
/// 1..t-1 and all collocation rows, with l1 = 1 + 1/T. Checks
/// sum sigma_t <= sqrt(2 T (gamma_T - I0 + slack)).
VarianceSumBound variance_sum_bound(const FeatureBank& bank, double lambda2);

}  // namespace pinnbo
