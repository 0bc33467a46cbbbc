#include "pinnbo/ntk_analysis.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace pinnbo;

namespace {

Mat random_mat(Index r, Index c, Rng& rng) {
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = normal_draw(rng);
  return m;
}

Vec random_vec(Index n, Rng& rng) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal_draw(rng);
  return v;
}

struct Instance {
  FeatureBank bank;
  Vec y;
  Vec u;
  Vec phi_x;
  double l1;
  double l2;
};

Instance random_instance(Rng& rng) {
  std::uniform_int_distribution<int> tn(0, 20);
  std::uniform_real_distribution<double> lam(0.1, 2.0);
  const Index t = tn(rng);
  const Index n_r = tn(rng);
  const Index p = std::min<Index>(64, t + n_r + 5 + tn(rng));
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  Instance in{FeatureBank(scale * random_mat(t, p, rng), scale * random_mat(n_r, p, rng)), random_vec(t, rng),
              random_vec(n_r, rng), scale * random_vec(p, rng), lam(rng), lam(rng)};
  return in;
}

// Explicit inverse of the stacked, regularized kernel.
Posterior inverse_oracle(const Instance& in) {
  const Index t = in.bank.t();
  const Index n = t + in.bank.n_r();
  Mat xi(n, in.bank.p());
  xi << in.bank.phi(), in.bank.omega();
  Mat k = xi * xi.transpose();
  for (Index i = 0; i < n; ++i) k(i, i) += i < t ? in.l1 : in.l2;
  Vec obs(n);
  obs << in.y, in.u;
  const Mat kinv = k.inverse();
  const Vec kx = xi * in.phi_x;
  return {kx.dot(kinv * obs), in.phi_x.squaredNorm() - kx.dot(kinv * kx)};
}

double log_det(const Mat& a) { return a.rows() == 0 ? 0.0 : std::log(a.determinant()); }

// Primal (p x p) closed form of the interaction information.
double primal_interaction(const FeatureBank& b, double l1, double l2) {
  const Index p = b.p();
  const Mat id = Mat::Identity(p, p);
  const Mat a = b.phi().transpose() * b.phi() / l1 + id;
  const Mat c = b.omega().transpose() * b.omega() / l2 + id;
  const Mat d = b.phi().transpose() * b.phi() / l1 + b.omega().transpose() * b.omega() / l2 + id;
  return 0.5 * (log_det(a) + log_det(c) - log_det(d));
}

// I(f; Y) - I(f; Y | U) from Gaussian entropies.
double entropy_interaction(const FeatureBank& b, double l1, double l2) {
  const Index t = b.t();
  const Index r = b.n_r();
  const Mat kuu = b.phi() * b.phi().transpose();
  const Mat kur = b.phi() * b.omega().transpose();
  const Mat krr = b.omega() * b.omega().transpose();
  const double i_fy = 0.5 * log_det(kuu / l1 + Mat::Identity(t, t));
  Mat cov_y_u = kuu + l1 * Mat::Identity(t, t);
  if (r > 0) cov_y_u -= kur * (krr + l2 * Mat::Identity(r, r)).inverse() * kur.transpose();
  const double i_fy_given_u = 0.5 * (log_det(cov_y_u) - static_cast<double>(t) * std::log(l1));
  return i_fy - i_fy_given_u;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(GramBlocks, MatchNaiveProducts) {
  Rng rng(1);
  const Mat phi = random_mat(4, 7, rng);
  const Mat omega = random_mat(3, 7, rng);
  const KernelBlocks b = gram_blocks(FeatureBank(phi, omega), 0.5, 2.0);
  auto dot = [](const Mat& a, Index i, const Mat& c, Index j) {
    double s = 0.0;
    for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * c(j, k);
    return s;
  };
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) EXPECT_NEAR(b.uu(i, j), dot(phi, i, phi, j), 1e-12);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) {
      EXPECT_NEAR(b.ur(i, j), dot(phi, i, omega, j), 1e-12);
      EXPECT_EQ(b.ru(j, i), b.ur(i, j));
    }
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) EXPECT_NEAR(b.rr(i, j), dot(omega, i, omega, j), 1e-12);
  const Mat reg = b.regularized();
  EXPECT_NEAR(reg(0, 0), b.uu(0, 0) + 0.5, 1e-15);
  EXPECT_NEAR(reg(5, 5), b.rr(1, 1) + 2.0, 1e-15);
}

TEST(GramBlocks, EmptyOmegaAndUnitRow) {
  Mat phi = Mat::Zero(1, 5);
  phi(0, 0) = 1.0;
  const KernelBlocks b = gram_blocks(FeatureBank(phi, Mat(0, 5)), 1.0, 1.0);
  EXPECT_EQ(b.uu, Mat::Ones(1, 1));
  EXPECT_EQ(b.rr.size(), 0);
  EXPECT_EQ(b.ur.size(), 0);
  Mat bad = phi;
  bad(0, 1) = std::nan("");
  EXPECT_THROW(gram_blocks(FeatureBank(bad, Mat(0, 5)), 1.0, 1.0), std::exception);
}

TEST(Posterior, EmptyConditioning) {
  Rng rng(2);
  const Vec phi_x = random_vec(6, rng);
  const FeatureBank bank(6);
  const Posterior p = posterior(gram_blocks(bank, 1.0, 1.0), bank, phi_x, Vec(0), Vec(0));
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_NEAR(p.variance, phi_x.squaredNorm(), 1e-14);
}

TEST(Posterior, OnePointKernelRidge) {
  Rng rng(3);
  const Vec phi1 = random_vec(5, rng);
  const Vec phi_x = random_vec(5, rng);
  const double l1 = 0.7;
  const double y1 = 1.3;
  const FeatureBank bank(phi1.transpose(), Mat(0, 5));
  const Posterior p = posterior(gram_blocks(bank, l1, 1.0), bank, phi_x, Vec::Constant(1, y1), Vec(0));
  EXPECT_NEAR(p.mean, phi_x.dot(phi1) * y1 / (phi1.squaredNorm() + l1), 1e-12);
}

TEST(Posterior, MatchesInverseAndJointGaussianOracles) {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const Instance in = random_instance(rng);
    const KernelBlocks b = gram_blocks(in.bank, in.l1, in.l2);
    const Posterior p = posterior(b, in.bank, in.phi_x, in.y, in.u);
    const Posterior inv = inverse_oracle(in);
    const Posterior joint = joint_gaussian_oracle(in.bank, in.l1, in.l2, in.phi_x, in.y, in.u);
    EXPECT_LE(rel(p.mean, inv.mean), 1e-8);
    EXPECT_LE(rel(p.variance, inv.variance), 1e-8);
    EXPECT_LE(rel(p.mean, joint.mean), 1e-8);
    EXPECT_LE(rel(p.variance, joint.variance), 1e-8);
    EXPECT_GE(joint.variance, 0.0);
  }
}

TEST(Posterior, ModelAgreesWithOneShot) {
  Rng rng(5);
  const Instance in = random_instance(rng);
  const KernelBlocks b = gram_blocks(in.bank, in.l1, in.l2);
  const PosteriorModel model(in.bank, b, in.y, in.u);
  for (int k = 0; k < 5; ++k) {
    const Vec q = random_vec(in.bank.p(), rng);
    const Posterior a = model.at(q);
    const Posterior c = posterior(b, in.bank, q, in.y, in.u);
    EXPECT_NEAR(a.mean, c.mean, 1e-12 * std::max(1.0, std::abs(c.mean)));
    EXPECT_NEAR(a.variance, c.variance, 1e-12 * std::max(1.0, c.variance));
  }
}

TEST(Posterior, VarianceNeverGrowsWithMoreRows) {
  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    const Index p = 30;
    const Mat phi = random_mat(12, p, rng) / std::sqrt(30.0);
    const Mat omega = random_mat(5, p, rng) / std::sqrt(30.0);
    const Vec q = random_vec(p, rng) / std::sqrt(30.0);
    double prev = std::numeric_limits<double>::infinity();
    for (Index t = 0; t <= 12; ++t) {
      const FeatureBank bank(phi.topRows(t), omega);
      const double v = joint_gaussian_oracle(bank, 0.5, 0.5, q, Vec::Zero(t), Vec::Zero(5)).variance;
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
  }
}

TEST(Posterior, DuplicateCollocationShrinksVariance) {
  Rng rng(7);
  const Mat phi = random_mat(3, 10, rng) / std::sqrt(10.0);
  const Vec q = random_vec(10, rng) / std::sqrt(10.0);
  const double without = joint_gaussian_oracle(FeatureBank(phi, Mat(0, 10)), 1.0, 1.0, q, Vec::Zero(3), Vec(0)).variance;
  const double with = joint_gaussian_oracle(FeatureBank(phi, phi), 1.0, 1.0, q, Vec::Zero(3), Vec::Zero(3)).variance;
  EXPECT_LT(with, without);
}

TEST(InteractionInformation, ZeroWithoutEitherBlock) {
  Rng rng(8);
  const Mat phi = random_mat(4, 9, rng);
  const Mat omega = random_mat(3, 9, rng);
  EXPECT_EQ(interaction_information(FeatureBank(phi, Mat(0, 9)), 1.0, 1.0), 0.0);
  EXPECT_EQ(interaction_information(FeatureBank(Mat(0, 9), omega), 1.0, 1.0), 0.0);
}

TEST(InteractionInformation, ScalarExample) {
  const double l1 = 0.6;
  const double l2 = 1.9;
  const FeatureBank bank(Mat::Constant(1, 1, std::sqrt(l1)), Mat::Constant(1, 1, std::sqrt(l2)));
  EXPECT_NEAR(interaction_information(bank, l1, l2), 0.5 * std::log(4.0 / 3.0), 1e-12);
  EXPECT_NEAR(interaction_information(bank, l1, l2), 0.143841, 1e-6);
}

TEST(InteractionInformation, MatchesPrimalAndEntropyOracles) {
  Rng rng(9);
  for (int k = 0; k < 200; ++k) {
    const Instance in = random_instance(rng);
    const double i = interaction_information(in.bank, in.l1, in.l2);
    EXPECT_GE(i, -1e-10);
    EXPECT_NEAR(i, entropy_interaction(in.bank, in.l1, in.l2), 1e-8);
    EXPECT_NEAR(i, primal_interaction(in.bank, in.l1, in.l2), 1e-8);
  }
}

TEST(InteractionInformation, InvariantToRowPermutation) {
  Rng rng(10);
  const Mat phi = random_mat(8, 20, rng) / std::sqrt(20.0);
  const Mat omega = random_mat(6, 20, rng) / std::sqrt(20.0);
  std::vector<Index> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mat shuffled(8, 20);
  for (Index i = 0; i < 8; ++i) shuffled.row(i) = phi.row(perm[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(interaction_information(FeatureBank(phi, omega), 1.0, 1.0),
              interaction_information(FeatureBank(shuffled, omega), 1.0, 1.0), 1e-12);
}

TEST(InfoGain, DiagonalAndMonotone) {
  EXPECT_EQ(info_gain(gram_blocks(FeatureBank(4), 1.0, 1.0)), 0.0);
  const double l1 = 0.3;
  const FeatureBank diag(std::sqrt(l1) * Mat::Identity(3, 5), Mat(0, 5));
  EXPECT_NEAR(info_gain(gram_blocks(diag, l1, 1.0)), 1.5 * std::log(2.0), 1e-12);

  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const Mat phi = random_mat(10, 6, rng);
    double prev = 0.0;
    for (Index t = 1; t <= 10; ++t) {
      const double g = info_gain(gram_blocks(FeatureBank(phi.topRows(t), Mat(0, 6)), 1.0, 1.0));
      EXPECT_GE(g, prev - 1e-12);
      prev = g;
    }
  }
}

TEST(NuSchedule, WorkedExamples) {
  AnalysisConfig cfg;
  cfg.lambda1 = 0.5;
  cfg.lambda2 = 2.0;
  cfg.r1 = 0.5;
  cfg.r2 = 2.0;
  cfg.delta = std::exp(-1.0);
  EXPECT_NEAR(cfg.r_tilde(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(nu_t(0.7, 0.7, cfg), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(nu_t(2.0, 0.5, cfg), std::sqrt(2.0) * std::sqrt(3.0 + 1.0), 1e-14);
  // a negative radicand part is clamped at zero
  EXPECT_NEAR(nu_t(0.1, 0.9, cfg), std::sqrt(2.0), 1e-14);

  cfg.delta = 1.0 - 1e-12;
  EXPECT_LT(nu_t_raw(0.4, 0.4, cfg), 1e-5);
  EXPECT_EQ(nu_t(0.4, 0.4, cfg), cfg.nu_min);
}

TEST(NuSchedule, NoiselessIsClamped) {
  AnalysisConfig cfg;
  cfg.r1 = 0.0;
  cfg.r2 = 0.0;
  EXPECT_EQ(nu_t_raw(3.0, 1.0, cfg), 0.0);
  EXPECT_EQ(nu_t(3.0, 1.0, cfg), cfg.nu_min);
}

TEST(I0, ZeroCasesAndEigenOracle) {
  Rng rng(12);
  const Mat phi = random_mat(4, 12, rng);
  EXPECT_EQ(compute_I0(gram_blocks(FeatureBank(phi, Mat(0, 12)), 1.0, 1.0)), 0.0);
  // orthogonal blocks give K_ur = 0
  Mat a = Mat::Zero(3, 12);
  Mat b = Mat::Zero(2, 12);
  a.leftCols(6) = random_mat(3, 6, rng);
  b.rightCols(6) = random_mat(2, 6, rng);
  EXPECT_NEAR(compute_I0(gram_blocks(FeatureBank(a, b), 1.0, 1.0)), 0.0, 1e-14);

  for (int k = 0; k < 50; ++k) {
    const Mat p = random_mat(5, 12, rng);
    const Mat o = random_mat(4, 12, rng);
    const KernelBlocks kb = gram_blocks(FeatureBank(p, o), 0.8, 1.3);
    const Mat top = kb.rr + 1.3 * Mat::Identity(4, 4);
    const Mat schur = top - kb.ru * kb.uu.inverse() * kb.ur;
    Eigen::SelfAdjointEigenSolver<Mat> e1(top);
    Eigen::SelfAdjointEigenSolver<Mat> e2(symmetrized(schur));
    const double expect = 0.5 * (e1.eigenvalues().array().log().sum() - e2.eigenvalues().array().log().sum());
    const double i0 = compute_I0(kb);
    EXPECT_GE(i0, -1e-10);
    EXPECT_NEAR(i0, expect, 1e-8 * std::max(1.0, expect));
  }
}

TEST(Eigenvalues, MatchDiagonal) {
  Mat d = Mat::Zero(3, 3);
  d.diagonal() << 2.0, -1.0, 5.0;
  EXPECT_NEAR(min_eigenvalue(d), -1.0, 1e-14);
  EXPECT_NEAR(max_eigenvalue(d), 5.0, 1e-14);
  EXPECT_EQ(min_eigenvalue(Mat(0, 0)), 0.0);
  EXPECT_EQ(max_eigenvalue(Mat(0, 0)), 0.0);
}

TEST(Identities, WoodburyAndDeterminantRatios) {
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    std::uniform_int_distribution<int> n(1, 10);
    const Index t = n(rng);
    const Index r = n(rng);
    const Index p = t + r + n(rng);
    const FeatureBank bank(random_mat(t, p, rng) / std::sqrt(double(p)), random_mat(r, p, rng) / std::sqrt(double(p)));
    const IdentityReport rep = identity_suite(bank, 0.7, 1.4, rng);
    EXPECT_LE(rep.woodbury, 1e-8);
    EXPECT_LE(rep.det_ratio, 1e-8);
    EXPECT_LE(rep.det_ratio_corollary, 1e-8);
  }
  EXPECT_THROW(identity_suite(FeatureBank(Mat::Ones(3, 2), Mat(0, 2)), 1.0, 1.0, rng), std::invalid_argument);
}

TEST(Identities, DeterminantRatioFixedShape) {
  Rng rng(14);
  for (int k = 0; k < 20; ++k) {
    const Mat u = random_mat(4, 9, rng);
    const Mat g = random_mat(9, 9, rng);
    const Mat kmat = g * g.transpose();
    EXPECT_LE(det_ratio_discrepancy(u, kmat), 1e-8);
    EXPECT_LE(det_ratio_corollary_discrepancy(u, kmat), 1e-8);
  }
}

TEST(VarianceSum, ReplayMatchesOracle) {
  Rng rng(15);
  for (int run = 0; run < 20; ++run) {
    std::uniform_int_distribution<int> tn(5, 50);
    const Index big_t = tn(rng);
    Mat phi = random_mat(big_t, 40, rng);
    Mat omega = random_mat(10, 40, rng);
    phi.rowwise().normalize();
    omega.rowwise().normalize();
    const FeatureBank bank(phi, omega);
    const VarianceSumBound v = variance_sum_bound(bank, 1.3);
    const double l1 = 1.0 + 1.0 / static_cast<double>(big_t);
    EXPECT_NEAR(v.lambda1, l1, 1e-15);

    double sum = 0.0;
    for (Index t = 0; t < big_t; ++t) {
      const Vec q = phi.row(t).transpose();
      sum += std::sqrt(joint_gaussian_oracle(bank.prefix(t), l1, 1.3, q, Vec::Zero(t), Vec::Zero(10)).variance);
    }
    EXPECT_NEAR(v.sigma_sum, sum, 1e-8 * sum);

    const KernelBlocks kb = gram_blocks(bank, l1, 1.3);
    EXPECT_NEAR(v.gamma, info_gain(kb), 1e-12);
    EXPECT_NEAR(v.i0, compute_I0(kb), 1e-12);
    EXPECT_GE(v.i0, -1e-10);
    EXPECT_NEAR(v.slack, 10.0 / (2.0 * (1.0 + min_eigenvalue(kb.uu) / l1)), 1e-10);
    EXPECT_NEAR(v.bound, std::sqrt(2.0 * big_t * std::max(0.0, v.gamma - v.i0 + v.slack)), 1e-10 * v.bound);
    EXPECT_EQ(v.holds, v.sigma_sum <= v.bound);
  }
  EXPECT_THROW(variance_sum_bound(FeatureBank(4), 1.0), std::invalid_argument);
}

TEST(FeatureBank, PrefixAndOmegaNorm) {
  Rng rng(16);
  const Mat phi = random_mat(5, 4, rng);
  Mat omega = Mat::Zero(2, 4);
  omega(1, 2) = -3.0;
  const FeatureBank b(phi, omega);
  EXPECT_EQ(b.prefix(2).phi(), phi.topRows(2));
  EXPECT_EQ(b.prefix(2).omega(), omega);
  EXPECT_EQ(b.omega_norm_max(), 3.0);
  FeatureBank grow(4);
  grow.add_phi(phi.row(0).transpose());
  grow.add_omega(omega.row(1).transpose());
  EXPECT_EQ(grow.t(), 1);
  EXPECT_EQ(grow.n_r(), 1);
  EXPECT_THROW(grow.add_phi(Vec::Ones(3)), std::invalid_argument);
}
