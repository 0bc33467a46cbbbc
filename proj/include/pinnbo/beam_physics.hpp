#pragma once

// Coefficients of the non-uniform Euler-Bernoulli beam on [0, 1]:
//   (EI(x) w'')'' = q(x),   EI(x) = e^x / rho(x)
// rho is the second derivative of
//   M_rho(x) = sin(4 pi e^{2x}) + e^{2x} sin(20 x) + 0.4 x^3 + 0.2 x^2,
// which gives closed forms for rho', rho''. rho changes sign on (0, 1), so EI
// has poles; the compliance 1/EI = rho e^{-x} is smooth everywhere.

namespace pinnbo::beam {

/// k-th derivative of rho, k in [0, 2].
double rho(double x, int k = 0);

double rigidity(double x);         // EI
double rigidity_d1(double x);      // EI'
double rigidity_d2(double x);      // EI''
double compliance(double x);       // 1 / EI

/// Manufactured bending moment M*(x) = -sin(pi x) (1 + a exp(-(x - c)^2 / (2 s^2))),
/// which vanishes at both supports. The default load is q = M*''.
double load_moment(double x);
double load(double x);

/// |rho(x)| below this fraction of max|rho| counts as a coefficient singularity.
constexpr double kSingularRhoFraction = 1e-3;
bool near_pole(double x);

}  // namespace pinnbo::beam
