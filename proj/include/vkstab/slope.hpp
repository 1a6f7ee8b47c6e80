#pragma once

#include <optional>
#include <string>

#include "vkstab/profiles.hpp"

namespace vkstab {

struct Signature {
  int p = 0;  // positives
  int z = 0;  // |lambda| <= z_tol
  int n = 0;  // negatives
};

// Inertia of a symmetric matrix. z_tol <= 0 selects 1e-6 * ||A||_2.
Signature signature_of(const Mat& A, double z_tol = 0.0);

struct RestrictedSlope {
  Mat basis;
  Mat d2w_tilde;
  Signature signature;
};

struct SlopeReport {
  Mat d2w;
  Signature signature;
  std::string method;  // "closed_form" or "finite_difference"
  double asymmetry = 0.0;  // ||A - A^T||_F of the raw finite-difference matrix
  double z_tol = 0.0;
  double fd_step = 0.0;
  // Condition number of D_xi F-hat, infinite when the signature has zeros.
  double condition = 0.0;
  std::optional<RestrictedSlope> restricted;
};

Vec fhat(const Family& fam, const Vec& xi);

// D^2 W = -D_xi F-hat by centered differences (h <= 0 uses the family step).
SlopeReport d2w_fd(const Family& fam, const Vec& xi, double h = 0.0);

// Single NLS at xi = (xi_1, c_1..c_d). For d = 1 the exact soliton mass is
// used; for d >= 2 the mass is normalized to 1 at omega = -1, which leaves
// the signature exact.
SlopeReport d2w_closed_single(const SingleNls& m, const Vec& xi);
// Torus plane wave: (L/2) K^{-1} with K = [[alpha, delta], [delta, gamma]].
SlopeReport d2w_closed_torus(const Coupled& cp, double length);
// Symmetric coupled soliton on a line grid (uses vk_integral).
SlopeReport d2w_closed_coupled(const Profile& prof);
// Dispatches on the profile's model and grid.
SlopeReport d2w_closed(const Profile& prof);

// Matrix [dF_i/d omega_j] of the symmetric coupled soliton.
Mat coupled_dF_domega(const Profile& prof);

struct VkIntegral {
  double value = 0.0;
  double residual = 0.0;  // sup |A y - u|
};

// int u L_delta^{-1} u for a symmetric coupled soliton with
// L_delta = -d_xx - omega - (3 - 2 delta (zeta_1^2 + zeta_2^2)) u^2 and u the
// scalar soliton.
VkIntegral vk_integral(const Profile& prof);

struct VkSingle {
  double value = 0.0;      // int u L_+^{-1} u
  double residual = 0.0;   // of the even-subspace solve
  double s_identity = 0.0; // sup |L_+ (x u' + 2u/(p-1)) - 2 omega u|
};
// The same quantity for an unboosted single-NLS profile on a line grid.
VkSingle vk_integral_single(const Profile& prof);

// B^T D^2W B with its signature. Throws InvalidArgument for a rank-deficient
// basis.
RestrictedSlope d2w_tilde(const Mat& d2w, const Mat& basis);
RestrictedSlope d2w_tilde(const Family& fam, const Vec& xi, const Mat& basis, double h = 0.0);

}  // namespace vkstab
