#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "vkstab/core.hpp"
#include "vkstab/slope.hpp"

namespace vkstab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// V and its first two derivatives.
struct CentralPotential {
  std::function<double(double)> V, dV, d2V;
  static CentralPotential harmonic(double omega_pot);
};

// Particle in a central potential with H = |p|^2/2 + V(|q|) - alpha |q x p|^2.
// omega_pot records the stiffness when V is harmonic (the closed forms of
// w_so3 assume it).
struct SO3State {
  Vec3 q = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double alpha = 0.0;
  double omega_pot = 1.0;
  Vec3 xi = Vec3::Zero();
  CentralPotential potential = CentralPotential::harmonic(1.0);

  Vec6 u() const;
  Vec3 momentum() const { return q.cross(p); }
};

// q = rho e1, p = sigma e2 with sigma^2 = rho V'(rho); xi = eta (q x p) with
// eta = (1 - 2 alpha rho^2) / rho^2. Requires 2 alpha rho^2 > 1.
SO3State circular_orbit(double rho, double omega_pot, double alpha);
SO3State circular_orbit(double rho, const CentralPotential& V, double alpha);

double so3_energy(const SO3State& s, const Vec6& u);
// Gradient of L_xi(q, p) = H(q, p) - xi . (q x p).
Vec6 so3_lyapunov_gradient(const SO3State& s, const Vec6& u);

struct Hessian6 {
  Mat6 matrix;
  Vec eigenvalues;
  int n_neg = 0;
  int dim_ker = 0;
  double ker_tol = 1e-8;
  Mat6 fd_matrix;          // central differences of the gradient, h = 1e-5
  double fd_discrepancy = 0.0;  // max entrywise |analytic - fd|
  // Orbit tangent X_eta(u) = (eta x q, eta x p) for eta in span{mu-hat}.
  Eigen::MatrixXd tangents;
  Vec kernel_angles;
  bool kernel_matches_orbit = false;
};

Hessian6 hessian6(const SO3State& s, double ker_tol = 1e-8);

struct WSo3 {
  double W = 0.0;
  Mat3 d2w;
  Vec eigenvalues;
  Signature signature;
  Mat3 fd_d2w;  // central second differences of W, h = 1e-4
};

// Closed form at xi = xi_norm * xi_hat (xi_hat defaults to e3).
WSo3 w_so3(double xi_norm, double omega_pot, double alpha, const Vec3& xi_hat = Vec3::UnitZ());
double w_so3_value(const Vec3& xi, double omega_pot, double alpha);

struct SO3Run {
  std::vector<double> times;
  std::vector<double> distances;  // to the SO(2)-orbit of the initial circular orbit
  double max_distance = 0.0;
  double energy_drift = 0.0;      // max |H(t) - H(0)|
  double momentum_drift = 0.0;    // max ||F(t) - F(0)||
};

// Symplectic splitting: the -alpha |F|^2 flow is an exact rotation about F
// (angular rate -2 alpha |F|), composed with velocity Verlet for H_0. order 2
// is the Strang composition; order 4 applies the Yoshida triple jump.
SO3Run integrate_so3(const SO3State& ref, const Vec6& u0, double dt, double t_end, int order = 4,
                     int sample_stride = 100);
// Perturbs the reference by eps in a seeded random direction, then integrates.
SO3Run integrate_so3(const SO3State& ref, double eps, double dt, double t_end, std::uint64_t seed = 1,
                     int order = 4);

// Distance from u to { (R q*, R p*) : R rotation about mu-hat }.
double so3_orbit_distance(const SO3State& ref, const Vec6& u);

}  // namespace vkstab
