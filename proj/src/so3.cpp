#include "vkstab/so3.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <cmath>
#include <random>

#include "vkstab/hessian.hpp"

namespace vkstab {

namespace {

Mat3 cross_matrix(const Vec3& a) {
  Mat3 m;
  m << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return m;
}

Vec3 q_of(const Vec6& u) { return u.head<3>(); }
Vec3 p_of(const Vec6& u) { return u.tail<3>(); }

}  // namespace

CentralPotential CentralPotential::harmonic(double omega_pot) {
  return {[omega_pot](double r) { return 0.5 * omega_pot * r * r; }, [omega_pot](double r) { return omega_pot * r; },
          [omega_pot](double) { return omega_pot; }};
}

Vec6 SO3State::u() const {
  Vec6 v;
  v << q, p;
  return v;
}

SO3State circular_orbit(double rho, const CentralPotential& V, double alpha) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(2.0 * alpha * rho * rho > 1.0)) throw InvalidArgument("circular orbit needs 2 alpha rho^2 > 1");
  const double s2 = rho * V.dV(rho);
  if (!(s2 > 0.0)) throw InvalidArgument("circular orbit needs V'(rho) > 0");
  SO3State s;
  s.q = rho * Vec3::UnitX();
  s.p = std::sqrt(s2) * Vec3::UnitY();
  s.alpha = alpha;
  s.potential = V;
  const double eta = (1.0 - 2.0 * alpha * rho * rho) / (rho * rho);
  s.xi = eta * s.momentum();
  return s;
}

SO3State circular_orbit(double rho, double omega_pot, double alpha) {
  if (!(omega_pot > 0.0)) throw InvalidArgument("omega_pot must be positive");
  SO3State s = circular_orbit(rho, CentralPotential::harmonic(omega_pot), alpha);
  s.omega_pot = omega_pot;
  return s;
}

double so3_energy(const SO3State& s, const Vec6& u) {
  const Vec3 q = q_of(u), p = p_of(u);
  return 0.5 * p.squaredNorm() + s.potential.V(q.norm()) - s.alpha * q.cross(p).squaredNorm();
}

Vec6 so3_lyapunov_gradient(const SO3State& s, const Vec6& u) {
  const Vec3 q = q_of(u), p = p_of(u);
  const double r = q.norm();
  const Vec3 a = 2.0 * s.alpha * q.cross(p) + s.xi;
  Vec6 g;
  g.head<3>() = s.potential.dV(r) * q / r - p.cross(a);
  g.tail<3>() = p - a.cross(q);
  return g;
}

Hessian6 hessian6(const SO3State& s, double ker_tol) {
  const Vec3 q = s.q, p = s.p, F = q.cross(p);
  const double r = q.norm();
  const Vec3 qh = q / r;
  Hessian6 h;
  h.ker_tol = ker_tol;
  Mat6 H0 = Mat6::Zero();
  const Mat3 P = qh * qh.transpose();
  H0.topLeftCorner<3, 3>() = s.potential.d2V(r) * P + s.potential.dV(r) / r * (Mat3::Identity() - P);
  H0.bottomRightCorner<3, 3>() = Mat3::Identity();
  Eigen::Matrix<double, 3, 6> J;
  J << -cross_matrix(p), cross_matrix(q);
  // Hessian of a . (q x p) for fixed a
  const Vec3 a = 2.0 * s.alpha * F + s.xi;
  Mat6 B = Mat6::Zero();
  B.topRightCorner<3, 3>() = -cross_matrix(a);
  B.bottomLeftCorner<3, 3>() = cross_matrix(a);
  h.matrix = H0 - 2.0 * s.alpha * J.transpose() * J - B;

  const double fd = 1e-5;
  for (int j = 0; j < 6; ++j) {
    Vec6 e = Vec6::Zero();
    e[j] = fd;
    h.fd_matrix.col(j) = (so3_lyapunov_gradient(s, s.u() + e) - so3_lyapunov_gradient(s, s.u() - e)) / (2.0 * fd);
  }
  h.fd_discrepancy = (h.matrix - h.fd_matrix).cwiseAbs().maxCoeff();

  Eigen::SelfAdjointEigenSolver<Mat6> es(h.matrix);
  h.eigenvalues = es.eigenvalues();
  std::vector<int> ker;
  for (int i = 0; i < 6; ++i) {
    const double l = h.eigenvalues[i];
    if (l < -ker_tol) ++h.n_neg;
    else if (l <= ker_tol) {
      ++h.dim_ker;
      ker.push_back(i);
    }
  }
  const Vec3 mu = F.normalized();
  h.tangents.resize(6, 1);
  h.tangents.col(0) << mu.cross(q), mu.cross(p);
  if (!ker.empty()) {
    Eigen::MatrixXd K(6, ker.size());
    for (std::size_t i = 0; i < ker.size(); ++i) K.col(i) = es.eigenvectors().col(ker[i]);
    h.kernel_angles = h.dim_ker >= 1 ? principal_angles(K, h.tangents) : Vec();
    h.kernel_matches_orbit = h.dim_ker == 1 && h.kernel_angles.maxCoeff() <= 1e-6;
  }
  return h;
}

double w_so3_value(const Vec3& xi, double omega_pot, double alpha) {
  return 0.25 * omega_pot / alpha * std::pow(1.0 + xi.norm() / std::sqrt(omega_pot), 2);
}

WSo3 w_so3(double xi_norm, double omega_pot, double alpha, const Vec3& xi_hat) {
  if (!(xi_norm > 0.0)) throw InvalidArgument("xi must be nonzero");
  if (!(alpha > 0.0) || !(omega_pot > 0.0)) throw InvalidArgument("alpha and omega_pot must be positive");
  const Vec3 e = xi_hat.normalized();
  const double sw = std::sqrt(omega_pot);
  WSo3 w;
  w.W = w_so3_value(xi_norm * e, omega_pot, alpha);
  w.d2w = (1.0 + sw / xi_norm) / (2.0 * alpha) * Mat3::Identity() - sw / (2.0 * alpha * xi_norm) * e * e.transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(w.d2w);
  w.eigenvalues = es.eigenvalues();
  w.signature = signature_of(w.d2w);
  const double h = 1e-4;
  const Vec3 x0 = xi_norm * e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 ei = h * Vec3::Unit(i), ej = h * Vec3::Unit(j);
      w.fd_d2w(i, j) = (w_so3_value(x0 + ei + ej, omega_pot, alpha) - w_so3_value(x0 + ei - ej, omega_pot, alpha) -
                        w_so3_value(x0 - ei + ej, omega_pot, alpha) + w_so3_value(x0 - ei - ej, omega_pot, alpha)) /
                       (4.0 * h * h);
    }
  return w;
}

double so3_orbit_distance(const SO3State& ref, const Vec6& u) {
  const Vec3 mu = ref.momentum().normalized();
  const Vec3 e1 = ref.q.normalized(), e2 = mu.cross(e1);
  const Vec3 pairs[2][2] = {{q_of(u), ref.q}, {p_of(u), ref.p}};
  double par = 0.0;
  std::complex<double> z = 0.0;
  cplx ac[2], bc[2];
  for (int i = 0; i < 2; ++i) {
    const Vec3& a = pairs[i][0];
    const Vec3& b = pairs[i][1];
    par += std::pow(a.dot(mu) - b.dot(mu), 2);
    ac[i] = cplx(a.dot(e1), a.dot(e2));
    bc[i] = cplx(b.dot(e1), b.dot(e2));
    z += ac[i] * std::conj(bc[i]);
  }
  // the minimizing rotation aligns b with a: e^{i theta} = z / |z|; evaluate
  // the residual directly to avoid cancellation in |a|^2 + |b|^2 - 2|z|
  const cplx rot = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0);
  double sq = par;
  for (int i = 0; i < 2; ++i) sq += std::norm(ac[i] - rot * bc[i]);
  return std::sqrt(sq);
}

namespace {

void rotate_about_F(Vec3& q, Vec3& p, double alpha, double tau) {
  const Vec3 F = q.cross(p);
  const double n = F.norm();
  if (n == 0.0) return;
  const Eigen::AngleAxisd R(-2.0 * alpha * n * tau, F / n);
  q = R * q;
  p = R * p;
}

void verlet(Vec3& q, Vec3& p, const CentralPotential& V, double h) {
  auto force = [&](const Vec3& x) {
    const double r = x.norm();
    return Vec3(-V.dV(r) * x / r);
  };
  p += 0.5 * h * force(q);
  q += h * p;
  p += 0.5 * h * force(q);
}

void strang(Vec3& q, Vec3& p, const SO3State& s, double h) {
  rotate_about_F(q, p, s.alpha, 0.5 * h);
  verlet(q, p, s.potential, h);
  rotate_about_F(q, p, s.alpha, 0.5 * h);
}

}  // namespace

SO3Run integrate_so3(const SO3State& ref, const Vec6& u0, double dt, double t_end, int order, int sample_stride) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (order != 2 && order != 4) throw InvalidArgument("order must be 2 or 4");
  if (sample_stride < 1) throw InvalidArgument("sample stride must be at least 1");
  const long steps = std::lround(t_end / dt);
  const double c = std::cbrt(2.0), w1 = 1.0 / (2.0 - c), w0 = -c * w1;
  Vec3 q = q_of(u0), p = p_of(u0);
  const double H0 = so3_energy(ref, u0);
  const Vec3 F0 = q.cross(p);
  SO3Run run;
  auto sample = [&](long s) {
    Vec6 u;
    u << q, p;
    const double d = so3_orbit_distance(ref, u);
    run.times.push_back(s * dt);
    run.distances.push_back(d);
    run.max_distance = std::max(run.max_distance, d);
    run.energy_drift = std::max(run.energy_drift, std::abs(so3_energy(ref, u) - H0));
    run.momentum_drift = std::max(run.momentum_drift, (q.cross(p) - F0).norm());
  };
  sample(0);
  for (long s = 1; s <= steps; ++s) {
    if (order == 2) {
      strang(q, p, ref, dt);
    } else {
      strang(q, p, ref, w1 * dt);
      strang(q, p, ref, w0 * dt);
      strang(q, p, ref, w1 * dt);
    }
    if (s % sample_stride == 0 || s == steps) sample(s);
  }
  return run;
}

SO3Run integrate_so3(const SO3State& ref, double eps, double dt, double t_end, std::uint64_t seed, int order) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vec6 v;
  for (int i = 0; i < 6; ++i) v[i] = nd(rng);
  return integrate_so3(ref, ref.u() + eps * v.normalized(), dt, t_end, order);
}

}  // namespace vkstab
