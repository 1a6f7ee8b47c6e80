#include "vkstab/slope.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

#include "vkstab/model.hpp"
#include "vkstab/parallel.hpp"

namespace vkstab {

Signature signature_of(const Mat& A, double z_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  if (z_tol <= 0.0) z_tol = 1e-6 * ev.cwiseAbs().maxCoeff();
  Signature s;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > z_tol) ++s.p;
    else if (ev[i] < -z_tol) ++s.n;
    else ++s.z;
  }
  return s;
}

namespace {

SlopeReport finish(Mat d2w, std::string method) {
  SlopeReport r;
  r.d2w = std::move(d2w);
  r.method = std::move(method);
  Eigen::JacobiSVD<Mat> svd(r.d2w);
  const Vec& sv = svd.singularValues();
  r.z_tol = 1e-6 * sv[0];
  r.signature = signature_of(r.d2w, r.z_tol);
  r.condition = r.signature.z == 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  return r;
}

// D^2 W for F = (F_1..F_C, P) with P = (c/2) sum F_c and omega_c = xi_c + |c|^2/4:
// J^T M J - (1/2) sum F_c on the momentum block, M = -[dF_i/d omega_j].
Mat chain_rule(const Mat& dF, const Vec& masses, const Vec& c) {
  const int C = static_cast<int>(dF.rows()), d = static_cast<int>(c.size());
  Mat J = Mat::Zero(C, C + d);
  J.leftCols(C).setIdentity();
  for (int i = 0; i < C; ++i) J.block(i, C, 1, d) = 0.5 * c.transpose();
  Mat W = -J.transpose() * dF * J;
  W.bottomRightCorner(d, d).diagonal().array() -= 0.5 * masses.sum();
  return W;
}

// Even-subspace reduction on a line grid: unknowns are the values at
// x = m h, m = 0..N/2, mirrored to -x.
Vec solve_even_subspace(const Mat& A, const Vec& b) {
  const int n = static_cast<int>(A.rows()), half = n / 2, nr = half + 1;
  auto row_of = [&](int m) { return m == half ? 0 : half + m; };
  Mat Ar(nr, nr);
  Vec br(nr);
  for (int m = 0; m < nr; ++m) {
    br[m] = b[row_of(m)];
    for (int m2 = 0; m2 < nr; ++m2) {
      const int jp = (half + m2) % n, jm = half - m2;
      double v = A(row_of(m), jp);
      if (jm != jp) v += A(row_of(m), jm);
      Ar(m, m2) = v;
    }
  }
  Eigen::PartialPivLU<Mat> lu(Ar);
  const Vec yr = lu.solve(br);
  if (!yr.allFinite()) throw SolverFailure("singular even-subspace solve");
  Vec y(n);
  for (int m = 0; m < nr; ++m) {
    y[(half + m) % n] = yr[m];
    y[half - m] = yr[m];
  }
  return y;
}

struct CoupledData {
  double omega, z1, z2, mass_u;
  Vec u;
  Vec masses;
  double velocity;
};

CoupledData coupled_data(const Profile& prof) {
  const auto* cp = std::get_if<Coupled>(&prof.model);
  if (!cp || !prof.grid().is_line()) throw InvalidArgument("expected a coupled soliton on a line grid");
  const Vec w = prof.omega();
  if (std::abs(w[0] - w[1]) > 1e-12 * (1.0 + std::abs(w[0])))
    throw InvalidArgument("closed-form coupled slope needs omega_1 == omega_2");
  CoupledData cd;
  cd.omega = w[0];
  std::tie(cd.z1, cd.z2) = coupled_zeta_squared(*cp);
  const Field base = deboost(prof);
  const double s2 = cd.z1 + cd.z2;
  cd.u = ((std::sqrt(cd.z1) * base[0] + std::sqrt(cd.z2) * base[1]).real() / s2);
  const double h = prof.grid().spacing();
  cd.mass_u = h * cd.u.squaredNorm();
  const Invariants inv = invariants_of(prof.field, prof.model);
  cd.masses = inv.F.head(2);
  cd.velocity = prof.velocity();
  return cd;
}

}  // namespace

Vec fhat(const Family& fam, const Vec& xi) {
  const Profile p = fam.at(xi);
  return invariants_of(p.field, p.model).F;
}

SlopeReport d2w_fd(const Family& fam, const Vec& xi, double h) {
  if (h <= 0.0) h = fam.fd_step();
  const int m = static_cast<int>(xi.size());
  std::vector<Vec> plus(m), minus(m);
  parallel_for(2 * m, [&](int t) {
    const int i = t / 2;
    Vec x = xi;
    x[i] += (t % 2 == 0 ? h : -h);
    (t % 2 == 0 ? plus : minus)[i] = fhat(fam, x);
  });
  Mat A(m, m);
  for (int i = 0; i < m; ++i) A.col(i) = -(plus[i] - minus[i]) / (2.0 * h);
  SlopeReport r = finish(0.5 * (A + A.transpose()), "finite_difference");
  r.asymmetry = (A - A.transpose()).norm();
  r.fd_step = h;
  return r;
}

SlopeReport d2w_closed_single(const SingleNls& m, const Vec& xi) {
  validate(m);
  const int d = static_cast<int>(xi.size()) - 1;
  if (d != m.d) throw InvalidArgument("xi must have length 1 + d");
  const Vec c = xi.tail(d);
  const double omega = xi[0] + 0.25 * c.squaredNorm();
  if (!(omega < 0.0)) throw InvalidArgument("omega must be negative");
  const double expo = 2.0 / (m.p - 1.0) - 0.5 * d;
  const double mass = d == 1 ? soliton_mass(omega, m.p) : std::pow(-omega, expo);
  const double dmass = expo * mass / omega;
  Mat dF(1, 1);
  dF(0, 0) = 0.5 * dmass;
  Vec masses(1);
  masses << 0.5 * mass;
  return finish(chain_rule(dF, masses, c), "closed_form");
}

SlopeReport d2w_closed_torus(const Coupled& cp, double length) {
  validate(cp);
  const double det = cp.alpha * cp.gamma - cp.delta * cp.delta;
  if (det == 0.0) throw InvalidArgument("alpha*gamma == delta^2: D^2W is undefined");
  Mat K(2, 2);
  K << cp.alpha, cp.delta, cp.delta, cp.gamma;
  return finish(0.5 * length * K.inverse(), "closed_form");
}

Mat coupled_dF_domega(const Profile& prof) {
  const CoupledData cd = coupled_data(prof);
  const double A = cd.mass_u / (4.0 * cd.omega);  // (1/2 omega)(1 - d/2) int u^2, d = 1
  const double I = vk_integral(prof).value;
  const double s2 = cd.z1 + cd.z2, zz = cd.z1 * cd.z2;
  Mat dF(2, 2);
  dF(0, 0) = (cd.z1 * cd.z1 * A + zz * I) / s2;
  dF(1, 1) = (cd.z2 * cd.z2 * A + zz * I) / s2;
  dF(0, 1) = dF(1, 0) = zz * (A - I) / s2;
  return dF;
}

SlopeReport d2w_closed_coupled(const Profile& prof) {
  const CoupledData cd = coupled_data(prof);
  Vec c(1);
  c << cd.velocity;
  return finish(chain_rule(coupled_dF_domega(prof), cd.masses, c), "closed_form");
}

SlopeReport d2w_closed(const Profile& prof) {
  if (const auto* s = std::get_if<SingleNls>(&prof.model)) {
    if (!prof.grid().is_line()) throw InvalidArgument("single NLS needs a line grid");
    return d2w_closed_single(*s, prof.xi);
  }
  const auto& cp = std::get<Coupled>(prof.model);
  if (!prof.grid().is_line()) return d2w_closed_torus(cp, prof.grid().length());
  return d2w_closed_coupled(prof);
}

VkIntegral vk_integral(const Profile& prof) {
  const CoupledData cd = coupled_data(prof);
  const auto& cp = std::get<Coupled>(prof.model);
  const double q = 3.0 - 2.0 * cp.delta * (cd.z1 + cd.z2);
  const Grid& g = prof.grid();
  Mat A = -laplacian_matrix(g);
  A.diagonal().array() += -cd.omega - q * cd.u.array().square();
  const Vec y = solve_even_subspace(A, cd.u);
  VkIntegral out;
  out.residual = (A * y - cd.u).cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-9 * std::max(1.0, cd.u.cwiseAbs().maxCoeff())))
    throw SolverFailure("L_delta solve is ill-conditioned");
  out.value = g.spacing() * cd.u.dot(y);
  return out;
}

VkSingle vk_integral_single(const Profile& prof) {
  const auto* s = std::get_if<SingleNls>(&prof.model);
  if (!s || !prof.grid().is_line()) throw InvalidArgument("expected a single-NLS profile on a line grid");
  if (prof.velocity() != 0.0) throw InvalidArgument("vk_integral_single expects an unboosted profile");
  const Grid& g = prof.grid();
  const double omega = prof.xi[0], p = s->p;
  const Vec u = prof.field[0].real();
  Mat A = -laplacian_matrix(g);
  A.diagonal().array() += -omega - p * u.array().abs().pow(p - 1.0);
  const Vec y = solve_even_subspace(A, u);
  VkSingle out;
  out.residual = (A * y - u).cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-9 * std::max(1.0, u.cwiseAbs().maxCoeff())))
    throw SolverFailure("L_+ solve is ill-conditioned");
  out.value = g.spacing() * u.dot(y);
  const Vec du = gradient(prof.field)[0].real();
  const Vec su = (g.nodes().array() * du.array()).matrix() + (2.0 / (p - 1.0)) * u;
  out.s_identity = (A * su - 2.0 * omega * u).cwiseAbs().maxCoeff();
  return out;
}

RestrictedSlope d2w_tilde(const Mat& d2w, const Mat& basis) {
  if (basis.rows() != d2w.rows() || basis.cols() == 0) throw InvalidArgument("basis has the wrong shape");
  Eigen::ColPivHouseholderQR<Mat> qr(basis);
  qr.setThreshold(1e-12);
  if (qr.rank() < basis.cols()) throw InvalidArgument("subalgebra basis is rank deficient");
  RestrictedSlope r;
  r.basis = basis;
  r.d2w_tilde = basis.transpose() * d2w * basis;
  r.signature = signature_of(r.d2w_tilde, 1e-6 * d2w.norm());
  return r;
}

RestrictedSlope d2w_tilde(const Family& fam, const Vec& xi, const Mat& basis, double h) {
  return d2w_tilde(d2w_fd(fam, xi, h).d2w, basis);
}

}  // namespace vkstab
