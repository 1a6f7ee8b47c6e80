#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vkstab/hessian.hpp"
#include "vkstab/model.hpp"
#include "vkstab/planewave.hpp"
#include "vkstab/profiles.hpp"

using namespace vkstab;
using oracle::sech;

namespace {

const Grid kLine(GridKind::line, 30, 512);

Field random_field(const Grid& g, int C, std::mt19937_64& rng, bool localized) {
  std::normal_distribution<double> nd;
  Field f(g, C);
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < g.size(); ++j) {
      const double w = localized ? std::exp(-std::pow(g.nodes()[j] / 5, 2)) : 1.0;
      f[c][j] = w * cplx(nd(rng), nd(rng));
    }
  // smooth it so that derivatives stay moderate
  Field s = f;
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < g.size(); ++j)
      s[c][j] = 0.25 * f[c][(j + g.size() - 1) % g.size()] + 0.5 * f[c][j] + 0.25 * f[c][(j + 1) % g.size()];
  return s;
}

// L(u) = H(u) - xi . F(u), evaluated by the invariants routine.
double lyapunov(const Profile& p, const Field& u) {
  const Invariants inv = invariants_of(u, p.model);
  return inv.H - p.xi.dot(inv.F);
}

}  // namespace

TEST(GradL, ZeroAtSolitonAndAtZeroField) {
  const Profile s = soliton_explicit(-1.0, kLine);
  EXPECT_LE(grad_L(s).sup_norm(), 1e-9);
  Profile z = s;
  z.field = Field(kLine, 1);
  EXPECT_EQ(grad_L(z).sup_norm(), 0.0);
}

TEST(GradL, DirectionalDerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(5);
  Profile s = soliton_explicit(-1.0, kLine);
  s.field *= 1.1;
  const Field g = grad_L(s);
  EXPECT_GT(g.sup_norm(), 1e-2);
  const Field v = random_field(kLine, 1, rng, true);
  const double h = 1e-5;
  const double fd = (lyapunov(s, s.field + h * v) - lyapunov(s, s.field - h * v)) / (2 * h);
  EXPECT_NEAR(inner(g, v), fd, 1e-6 * (1 + std::abs(fd)));
}

TEST(Assemble, PoschlTellerGroundState) {
  const Grid g(GridKind::line, 20, 512);
  const SpectralReport r = spectrum(assemble(soliton_explicit(-1.0, g)));
  EXPECT_NEAR(r.eigenvalues[0], -3.0, 1e-6);
}

TEST(Assemble, LMinusKernelIsTheSoliton) {
  const Profile s = soliton_explicit(-1.0, kLine);
  const HessOp op = assemble(s);
  // L_- acts on the imaginary part: i u is annihilated, i.e. L_- u = 0
  Field iu = cplx(0, 1) * s.field;
  EXPECT_LE(op.apply(iu).sup_norm(), 1e-9);
  // and 0 is the bottom of L_-: the imaginary block has no negative eigenvalue
  const Mat D = op.dense();
  const int N = kLine.size();
  Eigen::SelfAdjointEigenSolver<Mat> es(D.bottomRightCorner(N, N));
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-8);
  const Vec v = es.eigenvectors().col(0);
  const Vec u = s.field[0].real() / s.field[0].real().norm();
  EXPECT_NEAR(std::abs(v.dot(u)), 1.0, 1e-8);
}

TEST(Assemble, TorusModeZeroEigenvalues) {
  const Grid g(GridKind::periodic, 2 * M_PI, 16);
  const HessOp op = assemble(plane_wave(1, 1, Coupled{-1, -1, -0.5}, g));
  // constant fields are the n = 0 mode: restrict the operator to them
  Mat P = Mat::Zero(op.dimension(), 4);
  for (int b = 0; b < 4; ++b) P.col(b).segment(b * 16, 16).setConstant(1.0 / 4.0);
  const Mat M = P.transpose() * op.dense() * P;
  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues()[1], 0.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues()[2], 1.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues()[3], 3.0, 1e-12);
}

TEST(Assemble, RejectsNonEquilibrium) {
  Profile s = soliton_explicit(-1.0, kLine);
  s.field *= 1.1;
  EXPECT_THROW(assemble(s), InvalidArgument);
}

TEST(Spectrum, SolitonCounts) {
  const Grid g(GridKind::line, 20, 512);
  const SpectralReport r = spectrum(assemble(soliton_explicit(-1.0, g)));
  EXPECT_EQ(r.n_neg, 1);
  EXPECT_EQ(r.dim_ker, 2);
  EXPECT_GT(r.gap_pos, r.ker_tol);
  int pos = 0;
  for (int i = 0; i < r.eigenvalues.size(); ++i) pos += r.eigenvalues[i] > r.ker_tol;
  EXPECT_EQ(r.n_neg + r.dim_ker + pos, 16);
}

TEST(Spectrum, CoupledCounts) {
  const Grid g(GridKind::line, 20, 512);
  SpectralReport r = spectrum(assemble(coupled_soliton(-1.0, Coupled{1, 1, 2}, g)));
  EXPECT_EQ(r.n_neg, 1);
  EXPECT_EQ(r.dim_ker, 3);
  r = spectrum(assemble(coupled_soliton(-1.0, Coupled{1, 1, 0.5}, g)));
  EXPECT_EQ(r.n_neg, 2);
  EXPECT_EQ(r.dim_ker, 3);
}

TEST(KernelMatch, SolitonAndTorus) {
  const HessOp s = assemble(soliton_explicit(-1.0, kLine));
  EXPECT_TRUE(kernel_matches_orbit(spectrum(s), s));
  const Grid g(GridKind::periodic, 2 * M_PI, 16);
  const HessOp t = assemble(plane_wave(1, 1, Coupled{-1, -1, -0.5}, g));
  const SpectralReport r = spectrum(t);
  EXPECT_TRUE(kernel_matches_orbit(r, t));
  ASSERT_EQ(r.dim_ker, 2);
  // kernel spanned by (i, 0) and (0, i)
  Mat T(t.dimension(), 2);
  T.setZero();
  T.col(0).segment(32, 16).setOnes();
  T.col(1).segment(48, 16).setOnes();
  Mat K(t.dimension(), 2);
  for (int i = 0; i < 2; ++i) K.col(i) = r.kernel_vectors[i].to_real();
  EXPECT_LE(principal_angles(K, T).maxCoeff(), 1e-8);
}

TEST(KernelMatch, BrokenOperatorFails) {
  HessOp op = assemble(soliton_explicit(-1.0, kLine));
  const int N = kLine.size();
  op.L.bottomRightCorner(N, N) -= 0.1 * Mat::Identity(N, N);
  EXPECT_FALSE(kernel_matches_orbit(spectrum(op), op));
}

TEST(HessianProperty, SelfAdjointAndTangentsAnnihilated) {
  std::mt19937_64 rng(2);
  const Grid gp(GridKind::periodic, 2 * M_PI, 32);
  const std::vector<Profile> all{soliton_explicit(-1.0, kLine), boost(soliton_explicit(-1.0, kLine), 0.8),
                                 coupled_soliton(-1.0, Coupled{1, 1, 2}, kLine),
                                 plane_wave(1, 1, Coupled{-1, -1, -0.5, 1, 1}, gp)};
  for (const Profile& p : all) {
    const HessOp op = assemble(p);
    for (int t = 0; t < 3; ++t) {
      const Field v = random_field(p.grid(), p.field.components(), rng, false);
      const Field w = random_field(p.grid(), p.field.components(), rng, false);
      EXPECT_LE(std::abs(inner(op.apply(v), w) - inner(v, op.apply(w))), 1e-10 * norm(v) * norm(w));
    }
    for (const Field& t : op.tangents) EXPECT_LE(op.apply(t).sup_norm(), 1e-7) << model_name(p.model);
  }
}

TEST(HessianProperty, FiniteDifferenceOrder) {
  std::mt19937_64 rng(9);
  const Grid gp(GridKind::periodic, 2 * M_PI, 32);
  Profile pw = plane_wave(1, 1, Coupled{-1, -1, -0.5, 1, 1}, gp);
  const std::vector<Profile> all{soliton_solve(-1.0, 4.0, kLine), coupled_soliton(-1.0, Coupled{2, 3, 1}, kLine),
                                 pw};
  for (const Profile& p : all) {
    const HessOp op = assemble(p);
    const Field v = random_field(p.grid(), p.field.components(), rng, p.grid().is_line());
    const Field Av = op.apply(v);
    auto err = [&](double h) {
      Profile a = p, b = p;
      a.field = p.field + h * v;
      b.field = p.field - h * v;
      return ((1.0 / (2 * h)) * (grad_L(a) - grad_L(b)) - Av).sup_norm();
    };
    const double e1 = err(1e-3), e2 = err(1e-4);
    EXPECT_GE(std::log10(e1 / e2), 1.9) << model_name(p.model) << " " << e1 << " " << e2;
  }
}

TEST(HessianProperty, BoostInvariance) {
  const SpectralReport a = spectrum(assemble(soliton_explicit(-1.0, kLine)));
  const SpectralReport b = spectrum(assemble(boost(soliton_explicit(-1.0, kLine), 1.5)));
  EXPECT_LE((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(HessianProperty, CoupledDecouplesUnderRotation) {
  const Coupled cp{2, 3, 1};
  const Profile c = coupled_soliton(-1.0, cp, kLine);
  const HessOp op = assemble(c);
  const auto z = coupled_zeta_squared(cp);
  const double z1 = std::sqrt(z.first), z2 = std::sqrt(z.second), n = std::hypot(z1, z2);
  const int N = kLine.size();
  // real block (Re u1, Re u2) rotated onto (zeta direction, orthogonal)
  Mat P = Mat::Zero(2 * N, 2 * N);
  P.topLeftCorner(N, N) = (z1 / n) * Mat::Identity(N, N);
  P.topRightCorner(N, N) = (-z2 / n) * Mat::Identity(N, N);
  P.bottomLeftCorner(N, N) = (z2 / n) * Mat::Identity(N, N);
  P.bottomRightCorner(N, N) = (z1 / n) * Mat::Identity(N, N);
  const Mat R = P.transpose() * op.dense().topLeftCorner(2 * N, 2 * N) * P;
  EXPECT_LE(R.topRightCorner(N, N).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(R.bottomLeftCorner(N, N).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HessianProperty, TorusMatchesModeFormulas) {
  for (double k : {0.0, 1.0}) {
    const Coupled cp{-1, -1, -0.5, 1, k};
    const Grid g(GridKind::periodic, 2 * M_PI, 16);
    SpectrumOptions so;
    so.n_eigs = 64;
    const SpectralReport r = spectrum(assemble(plane_wave(1, 1, cp, g)), so);
    const PlaneWave pw{cp, 1, 1, 2 * M_PI};
    std::vector<double> closed;
    for (int n = 0; n <= 7; ++n)
      for (double l : hessian_mode_eigs(n, pw)) {
        closed.push_back(l);
        if (n > 0) closed.push_back(l);
      }
    std::sort(closed.begin(), closed.end());
    // the lowest eigenvalues never come from the Nyquist mode n = 8
    for (int i = 0; i < 24; ++i) EXPECT_NEAR(r.eigenvalues[i], closed[i], 1e-9) << "k = " << k << " i = " << i;
  }
}

TEST(Spectrum, IterativeMatchesDense) {
  const Grid g(GridKind::line, 30, 256);
  const HessOp op = assemble(coupled_soliton(-1.0, Coupled{1, 1, 0.5}, g));
  SpectrumOptions dense, iter;
  dense.n_eigs = iter.n_eigs = 12;
  iter.dense_limit = 100;
  const SpectralReport a = spectrum(op, dense), b = spectrum(op, iter);
  ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
  EXPECT_LE((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(a.n_neg, b.n_neg);
  EXPECT_EQ(a.dim_ker, b.dim_ker);
  EXPECT_EQ(b.kernel_vectors.size(), static_cast<std::size_t>(b.dim_ker));
  EXPECT_NEAR(a.gap_pos, b.gap_pos, 1e-8);
}
