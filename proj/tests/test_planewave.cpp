#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "vkstab/hessian.hpp"
#include "vkstab/planewave.hpp"
#include "vkstab/profiles.hpp"

using namespace vkstab;

namespace {

const PlaneWave kStable{Coupled{-1, -1, -0.5}, 1, 1, 2 * M_PI};
const PlaneWave kUnstable{Coupled{-1, -1, -2}, 1, 1, 2 * M_PI};

// Growth rate of the linearization around the plane wave from the assembled
// Hessian: max Re of the eigenvalues of J D^2L on the real representation.
double assembled_growth_rate(const PlaneWave& pw, int N) {
  const Grid g(GridKind::periodic, pw.length, N);
  const HessOp op = assemble(plane_wave(pw.zeta1, pw.zeta2, pw.params, g));
  const Mat H = op.dense();
  const int h = H.rows() / 2;
  Mat J = Mat::Zero(H.rows(), H.cols());
  J.topRightCorner(h, h) = Mat::Identity(h, h);
  J.bottomLeftCorner(h, h) = -Mat::Identity(h, h);
  Eigen::EigenSolver<Mat> es(J * H, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace

TEST(CPlusMinus, Examples) {
  auto c = c_plusminus(Coupled{-1, -1, -0.5}, 1, 1);
  EXPECT_NEAR(c.first, 3, 1e-14);
  EXPECT_NEAR(c.second, 1, 1e-14);
  c = c_plusminus(Coupled{-1, -1, -2}, 1, 1);
  EXPECT_NEAR(c.first, 6, 1e-14);
  EXPECT_NEAR(c.second, -2, 1e-14);
  c = c_plusminus(Coupled{-1, -1, 0}, 1, 1);
  EXPECT_NEAR(c.first, 2, 1e-14);
  EXPECT_NEAR(c.second, 2, 1e-14);
}

TEST(ModeEigs, Examples) {
  const auto s0 = hessian_mode_eigs(0, kStable);
  EXPECT_NEAR(s0[0], 3, 1e-14);
  EXPECT_NEAR(s0[1], 0, 1e-14);
  EXPECT_NEAR(s0[2], 1, 1e-14);
  EXPECT_NEAR(s0[3], 0, 1e-14);
  EXPECT_NEAR(hessian_mode_eigs(1, kUnstable)[3], -1, 1e-14);
  PlaneWave k = kStable;
  k.params.k = 3;
  const auto k0 = hessian_mode_eigs(0, k);
  EXPECT_NEAR(k0[0], 3, 1e-14);
  EXPECT_NEAR(k0[1], 0, 1e-14);
  EXPECT_NEAR(k0[2], 1, 1e-14);
  EXPECT_NEAR(k0[3], 0, 1e-14);
}

TEST(Coercivity, Examples) {
  Coercivity c = coercivity_condition(kStable);
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.margin, 2, 1e-14);
  c = coercivity_condition(kUnstable);
  EXPECT_FALSE(c.holds);
  EXPECT_NEAR(c.margin, -1, 1e-14);
  EXPECT_THROW(coercivity_condition(PlaneWave{Coupled{1, 1, 1}, 1, 1, 2 * M_PI}), InvalidArgument);
  // k = 0: beta (2 pi / L)^2 + C_- > 0
  const PlaneWave w{Coupled{-0.5, -2, 0.3, 1.7, 0}, 0.8, 1.2, 5.0};
  const double nl = 2 * M_PI / 5.0;
  EXPECT_NEAR(coercivity_condition(w).margin, 1.7 * nl * nl + c_plusminus(w.params, 0.8, 1.2).second, 1e-13);
}

TEST(Linearization, ClosedFormExamples) {
  LinearizationEigs e = linearization_eigs(1, kUnstable);
  ASSERT_TRUE(e.closed_form);
  EXPECT_NEAR(e.lambda_sq[0].real(), 1, 1e-14);
  EXPECT_NEAR(e.growth_rate, 1, 1e-9);
  e = linearization_eigs(1, kStable);
  EXPECT_NEAR(e.lambda_sq[0].real(), -2, 1e-14);
  EXPECT_NEAR(e.growth_rate, 0, 1e-9);
  e = linearization_eigs(0, kStable);
  EXPECT_EQ(std::abs(e.lambda_sq[0]), 0.0);
  EXPECT_EQ(std::abs(e.lambda_sq[1]), 0.0);
}

TEST(Linearization, QuarticRootsReproduceClosedForms) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    PlaneWave pw{Coupled{u(rng), u(rng), u(rng), 1 + 0.5 * std::abs(u(rng)), 0}, 1 + 0.2 * u(rng), 0.5 + std::abs(u(rng)),
                 2 * M_PI};
    if (trial % 2) {
      // alpha zeta1^2 = gamma zeta2^2 with k != 0
      pw.params.k = 2;
      pw.params.gamma = pw.params.alpha * pw.zeta1 * pw.zeta1 / (pw.zeta2 * pw.zeta2);
    }
    for (int n = 1; n <= 4; ++n) {
      const LinearizationEigs e = linearization_eigs(n, pw);
      ASSERT_TRUE(e.closed_form);
      std::vector<cplx> sq;
      for (const cplx& r : e.roots) sq.push_back(r * r);
      for (const cplx& l2 : e.lambda_sq) {
        double best = 1e300;
        for (const cplx& s : sq) best = std::min(best, std::abs(s - l2));
        EXPECT_LE(best, 1e-9 * (1 + std::abs(l2))) << trial << " " << n;
      }
      double rate = 0;
      for (const cplx& l2 : e.lambda_sq) rate = std::max(rate, std::sqrt(l2).real());
      EXPECT_NEAR(e.growth_rate, rate, 1e-9 * (1 + rate)) << trial << " " << n;
    }
  }
}

TEST(Linearization, GrowthRateMatchesAssembledOperator) {
  std::vector<PlaneWave> cases{kStable, kUnstable, PlaneWave{Coupled{-1, -1, -2, 1, 1}, 1, 1, 2 * M_PI},
                               PlaneWave{Coupled{0.5, -1, 0.4, 1, 1}, 1, 0.7, 2 * M_PI},
                               PlaneWave{Coupled{1, 1, 0.2, 1, 0}, 1, 1, 2 * M_PI}};
  for (const PlaneWave& pw : cases) {
    double rate = 0;
    for (int n = 0; n <= 7; ++n) rate = std::max(rate, linearization_eigs(n, pw).growth_rate);
    EXPECT_NEAR(assembled_growth_rate(pw, 16), rate, 1e-8) << pw.params.delta << " k " << pw.params.k;
  }
}

TEST(ModeTable, Verdicts) {
  ModeTable t = mode_table(kStable, 8);
  EXPECT_TRUE(t.coercive);
  EXPECT_TRUE(t.linearly_stable);
  EXPECT_EQ(t.linear_stability, "stable");
  EXPECT_EQ(t.rows.size(), 9u);
  t = mode_table(kUnstable, 8);
  EXPECT_FALSE(t.coercive);
  EXPECT_FALSE(t.linearly_stable);
  EXPECT_EQ(t.linear_stability, "unstable");
  t = mode_table(PlaneWave{Coupled{-1, -1, 0}, 1, 1, 2 * M_PI}, 8);
  EXPECT_TRUE(t.coercive);
  EXPECT_TRUE(t.linearly_stable);
  t = mode_table(PlaneWave{Coupled{0.5, -1, 0.4, 1, 1}, 1, 0.7, 2 * M_PI}, 4);
  EXPECT_EQ(t.linear_stability, "numerical only");
  EXPECT_THROW(mode_table(kStable, 0), InvalidArgument);
}

TEST(ModeTable, CsvAndJson) {
  const ModeTable t = mode_table(kStable, 3);
  const std::string csv = mode_table_csv(t);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("n,", 0), 0u);
  const std::string js = mode_table_json(t);
  EXPECT_NE(js.find("\"coercive\": true"), std::string::npos);
  EXPECT_EQ(js, mode_table_json(mode_table(kStable, 3)));
}

// When the coercivity condition holds, the lower branches increase in n.
TEST(PlaneWaveProperty, LowerBranchesMonotone) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2, 2);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const PlaneWave pw{Coupled{u(rng), u(rng), u(rng), 0.5 + std::abs(u(rng)), std::round(u(rng))}, 1 + 0.3 * u(rng),
                       1 + 0.3 * u(rng), 2 * M_PI};
    const Coupled& c = pw.params;
    if (std::abs(c.alpha * c.gamma - c.delta * c.delta) < 1e-6 || !coercivity_condition(pw).holds) continue;
    ++checked;
    for (int n = 1; n < 10; ++n) {
      const auto a = hessian_mode_eigs(n, pw), b = hessian_mode_eigs(n + 1, pw);
      EXPECT_LT(a[1], b[1]);
      EXPECT_LT(a[3], b[3]);
    }
  }
  EXPECT_GT(checked, 10);
}

// At k = 0 the linear-stability and coercivity verdicts agree.
TEST(PlaneWaveProperty, LinearStabilityIffCoercivityAtKZero) {
  for (double a : {-2.0, -1.0, -0.3, 0.5, 1.5})
    for (double g : {-1.5, -0.7, 0.4, 1.2})
      for (double d : {-2.0, -0.6, 0.1, 0.9, 2.5}) {
        if (std::abs(a * g - d * d) < 1e-9) continue;
        const PlaneWave pw{Coupled{a, g, d}, 1, 1, 2 * M_PI};
        const ModeTable t = mode_table(pw, 8);
        EXPECT_EQ(t.linearly_stable, coercivity_condition(pw).holds) << a << " " << g << " " << d;
      }
}
