#include "vkstab/planewave.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "vkstab/parallel.hpp"
#include "vkstab/slope.hpp"

namespace vkstab {

namespace {

double mode_wavenumber(int n, const PlaneWave& pw) { return 2.0 * std::numbers::pi * n / pw.length; }

void check(const PlaneWave& pw) {
  validate(pw.params);
  if (pw.zeta1 == 0.0 || pw.zeta2 == 0.0) throw InvalidArgument("plane wave amplitudes must be nonzero");
  if (!(pw.length > 0.0)) throw InvalidArgument("torus length must be positive");
}

}  // namespace

std::pair<double, double> c_plusminus(const Coupled& cp, double zeta1, double zeta2) {
  const double a = zeta1 * zeta1, b = zeta2 * zeta2;
  const double s = cp.alpha * a + cp.gamma * b;
  // the discriminant equals (alpha a - gamma b)^2 + 4 a b delta^2 >= 0
  const double disc = std::pow(cp.alpha * a - cp.gamma * b, 2) + 4.0 * a * b * cp.delta * cp.delta;
  const double r = std::sqrt(disc);
  return {-s + r, -s - r};
}

std::array<double, 4> hessian_mode_eigs(int n, const PlaneWave& pw) {
  if (n < 0) throw InvalidArgument("mode index must be non-negative");
  const auto [cp_, cm_] = c_plusminus(pw.params, pw.zeta1, pw.zeta2);
  const double nl = mode_wavenumber(n, pw), beta = pw.params.beta, k = pw.params.k;
  const double kin = beta * nl * nl, coup = 16.0 * beta * beta * k * k * nl * nl;
  const double rp = std::sqrt(cp_ * cp_ + coup), rm = std::sqrt(cm_ * cm_ + coup);
  return {kin + 0.5 * (cp_ + rp), kin + 0.5 * (cp_ - rp), kin + 0.5 * (cm_ + rm), kin + 0.5 * (cm_ - rm)};
}

Coercivity coercivity_condition(const PlaneWave& pw) {
  check(pw);
  const Coupled& cp = pw.params;
  if (cp.alpha * cp.gamma == cp.delta * cp.delta)
    throw InvalidArgument("alpha*gamma == delta^2: the momentum map is not invertible");
  const double cm = c_plusminus(cp, pw.zeta1, pw.zeta2).second;
  const double n1 = mode_wavenumber(1, pw);
  Coercivity c;
  c.margin = cp.beta * n1 * n1 + cm - 4.0 * cp.beta * cp.k * cp.k;
  c.holds = c.margin > 0.0;
  return c;
}

LinearizationEigs linearization_eigs(int n, const PlaneWave& pw) {
  if (n < 0) throw InvalidArgument("mode index must be non-negative");
  const Coupled& cp = pw.params;
  const double a = pw.zeta1 * pw.zeta1, b = pw.zeta2 * pw.zeta2;
  const double s = cp.alpha * a + cp.gamma * b, dlt = cp.alpha * a - cp.gamma * b;
  const double beta = cp.beta, k = cp.k, nl = mode_wavenumber(n, pw), bn = beta * nl * nl;
  const double det = cp.alpha * cp.gamma - cp.delta * cp.delta;

  LinearizationEigs out;
  // P_n(lambda) = lambda^4 + c2 lambda^2 + c1 lambda + c0
  const cplx c2 = -2.0 * bn * (-bn + s - 4.0 * beta * k * k);
  const cplx c1 = cplx(0.0, 8.0 * bn * beta * k * nl * dlt);
  const cplx c0 = bn * bn * bn * (bn - 2.0 * s) + 4.0 * bn * bn * a * b * det +
                  8.0 * bn * bn * beta * k * k * (-bn + s + 2.0 * beta * k * k);
  Eigen::Matrix4cd comp = Eigen::Matrix4cd::Zero();
  comp(1, 0) = comp(2, 1) = comp(3, 2) = 1.0;
  comp(0, 3) = -c0;
  comp(1, 3) = -c1;
  comp(2, 3) = -c2;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(comp, false);
  for (int i = 0; i < 4; ++i) out.roots[i] = es.eigenvalues()[i];
  out.growth_rate = 0.0;
  for (const cplx& r : out.roots) out.growth_rate = std::max(out.growth_rate, r.real());

  const double scale = std::max(std::abs(s), 1.0);
  if (k == 0.0) {
    const double r = std::sqrt(dlt * dlt + 4.0 * a * b * cp.delta * cp.delta);
    out.closed_form = true;
    out.lambda_sq = {bn * (-bn + s + r), bn * (-bn + s - r)};
  } else if (std::abs(dlt) <= 1e-14 * scale) {
    const cplx r = std::sqrt(cplx(4.0 * a * b * cp.delta * cp.delta + 16.0 * beta * k * k * (bn - s), 0.0));
    const double base = -bn + s - 4.0 * beta * k * k;
    out.closed_form = true;
    out.lambda_sq = {bn * (base + r), bn * (base - r)};
  }
  if (out.closed_form) {
    double g = 0.0;
    for (const cplx& l2 : out.lambda_sq) g = std::max(g, std::sqrt(l2).real());
    out.growth_rate = g;
  }
  return out;
}

ModeTable mode_table(const PlaneWave& pw, int n_max) {
  check(pw);
  if (n_max < 1) throw InvalidArgument("n_max must be at least 1");
  ModeTable t;
  std::tie(t.c_plus, t.c_minus) = c_plusminus(pw.params, pw.zeta1, pw.zeta2);
  t.rows.resize(n_max + 1);
  parallel_for(n_max + 1, [&](int n) {
    ModeRow& row = t.rows[n];
    row.n = n;
    row.lambda = hessian_mode_eigs(n, pw);
    const LinearizationEigs le = linearization_eigs(n, pw);
    if (le.closed_form) row.lambda_sq = le.lambda_sq;
    row.growth_rate = le.growth_rate;
  });

  const double zero_tol = 1e-10 * (1.0 + std::abs(t.c_plus) + std::abs(t.c_minus));
  for (const ModeRow& row : t.rows) {
    const int mult = row.n == 0 ? 1 : 2;
    for (double l : row.lambda) {
      if (l < -zero_tol) t.negatives += mult;
      else if (l <= zero_tol) t.zeros += mult;
    }
  }
  t.p_d2w = d2w_closed_torus(pw.params, pw.length).signature.p;
  t.margin = coercivity_condition(pw).margin;
  t.coercive = t.negatives == t.p_d2w && t.zeros == 2;

  bool all_closed = true, stable = true;
  for (const ModeRow& row : t.rows) {
    if (row.n == 0) continue;
    const double nl = mode_wavenumber(row.n, pw);
    const double tol = 1e-12 * pw.params.beta * nl * nl;
    if (row.lambda_sq) {
      for (const cplx& l2 : *row.lambda_sq)
        if (l2.real() > tol || std::abs(l2.imag()) > tol) stable = false;
    } else {
      all_closed = false;
      if (row.growth_rate > 1e-9) stable = false;
    }
  }
  t.linearly_stable = stable;
  t.linear_stability = !all_closed ? "numerical only" : (stable ? "stable" : "unstable");
  return t;
}

std::string mode_table_csv(const ModeTable& t) {
  std::ostringstream os;
  os.precision(17);
  os << "n,lambda_plus_plus,lambda_plus_minus,lambda_minus_plus,lambda_minus_minus,"
        "lambda_sq_plus,lambda_sq_minus,growth_rate\n";
  for (const ModeRow& r : t.rows) {
    os << r.n;
    // + 0.0 turns -0 into 0
    for (double l : r.lambda) os << ',' << l + 0.0;
    if (r.lambda_sq) os << ',' << (*r.lambda_sq)[0].real() + 0.0 << ',' << (*r.lambda_sq)[1].real() + 0.0;
    else os << ",,";
    os << ',' << r.growth_rate + 0.0 << '\n';
  }
  return os.str();
}

std::string mode_table_json(const ModeTable& t) {
  nlohmann::json j;
  j["c_plus"] = t.c_plus;
  j["c_minus"] = t.c_minus;
  j["negatives"] = t.negatives;
  j["zeros"] = t.zeros;
  j["p_d2w"] = t.p_d2w;
  j["coercive"] = t.coercive;
  j["margin"] = t.margin;
  j["linear_stability"] = t.linear_stability;
  j["linearly_stable"] = t.linearly_stable;
  j["rows"] = nlohmann::json::array();
  for (const ModeRow& r : t.rows) {
    nlohmann::json row;
    row["n"] = r.n;
    row["lambda"] = r.lambda;
    if (r.lambda_sq) row["lambda_sq"] = {(*r.lambda_sq)[0].real(), (*r.lambda_sq)[1].real()};
    row["growth_rate"] = r.growth_rate;
    j["rows"].push_back(row);
  }
  return j.dump(2);
}

}  // namespace vkstab
