#include "vkstab/hessian.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "vkstab/model.hpp"

namespace vkstab {

Field grad_L(const Profile& prof) { return lyapunov_gradient(prof.model, prof.field, prof.xi); }

Field HessOp::apply(const Field& v) const { return lyapunov_hessian_apply(prof.model, prof.field, prof.xi, v); }

Vec HessOp::to_frame(const Vec& lab) const {
  if (angles.size() == 0) return lab;
  const int n = grid().size(), C = components();
  Vec r = lab;
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < n; ++j) {
      const double a = lab[c * n + j], b = lab[(C + c) * n + j];
      const double cs = std::cos(angles[j]), sn = std::sin(angles[j]);
      r[c * n + j] = cs * a + sn * b;
      r[(C + c) * n + j] = -sn * a + cs * b;
    }
  return r;
}

Vec HessOp::from_frame(const Vec& frame) const {
  if (angles.size() == 0) return frame;
  const int n = grid().size(), C = components();
  Vec r = frame;
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < n; ++j) {
      const double a = frame[c * n + j], b = frame[(C + c) * n + j];
      const double cs = std::cos(angles[j]), sn = std::sin(angles[j]);
      r[c * n + j] = cs * a - sn * b;
      r[(C + c) * n + j] = sn * a + cs * b;
    }
  return r;
}

Mat HessOp::dense() const {
  if (angles.size() == 0) return L;
  const int d = dimension();
  Mat U(d, d);
  for (int j = 0; j < d; ++j) U.col(j) = to_frame(Vec::Unit(d, j));
  return U.transpose() * L * U;
}

HessOp assemble(const Profile& prof, double residual_tol) {
  const double res = frame_residual(prof);
  if (!(res <= residual_tol)) {
    std::ostringstream os;
    os << "profile is not an equilibrium: sup|grad L| = " << res << " > " << residual_tol;
    throw InvalidArgument(os.str());
  }
  HessOp op{prof, Mat(), Vec(), {}};
  const double c = prof.velocity();
  if (c != 0.0) {
    const Field base = deboost(prof);
    Vec xi = Vec::Zero(prof.xi.size());
    xi.head(components_of(prof.model)) = prof.omega();
    op.L = lyapunov_hessian_dense(prof.model, base, xi);
    op.angles = 0.5 * c * prof.grid().nodes();
  } else {
    op.L = lyapunov_hessian_dense(prof.model, prof.field, prof.xi);
  }
  op.tangents = symmetry_tangents(prof.model, prof.field);
  return op;
}

namespace {

using Op = std::function<Vec(const Vec&)>;

// Lanczos with full reorthogonalization; returns Ritz values/vectors.
void lanczos(const Op& op, int d, int m, Vec& theta, Mat& ritz) {
  m = std::min(m, d);
  Mat Q(d, m);
  Vec alpha(m), beta(m);
  std::mt19937 rng(12345);
  std::normal_distribution<double> nd;
  Vec q(d);
  for (int i = 0; i < d; ++i) q[i] = nd(rng);
  q.normalize();
  int used = m;
  for (int j = 0; j < m; ++j) {
    Q.col(j) = q;
    Vec w = op(q);
    alpha[j] = q.dot(w);
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    beta[j] = w.norm();
    if (j + 1 < m) {
      if (beta[j] < 1e-13) {
        used = j + 1;
        break;
      }
      q = w / beta[j];
    }
  }
  Mat T = Mat::Zero(used, used);
  for (int j = 0; j < used; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < used) T(j, j + 1) = T(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(T);
  theta = es.eigenvalues();
  ritz = Q.leftCols(used) * es.eigenvectors();
}

}  // namespace

EigenPairs lowest_eigenpairs_iterative(const Mat& A, int k) {
  const int d = static_cast<int>(A.rows());
  k = std::min(k, d);
  Vec theta;
  Mat ritz;
  lanczos([&](const Vec& v) { return Vec(A * v); }, d, 80, theta, ritz);
  const double lo = theta[0], scale = std::max(std::abs(theta[0]), std::abs(theta[theta.size() - 1]));
  const double sigma = lo - 1e-2 * (1.0 + std::abs(lo));
  Mat S = A;
  S.diagonal().array() -= sigma;
  Eigen::PartialPivLU<Mat> lu(S);
  for (int m = std::max(3 * k, k + 40); ; m *= 2) {
    lanczos([&](const Vec& v) { return Vec(lu.solve(v)); }, d, m, theta, ritz);
    std::vector<int> order(theta.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(theta[a]) > std::abs(theta[b]); });
    const int take = std::min<int>(k, static_cast<int>(order.size()));
    std::vector<std::pair<double, Vec>> pairs;
    bool ok = true;
    for (int i = 0; i < take; ++i) {
      const double lam = sigma + 1.0 / theta[order[i]];
      Vec y = ritz.col(order[i]).normalized();
      if ((A * y - lam * y).norm() > 1e-9 * std::max(1.0, scale)) ok = false;
      pairs.emplace_back(lam, std::move(y));
    }
    if (ok || m >= d) {
      if (!ok) throw SolverFailure("shift-invert Lanczos did not converge");
      std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      EigenPairs out{Vec(take), Mat(d, take)};
      for (int i = 0; i < take; ++i) {
        out.values[i] = pairs[i].first;
        out.vectors.col(i) = pairs[i].second;
      }
      return out;
    }
  }
}

namespace {

double power_radius(const Mat& A) {
  Vec theta;
  Mat ritz;
  lanczos([&](const Vec& v) { return Vec(A * v); }, static_cast<int>(A.rows()), 40, theta, ritz);
  return std::max(std::abs(theta[0]), std::abs(theta[theta.size() - 1]));
}

// Groups of the 2C diagonal blocks that are coupled by nonzero off-diagonal blocks.
std::vector<std::vector<int>> block_groups(const Mat& L, int blocks, int n) {
  std::vector<int> parent(blocks);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  for (int a = 0; a < blocks; ++a)
    for (int b = a + 1; b < blocks; ++b)
      if (L.block(a * n, b * n, n, n).cwiseAbs().maxCoeff() > 0.0) parent[find(a)] = find(b);
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(blocks, -1);
  for (int a = 0; a < blocks; ++a) {
    const int r = find(a);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(a);
  }
  return groups;
}

}  // namespace

SpectralReport spectrum(const HessOp& op, const SpectrumOptions& opt) {
  const int n = op.grid().size(), blocks = 2 * op.components(), d = op.dimension();
  const auto groups = block_groups(op.L, blocks, n);

  struct Part {
    std::vector<int> rows;
    Vec values;
    Mat vectors;
    bool complete;
  };
  std::vector<Part> parts;
  double radius = 0.0;
  for (const auto& grp : groups) {
    Part part;
    for (int b : grp)
      for (int j = 0; j < n; ++j) part.rows.push_back(b * n + j);
    const int s = static_cast<int>(part.rows.size());
    Mat S(s, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) S(i, j) = op.L(part.rows[i], part.rows[j]);
    if (s <= opt.dense_limit) {
      Eigen::SelfAdjointEigenSolver<Mat> es(S, opt.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw SolverFailure("symmetric eigensolver failed");
      part.values = es.eigenvalues();
      if (opt.vectors) part.vectors = es.eigenvectors();
      part.complete = true;
      radius = std::max({radius, std::abs(part.values[0]), std::abs(part.values[s - 1])});
    } else {
      part.complete = false;
      radius = std::max(radius, power_radius(S));
      part.vectors = S;  // stash until ker_tol is known
    }
    parts.push_back(std::move(part));
  }
  const double ker_tol = opt.ker_tol > 0.0 ? opt.ker_tol : 1e-6 * radius;

  for (auto& part : parts) {
    if (part.complete) continue;
    const Mat S = std::move(part.vectors);
    for (int k = std::max(opt.n_eigs, 8);; k *= 2) {
      EigenPairs ep = lowest_eigenpairs_iterative(S, k);
      if (ep.values[ep.values.size() - 1] > 3.0 * ker_tol || ep.values.size() == S.rows()) {
        part.values = ep.values;
        part.vectors = ep.vectors;
        break;
      }
    }
  }

  struct Entry {
    double value;
    int part, col;
  };
  std::vector<Entry> all;
  for (int p = 0; p < static_cast<int>(parts.size()); ++p)
    for (int i = 0; i < parts[p].values.size(); ++i) all.push_back({parts[p].values[i], p, i});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

  SpectralReport rep;
  rep.ker_tol = ker_tol;
  rep.spectral_radius = radius;
  rep.gap_pos = std::numeric_limits<double>::infinity();
  for (const auto& e : all) {
    if (e.value < -ker_tol) ++rep.n_neg;
    else if (e.value <= ker_tol) ++rep.dim_ker;
    else rep.gap_pos = std::min(rep.gap_pos, e.value);
    const double a = std::abs(e.value);
    if (a > ker_tol && a <= 3.0 * ker_tol) ++rep.near_threshold;
    if (std::abs(e.value) <= ker_tol && opt.vectors) {
      const Part& part = parts[e.part];
      Vec full = Vec::Zero(d);
      for (int i = 0; i < static_cast<int>(part.rows.size()); ++i) full[part.rows[i]] = part.vectors(i, e.col);
      rep.kernel_vectors.push_back(Field::from_real(op.grid(), op.components(), op.from_frame(full)));
    }
  }
  const int keep = std::min<int>(opt.n_eigs, static_cast<int>(all.size()));
  rep.eigenvalues.resize(keep);
  for (int i = 0; i < keep; ++i) rep.eigenvalues[i] = all[i].value;
  return rep;
}

Vec principal_angles(const Mat& A, const Mat& B) {
  auto basis = [](const Mat& M) {
    Eigen::HouseholderQR<Mat> qr(M);
    return Mat(qr.householderQ() * Mat::Identity(M.rows(), M.cols()));
  };
  const Mat QA = basis(A), QB = basis(B);
  // sines of the angles from the component of B outside span(A)
  const Mat R = QB - QA * (QA.transpose() * QB);
  Eigen::JacobiSVD<Mat> svd(R);
  Vec s = svd.singularValues();
  Vec ang(s.size());
  for (int i = 0; i < s.size(); ++i) ang[i] = std::asin(std::min(1.0, s[i]));
  std::sort(ang.data(), ang.data() + ang.size());
  return ang;
}

KernelMatch kernel_match(const SpectralReport& rep, const HessOp& op, double tol) {
  KernelMatch km;
  km.dim_ker = rep.dim_ker;
  km.orbit_dim = static_cast<int>(op.tangents.size());
  if (rep.kernel_vectors.empty() || op.tangents.empty()) return km;
  const int d = op.dimension();
  Mat K(d, rep.kernel_vectors.size()), T(d, op.tangents.size());
  for (int i = 0; i < K.cols(); ++i) K.col(i) = rep.kernel_vectors[i].to_real();
  for (int i = 0; i < T.cols(); ++i) T.col(i) = op.tangents[i].to_real();
  km.angles = km.dim_ker >= km.orbit_dim ? principal_angles(K, T) : principal_angles(T, K);
  km.matches = km.dim_ker == km.orbit_dim && km.angles.maxCoeff() <= tol;
  return km;
}

bool kernel_matches_orbit(const SpectralReport& rep, const HessOp& op, double tol) {
  return kernel_match(rep, op, tol).matches;
}

}  // namespace vkstab
