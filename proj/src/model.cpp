#include <map>
#include <mutex>
#include <tuple>

#include "fft.hpp"
#include "vkstab/model.hpp"

namespace vkstab {
namespace {

void check_xi(const ModelParams& m, const Grid& g, const Vec& xi) {
  if (xi.size() != group_dim(m, g)) throw InvalidArgument("xi has the wrong length for this model and grid");
}

// Circulant matrix of a Fourier multiplier: column l is the operator applied to e_l.
Mat circulant(const Grid& g, const Vec& symbol) {
  const int n = g.size();
  CVec e0 = CVec::Zero(n);
  e0[0] = 1.0;
  const Vec c = fft::apply_symbol(e0, symbol).real();
  Mat M(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) M(j, l) = c[((j - l) % n + n) % n];
  return M;
}

using GridKey = std::tuple<int, int, double>;
GridKey key_of(const Grid& g) { return {static_cast<int>(g.kind()), g.size(), g.extent()}; }

std::mutex cache_mutex;

}  // namespace

const Mat& laplacian_matrix(const Grid& g) {
  static std::map<GridKey, Mat> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(key_of(g));
  if (it != cache.end()) return it->second;
  Mat M = circulant(g, (-g.wavenumbers().array().square()).matrix());
  M = 0.5 * (M + M.transpose()).eval();
  return cache.emplace(key_of(g), std::move(M)).first->second;
}

const Mat& derivative_matrix(const Grid& g) {
  static std::map<GridKey, Mat> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(key_of(g));
  if (it != cache.end()) return it->second;
  // d/dx has symbol ik; its real action on real data is the circulant of Re(ifft(ik)).
  const int n = g.size();
  CVec e0 = CVec::Zero(n);
  e0[0] = 1.0;
  const CVec sym = cplx(0.0, 1.0) * g.derivative_symbol().cast<cplx>();
  const Vec c = fft::apply_symbol(e0, sym).real();
  Mat M(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) M(j, l) = c[((j - l) % n + n) % n];
  M = 0.5 * (M - M.transpose()).eval();
  return cache.emplace(key_of(g), std::move(M)).first->second;
}

Field lyapunov_gradient(const ModelParams& m, const Field& u, const Vec& xi) {
  check_xi(m, u.grid(), xi);
  const int C = u.components();
  Field g = kinetic(u, m);
  const auto w = nonlinear_weights(u, m);
  for (int c = 0; c < C; ++c) g[c].array() -= (w[c].array() + xi[c]) * u[c].array();
  if (u.grid().is_line() && xi[C] != 0.0) {
    Field p = momentum_operator(u);
    p *= xi[C];
    g -= p;
  }
  return g;
}

Field lyapunov_hessian_apply(const ModelParams& m, const Field& u, const Vec& xi, const Field& v) {
  check_xi(m, u.grid(), xi);
  const int C = u.components(), n = u.size();
  Field r = kinetic(v, m);
  for (int c = 0; c < C; ++c) r[c] -= xi[c] * v[c];
  if (u.grid().is_line() && xi[C] != 0.0) {
    Field p = momentum_operator(v);
    p *= xi[C];
    r -= p;
  }
  std::vector<cplx> uj(C);
  Vec vj(2 * C);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < C; ++c) {
      uj[c] = u[c][j];
      vj[c] = v[c][j].real();
      vj[C + c] = v[c][j].imag();
    }
    const Vec hv = local_potential_hessian(m, uj) * vj;
    for (int c = 0; c < C; ++c) r[c][j] += cplx(hv[c], hv[C + c]);
  }
  return r;
}

Mat lyapunov_hessian_dense(const ModelParams& m, const Field& u, const Vec& xi) {
  const Grid& g = u.grid();
  check_xi(m, g, xi);
  const int C = u.components(), n = u.size(), dim = 2 * C * n;
  const Mat& D2 = laplacian_matrix(g);
  const Mat& D1 = derivative_matrix(g);
  const double b = beta_of(m);
  Mat A = Mat::Zero(dim, dim);
  for (int c = 0; c < C; ++c) {
    const double s = shift_of(m, c);
    const int re = c * n, im = (C + c) * n;
    A.block(re, re, n, n) = -b * D2;
    A.block(im, im, n, n) = -b * D2;
    A.block(re, re, n, n).diagonal().array() += b * s * s - xi[c];
    A.block(im, im, n, n).diagonal().array() += b * s * s - xi[c];
    // -2i b s d/dx and -xi_m (-i d/dx) in real form
    double q = -2.0 * b * s;
    if (g.is_line()) q += xi[C];
    if (q != 0.0) {
      A.block(re, im, n, n) = -q * D1;
      A.block(im, re, n, n) = q * D1;
    }
  }
  std::vector<cplx> uj(C);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < C; ++c) uj[c] = u[c][j];
    const Mat h = local_potential_hessian(m, uj);
    for (int a = 0; a < 2 * C; ++a)
      for (int bb = 0; bb < 2 * C; ++bb) A(a * n + j, bb * n + j) += h(a, bb);
  }
  return A;
}

}  // namespace vkstab

namespace vkstab {

std::vector<Field> symmetry_tangents(const ModelParams& m, const Field& u) {
  const int C = components_of(m);
  std::vector<Field> t;
  for (int c = 0; c < C; ++c) {
    Field f(u.grid(), C);
    f[c] = cplx(0.0, 1.0) * u[c];
    t.push_back(std::move(f));
  }
  if (u.grid().is_line()) t.push_back(gradient(u));
  return t;
}

}  // namespace vkstab
