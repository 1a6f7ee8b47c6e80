#include "vkstab/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "vkstab/model.hpp"

namespace vkstab {

const char* to_string(GridKind k) { return k == GridKind::periodic ? "periodic" : "line"; }

GridKind grid_kind_from_string(const std::string& s) {
  if (s == "periodic" || s == "torus") return GridKind::periodic;
  if (s == "line") return GridKind::line;
  throw InvalidArgument("unknown grid kind '" + s + "'");
}

Grid::Grid(GridKind kind, double extent, int n) {
  if (!(extent > 0.0) || !std::isfinite(extent)) throw InvalidArgument("grid extent must be positive");
  if (n < 8) throw InvalidArgument("grid needs at least 8 points");
  if (n % 2 != 0) throw InvalidArgument("grid size must be even (odd-n)");
  auto d = std::make_shared<Data>();
  d->kind = kind;
  d->extent = extent;
  d->n = n;
  d->length = kind == GridKind::periodic ? extent : 2.0 * extent;
  const double h = d->length / n;
  const double x0 = kind == GridKind::periodic ? 0.0 : -extent;
  d->nodes.resize(n);
  d->k.resize(n);
  for (int j = 0; j < n; ++j) {
    d->nodes[j] = x0 + j * h;
    const int m = j <= n / 2 ? j : j - n;
    d->k[j] = 2.0 * std::numbers::pi * m / d->length;
  }
  d->k1 = d->k;
  d->k1[n / 2] = 0.0;
  d_ = std::move(d);
}

bool Grid::operator==(const Grid& o) const {
  if (d_ == o.d_) return true;
  return d_->kind == o.d_->kind && d_->n == o.d_->n && d_->extent == o.d_->extent;
}

Grid make_grid(GridKind kind, double extent, int n) { return Grid(kind, extent, n); }

Field::Field(const Grid& g, int components) : grid_(g) {
  if (components < 1 || components > 2) throw InvalidArgument("fields carry 1 or 2 components");
  v_.assign(components, CVec::Zero(g.size()));
}

Field::Field(const Grid& g, std::vector<CVec> values) : grid_(g), v_(std::move(values)) {
  if (v_.empty() || v_.size() > 2) throw InvalidArgument("fields carry 1 or 2 components");
  for (const auto& c : v_)
    if (c.size() != g.size()) throw InvalidArgument("component length differs from grid size");
}

namespace {
void require_compatible(const Field& a, const Field& b) {
  if (a.grid() != b.grid()) throw GridMismatch("fields live on different grids");
  if (a.components() != b.components()) throw GridMismatch("component counts differ");
}
}  // namespace

Field& Field::operator+=(const Field& o) {
  require_compatible(*this, o);
  for (int c = 0; c < components(); ++c) v_[c] += o.v_[c];
  return *this;
}
Field& Field::operator-=(const Field& o) {
  require_compatible(*this, o);
  for (int c = 0; c < components(); ++c) v_[c] -= o.v_[c];
  return *this;
}
Field& Field::operator*=(double s) {
  for (auto& c : v_) c *= s;
  return *this;
}
Field& Field::operator*=(cplx s) {
  for (auto& c : v_) c *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }
Field operator*(cplx s, Field a) { return a *= s; }

Vec Field::to_real() const {
  const int n = size(), C = components();
  Vec r(2 * C * n);
  for (int c = 0; c < C; ++c) {
    r.segment(c * n, n) = v_[c].real();
    r.segment((C + c) * n, n) = v_[c].imag();
  }
  return r;
}

Field Field::from_real(const Grid& g, int components, const Vec& r) {
  const int n = g.size();
  if (r.size() != 2 * components * n) throw InvalidArgument("real vector has wrong length");
  Field f(g, components);
  for (int c = 0; c < components; ++c) {
    f[c].real() = r.segment(c * n, n);
    f[c].imag() = r.segment((components + c) * n, n);
  }
  return f;
}

double Field::sup_norm() const {
  double m = 0.0;
  for (const auto& c : v_) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

bool Field::finite() const {
  for (const auto& c : v_)
    if (!c.allFinite()) return false;
  return true;
}

void validate(const ModelParams& m) {
  if (const auto* s = std::get_if<SingleNls>(&m)) {
    if (!(s->p > 1.0)) throw InvalidArgument("nonlinearity exponent p must exceed 1");
    if (s->d < 1 || s->d > 3) throw InvalidArgument("dimension d must be 1, 2 or 3");
  } else {
    const auto& c = std::get<Coupled>(m);
    if (!(c.beta > 0.0)) throw InvalidArgument("beta must be positive");
    if (!std::isfinite(c.alpha) || !std::isfinite(c.gamma) || !std::isfinite(c.delta) || !std::isfinite(c.k))
      throw InvalidArgument("coupled parameters must be finite");
  }
}

int components_of(const ModelParams& m) { return is_single(m) ? 1 : 2; }
bool is_single(const ModelParams& m) { return std::holds_alternative<SingleNls>(m); }

std::string model_name(const ModelParams& m) { return is_single(m) ? "nls" : "coupled"; }

int group_dim(const ModelParams& m, const Grid& g) { return components_of(m) + (g.is_line() ? 1 : 0); }

Field laplacian(const Field& f) {
  const Vec sym = -f.grid().wavenumbers().array().square().matrix();
  Field r(f.grid(), f.components());
  for (int c = 0; c < f.components(); ++c) r[c] = fft::apply_symbol(f[c], sym);
  return r;
}

Field gradient(const Field& f) {
  const CVec sym = cplx(0.0, 1.0) * f.grid().derivative_symbol().cast<cplx>();
  Field r(f.grid(), f.components());
  for (int c = 0; c < f.components(); ++c) r[c] = fft::apply_symbol(f[c], sym);
  return r;
}

double inner(const Field& f, const Field& g) {
  require_compatible(f, g);
  double s = 0.0;
  for (int c = 0; c < f.components(); ++c) s += (f[c].conjugate().array() * g[c].array()).real().sum();
  return s * f.grid().spacing();
}

double norm(const Field& f) { return std::sqrt(inner(f, f)); }

double h1_inner(const Field& f, const Field& g) { return inner(f, g) + inner(gradient(f), gradient(g)); }

double h1_norm(const Field& f) { return std::sqrt(h1_inner(f, f)); }

Field translate(const Field& f, double a) {
  const Grid& g = f.grid();
  const int n = g.size();
  CVec sym(n);
  for (int j = 0; j < n; ++j) sym[j] = std::exp(cplx(0.0, -g.wavenumbers()[j] * a));
  sym[n / 2] = std::cos(g.wavenumbers()[n / 2] * a);
  Field r(g, f.components());
  for (int c = 0; c < f.components(); ++c) r[c] = fft::apply_symbol(f[c], sym);
  return r;
}

Field resample(const Field& f, const Grid& target) {
  const Grid& g = f.grid();
  if (g.kind() != target.kind() || g.extent() != target.extent())
    throw GridMismatch("resample needs grids of equal kind and extent");
  const int n = g.size(), m = target.size();
  Field r(target, f.components());
  for (int c = 0; c < f.components(); ++c) {
    CVec h = fft::forward(f[c]);
    CVec o = CVec::Zero(m);
    const int half = std::min(n, m) / 2;
    for (int j = 0; j < half; ++j) o[j] = h[j];
    for (int j = 1; j < half; ++j) o[m - j] = h[n - j];
    if (m > n) {
      // split the old Nyquist coefficient between +-N/2
      o[half] = 0.5 * h[half];
      o[m - half] = 0.5 * h[half];
    } else if (m < n) {
      o[half] = h[half] + h[n - half];
    } else {
      o[half] = h[half];
    }
    r[c] = fft::backward(o) / static_cast<double>(n);
  }
  return r;
}

void check_boundary_decay(const Field& f, double rel_tol) {
  if (!f.grid().is_line()) return;
  const double sup = f.sup_norm();
  if (sup == 0.0) return;
  const int n = f.size();
  double edge = 0.0;
  for (int c = 0; c < f.components(); ++c) edge = std::max({edge, std::abs(f[c][0]), std::abs(f[c][n - 1])});
  if (edge > rel_tol * sup) {
    std::ostringstream os;
    os << "field does not decay at the domain boundary (|u(+-R)|/sup|u| = " << edge / sup << " > " << rel_tol
       << "); enlarge R";
    throw UnresolvedBoundary(os.str());
  }
}

Invariants invariants_of(const Field& u, const ModelParams& m) {
  validate(m);
  const int C = components_of(m);
  if (u.components() != C) throw InvalidArgument("field component count does not match the model");
  Invariants out;
  out.H = 0.5 * inner(u, kinetic(u, m)) + potential_energy(u, m);
  const bool line = u.grid().is_line();
  out.F.resize(C + (line ? 1 : 0));
  const double h = u.grid().spacing();
  for (int c = 0; c < C; ++c) out.F[c] = 0.5 * u[c].squaredNorm() * h;
  if (line) out.F[C] = 0.5 * inner(u, momentum_operator(u));
  return out;
}

// ---- model pieces ----

double beta_of(const ModelParams& m) {
  if (const auto* c = std::get_if<Coupled>(&m)) return c->beta;
  return 1.0;
}

double shift_of(const ModelParams& m, int c) {
  if (const auto* cp = std::get_if<Coupled>(&m)) return c == 0 ? cp->k : -cp->k;
  return 0.0;
}

Vec kinetic_symbol(const ModelParams& m, const Grid& g, int c) {
  const double b = beta_of(m), s = shift_of(m, c);
  return (b * (g.wavenumbers().array().square() + 2.0 * s * g.derivative_symbol().array() + s * s)).matrix();
}

Field kinetic(const Field& u, const ModelParams& m) {
  Field r(u.grid(), u.components());
  for (int c = 0; c < u.components(); ++c) r[c] = fft::apply_symbol(u[c], kinetic_symbol(m, u.grid(), c));
  return r;
}

std::vector<Vec> nonlinear_weights(const Field& u, const ModelParams& m) {
  std::vector<Vec> w;
  if (const auto* s = std::get_if<SingleNls>(&m)) {
    w.push_back(u[0].cwiseAbs().array().pow(s->p - 1.0).matrix());
  } else {
    const auto& cp = std::get<Coupled>(m);
    const Vec a1 = u[0].cwiseAbs2(), a2 = u[1].cwiseAbs2();
    w.push_back(cp.alpha * a1 + cp.delta * a2);
    w.push_back(cp.delta * a1 + cp.gamma * a2);
  }
  return w;
}

double potential_energy(const Field& u, const ModelParams& m) {
  const double h = u.grid().spacing();
  if (const auto* s = std::get_if<SingleNls>(&m))
    return -u[0].cwiseAbs().array().pow(s->p + 1.0).sum() * h / (s->p + 1.0);
  const auto& cp = std::get<Coupled>(m);
  const Vec a1 = u[0].cwiseAbs2(), a2 = u[1].cwiseAbs2();
  return -0.25 * h *
         (cp.alpha * a1.squaredNorm() + 2.0 * cp.delta * a1.dot(a2) + cp.gamma * a2.squaredNorm());
}

Mat local_potential_hessian(const ModelParams& m, const std::vector<cplx>& u) {
  const int C = static_cast<int>(u.size());
  Mat H = Mat::Zero(2 * C, 2 * C);
  Vec r(2 * C);
  for (int c = 0; c < C; ++c) {
    r[c] = u[c].real();
    r[C + c] = u[c].imag();
  }
  if (const auto* s = std::get_if<SingleNls>(&m)) {
    const double a = std::abs(u[0]);
    const double G = std::pow(a, s->p - 1.0);
    H = -G * Mat::Identity(2, 2);
    if (a > 0.0) H -= (s->p - 1.0) * std::pow(a, s->p - 3.0) * r * r.transpose();
    return H;
  }
  const auto& cp = std::get<Coupled>(m);
  const double K[2][2] = {{cp.alpha, cp.delta}, {cp.delta, cp.gamma}};
  const double n1 = std::norm(u[0]), n2 = std::norm(u[1]);
  const double G[2] = {cp.alpha * n1 + cp.delta * n2, cp.delta * n1 + cp.gamma * n2};
  for (int c = 0; c < 2; ++c) {
    H(c, c) -= G[c];
    H(2 + c, 2 + c) -= G[c];
  }
  // -2 K_{cc'} y_c y'_{c'} for y, y' ranging over Re/Im coordinates
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) H(i, j) -= 2.0 * K[i % 2][j % 2] * r[i] * r[j];
  return H;
}

Field momentum_operator(const Field& u) {
  Field g = gradient(u);
  g *= cplx(0.0, -1.0);
  return g;
}

}  // namespace vkstab
