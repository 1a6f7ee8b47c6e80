#include "vkstab/dynamics.hpp"


#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "fft.hpp"
#include "vkstab/model.hpp"

namespace vkstab {

namespace {

constexpr double kBlowUp = 1e6;

struct LinearStep {
  std::vector<CVec> phase;  // exp(-i K_c dt) per component
};

LinearStep linear_step(const ModelParams& m, const Grid& g, int C, double dt) {
  LinearStep ls;
  for (int c = 0; c < C; ++c) {
    const Vec K = kinetic_symbol(m, g, c);
    CVec ph(K.size());
    for (int j = 0; j < K.size(); ++j) ph[j] = std::exp(cplx(0.0, -K[j] * dt));
    ls.phase.push_back(std::move(ph));
  }
  return ls;
}

void nonlinear_half(Field& u, const ModelParams& m, double half_dt) {
  // |u_c| is invariant under the potential flow, so the rotation is exact.
  const auto G = nonlinear_weights(u, m);
  for (int c = 0; c < u.components(); ++c)
    for (int j = 0; j < u.size(); ++j) u[c][j] *= std::exp(cplx(0.0, G[c][j] * half_dt));
}

void step_inplace(Field& u, const ModelParams& m, const LinearStep& ls, double dt) {
  nonlinear_half(u, m, 0.5 * dt);
  for (int c = 0; c < u.components(); ++c) u[c] = fft::apply_symbol(u[c], ls.phase[c]);
  nonlinear_half(u, m, 0.5 * dt);
}

void guard(const Field& u, double t) {
  const double s = u.sup_norm();
  if (!(s <= kBlowUp) || !u.finite()) {
    std::ostringstream os;
    os << "blow-up at t = " << t << ": sup|u| = " << s;
    throw BlowUp(os.str());
  }
}

void check_model(const Field& u, const ModelParams& m) {
  validate(m);
  if (u.components() != components_of(m)) throw InvalidArgument("field component count does not match the model");
}

}  // namespace

Field strang_step(const Field& u, const ModelParams& m, double dt) {
  check_model(u, m);
  Field v = u;
  step_inplace(v, m, linear_step(m, u.grid(), u.components(), dt), dt);
  return v;
}

Field propagate(const Field& u0, const ModelParams& m, double dt, int steps) {
  check_model(u0, m);
  const LinearStep ls = linear_step(m, u0.grid(), u0.components(), dt);
  Field u = u0;
  for (int s = 0; s < steps; ++s) {
    step_inplace(u, m, ls, dt);
    if (s % 64 == 63) guard(u, (s + 1) * dt);
  }
  guard(u, steps * dt);
  return u;
}

Trajectory evolve(const Field& u0, const ModelParams& m, double dt, double t_end, int sample_stride) {
  check_model(u0, m);
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be non-negative");
  if (sample_stride < 1) throw InvalidArgument("sample stride must be at least 1");
  const int steps = static_cast<int>(std::llround(t_end / dt));
  const LinearStep ls = linear_step(m, u0.grid(), u0.components(), dt);
  Trajectory tr;
  tr.dt = dt;
  tr.stride = sample_stride;
  auto sample = [&](const Field& u, int s) {
    const Invariants inv = invariants_of(u, m);
    tr.times.push_back(s * dt);
    tr.snapshots.push_back(u);
    tr.H.push_back(inv.H);
    tr.F.push_back(inv.F);
  };
  Field u = u0;
  sample(u, 0);
  for (int s = 1; s <= steps; ++s) {
    step_inplace(u, m, ls, dt);
    if (s % sample_stride == 0 || s == steps) {
      guard(u, s * dt);
      sample(u, s);
    }
  }
  return tr;
}

Field act(const GroupElement& g, const Field& u) {
  if (g.theta.size() != u.components()) throw InvalidArgument("group element has the wrong number of phases");
  Field r = g.shift != 0.0 ? translate(u, g.shift) : u;
  for (int c = 0; c < r.components(); ++c) r[c] *= std::exp(cplx(0.0, -g.theta[c]));
  return r;
}

Alignment align_to_orbit(const Field& u, const Profile& ref) {
  const Field& r = ref.field;
  if (u.grid() != r.grid()) throw GridMismatch("align_to_orbit: grids differ");
  if (u.components() != r.components()) throw InvalidArgument("align_to_orbit: component mismatch");
  const Grid& g = u.grid();
  const int n = g.size(), C = u.components();
  const Vec& k = g.derivative_symbol();
  const double scale = g.spacing() / n;

  // z_c(a) = int conj(u_c) r_c(x - a) in the H^1 pairing, as a trigonometric
  // polynomial in a with coefficients w.
  std::vector<CVec> w(C);
  for (int c = 0; c < C; ++c) {
    const CVec uh = fft::forward(u[c]), rh = fft::forward(r[c]);
    w[c] = (uh.conjugate().array() * rh.array() * (1.0 + k.array().square())).matrix();
    w[c][n / 2] = 0.0;
  }
  // z and its first two derivatives in a
  auto z_at = [&](int c, double a) {
    std::array<cplx, 3> z{};
    for (int j = 0; j < n; ++j) {
      const cplx f = w[c][j] * std::exp(cplx(0.0, -k[j] * a));
      const cplx ik(0.0, -k[j]);
      z[0] += f;
      z[1] += ik * f;
      z[2] += ik * ik * f;
    }
    for (auto& v : z) v *= scale;
    return z;
  };

  Alignment out;
  out.g.theta = Vec::Zero(C);
  double a = 0.0;
  out.converged = true;
  if (g.is_line()) {
    // coarse: all grid shifts at once
    Vec score = Vec::Zero(n);
    for (int c = 0; c < C; ++c) score += (scale * fft::forward(w[c])).cwiseAbs();
    int best = 0;
    score.maxCoeff(&best);
    a = (best <= n / 2 ? best : best - n) * g.spacing();

    auto objective = [&](double x, double& f1, double& f2) {
      double f = 0.0;
      f1 = f2 = 0.0;
      for (int c = 0; c < C; ++c) {
        const auto [z, z1, z2] = z_at(c, x);
        const double m = std::abs(z);
        if (m == 0.0) continue;
        const double re1 = std::real(std::conj(z) * z1);
        f += m;
        f1 += re1 / m;
        f2 += (std::norm(z1) + std::real(std::conj(z) * z2)) / m - re1 * re1 / (m * m * m);
      }
      return f;
    };
    const double h = g.spacing();
    out.converged = false;
    double f1, f2;
    double f = objective(a, f1, f2);
    for (int it = 0; it < 60; ++it) {
      double step = f2 < 0.0 ? -f1 / f2 : (f1 > 0 ? 0.5 * h : -0.5 * h);
      step = std::clamp(step, -h, h);
      double t1, t2, ft = 0.0;
      bool accepted = false;
      for (int ls = 0; ls < 30; ++ls) {
        ft = objective(a + step, t1, t2);
        if (ft >= f) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        out.converged = std::abs(f1) <= 1e-10 * std::max(1.0, std::abs(f));
        break;
      }
      a += step;
      f = ft;
      f1 = t1;
      f2 = t2;
      if (std::abs(step) <= 1e-14 * g.length()) {
        out.converged = true;
        break;
      }
    }
  }
  out.g.shift = a;
  for (int c = 0; c < C; ++c) {
    const cplx z = z_at(c, a)[0];
    out.g.theta[c] = std::abs(z) > 0.0 ? std::arg(z) : 0.0;
  }
  out.distance = h1_norm(u - act(out.g, r));
  return out;
}

Perturbation perturbation_from_string(const std::string& s) {
  if (s == "random") return Perturbation::random;
  if (s == "mode" || s == "single_mode") return Perturbation::single_mode;
  if (s == "kernel_orthogonal") return Perturbation::kernel_orthogonal;
  throw InvalidArgument("unknown perturbation kind '" + s + "'");
}

const char* to_string(Perturbation p) {
  switch (p) {
    case Perturbation::random: return "random";
    case Perturbation::single_mode: return "single_mode";
    case Perturbation::kernel_orthogonal: return "kernel_orthogonal";
  }
  return "?";
}

Field make_perturbation(const Profile& prof, const ExperimentOptions& opt) {
  if (!(opt.eps >= 0.0)) throw InvalidArgument("eps must be non-negative");
  const Grid& g = prof.grid();
  const int n = g.size(), C = prof.field.components();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  const Vec& x = g.nodes();
  Field v(g, C);
  if (opt.kind == Perturbation::single_mode) {
    if (opt.mode < 1) throw InvalidArgument("perturbation mode must be at least 1");
    const double kn = 2.0 * std::numbers::pi * opt.mode / g.length();
    for (int c = 0; c < C; ++c) {
      const cplx ac(nd(rng), nd(rng)), as(nd(rng), nd(rng));
      for (int j = 0; j < n; ++j) v[c][j] = ac * std::cos(kn * x[j]) + as * std::sin(kn * x[j]);
    }
  } else {
    // band-limited: |k| <= 4
    const int qmax = std::max(1, static_cast<int>(4.0 * g.length() / (2.0 * std::numbers::pi)));
    for (int c = 0; c < C; ++c) {
      CVec hat = CVec::Zero(n);
      for (int q = -qmax; q <= qmax && q < n / 2; ++q) hat[(q + n) % n] = cplx(nd(rng), nd(rng));
      v[c] = fft::backward(hat);
    }
  }
  if (g.is_line()) {
    const double mid = g.nodes()[n / 2];
    for (int c = 0; c < C; ++c)
      for (int j = 0; j < n; ++j) v[c][j] *= std::exp(-std::pow((x[j] - mid) / 4.0, 2));
  }
  if (opt.kind == Perturbation::kernel_orthogonal) {
    std::vector<Field> dirs = symmetry_tangents(prof.model, prof.field);
    for (int c = 0; c < C; ++c) {
      Field gc(g, C);
      gc[c] = prof.field[c];
      dirs.push_back(gc);
    }
    if (g.is_line()) dirs.push_back(momentum_operator(prof.field));
    // H^1 projection, matching the norm the orbit distance is measured in;
    // Gram-Schmidt is applied twice for stability.
    std::vector<Field> basis;
    for (const Field& d : dirs) {
      Field e = d;
      for (int pass = 0; pass < 2; ++pass)
        for (const Field& b : basis) e -= h1_inner(b, e) * b;
      const double ne = h1_norm(e);
      if (ne <= 1e-12 * std::max(1.0, h1_norm(d))) continue;
      e *= 1.0 / ne;
      basis.push_back(e);
    }
    for (int pass = 0; pass < 2; ++pass)
      for (const Field& b : basis) v -= h1_inner(b, v) * b;
  }
  const double nv = h1_norm(v);
  if (nv == 0.0) throw InvalidArgument("perturbation vanished");
  v *= opt.eps / nv;
  return v;
}

std::optional<double> fit_growth_rate(const std::vector<double>& t, const std::vector<double>& d, double lo,
                                      double hi) {
  std::size_t i0 = 0;
  while (i0 < d.size() && d[i0] < lo) ++i0;
  std::size_t i1 = i0;
  while (i1 < d.size() && d[i1] <= hi) ++i1;
  const std::size_t m = i1 - i0;
  if (m < 3) return std::nullopt;
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = i0; i < i1; ++i) {
    const double l = std::log(d[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
  }
  const double den = m * stt - st * st;
  if (den <= 0.0) return std::nullopt;
  return (m * stl - st * sl) / den;
}

Experiment stability_experiment(const Profile& prof, const ExperimentOptions& opt) {
  if (!(opt.dt > 0.0) || !(opt.t_end > 0.0)) throw InvalidArgument("dt and t_end must be positive");
  const Field u0 = prof.field + make_perturbation(prof, opt);
  const int stride = std::max(1, static_cast<int>(std::llround(opt.sample_every / opt.dt)));
  const Trajectory tr = evolve(u0, prof.model, opt.dt, opt.t_end, stride);

  Experiment ex;
  const double h0 = std::abs(tr.H.front());
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const Alignment al = align_to_orbit(tr.snapshots[i], prof);
    ex.series.times.push_back(tr.times[i]);
    ex.series.distances.push_back(al.distance);
    ex.series.params.push_back(al.g);
    ex.max_distance = std::max(ex.max_distance, al.distance);
    ex.energy_drift = std::max(ex.energy_drift, std::abs(tr.H[i] - tr.H.front()) / std::max(h0, 1e-300));
  }
  ex.growth_rate = fit_growth_rate(ex.series.times, ex.series.distances, 10.0 * opt.eps, 0.1);
  ex.bounded = ex.max_distance <= 10.0 * opt.eps;
  if (ex.bounded) ex.verdict = "bounded";
  else if (ex.growth_rate && *ex.growth_rate > 0.0) ex.verdict = "growing";
  else ex.verdict = "inconclusive";
  if (const auto* s = std::get_if<SingleNls>(&prof.model)) ex.empirical_only = s->p < 3.0;
  return ex;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os.precision(17);
  os << "t,H";
  if (!tr.F.empty())
    for (int i = 0; i < tr.F.front().size(); ++i) os << ",F" << i + 1;
  os << '\n';
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    os << tr.times[i] << ',' << tr.H[i];
    for (int k = 0; k < tr.F[i].size(); ++k) os << ',' << tr.F[i][k];
    os << '\n';
  }
  return os.str();
}

std::string series_csv(const OrbitDistanceSeries& s) {
  std::ostringstream os;
  os.precision(17);
  os << "t,distance,shift";
  const int C = s.params.empty() ? 0 : static_cast<int>(s.params.front().theta.size());
  for (int c = 0; c < C; ++c) os << ",theta" << c + 1;
  os << '\n';
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    os << s.times[i] << ',' << s.distances[i] << ',' << s.params[i].shift;
    for (int c = 0; c < C; ++c) os << ',' << s.params[i].theta[c];
    os << '\n';
  }
  return os.str();
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw InvalidArgument("truncated snapshot file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_snapshots_binary(const std::string& path, const Trajectory& tr) {
  if (tr.snapshots.empty()) throw InvalidArgument("trajectory has no snapshots");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path);
  const Field& f0 = tr.snapshots.front();
  put_u64(os, f0.size());
  put_u64(os, f0.components());
  put_f64(os, tr.dt);
  put_u64(os, tr.stride);
  for (const Field& f : tr.snapshots)
    for (int c = 0; c < f.components(); ++c)
      for (int j = 0; j < f.size(); ++j) {
        put_f64(os, f[c][j].real());
        put_f64(os, f[c][j].imag());
      }
}

Trajectory read_snapshots_binary(const std::string& path, const Grid& g) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  Trajectory tr;
  const auto n = get_u64(is), C = get_u64(is);
  tr.dt = get_f64(is);
  tr.stride = static_cast<int>(get_u64(is));
  if (static_cast<int>(n) != g.size()) throw GridMismatch("snapshot file does not match the grid size");
  while (is.peek() != std::char_traits<char>::eof()) {
    Field f(g, static_cast<int>(C));
    for (std::uint64_t c = 0; c < C; ++c)
      for (std::uint64_t j = 0; j < n; ++j) {
        const double re = get_f64(is), im = get_f64(is);
        f[c][j] = cplx(re, im);
      }
    tr.snapshots.push_back(std::move(f));
  }
  return tr;
}

}  // namespace vkstab
