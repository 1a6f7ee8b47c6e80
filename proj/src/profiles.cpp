#include "vkstab/profiles.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vkstab/hessian.hpp"
#include "vkstab/model.hpp"

namespace vkstab {

double Profile::velocity() const {
  if (!grid().is_line()) return 0.0;
  return xi[xi.size() - 1];
}

Vec Profile::omega() const {
  const int C = components_of(model);
  const double c = velocity();
  Vec w = xi.head(C);
  w.array() += 0.25 * c * c;
  return w;
}

namespace {

double sup_residual(const ModelParams& m, const Field& u, const Vec& xi) {
  return lyapunov_gradient(m, u, xi).sup_norm();
}

Vec unboosted_xi(const Vec& omega, const Grid& g) {
  Vec xi = Vec::Zero(omega.size() + (g.is_line() ? 1 : 0));
  xi.head(omega.size()) = omega;
  return xi;
}

Field warm_field(const Profile& warm, const Grid& g) {
  Field f = deboost(warm);
  if (f.grid() != g) f = resample(f, g);
  return f;
}

void require_line(const Grid& g, const char* what) {
  if (!g.is_line()) throw InvalidArgument(std::string(what) + " needs a line grid");
}

}  // namespace

Field soliton_closed_form(double omega, double p, const Grid& g) {
  if (!(omega < 0.0)) throw InvalidArgument("omega must be negative");
  if (!(p > 1.0)) throw InvalidArgument("nonlinearity exponent p must exceed 1");
  const double w = -omega;
  const double amp = std::pow((p + 1.0) * w / 2.0, 1.0 / (p - 1.0));
  const double b = (p - 1.0) * std::sqrt(w) / 2.0;
  Field f(g, 1);
  for (int j = 0; j < g.size(); ++j) f[0][j] = amp * std::pow(1.0 / std::cosh(b * g.nodes()[j]), 2.0 / (p - 1.0));
  return f;
}

double soliton_mass(double omega, double p) {
  if (!(omega < 0.0)) throw InvalidArgument("omega must be negative");
  const double w = -omega;
  const double amp2 = std::pow((p + 1.0) * w / 2.0, 2.0 / (p - 1.0));
  const double b = (p - 1.0) * std::sqrt(w) / 2.0;
  const double s = 4.0 / (p - 1.0);
  // int sech^s = sqrt(pi) Gamma(s/2) / Gamma(s/2 + 1/2)
  return amp2 / b * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * s) / std::tgamma(0.5 * s + 0.5);
}

Profile soliton_explicit(double omega, const Grid& g) {
  require_line(g, "soliton_explicit");
  if (!(omega < 0.0)) throw InvalidArgument("omega must be negative");
  Profile prof{SingleNls{3.0, 1}, Field(g, 1), Vec(2)};
  for (int j = 0; j < g.size(); ++j)
    prof.field[0][j] = std::sqrt(-2.0 * omega) / std::cosh(std::sqrt(-omega) * g.nodes()[j]);
  prof.xi << omega, 0.0;
  check_boundary_decay(prof.field);
  prof.residual = sup_residual(prof.model, prof.field, prof.xi);
  return prof;
}

Profile soliton_solve(double omega, double p, const Grid& g, const NewtonOptions& opt) {
  require_line(g, "soliton_solve");
  if (!(omega < 0.0)) throw InvalidArgument("omega must be negative");
  ModelParams m = SingleNls{p, 1};
  validate(m);
  Field guess = soliton_closed_form(omega, p, g);
  check_boundary_decay(guess);
  Vec w(1);
  w << omega;
  Profile prof = solve_even(m, w, guess, opt);
  // positivity and a single hump
  const CVec& u = prof.field[0];
  const double sup = u.cwiseAbs().maxCoeff();
  const int n = g.size();
  for (int j = 0; j < n; ++j)
    if (u[j].real() < -1e-10 * sup) throw SolverFailure("soliton_solve converged to a sign-changing profile");
  for (int j = n / 2; j + 1 < n; ++j)
    if (u[j + 1].real() > u[j].real() + 1e-10 * sup)
      throw SolverFailure("soliton_solve converged to an oscillating profile");
  return prof;
}

std::pair<double, double> coupled_zeta_squared(const Coupled& cp) {
  const double det = cp.alpha * cp.gamma - cp.delta * cp.delta;
  if (det == 0.0) throw InvalidArgument("inadmissible coupling: alpha*gamma == delta^2");
  const bool outside = cp.delta < std::min(cp.alpha, cp.gamma) || cp.delta > std::max(cp.alpha, cp.gamma);
  if (!outside) throw InvalidArgument("inadmissible coupling: delta must lie outside [min(alpha,gamma), max(alpha,gamma)]");
  return {(cp.gamma - cp.delta) / det, (cp.alpha - cp.delta) / det};
}

Profile coupled_soliton(double omega_star, const Coupled& cp, const Grid& g) {
  require_line(g, "coupled_soliton");
  if (!(omega_star < 0.0)) throw InvalidArgument("omega must be negative");
  validate(cp);
  const auto [z1, z2] = coupled_zeta_squared(cp);
  const Profile base = soliton_explicit(omega_star, g);
  Profile prof{cp, Field(g, 2), Vec(3)};
  prof.field[0] = std::sqrt(z1) * base.field[0];
  prof.field[1] = std::sqrt(z2) * base.field[0];
  prof.xi << omega_star, omega_star, 0.0;
  prof.residual = sup_residual(prof.model, prof.field, prof.xi);
  return prof;
}

Vec plane_wave_xi(double zeta1, double zeta2, const Coupled& cp) {
  const double a = zeta1 * zeta1, b = zeta2 * zeta2, bk = cp.beta * cp.k * cp.k;
  Vec xi(2);
  xi << bk - (cp.alpha * a + cp.delta * b), bk - (cp.delta * a + cp.gamma * b);
  return xi;
}

Profile plane_wave(double zeta1, double zeta2, const Coupled& cp, const Grid& g) {
  if (g.is_line()) throw InvalidArgument("plane waves live on a periodic grid");
  if (zeta1 == 0.0 || zeta2 == 0.0) throw InvalidArgument("plane wave amplitudes must be nonzero");
  validate(cp);
  const double kk = cp.k * g.length() / (2.0 * std::numbers::pi);
  if (std::abs(kk - std::round(kk)) > 1e-9) throw InvalidArgument("k must be a multiple of 2*pi/L on the torus");
  Profile prof{cp, Field(g, 2), plane_wave_xi(zeta1, zeta2, cp)};
  prof.field[0].setConstant(zeta1);
  prof.field[1].setConstant(zeta2);
  prof.residual = sup_residual(prof.model, prof.field, prof.xi);
  return prof;
}

Profile boost(const Profile& prof, double c) {
  if (c == 0.0) return prof;
  if (!prof.grid().is_line()) throw InvalidArgument("boost is not available on periodic grids");
  Profile out = prof;
  const Vec& x = prof.grid().nodes();
  CVec phase(x.size());
  for (int j = 0; j < x.size(); ++j) phase[j] = std::exp(cplx(0.0, 0.5 * c * x[j]));
  for (int k = 0; k < out.field.components(); ++k) out.field[k].array() *= phase.array();
  const Vec w = prof.omega();
  const double ct = prof.velocity() + c;
  const int C = components_of(prof.model);
  for (int k = 0; k < C; ++k) out.xi[k] = w[k] - 0.25 * ct * ct;
  out.xi[C] = ct;
  out.residual = frame_residual(out);
  return out;
}

double frame_residual(const Profile& prof) {
  const double c = prof.velocity();
  if (c == 0.0) return sup_residual(prof.model, prof.field, prof.xi);
  Vec xi = Vec::Zero(prof.xi.size());
  xi.head(components_of(prof.model)) = prof.omega();
  return sup_residual(prof.model, deboost(prof), xi);
}

Field deboost(const Profile& prof) {
  const double c = prof.velocity();
  if (c == 0.0) return prof.field;
  Field f = prof.field;
  const Vec& x = prof.grid().nodes();
  for (int k = 0; k < f.components(); ++k)
    for (int j = 0; j < x.size(); ++j) f[k][j] *= std::exp(cplx(0.0, -0.5 * c * x[j]));
  return f;
}

Profile solve_even(const ModelParams& m, const Vec& omega, const Field& guess, const NewtonOptions& opt) {
  const Grid& g = guess.grid();
  require_line(g, "solve_even");
  validate(m);
  const int C = components_of(m), n = g.size(), half = n / 2, nr = half + 1;
  if (guess.components() != C || omega.size() != C) throw InvalidArgument("solve_even: component mismatch");
  const Vec xi = unboosted_xi(omega, g);

  auto full_index = [&](int mm) { return mm == half ? 0 : half + mm; };
  Vec a(C * nr);
  for (int c = 0; c < C; ++c)
    for (int mm = 0; mm < nr; ++mm) {
      const int jp = (half + mm) % n, jm = half - mm;
      a[c * nr + mm] = 0.5 * (guess[c][jp].real() + guess[c][jm].real());
    }
  auto expand = [&](const Vec& v) {
    Field f(g, C);
    for (int c = 0; c < C; ++c)
      for (int mm = 0; mm < nr; ++mm) {
        f[c][(half + mm) % n] = v[c * nr + mm];
        f[c][half - mm] = v[c * nr + mm];
      }
    return f;
  };
  auto reduced = [&](const Field& grad) {
    Vec r(C * nr);
    for (int c = 0; c < C; ++c)
      for (int mm = 0; mm < nr; ++mm) r[c * nr + mm] = grad[c][full_index(mm)].real();
    return r;
  };

  const Mat& D2 = laplacian_matrix(g);
  const double b = beta_of(m);
  Field u = expand(a);
  Field grad = lyapunov_gradient(m, u, xi);
  double rn = grad.sup_norm();
  int it = 0;
  for (; it < opt.max_iter && rn > opt.tol; ++it) {
    // Re-Re block of the Hessian at a real field.
    Mat J = Mat::Zero(C * n, C * n);
    for (int c = 0; c < C; ++c) {
      J.block(c * n, c * n, n, n) = -b * D2;
      J.block(c * n, c * n, n, n).diagonal().array() += b * std::pow(shift_of(m, c), 2) - omega[c];
    }
    std::vector<cplx> uj(C);
    for (int j = 0; j < n; ++j) {
      for (int c = 0; c < C; ++c) uj[c] = u[c][j];
      const Mat h = local_potential_hessian(m, uj);
      for (int c = 0; c < C; ++c)
        for (int c2 = 0; c2 < C; ++c2) J(c * n + j, c2 * n + j) += h(c, c2);
    }
    Mat Jr(C * nr, C * nr);
    for (int c = 0; c < C; ++c)
      for (int mm = 0; mm < nr; ++mm) {
        const int row = c * n + full_index(mm);
        for (int c2 = 0; c2 < C; ++c2)
          for (int m2 = 0; m2 < nr; ++m2) {
            const int jp = (half + m2) % n, jm = half - m2;
            double v = J(row, c2 * n + jp);
            if (jm != jp) v += J(row, c2 * n + jm);
            Jr(c * nr + mm, c2 * nr + m2) = v;
          }
      }
    Eigen::PartialPivLU<Mat> lu(Jr);
    const Vec step = lu.solve(-reduced(grad));
    if (!step.allFinite()) throw SolverFailure("solve_even: singular Jacobian");
    double t = 1.0;
    for (; t > 1e-4; t *= 0.5) {
      const Vec trial = a + t * step;
      Field ut = expand(trial);
      Field gt = lyapunov_gradient(m, ut, xi);
      const double rt = gt.sup_norm();
      if (rt < rn || t < 2e-4) {
        a = trial;
        u = std::move(ut);
        grad = std::move(gt);
        rn = rt;
        break;
      }
    }
  }
  if (!(rn <= opt.tol)) {
    std::ostringstream os;
    os << "Newton did not converge: residual " << rn << " after " << it << " iterations";
    throw SolverFailure(os.str());
  }
  check_boundary_decay(u);
  return Profile{m, std::move(u), xi, rn};
}

Profile solve_bordered(const ModelParams& m, const Vec& xi, const Field& guess, const Field& anchor,
                       const NewtonOptions& opt) {
  validate(m);
  const Grid& g = guess.grid();
  const auto tangents = symmetry_tangents(m, anchor);
  const int K = static_cast<int>(tangents.size());
  const int dim = guess.real_dim();
  Mat T(dim, K);
  for (int k = 0; k < K; ++k) {
    T.col(k) = tangents[k].to_real();
    const double nk = T.col(k).norm();
    if (nk == 0.0) throw DegenerateKernel("symmetry tangent vanishes at the anchor");
    T.col(k) /= nk;
  }
  const Vec w0 = anchor.to_real();
  Vec w = guess.to_real();
  const int C = guess.components();
  Field u = guess;
  Field grad = lyapunov_gradient(m, u, xi);
  double rn = grad.sup_norm();
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const double cons = (T.transpose() * (w - w0)).cwiseAbs().maxCoeff();
    if (rn <= opt.tol && cons <= 1e-10) break;
    Mat B = Mat::Zero(dim + K, dim + K);
    B.topLeftCorner(dim, dim) = lyapunov_hessian_dense(m, u, xi);
    B.topRightCorner(dim, K) = T;
    B.bottomLeftCorner(K, dim) = T.transpose();
    Vec rhs(dim + K);
    rhs.head(dim) = -grad.to_real();
    rhs.tail(K) = -T.transpose() * (w - w0);
    Eigen::PartialPivLU<Mat> lu(B);
    if (lu.rcond() < 1e-11)
      throw DegenerateKernel("bordered Jacobian is singular: the Hessian kernel exceeds the symmetry orbit");
    const Vec step = lu.solve(rhs).head(dim);
    double t = 1.0;
    for (; t > 1e-4; t *= 0.5) {
      const Vec trial = w + t * step;
      Field ut = Field::from_real(g, C, trial);
      Field gt = lyapunov_gradient(m, ut, xi);
      const double rt = gt.sup_norm();
      if (rt < rn || rt <= opt.tol || t < 2e-4) {
        w = trial;
        u = std::move(ut);
        grad = std::move(gt);
        rn = rt;
        break;
      }
    }
  }
  if (!(rn <= opt.tol)) {
    std::ostringstream os;
    os << "bordered Newton did not converge: residual " << rn << " after " << it << " iterations";
    throw SolverFailure(os.str());
  }
  return Profile{m, std::move(u), xi, rn};
}

// ---- Family ----

Family::Family(Profile center, Solver solver, double fd_step)
    : center_(std::move(center)), solver_(std::move(solver)), cache_(std::make_shared<Cache>()) {
  h_ = fd_step > 0.0 ? fd_step : 1e-4 * (1.0 + center_.xi.norm());
  std::vector<double> key(center_.xi.data(), center_.xi.data() + center_.xi.size());
  cache_->entries.emplace(key, center_);
}

Profile Family::at(const Vec& xi) const {
  if (xi.size() != center_.xi.size()) throw InvalidArgument("xi has the wrong length for this family");
  std::vector<double> key(xi.data(), xi.data() + xi.size());
  Profile warm = center_;
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->entries.find(key);
    if (it != cache_->entries.end()) return it->second;
    double best = (center_.xi - xi).norm();
    for (const auto& [k, p] : cache_->entries) {
      const double d = (p.xi - xi).norm();
      if (d < best) {
        best = d;
        warm = p;
      }
    }
  }
  Profile out = solver_(center_.grid(), xi, warm);
  std::lock_guard<std::mutex> lock(cache_->mu);
  return cache_->entries.emplace(key, std::move(out)).first->second;
}

Family Family::on_grid(const Grid& g) const {
  Profile c = solver_(g, center_.xi, center_);
  return Family(std::move(c), solver_, h_);
}

std::size_t Family::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  return cache_->entries.size();
}

Family soliton_family(double p, double omega, const Grid& g, double c) {
  Profile center = boost(soliton_solve(omega, p, g), c);
  auto solver = [p](const Grid& grid, const Vec& xi, const Profile&) {
    const double w = xi[0] + 0.25 * xi[1] * xi[1];
    return boost(soliton_solve(w, p, grid), xi[1]);
  };
  return Family(std::move(center), solver);
}

Family coupled_family(const Coupled& cp, double omega_star, const Grid& g) {
  const Profile seed = coupled_soliton(omega_star, cp, g);
  Profile center = solve_even(cp, seed.omega(), seed.field);
  auto solver = [cp](const Grid& grid, const Vec& xi, const Profile& warm) {
    Vec w = xi.head(2);
    w.array() += 0.25 * xi[2] * xi[2];
    return boost(solve_even(cp, w, warm_field(warm, grid)), xi[2]);
  };
  return Family(std::move(center), solver);
}

Family plane_wave_family(const Coupled& cp, double zeta1, double zeta2, const Grid& g) {
  Profile center = plane_wave(zeta1, zeta2, cp, g);
  const double s1 = zeta1 > 0 ? 1.0 : -1.0, s2 = zeta2 > 0 ? 1.0 : -1.0;
  auto solver = [cp, s1, s2](const Grid& grid, const Vec& xi, const Profile&) {
    // invert the dispersion relation for the squared amplitudes
    const double det = cp.alpha * cp.gamma - cp.delta * cp.delta;
    if (det == 0.0) throw SolverFailure("plane-wave family is singular when alpha*gamma == delta^2");
    const double bk = cp.beta * cp.k * cp.k;
    const double r1 = bk - xi[0], r2 = bk - xi[1];
    const double a = (cp.gamma * r1 - cp.delta * r2) / det;
    const double b = (cp.alpha * r2 - cp.delta * r1) / det;
    if (!(a > 0.0 && b > 0.0)) throw SolverFailure("xi outside the plane-wave family");
    return plane_wave(s1 * std::sqrt(a), s2 * std::sqrt(b), cp, grid);
  };
  return Family(std::move(center), solver);
}

namespace {

// Parameters of the unboosted solve for a lab-frame xi.
Vec solve_params(const ModelParams& m, const Grid& g, const Vec& xi) {
  if (!g.is_line()) return xi;
  const int C = components_of(m);
  Vec w = xi.head(C);
  w.array() += 0.25 * xi[C] * xi[C];
  return unboosted_xi(w, g);
}

Profile finish(const ModelParams& m, const Grid& g, const Vec& xi, Profile solved) {
  if (!g.is_line()) return solved;
  return boost(solved, xi[components_of(m)]);
}

}  // namespace

Family continue_family(const Profile& prof, const Vec& target_xi, int steps, const NewtonOptions& opt) {
  if (steps < 1) throw InvalidArgument("continuation needs at least one step");
  const ModelParams m = prof.model;
  const Grid& g = prof.grid();
  if (target_xi.size() != prof.xi.size()) throw InvalidArgument("target xi has the wrong length");

  const Vec p0 = solve_params(m, g, prof.xi);
  const Vec p1 = solve_params(m, g, target_xi);
  Field base = deboost(prof);
  Profile cur = solve_bordered(m, p0, base, base, opt);
  {
    // Continuation through a bifurcation is refused: the kernel must be
    // exactly the symmetry orbit.
    SpectrumOptions so;
    so.vectors = false;
    const HessOp op = assemble(cur);
    const SpectralReport rep = spectrum(op, so);
    if (rep.dim_ker != static_cast<int>(op.tangents.size())) {
      std::ostringstream os;
      os << "Hessian kernel has dimension " << rep.dim_ker << " but the symmetry orbit has dimension "
         << op.tangents.size();
      throw DegenerateKernel(os.str());
    }
  }

  double s = 0.0, ds = 1.0 / steps;
  int halvings = 0;
  while (s < 1.0 - 1e-14) {
    const double s_next = std::min(1.0, s + ds);
    const Vec p = p0 + s_next * (p1 - p0);
    try {
      cur = solve_bordered(m, p, cur.field, cur.field, opt);
      s = s_next;
    } catch (const SolverFailure&) {
      if (++halvings > 6) throw;
      ds *= 0.5;
    }
  }
  Profile center = finish(m, g, target_xi, cur);
  center.xi = target_xi;

  auto solver = [m, opt](const Grid& grid, const Vec& xi, const Profile& warm) {
    const Field w = warm_field(warm, grid);
    Profile solved = solve_bordered(m, solve_params(m, grid, xi), w, w, opt);
    Profile out = finish(m, grid, xi, solved);
    out.xi = xi;
    return out;
  };
  return Family(std::move(center), solver);
}

}  // namespace vkstab
