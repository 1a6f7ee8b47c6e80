// vkstab command-line driver.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vkstab/certify.hpp"
#include "vkstab/dynamics.hpp"
#include "vkstab/hessian.hpp"
#include "vkstab/io.hpp"
#include "vkstab/planewave.hpp"
#include "vkstab/profiles.hpp"
#include "vkstab/slope.hpp"
#include "vkstab/so3.hpp"

using namespace vkstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitFailed = 3;
constexpr int kExitIndeterminate = 4;

struct ModelOpts {
  std::string model = "nls";
  double p = 3.0;
  int d = 1;
  double alpha = 1.0, gamma = 1.0, delta = 2.0, beta = 1.0, k = 0.0;
  double omega = -1.0;
  double velocity = 0.0;
  double zeta1 = 1.0, zeta2 = 1.0;
  std::string grid;  // empty: line for solitons, periodic for plane waves
  double extent = 0.0;
  int n = 0;
};

struct Opts {
  ModelOpts m;
  std::string config;
  std::string out;
  std::string format = "text";
  std::string from;
  double residual_tol = 1e-6;
  double ker_tol = 0.0;
  double angle_tol = 1e-5;
  double refine_tol = 0.05;
  bool no_refine = false;
  double fd_step = 0.0;
  int n_eigs = 16;
  // planewave
  int nmax = 8;
  double length = 2.0 * M_PI;
  // evolve
  double eps = 1e-3, dt = 1e-3, tend = 20.0, sample_every = 0.1;
  std::string perturbation = "random";
  int mode = 1;
  std::uint64_t seed = 1;
  std::string series;
  // so3
  double rho = 1.0, omega_pot = 1.0, so3_alpha = 1.0;
  int order = 4;
};

void add_model_options(CLI::App* s, ModelOpts& m) {
  s->add_option("--model", m.model, "nls | coupled")->check(CLI::IsMember({"nls", "coupled"}))->capture_default_str();
  s->add_option("--p", m.p, "nls power (p > 1)")->capture_default_str();
  s->add_option("--d", m.d, "nls spatial dimension for closed forms")->capture_default_str();
  s->add_option("--alpha", m.alpha, "coupled self interaction of u1")->capture_default_str();
  s->add_option("--gamma", m.gamma, "coupled self interaction of u2")->capture_default_str();
  s->add_option("--delta", m.delta, "coupled cross interaction")->capture_default_str();
  s->add_option("--beta", m.beta, "dispersion coefficient (torus)")->capture_default_str();
  s->add_option("--k", m.k, "covariant shift (torus)")->capture_default_str();
  s->add_option("--omega", m.omega, "frequency (omega* for coupled solitons), must be negative")
      ->capture_default_str();
  s->add_option("--velocity", m.velocity, "boost velocity c (nls)")->capture_default_str();
  s->add_option("--zeta1", m.zeta1, "plane wave amplitude of u1")->capture_default_str();
  s->add_option("--zeta2", m.zeta2, "plane wave amplitude of u2")->capture_default_str();
  s->add_option("--grid", m.grid, "line | periodic (periodic with coupled means plane waves)")
      ->check(CLI::IsMember({"line", "periodic"}));
  s->add_option("--extent", m.extent, "half width R (line) or length L (periodic); default 20 or 2pi");
  s->add_option("--n", m.n, "grid size, even; default 512 (line) or 32 (periodic)");
}

void add_common(CLI::App* s, Opts& o) {
  s->add_option("--config", o.config, "INI or JSON config file; keys are option names, command line wins");
  s->add_option("--out", o.out, "output file");
  s->add_option("--format", o.format, "text | json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
}

void add_spectral_options(CLI::App* s, Opts& o) {
  s->add_option("--ker-tol", o.ker_tol, "kernel threshold (default 1e-6 x spectral radius)");
  s->add_option("--n-eigs", o.n_eigs, "eigenvalues to report")->capture_default_str();
}

Grid make_grid_from(const ModelOpts& m, bool periodic_default) {
  const std::string kind = m.grid.empty() ? (periodic_default ? "periodic" : "line") : m.grid;
  const bool periodic = kind == "periodic";
  const double extent = m.extent > 0.0 ? m.extent : (periodic ? 2.0 * M_PI : 20.0);
  const int n = m.n > 0 ? m.n : (periodic ? 32 : 512);
  return Grid(grid_kind_from_string(kind), extent, n);
}

bool is_plane_wave(const ModelOpts& m) { return m.model == "coupled" && m.grid == "periodic"; }

Coupled coupled_of(const ModelOpts& m) { return Coupled{m.alpha, m.gamma, m.delta, m.beta, m.k}; }

Family family_of(const ModelOpts& m) {
  if (m.model == "nls") {
    if (m.grid == "periodic") throw InvalidArgument("nls profiles live on line grids");
    return soliton_family(m.p, m.omega, make_grid_from(m, false), m.velocity);
  }
  const Coupled cp = coupled_of(m);
  if (is_plane_wave(m)) return plane_wave_family(cp, m.zeta1, m.zeta2, make_grid_from(m, true));
  return coupled_family(cp, m.omega, make_grid_from(m, false));
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
}

std::string vec_str(const Vec& v) {
  std::ostringstream os;
  os.precision(10);
  for (int i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::string mat_str(const Mat& a) {
  std::ostringstream os;
  os.precision(10);
  for (int i = 0; i < a.rows(); ++i) {
    os << "  [";
    for (int j = 0; j < a.cols(); ++j) os << (j ? ", " : "") << a(i, j);
    os << "]\n";
  }
  return os.str();
}

void emit(const Opts& o, const std::string& text) {
  if (o.out.empty()) std::cout << text << (text.empty() || text.back() == '\n' ? "" : "\n");
  else write_text_file(o.out, text);
}

// ---------------------------------------------------------------- commands

int cmd_profile(const Opts& o) {
  const Family fam = family_of(o.m);
  const Profile& prof = fam.center();
  const std::string path = o.out.empty() ? "profile.json" : o.out;
  write_text_file(path, profile_json(prof));
  const Invariants inv = invariants_of(prof.field, prof.model);
  std::cout.precision(10);
  std::cout << "profile: " << model_name(prof.model) << " on " << to_string(prof.grid().kind())
            << " grid, N = " << prof.grid().size() << "\n";
  std::cout << "xi: " << vec_str(prof.xi) << "\n";
  std::cout << "residual: " << prof.residual << "\n";
  std::cout << "H: " << inv.H << "\nF: " << vec_str(inv.F) << "\n";
  if (o.m.model == "coupled" && !is_plane_wave(o.m)) {
    const auto z = coupled_zeta_squared(coupled_of(o.m));
    std::cout << "zeta1^2: " << z.first << "\nzeta2^2: " << z.second << "\n";
  }
  std::cout << "written: " << path << "\n";
  return kExitOk;
}

int cmd_spectrum(const Opts& o) {
  check_positive(o.residual_tol, "residual-tol");
  if (o.ker_tol < 0.0) throw InvalidArgument("ker-tol must be positive");
  const Profile prof = o.from.empty() ? family_of(o.m).center() : profile_from_json(read_text_file(o.from));
  const HessOp op = assemble(prof, o.residual_tol);
  SpectrumOptions so;
  so.n_eigs = o.n_eigs;
  so.ker_tol = o.ker_tol;
  const SpectralReport rep = spectrum(op, so);
  const KernelMatch km = kernel_match(rep, op);
  if (o.format == "json") {
    nlohmann::json j;
    j["eigenvalues"] = std::vector<double>(rep.eigenvalues.data(), rep.eigenvalues.data() + rep.eigenvalues.size());
    j["n_neg"] = rep.n_neg;
    j["dim_ker"] = rep.dim_ker;
    j["gap_pos"] = rep.gap_pos;
    j["ker_tol"] = rep.ker_tol;
    j["orbit_dim"] = km.orbit_dim;
    j["kernel_matches_orbit"] = km.matches;
    emit(o, j.dump(2));
  } else {
    std::ostringstream os;
    os.precision(10);
    os << "eigenvalues: " << vec_str(rep.eigenvalues) << "\n";
    os << "n_neg: " << rep.n_neg << "\ndim_ker: " << rep.dim_ker << "\ngap_pos: " << rep.gap_pos
       << "\nker_tol: " << rep.ker_tol << "\norbit_dim: " << km.orbit_dim
       << "\nkernel_matches_orbit: " << (km.matches ? "yes" : "no") << "\n";
    emit(o, os.str());
  }
  return kExitOk;
}

int cmd_slope(const Opts& o) {
  const Family fam = family_of(o.m);
  const Profile& prof = fam.center();
  const SlopeReport fd = d2w_fd(fam, prof.xi, o.fd_step);
  std::optional<SlopeReport> closed;
  try {
    closed = d2w_closed(prof);
  } catch (const InvalidArgument&) {
  }
  std::ostringstream os;
  os.precision(10);
  os << "xi: " << vec_str(prof.xi) << "\n";
  os << "D^2W (finite differences, h = " << fd.fd_step << "):\n" << mat_str(fd.d2w);
  os << "signature (p,z,n): (" << fd.signature.p << "," << fd.signature.z << "," << fd.signature.n << ")\n";
  os << "asymmetry: " << fd.asymmetry << "\ncondition: " << fd.condition << "\n";
  if (closed) {
    os << "D^2W (closed form):\n" << mat_str(closed->d2w);
    os << "closed form signature (p,z,n): (" << closed->signature.p << "," << closed->signature.z << ","
       << closed->signature.n << ")\n";
  }
  if (o.m.model == "coupled" && !is_plane_wave(o.m)) os << "vk_integral: " << vk_integral(prof).value << "\n";
  if (o.m.model == "nls" && o.m.velocity == 0.0) os << "vk_integral: " << vk_integral_single(prof).value << "\n";
  emit(o, os.str());
  return kExitOk;
}

int cmd_certify(const Opts& o) {
  check_positive(o.angle_tol, "angle-tol");
  check_positive(o.refine_tol, "refine-tol");
  if (o.ker_tol < 0.0) throw InvalidArgument("ker-tol must be positive");
  const Family fam = family_of(o.m);
  CertifyOptions co;
  co.spectrum.ker_tol = o.ker_tol;
  co.spectrum.n_eigs = o.n_eigs;
  co.kernel_tol = o.angle_tol;
  co.refine = !o.no_refine;
  co.refine_tol = o.refine_tol;
  co.fd_step = o.fd_step;
  const Certificate c = certify(fam, co);
  const std::string json = certificate_json(c);
  if (!o.out.empty()) write_text_file(o.out, json);
  if (o.format == "json") std::cout << json << "\n";
  else std::cout << certificate_text(c);
  if (o.m.model == "coupled" && !is_plane_wave(o.m) && o.format == "text") {
    const CoupledCriteria cc = coupled_stability_criteria(fam.center());
    std::cout << "coupled region: " << cc.region << ", vk_integral = " << cc.vk_integral << ", det = " << cc.det
              << ", trace = " << cc.trace << ", stable by determinant/trace: " << (cc.det_trace_stable ? "yes" : "no")
              << ", by the d = 1 VK sign test: " << (cc.vk_sign_stable ? "yes" : "no") << "\n";
  }
  if (c.certified()) return kExitOk;
  return c.failed() ? kExitFailed : kExitIndeterminate;
}

int cmd_planewave(const Opts& o) {
  if (o.nmax < 0) throw InvalidArgument("nmax must be nonnegative");
  check_positive(o.length, "length");
  const PlaneWave pw{coupled_of(o.m), o.m.zeta1, o.m.zeta2, o.length};
  const ModeTable t = mode_table(pw, o.nmax);
  if (o.format == "json") {
    emit(o, mode_table_json(t));
  } else {
    emit(o, mode_table_csv(t));
  }
  std::cerr << "verdict: " << t.linear_stability << " (coercive: " << (t.coercive ? "yes" : "no")
            << ", margin " << t.margin << ")\n";
  return kExitOk;
}

int cmd_evolve(const Opts& o) {
  check_positive(o.eps, "eps");
  check_positive(o.dt, "dt");
  check_positive(o.tend, "tend");
  check_positive(o.sample_every, "sample-every");
  const Profile prof = o.from.empty() ? family_of(o.m).center() : profile_from_json(read_text_file(o.from));
  ExperimentOptions eo;
  eo.eps = o.eps;
  eo.dt = o.dt;
  eo.t_end = o.tend;
  eo.sample_every = o.sample_every;
  eo.kind = perturbation_from_string(o.perturbation);
  eo.mode = o.mode;
  eo.seed = o.seed;
  const Experiment ex = stability_experiment(prof, eo);
  if (!o.series.empty()) write_text_file(o.series, series_csv(ex.series));
  if (!o.out.empty()) {
    // trajectory of the perturbed run at the sampling cadence
    const int stride = std::max(1, static_cast<int>(std::lround(o.sample_every / o.dt)));
    Field u0 = prof.field + make_perturbation(prof, eo);
    write_text_file(o.out, trajectory_csv(evolve(u0, prof.model, o.dt, o.tend, stride)));
  }
  std::cout.precision(10);
  std::cout << "max_distance: " << ex.max_distance << "\n";
  std::cout << "growth_rate: ";
  if (ex.growth_rate) std::cout << *ex.growth_rate << "\n";
  else std::cout << "none\n";
  std::cout << "energy_drift: " << ex.energy_drift << "\n";
  std::cout << "verdict: " << ex.verdict << (ex.empirical_only ? " (empirical only)" : "") << "\n";
  return kExitOk;
}

int cmd_so3(const Opts& o) {
  check_positive(o.eps, "eps");
  check_positive(o.dt, "dt");
  check_positive(o.tend, "tend");
  const SO3State s = circular_orbit(o.rho, o.omega_pot, o.so3_alpha);
  const Hessian6 h = hessian6(s);
  const Certificate c = certify_so3(s);
  const SO3Run run = integrate_so3(s, o.eps, o.dt, o.tend, o.seed, o.order);
  if (!o.out.empty()) write_text_file(o.out, certificate_json(c));
  std::ostringstream os;
  os.precision(10);
  os << "circular orbit: rho = " << o.rho << ", |xi| = " << s.xi.norm() << ", W = "
     << w_so3_value(s.xi, o.omega_pot, o.so3_alpha) << "\n";
  os << "hessian eigenvalues: " << vec_str(h.eigenvalues) << "\n";
  os << "n(D^2L): " << h.n_neg << "\ndim_ker: " << h.dim_ker << "\n";
  os << "D^2W eigenvalues: " << vec_str(c.h1.d2w_eigenvalues) << "\n";
  os << "p(D^2W): " << c.h1.signature.p << "\np(D^2W~): " << c.gss.p_w_tilde << "\n";
  os << "verdict: " << c.verdict << "\n";
  os << "run: eps = " << o.eps << ", t = " << o.tend << ", max_distance = " << run.max_distance
     << ", energy_drift = " << run.energy_drift << ", momentum_drift = " << run.momentum_drift << "\n";
  if (o.format == "json") std::cout << certificate_json(c) << "\n";
  else std::cout << os.str();
  return c.certified() ? kExitOk : (c.failed() ? kExitFailed : kExitIndeterminate);
}

// ---------------------------------------------------------------- config

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string option_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Flat key/value pairs from an INI file ([section] headers only group keys)
// or a JSON object (one level of nesting allowed).
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<std::pair<std::string, std::string>> kv;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("config '" + path + "': " + e.what());
    }
    auto scalar = [&](const std::string& k, const nlohmann::json& v) {
      if (v.is_string()) kv.emplace_back(k, v.get<std::string>());
      else if (v.is_boolean()) kv.emplace_back(k, v.get<bool>() ? "true" : "false");
      else if (v.is_number()) kv.emplace_back(k, v.dump());
      else throw InvalidArgument("config '" + path + "': key '" + k + "' must be a scalar");
    };
    for (const auto& [k, v] : j.items()) {
      if (v.is_object())
        for (const auto& [k2, v2] : v.items()) scalar(k2, v2);
      else scalar(k, v);
    }
    return kv;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config '" + path + "' line " + std::to_string(lineno) + ": expected key = value");
    std::string v = trim(line.substr(eq + 1));
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    kv.emplace_back(trim(line.substr(0, eq)), v);
  }
  return kv;
}

// Inserts config entries right after the subcommand token so that explicit
// command-line options, parsed later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::size_t sub_pos = args.size();
  CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if ((sub = app.get_subcommand_no_throw(args[i]))) {
      sub_pos = i;
      break;
    }
  }
  if (!sub) return args;
  std::string path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> extra;
  for (const auto& [k, v] : read_config(path)) {
    const std::string name = option_name(k);
    if (name == "config" || !sub->get_option_no_throw("--" + name))
      throw InvalidArgument("config '" + path + "': unknown key '" + k + "' for '" + sub->get_name() + "'");
    extra.push_back("--" + name + "=" + v);
  }
  std::vector<std::string> out(args.begin(), args.begin() + sub_pos + 1);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + sub_pos + 1, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vkstab: relative equilibria of symmetric Hamiltonian systems and their orbital stability"};
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.footer(
      "Config files: every option of a subcommand is also a config key (without dashes; '_' and '-' are "
      "equivalent). Unknown keys are rejected.\nEnvironment: VKSTAB_THREADS caps internal parallelism.\n"
      "Exit codes: 0 ok/certified, 2 input or solver error, 3 certification failed, 4 indeterminate.");

  Opts o;
  auto* profile = app.add_subcommand("profile", "solve a relative equilibrium and write it as JSON");
  add_model_options(profile, o.m);
  add_common(profile, o);

  auto* spec = app.add_subcommand("spectrum", "spectrum of the Lyapunov Hessian");
  add_model_options(spec, o.m);
  add_common(spec, o);
  add_spectral_options(spec, o);
  spec->add_option("--from", o.from, "profile JSON written by 'profile'");
  spec->add_option("--residual-tol", o.residual_tol, "max stationarity residual accepted by assembly")
      ->capture_default_str();

  auto* slope = app.add_subcommand("slope", "slope matrix D^2W and its signature");
  add_model_options(slope, o.m);
  add_common(slope, o);
  slope->add_option("--fd-step", o.fd_step, "finite-difference step in xi (default: family step)");

  auto* cert = app.add_subcommand("certify", "check the four stability hypotheses and emit a certificate");
  add_model_options(cert, o.m);
  add_common(cert, o);
  add_spectral_options(cert, o);
  cert->add_option("--angle-tol", o.angle_tol, "max principal angle between kernel and orbit tangent")
      ->capture_default_str();
  cert->add_option("--refine-tol", o.refine_tol, "max relative gap change under N -> 2N")->capture_default_str();
  cert->add_flag("--no-refine", o.no_refine, "skip the grid refinement check");
  cert->add_option("--fd-step", o.fd_step, "finite-difference step in xi (default: family step)");

  auto* pw = app.add_subcommand("planewave", "per-mode Hessian and linearization table for torus plane waves");
  add_model_options(pw, o.m);
  add_common(pw, o);
  pw->add_option("--nmax", o.nmax, "largest Fourier mode")->capture_default_str();
  pw->add_option("--length", o.length, "torus length L")->capture_default_str();

  auto* ev = app.add_subcommand("evolve", "perturb a profile, evolve it and track the orbit distance");
  add_model_options(ev, o.m);
  add_common(ev, o);
  ev->add_option("--from", o.from, "profile JSON written by 'profile'");
  ev->add_option("--eps", o.eps, "perturbation size in H^1")->capture_default_str();
  ev->add_option("--dt", o.dt, "time step")->capture_default_str();
  ev->add_option("--tend", o.tend, "final time")->capture_default_str();
  ev->add_option("--sample-every", o.sample_every, "orbit distance sampling interval")->capture_default_str();
  ev->add_option("--perturbation", o.perturbation, "random | mode | kernel_orthogonal")
      ->check(CLI::IsMember({"random", "mode", "single_mode", "kernel_orthogonal"}))
      ->capture_default_str();
  ev->add_option("--mode", o.mode, "Fourier mode for --perturbation mode")->capture_default_str();
  ev->add_option("--seed", o.seed, "perturbation seed")->capture_default_str();
  ev->add_option("--series", o.series, "CSV file for the orbit distance series");

  auto* so3 = app.add_subcommand("so3", "SO(3) central-force example");
  add_common(so3, o);
  so3->add_option("--rho", o.rho, "orbit radius")->capture_default_str();
  so3->add_option("--omega-pot", o.omega_pot, "potential stiffness, V = omega_pot r^2 / 2")->capture_default_str();
  so3->add_option("--alpha", o.so3_alpha, "coefficient of -alpha |q x p|^2")->capture_default_str();
  so3->add_option("--eps", o.eps, "perturbation size")->capture_default_str();
  so3->add_option("--dt", o.dt, "time step")->capture_default_str();
  so3->add_option("--tend", o.tend, "final time")->default_val(100.0);
  so3->add_option("--seed", o.seed, "perturbation seed")->capture_default_str();
  so3->add_option("--order", o.order, "integrator order, 2 or 4")->check(CLI::IsMember({2, 4}))->capture_default_str();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args, app);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (o.m.n < 0 || o.m.extent < 0.0) throw InvalidArgument("grid size and extent must be positive");
    if (*profile) return cmd_profile(o);
    if (*spec) return cmd_spectrum(o);
    if (*slope) return cmd_slope(o);
    if (*cert) return cmd_certify(o);
    if (*pw) return cmd_planewave(o);
    if (*ev) return cmd_evolve(o);
    if (*so3) return cmd_so3(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
