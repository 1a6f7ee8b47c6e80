#include "vkstab/certify.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "vkstab/parallel.hpp"

namespace vkstab {

const char* to_string(CheckState s) {
  switch (s) {
    case CheckState::pass: return "pass";
    case CheckState::fail: return "fail";
    case CheckState::indeterminate: return "indeterminate";
  }
  return "?";
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void fill_h1(H1Check& h1, const SlopeReport& rep, double margin) {
  h1.signature = rep.signature;
  Eigen::SelfAdjointEigenSolver<Mat> es(rep.d2w, Eigen::EigenvaluesOnly);
  h1.d2w_eigenvalues = es.eigenvalues();
  h1.z_tol = rep.z_tol;
  h1.condition = rep.condition;
  h1.asymmetry = rep.asymmetry;
  h1.method = rep.method;
  const double smallest = h1.d2w_eigenvalues.cwiseAbs().minCoeff();
  if (rep.signature.z > 0) {
    h1.state = CheckState::fail;
    h1.note = "D^2W is degenerate";
  } else if (smallest <= margin * rep.z_tol) {
    h1.state = CheckState::indeterminate;
    h1.note = "smallest |eigenvalue| of D^2W is within the margin of z_tol";
  } else {
    h1.state = CheckState::pass;
  }
}

void fill_h3_base(H3Check& h3, const SpectralReport& rep, double margin) {
  h3.gap = rep.gap_pos;
  h3.ker_tol = rep.ker_tol;
  if (!(rep.gap_pos > rep.ker_tol) || !std::isfinite(rep.gap_pos)) {
    h3.state = CheckState::fail;
    h3.note = "no positive spectrum above ker_tol";
  } else if (rep.gap_pos <= margin * rep.ker_tol) {
    h3.state = CheckState::indeterminate;
    h3.note = "positive gap is within the margin of ker_tol";
  } else {
    h3.state = CheckState::pass;
  }
}

void fill_h4(Certificate& c, int near_threshold) {
  H4Check& h4 = c.h4;
  h4.p_d2w = c.h1.signature.p;
  const bool shaky = c.h1.state == CheckState::indeterminate || near_threshold > 0;
  if (c.h1.state == CheckState::fail) {
    h4.state = CheckState::indeterminate;
    h4.note = "p(D^2W) is undefined when D^2W is degenerate";
  } else if (h4.p_d2w == h4.n_hessian) {
    h4.state = shaky ? CheckState::indeterminate : CheckState::pass;
    if (shaky) h4.note = "counts agree but an eigenvalue is within the margin of its threshold";
  } else {
    h4.state = shaky ? CheckState::indeterminate : CheckState::fail;
    h4.note = "p(D^2W) = " + std::to_string(h4.p_d2w) + " but n(D^2L) = " + std::to_string(h4.n_hessian);
  }
}

void fill_gss(Certificate& c, const Mat& d2w, const Mat& basis) {
  const Mat B = basis.size() == 0 ? Mat(Mat::Identity(d2w.rows(), d2w.cols())) : basis;
  const RestrictedSlope r = d2w_tilde(d2w, B);
  c.gss.p_w_tilde = r.signature.p;
  c.gss.applies = r.signature.p == c.h4.n_hessian;
  c.gss.chain_holds = r.signature.p <= c.h1.signature.p && c.h1.signature.p <= c.h4.n_hessian;
}

}  // namespace

std::string verdict_of(const Certificate& c) {
  const Check* checks[] = {&c.h1, &c.h2, &c.h3, &c.h4};
  const char* names[] = {"h1", "h2", "h3", "h4"};
  for (int i = 0; i < 4; ++i)
    if (checks[i]->state == CheckState::fail) return std::string("failed(") + names[i] + ")";
  for (int i = 0; i < 4; ++i)
    if (checks[i]->state == CheckState::indeterminate) return std::string("indeterminate(") + names[i] + ")";
  return "certified_coercive";
}

Certificate certify(const Profile& prof, const Family& fam, const CertifyOptions& opt) {
  Certificate c;
  c.model = model_name(prof.model);
  c.xi = prof.xi;

  std::optional<SlopeReport> slope;
  std::optional<HessOp> op;
  std::optional<SpectralReport> rep;
  std::string slope_error, spectrum_error;
  parallel_for(2, [&](int task) {
    if (task == 0) {
      try {
        slope = d2w_fd(fam, prof.xi, opt.fd_step);
      } catch (const std::exception& e) {
        slope_error = e.what();
      }
    } else {
      try {
        op = assemble(prof);
        rep = spectrum(*op, opt.spectrum);
      } catch (const std::exception& e) {
        spectrum_error = e.what();
      }
    }
  });

  c.h1.provenance = {{"module", "slope"}, {"method", "finite_difference"}, {"z_tol", "1e-6 * ||D^2W||_2"}};
  if (slope) {
    fill_h1(c.h1, *slope, opt.margin);
    try {
      const SlopeReport closed = d2w_closed(prof);
      c.h1.closed_form_discrepancy = (closed.d2w - slope->d2w).cwiseAbs().maxCoeff();
    } catch (const std::exception&) {
    }
    c.h1.provenance["fd_step"] = num(slope->fd_step);
  } else {
    c.h1.state = CheckState::indeterminate;
    c.h1.note = slope_error;
  }

  c.h2.tol = opt.kernel_tol;
  c.h2.provenance = {{"module", "hessian"}, {"ker_tol", "1e-6 * spectral radius"}, {"angle_tol", num(opt.kernel_tol)}};
  c.h3.provenance = {{"module", "hessian"},
                     {"surrogate", "gap stability under N -> 2N (continuum gap is not directly checkable)"},
                     {"refine_tol", num(opt.refine_tol)}};
  c.h4.provenance = {{"module", "slope+hessian"}};
  if (rep) {
    for (int i = 0; i < rep->eigenvalues.size(); ++i) c.eigenvalues.push_back(rep->eigenvalues[i]);
    const KernelMatch km = kernel_match(*rep, *op, opt.kernel_tol);
    c.h2.dim_ker = km.dim_ker;
    c.h2.orbit_dim = km.orbit_dim;
    c.h2.max_angle = km.angles.size() ? km.angles.maxCoeff() : 0.0;
    if (km.matches && rep->near_threshold == 0) {
      c.h2.state = CheckState::pass;
    } else if (rep->near_threshold > 0 ||
               (km.dim_ker == km.orbit_dim && c.h2.max_angle <= opt.margin * opt.kernel_tol)) {
      c.h2.state = CheckState::indeterminate;
      c.h2.note = "an eigenvalue or a principal angle is within the margin of its tolerance";
    } else {
      c.h2.state = CheckState::fail;
      c.h2.note = "kernel dimension " + std::to_string(km.dim_ker) + " vs orbit dimension " +
                  std::to_string(km.orbit_dim);
    }
    c.h2.provenance["ker_tol"] = num(rep->ker_tol);

    fill_h3_base(c.h3, *rep, opt.margin);
    if (opt.refine && c.h3.state == CheckState::pass) {
      try {
        const Grid& g = prof.grid();
        const Family fine = fam.on_grid(Grid(g.kind(), g.extent(), 2 * g.size()));
        SpectrumOptions so = opt.spectrum;
        so.vectors = false;
        const SpectralReport r2 = spectrum(assemble(fine.center()), so);
        c.h3.refined_gap = r2.gap_pos;
        c.h3.refinement_change = std::abs(r2.gap_pos - rep->gap_pos) / rep->gap_pos;
        if (!(*c.h3.refinement_change <= opt.refine_tol)) {
          c.h3.state = CheckState::fail;
          c.h3.note = "positive gap is not stable under grid refinement";
        }
      } catch (const std::exception& e) {
        c.h3.state = CheckState::indeterminate;
        c.h3.note = std::string("refinement failed: ") + e.what();
      }
    }
    c.h4.n_hessian = rep->n_neg;
    fill_h4(c, rep->near_threshold);
  } else {
    for (Check* ch : {static_cast<Check*>(&c.h2), static_cast<Check*>(&c.h3), static_cast<Check*>(&c.h4)}) {
      ch->state = CheckState::indeterminate;
      ch->note = spectrum_error;
    }
  }
  if (slope && rep) fill_gss(c, slope->d2w, opt.subalgebra);
  c.verdict = verdict_of(c);
  return c;
}

Certificate certify(const Family& fam, const CertifyOptions& opt) { return certify(fam.center(), fam, opt); }

Certificate certify_so3(const SO3State& s, double ker_tol) {
  Certificate c;
  c.model = "so3";
  c.xi = Vec(3);
  c.xi << s.xi.x(), s.xi.y(), s.xi.z();
  const double xn = s.xi.norm();
  const WSo3 w = w_so3(xn, s.omega_pot, s.alpha, s.xi / xn);
  SlopeReport sr;
  sr.d2w = w.d2w;
  sr.signature = w.signature;
  sr.method = "closed_form";
  sr.z_tol = 1e-6 * w.eigenvalues.cwiseAbs().maxCoeff();
  sr.condition = w.eigenvalues.cwiseAbs().maxCoeff() / w.eigenvalues.cwiseAbs().minCoeff();
  fill_h1(c.h1, sr, 3.0);
  c.h1.closed_form_discrepancy = (w.fd_d2w - w.d2w).cwiseAbs().maxCoeff();
  c.h1.provenance = {{"module", "so3"}, {"method", "closed_form"}, {"cross_check", "finite differences of W"}};

  const Hessian6 h = hessian6(s, ker_tol);
  for (int i = 0; i < h.eigenvalues.size(); ++i) c.eigenvalues.push_back(h.eigenvalues[i]);
  c.h2.dim_ker = h.dim_ker;
  c.h2.orbit_dim = static_cast<int>(h.tangents.cols());
  c.h2.max_angle = h.kernel_angles.size() ? h.kernel_angles.maxCoeff() : 0.0;
  c.h2.tol = 1e-6;
  c.h2.state = h.kernel_matches_orbit ? CheckState::pass : CheckState::fail;
  c.h2.provenance = {{"module", "so3"}, {"ker_tol", num(ker_tol)}, {"orbit", "computed from X_eta, eta in span{mu}"}};

  c.h3.ker_tol = ker_tol;
  c.h3.gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < h.eigenvalues.size(); ++i)
    if (h.eigenvalues[i] > ker_tol) c.h3.gap = std::min(c.h3.gap, h.eigenvalues[i]);
  c.h3.state = c.h3.gap > 3.0 * ker_tol && std::isfinite(c.h3.gap) ? CheckState::pass : CheckState::fail;
  c.h3.provenance = {{"module", "so3"}, {"surrogate", "finite-dimensional: the gap is exact"}};

  c.h4.n_hessian = h.n_neg;
  fill_h4(c, 0);
  c.h4.provenance = {{"module", "so3"}};

  Mat basis = (s.xi / xn);
  fill_gss(c, w.d2w, basis);
  c.verdict = verdict_of(c);
  return c;
}

CoupledCriteria coupled_stability_criteria(const Profile& prof) {
  const auto* cp = std::get_if<Coupled>(&prof.model);
  if (!cp) throw InvalidArgument("coupled_stability_criteria needs a coupled profile");
  coupled_zeta_squared(*cp);  // admissibility
  CoupledCriteria r;
  if (cp->delta > std::max(cp->alpha, cp->gamma)) r.region = 1;
  else if (cp->delta < std::min(cp->alpha, cp->gamma)) r.region = 2;
  else throw InvalidArgument("inadmissible coupling: delta must lie outside [min(alpha,gamma), max(alpha,gamma)]");
  r.vk_integral = vk_integral(prof).value;
  r.dF = coupled_dF_domega(prof);
  r.det = r.dF.determinant();
  r.trace = r.dF.trace();
  if (r.region == 1) {
    r.det_trace_stable = r.det < 0.0;
    r.vk_sign_stable = true;
    r.expected_n_hessian = 1;
  } else {
    r.det_trace_stable = r.det > 0.0 && r.trace < 0.0;
    r.vk_sign_stable = r.vk_integral < 0.0;
    r.expected_n_hessian = 2;
  }
  r.d2w_signature = d2w_closed(prof).signature;
  return r;
}

CoupledCriteria coupled_stability_criteria(const Coupled& cp, double omega_star, const Grid& g) {
  coupled_zeta_squared(cp);
  return coupled_stability_criteria(coupled_family(cp, omega_star, g).center());
}

namespace {

nlohmann::json check_json(const Check& ch) {
  nlohmann::json j;
  j["state"] = to_string(ch.state);
  j["pass"] = ch.ok();
  j["note"] = ch.note;
  j["provenance"] = ch.provenance;
  return j;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string certificate_json(const Certificate& c) {
  nlohmann::json j;
  j["schema"] = 1;
  j["model"] = c.model;
  j["xi"] = to_std(c.xi);
  j["verdict"] = c.verdict;
  j["eigenvalues"] = c.eigenvalues;

  nlohmann::json h1 = check_json(c.h1);
  h1["signature"] = {{"p", c.h1.signature.p}, {"z", c.h1.signature.z}, {"n", c.h1.signature.n}};
  h1["d2w_eigenvalues"] = to_std(c.h1.d2w_eigenvalues);
  h1["z_tol"] = c.h1.z_tol;
  h1["condition"] = std::isfinite(c.h1.condition) ? nlohmann::json(c.h1.condition) : nlohmann::json();
  h1["asymmetry"] = c.h1.asymmetry;
  h1["method"] = c.h1.method;
  h1["closed_form_discrepancy"] =
      c.h1.closed_form_discrepancy ? nlohmann::json(*c.h1.closed_form_discrepancy) : nlohmann::json();

  nlohmann::json h2 = check_json(c.h2);
  h2["dim_ker"] = c.h2.dim_ker;
  h2["orbit_dim"] = c.h2.orbit_dim;
  h2["max_angle"] = c.h2.max_angle;
  h2["angle_tol"] = c.h2.tol;

  nlohmann::json h3 = check_json(c.h3);
  h3["gap"] = std::isfinite(c.h3.gap) ? nlohmann::json(c.h3.gap) : nlohmann::json();
  h3["ker_tol"] = c.h3.ker_tol;
  h3["refined_gap"] = c.h3.refined_gap ? nlohmann::json(*c.h3.refined_gap) : nlohmann::json();
  h3["refinement_change"] = c.h3.refinement_change ? nlohmann::json(*c.h3.refinement_change) : nlohmann::json();

  nlohmann::json h4 = check_json(c.h4);
  h4["p_d2w"] = c.h4.p_d2w;
  h4["n_hessian"] = c.h4.n_hessian;

  j["checks"] = {{"h1_nondegenerate_W", h1}, {"h2_kernel_equals_orbit", h2}, {"h3_positive_gap", h3},
                 {"h4_index_match", h4}};
  j["gss"] = {{"p_w_tilde", c.gss.p_w_tilde}, {"applies", c.gss.applies}, {"chain_holds", c.gss.chain_holds}};
  return j.dump(2);
}

std::string certificate_text(const Certificate& c) {
  std::ostringstream os;
  os << "model: " << c.model << "\nxi:";
  for (int i = 0; i < c.xi.size(); ++i) os << ' ' << c.xi[i];
  os << "\nh1 nondegenerate D^2W: " << to_string(c.h1.state) << "  signature (p,z,n) = (" << c.h1.signature.p << ','
     << c.h1.signature.z << ',' << c.h1.signature.n << ")\n";
  os << "h2 kernel = orbit tangent: " << to_string(c.h2.state) << "  dim_ker = " << c.h2.dim_ker
     << ", orbit dim = " << c.h2.orbit_dim << ", max angle = " << c.h2.max_angle << '\n';
  os << "h3 positive gap: " << to_string(c.h3.state) << "  gap = " << c.h3.gap;
  if (c.h3.refinement_change) os << ", change under refinement = " << *c.h3.refinement_change;
  os << "\nh4 index match: " << to_string(c.h4.state) << "  p(D^2W) = " << c.h4.p_d2w
     << ", n(D^2L) = " << c.h4.n_hessian << '\n';
  os << "gss: p(D^2W~) = " << c.gss.p_w_tilde << ", applies = " << (c.gss.applies ? "yes" : "no") << '\n';
  for (const Check* ch : {static_cast<const Check*>(&c.h1), static_cast<const Check*>(&c.h2),
                          static_cast<const Check*>(&c.h3), static_cast<const Check*>(&c.h4)})
    if (!ch->note.empty()) os << "note: " << ch->note << '\n';
  os << "verdict: " << c.verdict << '\n';
  return os.str();
}

}  // namespace vkstab
