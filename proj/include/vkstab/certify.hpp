#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vkstab/hessian.hpp"
#include "vkstab/slope.hpp"
#include "vkstab/so3.hpp"

namespace vkstab {

enum class CheckState { pass, fail, indeterminate };
const char* to_string(CheckState s);

struct Check {
  CheckState state = CheckState::indeterminate;
  std::string note;  // failure reason or upstream error
  std::map<std::string, std::string> provenance;
  bool ok() const { return state == CheckState::pass; }
};

struct H1Check : Check {
  Signature signature;
  Vec d2w_eigenvalues;
  double z_tol = 0.0;
  double condition = 0.0;
  double asymmetry = 0.0;
  std::string method;
  // max entrywise |fd - closed form| when a closed form exists
  std::optional<double> closed_form_discrepancy;
};

struct H2Check : Check {
  int dim_ker = 0;
  int orbit_dim = 0;
  double max_angle = 0.0;
  double tol = 1e-5;
};

struct H3Check : Check {
  double gap = 0.0;
  double ker_tol = 0.0;
  std::optional<double> refined_gap;
  std::optional<double> refinement_change;  // |gap_2N - gap_N| / gap_N
};

struct H4Check : Check {
  int p_d2w = 0;
  int n_hessian = 0;
};

struct GssCheck {
  int p_w_tilde = 0;
  bool applies = false;
  bool chain_holds = false;  // p(D^2 W~) <= p(D^2 W) <= n(D^2 L)
};

struct Certificate {
  std::string model;
  Vec xi;
  H1Check h1;
  H2Check h2;
  H3Check h3;
  H4Check h4;
  GssCheck gss;
  std::string verdict;  // certified_coercive, failed(hX), indeterminate(hX)
  std::vector<double> eigenvalues;

  bool certified() const { return verdict == "certified_coercive"; }
  bool failed() const { return verdict.rfind("failed", 0) == 0; }
  bool indeterminate() const { return verdict.rfind("indeterminate", 0) == 0; }
};

struct CertifyOptions {
  SpectrumOptions spectrum;
  double kernel_tol = 1e-5;
  bool refine = true;          // re-solve on 2N and compare the gap
  double refine_tol = 0.05;
  double fd_step = 0.0;        // <= 0: family default
  // Subalgebra basis for the restricted slope; empty means the full algebra
  // (abelian groups).
  Mat subalgebra;
  // Margin factor for indeterminate verdicts.
  double margin = 3.0;
};

Certificate certify(const Profile& prof, const Family& fam, const CertifyOptions& opt = {});
Certificate certify(const Family& fam, const CertifyOptions& opt = {});
Certificate certify_so3(const SO3State& s, double ker_tol = 1e-8);

// Verdict from the four checks: the first failing check wins, then the first
// indeterminate one.
std::string verdict_of(const Certificate& c);

struct CoupledCriteria {
  int region = 0;  // 1: delta > max(alpha, gamma), 2: delta < min(alpha, gamma)
  double vk_integral = 0.0;
  Mat dF;  // [dF_i / d omega_j]
  double det = 0.0;
  double trace = 0.0;
  bool det_trace_stable = false;  // determinant/trace criteria
  bool vk_sign_stable = false;    // d = 1 sign of the VK integral
  int expected_n_hessian = 0;
  Signature d2w_signature;        // closed form
};

CoupledCriteria coupled_stability_criteria(const Profile& prof);
CoupledCriteria coupled_stability_criteria(const Coupled& cp, double omega_star, const Grid& g);

// Stable field names, sorted keys, "schema": 1.
std::string certificate_json(const Certificate& c);
std::string certificate_text(const Certificate& c);

}  // namespace vkstab
