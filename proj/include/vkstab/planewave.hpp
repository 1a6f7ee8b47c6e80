#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vkstab/core.hpp"

namespace vkstab {

// Torus plane wave (zeta1, zeta2) of the coupled model on a circle of length L.
struct PlaneWave {
  Coupled params;
  double zeta1 = 1.0;
  double zeta2 = 1.0;
  double length = 2.0 * 3.14159265358979323846;
};

// C_pm = -S +- sqrt(S^2 - 4 zeta1^2 zeta2^2 (alpha gamma - delta^2)),
// S = alpha zeta1^2 + gamma zeta2^2.
std::pair<double, double> c_plusminus(const Coupled& cp, double zeta1, double zeta2);

// {lambda^+_{+,n}, lambda^+_{-,n}, lambda^-_{+,n}, lambda^-_{-,n}}.
std::array<double, 4> hessian_mode_eigs(int n, const PlaneWave& pw);

struct Coercivity {
  bool holds = false;
  double margin = 0.0;  // beta (2 pi / L)^2 + C_- - 4 beta k^2
};
Coercivity coercivity_condition(const PlaneWave& pw);

struct LinearizationEigs {
  bool closed_form = false;
  // lambda~^2_{+,n}, lambda~^2_{-,n}; set when k = 0 or alpha zeta1^2 == gamma zeta2^2
  std::array<cplx, 2> lambda_sq{};
  // roots of the characteristic quartic P_n
  std::array<cplx, 4> roots{};
  double growth_rate = 0.0;  // max Re(lambda) over the roots
};
LinearizationEigs linearization_eigs(int n, const PlaneWave& pw);

struct ModeRow {
  int n = 0;
  std::array<double, 4> lambda{};
  std::optional<std::array<cplx, 2>> lambda_sq;
  double growth_rate = 0.0;
};

struct ModeTable {
  std::vector<ModeRow> rows;
  double c_plus = 0.0, c_minus = 0.0;
  // Hessian counts over modes 0..n_max, modes n >= 1 counted twice (+n and -n).
  int negatives = 0;
  int zeros = 0;
  int p_d2w = 0;
  bool coercive = false;
  // "stable", "unstable" or "numerical only" (general k outside the closed forms)
  std::string linear_stability;
  bool linearly_stable = false;
  double margin = 0.0;
};

ModeTable mode_table(const PlaneWave& pw, int n_max);

std::string mode_table_csv(const ModeTable& t);
std::string mode_table_json(const ModeTable& t);

}  // namespace vkstab
