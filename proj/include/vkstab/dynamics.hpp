#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vkstab/profiles.hpp"

namespace vkstab {

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> snapshots;
  std::vector<double> H;
  std::vector<Vec> F;
  double dt = 0.0;
  int stride = 1;
  std::string scheme = "strang";
};

// One Strang step: half nonlinear phase rotation, exact linear step in
// transform space, half nonlinear rotation. dt may be negative.
Field strang_step(const Field& u, const ModelParams& m, double dt);

// Evolves u0 for round(t_end / dt) steps, sampling every `sample_stride`
// steps (the initial and final states are always sampled). Throws BlowUp
// when the sup norm exceeds 1e6.
Trajectory evolve(const Field& u0, const ModelParams& m, double dt, double t_end, int sample_stride = 1);

// Signed-step propagation without sampling.
Field propagate(const Field& u0, const ModelParams& m, double dt, int steps);

// Group element: one phase per component and, on line grids, a translation.
// Acts by Phi_g(u)_c(x) = exp(-i theta_c) u_c(x - a).
struct GroupElement {
  Vec theta;
  double shift = 0.0;
};
Field act(const GroupElement& g, const Field& u);

struct Alignment {
  GroupElement g;
  double distance = 0.0;  // ||u - Phi_g(u_ref)||_{H^1}
  bool converged = false;
};

// Nearest point of the group orbit of ref.field to u in the H^1 norm: coarse
// search over grid translations, closed-form phases, then Newton on the
// stationarity conditions in the translation.
Alignment align_to_orbit(const Field& u, const Profile& ref);

enum class Perturbation { random, single_mode, kernel_orthogonal };
Perturbation perturbation_from_string(const std::string& s);
const char* to_string(Perturbation p);

struct ExperimentOptions {
  double eps = 1e-3;
  double dt = 1e-3;
  double t_end = 20.0;
  double sample_every = 0.1;
  Perturbation kind = Perturbation::random;
  int mode = 1;  // for single_mode
  std::uint64_t seed = 1;
};

// An H^1-normalized perturbation of size eps.
Field make_perturbation(const Profile& prof, const ExperimentOptions& opt);

struct OrbitDistanceSeries {
  std::vector<double> times;
  std::vector<double> distances;
  std::vector<GroupElement> params;
};

struct Experiment {
  OrbitDistanceSeries series;
  double max_distance = 0.0;
  std::optional<double> growth_rate;  // fitted where distance in [10 eps, 0.1]
  bool bounded = false;               // max distance <= 10 eps
  std::string verdict;                // "bounded", "growing" or "inconclusive"
  bool empirical_only = false;        // single NLS with p < 3
  double energy_drift = 0.0;          // max |H(t) - H(0)| / |H(0)|
};

Experiment stability_experiment(const Profile& prof, const ExperimentOptions& opt);

// Least-squares slope of log(distance) over samples with distance in [lo, hi].
std::optional<double> fit_growth_rate(const std::vector<double>& t, const std::vector<double>& d, double lo,
                                      double hi);

std::string trajectory_csv(const Trajectory& tr);
std::string series_csv(const OrbitDistanceSeries& s);
// Layout: uint64 N, uint64 components, float64 dt, uint64 stride, then for
// each snapshot and component N interleaved (re, im) float64 pairs, all
// little-endian.
void write_snapshots_binary(const std::string& path, const Trajectory& tr);
Trajectory read_snapshots_binary(const std::string& path, const Grid& g);

}  // namespace vkstab
