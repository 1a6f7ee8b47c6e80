#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "vkstab/core.hpp"

namespace vkstab {

// A relative-equilibrium candidate. xi holds one frequency multiplier per
// component and, on line grids, the momentum multiplier (the boost velocity c).
struct Profile {
  ModelParams model;
  Field field;
  Vec xi;
  double residual = 0.0;  // sup norm of grad L_xi at construction

  const Grid& grid() const { return field.grid(); }
  double velocity() const;
  // xi_c + c^2/4: the frequencies of the unboosted profile
  Vec omega() const;
};

// Newton options shared by the solvers below.
struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 40;
};

Profile soliton_explicit(double omega, const Grid& g);
// [(p+1)|w|/2]^{1/(p-1)} sech^{2/(p-1)}((p-1) sqrt|w| x / 2), the d=1 solution
Field soliton_closed_form(double omega, double p, const Grid& g);
// Closed-form mass int u^2 of the d=1 soliton.
double soliton_mass(double omega, double p);
Profile soliton_solve(double omega, double p, const Grid& g, const NewtonOptions& opt = {});

std::pair<double, double> coupled_zeta_squared(const Coupled& cp);
Profile coupled_soliton(double omega_star, const Coupled& cp, const Grid& g);

Vec plane_wave_xi(double zeta1, double zeta2, const Coupled& cp);
Profile plane_wave(double zeta1, double zeta2, const Coupled& cp, const Grid& g);

Profile boost(const Profile& prof, double c);
// Removes the boost: returns the field multiplied by exp(-i c x / 2).
Field deboost(const Profile& prof);
// Stationarity residual measured in the unboosted frame. The lab-frame
// residual of a boosted profile carries an O(|u(R)|/h) error from the phase
// jump of exp(icx/2) across the periodic seam unless cR is a multiple of 2pi.
double frame_residual(const Profile& prof);

// Newton for line models restricted to real even fields (pins phase and
// translation). omega holds one frequency per component.
Profile solve_even(const ModelParams& m, const Vec& omega, const Field& guess, const NewtonOptions& opt = {});

// Newton on the full real representation, bordered with orthogonality to the
// symmetry tangents at `anchor`.
Profile solve_bordered(const ModelParams& m, const Vec& xi, const Field& guess, const Field& anchor,
                       const NewtonOptions& opt = {});

// A re-solvable map xi -> Profile with thread-safe memoization.
class Family {
 public:
  using Solver = std::function<Profile(const Grid& g, const Vec& xi, const Profile& warm)>;

  Family(Profile center, Solver solver, double fd_step = 0.0);

  const Profile& center() const { return center_; }
  const Vec& center_xi() const { return center_.xi; }
  double fd_step() const { return h_; }
  const Grid& grid() const { return center_.grid(); }

  Profile at(const Vec& xi) const;
  // The same family re-solved on another grid (used for refinement checks).
  Family on_grid(const Grid& g) const;
  std::size_t cache_size() const;

 private:
  struct Cache {
    std::mutex mu;
    std::map<std::vector<double>, Profile> entries;
  };
  Profile center_;
  Solver solver_;
  double h_;
  std::shared_ptr<Cache> cache_;
};

Family soliton_family(double p, double omega, const Grid& g, double c = 0.0);
Family coupled_family(const Coupled& cp, double omega_star, const Grid& g);
Family plane_wave_family(const Coupled& cp, double zeta1, double zeta2, const Grid& g);

// Projected-Newton continuation from prof.xi to target_xi in `steps` equal
// increments, halving the step on failure up to 6 times.
Family continue_family(const Profile& prof, const Vec& target_xi, int steps, const NewtonOptions& opt = {});

}  // namespace vkstab
