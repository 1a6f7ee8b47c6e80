#pragma once

#include <vector>

#include "vkstab/profiles.hpp"

namespace vkstab {

Field grad_L(const Profile& prof);

// Discretized second variation of L_xi at a profile. The dense matrix L is
// stored in the unboosted frame; the lab-frame operator is U^T L U with U the
// pointwise rotation by c x / 2, so spectra do not depend on the boost.
struct HessOp {
  Profile prof;
  Mat L;
  Vec angles;  // c x_j / 2, empty when c == 0
  std::vector<Field> tangents;

  int dimension() const { return static_cast<int>(L.rows()); }
  int components() const { return prof.field.components(); }
  const Grid& grid() const { return prof.grid(); }
  Field apply(const Field& v) const;  // matrix-free, lab frame
  Mat dense() const;                  // U^T L U
  Vec to_frame(const Vec& lab) const;
  Vec from_frame(const Vec& frame) const;
};

HessOp assemble(const Profile& prof, double residual_tol = 1e-6);

struct SpectrumOptions {
  int n_eigs = 16;
  double ker_tol = 0.0;  // <= 0: 1e-6 times the spectral radius
  int dense_limit = 2048;
  bool vectors = true;
};

struct SpectralReport {
  Vec eigenvalues;  // lowest n_eigs, ascending
  int n_neg = 0;
  int dim_ker = 0;
  double gap_pos = 0.0;
  double ker_tol = 0.0;
  double spectral_radius = 0.0;
  // eigenvalues with ker_tol < |lambda| <= 3 ker_tol
  int near_threshold = 0;
  std::vector<Field> kernel_vectors;
};

SpectralReport spectrum(const HessOp& op, const SpectrumOptions& opt = {});

// Principal angles (radians, ascending) between the column spans of A and B.
Vec principal_angles(const Mat& A, const Mat& B);

struct KernelMatch {
  bool matches = false;
  int dim_ker = 0;
  int orbit_dim = 0;
  Vec angles;
};

KernelMatch kernel_match(const SpectralReport& rep, const HessOp& op, double tol = 1e-5);
bool kernel_matches_orbit(const SpectralReport& rep, const HessOp& op, double tol = 1e-5);

// Lowest k eigenpairs of a symmetric matrix by shift-invert Lanczos.
struct EigenPairs {
  Vec values;
  Mat vectors;
};
EigenPairs lowest_eigenpairs_iterative(const Mat& A, int k);

}  // namespace vkstab
