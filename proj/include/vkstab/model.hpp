#pragma once

// Low-level pieces of the model energies shared by the Hessian assembly and
// the time stepper.

#include "vkstab/core.hpp"

namespace vkstab {

double beta_of(const ModelParams& m);
// Wavenumber offset of component c: +k, -k for the torus model, else 0.
double shift_of(const ModelParams& m, int c);

// beta * (k^2 + 2 s k' + s^2) for component c, k' the first-derivative symbol.
Vec kinetic_symbol(const ModelParams& m, const Grid& g, int c);
Field kinetic(const Field& u, const ModelParams& m);

// Pointwise weights G_c with grad of the potential term equal to -G_c u_c.
std::vector<Vec> nonlinear_weights(const Field& u, const ModelParams& m);
double potential_energy(const Field& u, const ModelParams& m);

// 2C x 2C Hessian of the potential density at one node, ordering
// [Re u_0.., Im u_0..].
Mat local_potential_hessian(const ModelParams& m, const std::vector<cplx>& u);

// -i d/dx per component.
Field momentum_operator(const Field& u);

// L2 gradient of L_xi = H - xi.F at u. xi holds one multiplier per component
// and, on line grids, a trailing momentum multiplier.
Field lyapunov_gradient(const ModelParams& m, const Field& u, const Vec& xi);

// Matrix-free second variation of L_xi at u applied to v.
Field lyapunov_hessian_apply(const ModelParams& m, const Field& u, const Vec& xi, const Field& v);

// Dense real-representation matrix of the same operator.
Mat lyapunov_hessian_dense(const ModelParams& m, const Field& u, const Vec& xi);

// Dense N x N matrices of the spectral operators (cached per grid).
const Mat& laplacian_matrix(const Grid& g);
const Mat& derivative_matrix(const Grid& g);

// Generators of the symmetry orbit at u: i u_c in component c, and d/dx u on
// line grids.
std::vector<Field> symmetry_tangents(const ModelParams& m, const Field& u);

}  // namespace vkstab
