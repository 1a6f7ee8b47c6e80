#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace vkstab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct UnresolvedBoundary : Error {
  using Error::Error;
};
struct SolverFailure : Error {
  using Error::Error;
};
struct DegenerateKernel : Error {
  using Error::Error;
};
struct BlowUp : Error {
  using Error::Error;
};

enum class GridKind { periodic, line };

const char* to_string(GridKind k);
GridKind grid_kind_from_string(const std::string& s);

// Uniform 1D grid. Periodic: x_j = jL/N on [0, L). Line: x_j = -R + j*2R/N,
// treated as periodic on [-R, R).
class Grid {
 public:
  Grid(GridKind kind, double extent, int n);

  GridKind kind() const { return d_->kind; }
  bool is_line() const { return d_->kind == GridKind::line; }
  double extent() const { return d_->extent; }
  int size() const { return d_->n; }
  double length() const { return d_->length; }
  double spacing() const { return d_->length / d_->n; }
  const Vec& nodes() const { return d_->nodes; }
  // FFT ordering, Nyquist stored as +N/2 * 2pi/L.
  const Vec& wavenumbers() const { return d_->k; }
  // Same as wavenumbers() with the Nyquist entry zeroed (first-derivative symbol).
  const Vec& derivative_symbol() const { return d_->k1; }

  bool operator==(const Grid& o) const;
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  struct Data {
    GridKind kind;
    double extent;
    double length;
    int n;
    Vec nodes, k, k1;
  };
  std::shared_ptr<const Data> d_;
};

Grid make_grid(GridKind kind, double extent, int n);

// One or two complex components sampled on a grid.
class Field {
 public:
  Field(const Grid& g, int components);
  Field(const Grid& g, std::vector<CVec> values);

  const Grid& grid() const { return grid_; }
  int components() const { return static_cast<int>(v_.size()); }
  int size() const { return grid_.size(); }
  int real_dim() const { return 2 * components() * size(); }

  CVec& operator[](int c) { return v_[c]; }
  const CVec& operator[](int c) const { return v_[c]; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  Field& operator*=(cplx s);

  // Real representation, ordering [Re u_0, .., Re u_{C-1}, Im u_0, .., Im u_{C-1}].
  Vec to_real() const;
  static Field from_real(const Grid& g, int components, const Vec& r);

  double sup_norm() const;
  bool finite() const;

 private:
  Grid grid_;
  std::vector<CVec> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
Field operator*(cplx s, Field a);

struct SingleNls {
  double p = 3.0;
  int d = 1;
};

// Coupled cubic NLS. On a line grid beta = 1, k = 0 are the usual choices;
// on a periodic grid this is the torus model with covariant derivatives
// (grad + ik) and (grad - ik).
struct Coupled {
  double alpha = 1.0;
  double gamma = 1.0;
  double delta = 0.0;
  double beta = 1.0;
  double k = 0.0;
};

using ModelParams = std::variant<SingleNls, Coupled>;

void validate(const ModelParams& m);
int components_of(const ModelParams& m);
std::string model_name(const ModelParams& m);
bool is_single(const ModelParams& m);
// Dimension of the symmetry algebra: one phase per component, plus
// translation on line grids.
int group_dim(const ModelParams& m, const Grid& g);

Field laplacian(const Field& f);
Field gradient(const Field& f);
double inner(const Field& f, const Field& g);
double norm(const Field& f);
double h1_inner(const Field& f, const Field& g);
double h1_norm(const Field& f);

// Translate by a (periodic shift in transform space): result(x) = f(x - a).
Field translate(const Field& f, double a);
// Spectral resampling onto a grid with the same extent and a different N.
Field resample(const Field& f, const Grid& target);

// Line-grid profiles must vanish at the ends for the periodic transform to be
// accurate. Throws UnresolvedBoundary when |u| at the first node exceeds
// rel_tol * sup|u|.
void check_boundary_decay(const Field& f, double rel_tol = 1e-8);

struct Invariants {
  double H = 0.0;
  Vec F;  // masses per component, then momentum on line grids
};

Invariants invariants_of(const Field& f, const ModelParams& m);

}  // namespace vkstab
