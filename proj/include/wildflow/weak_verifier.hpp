#pragma once

// Quadrature verification of the construction's claims: the weak-form
// identities, divergence/curl residuals, pointwise constraint statistics,
// weak traces and spectral diagnostics.

#include <complex>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "wildflow/subsolution.hpp"

namespace wildflow::weak_verifier {

using lambda_geometry::StateU;
using wild_constructor::Subsolution;

struct GridTooCoarse : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotIrrotational : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Uniform periodic space grid, uniform time slices on [t_lo, t_hi].
struct FieldGrid {
  int n = 0;       // spatial resolution per axis
  int m = 0;       // time intervals (m+1 slices)
  double t_lo = 0.0, t_hi = 1.0;
  double horizon = 1.0;
  std::vector<double> data;  // slice-major, row-major, 5 components per node
  std::string provenance;

  double& at(int slice, int i, int j, int c) {
    return data[(((size_t(slice) * n + i) * n) + j) * 5 + c];
  }
  double at(int slice, int i, int j, int c) const {
    return data[(((size_t(slice) * n + i) * n) + j) * 5 + c];
  }
  StateU state(int slice, int i, int j) const {
    return StateU{at(slice, i, j, 0), Vec2{at(slice, i, j, 1), at(slice, i, j, 2)},
                  Vec2{at(slice, i, j, 3), at(slice, i, j, 4)}};
  }
  double time_of(int slice) const { return t_lo + (t_hi - t_lo) * slice / m; }

  void write(std::ostream& os) const;
  static FieldGrid read(std::istream& is);
};

FieldGrid render(const Subsolution& sub, int n, int m, double t_pad = 0.1, int node_limit = -1);

// ---------------------------------------------------------------------------
// Smooth space-time test functions with closed-form derivatives: a Fourier
// mode in x times a C^2 bump in t that vanishes at t = T but not at t = 0.
struct TestFunction {
  int kx = 0, ky = 0;
  bool use_sin = false;
  double horizon = 1.0;

  double space(const Vec2& x) const;
  Vec2 space_grad(const Vec2& x) const;
  double bump(double t) const;    // 1 at t <= 0, 0 at t >= T, C^2 monotone
  double bump_dt(double t) const;

  double value(const Vec3& p) const { return space(Vec2{p.x1, p.x2}) * bump(p.t); }
  double dt(const Vec3& p) const { return space(Vec2{p.x1, p.x2}) * bump_dt(p.t); }
  Vec2 grad_x(const Vec3& p) const { return space_grad(Vec2{p.x1, p.x2}) * bump(p.t); }
};

struct TestFamily {
  std::vector<TestFunction> members;
  static TestFamily standard(double horizon, int size = 5);
  // Sup bounds of first and second space-time derivatives over the family.
  double deriv1_bound() const;
  double deriv2_bound() const;
};

// ---------------------------------------------------------------------------
enum class Identity { mass_q, incompressibility, curl_form };

struct ResidualEntry {
  int test_index = 0;
  double value = 0.0;
  double self_estimate = 0.0;  // quadrature Richardson estimate (grid path)
};

struct ResidualTable {
  Identity identity{};
  std::vector<ResidualEntry> entries;
  double max_abs() const;
};

// Forest-backed residuals: per-patch phase-slab Fubini quadrature, exact with
// respect to the saw-tooth oscillation; `n` controls the smooth-factor
// resolution. The structural conservation law makes the true values zero.
std::vector<ResidualTable> weak_residuals(const Subsolution& sub, const TestFamily& tests, int n,
                                          int node_limit = -1);

// Grid-backed residuals: trapezoid in space, composite Simpson in time, with
// a Richardson self-estimate per entry. Throws GridTooCoarse when the
// self-estimate exceeds `report_tol` (pass 0 to disable the guard).
std::vector<ResidualTable> weak_residuals_grid(const FieldGrid& grid, const TestFamily& tests,
                                               double report_tol = 0.0);

// Mass identity with rho*v in place of q, grid-quadrature only (the product
// is not structurally conserved; the difference is bounded by the constraint
// defect).
ResidualTable mass_residual_rhov_grid(const FieldGrid& grid, const TestFamily& tests);

// Slab-exact pairing of one field component of a patch against a smooth test
// function; component indexes (rho, v1, v2, q1, q2).
double patch_component_pairing(const wave_potential::WavePatch& patch, const TestFunction& test,
                               int component, int n);

// ---------------------------------------------------------------------------
struct ConstraintStats {
  double defect_l1 = 0.0;   // |q - rho v|
  double defect_l2 = 0.0;
  double defect_sup = 0.0;
  double dist_l1 = 0.0;     // dist_K
  double dist_sup = 0.0;
  double rho_plus_frac = 0.0;   // |rho - 1| <= eta
  double rho_minus_frac = 0.0;  // |rho + 1| <= eta
  double eta = 0.1;
};

ConstraintStats constraint_stats_grid(const FieldGrid& grid, double eta = 0.1);
ConstraintStats constraint_stats(const Subsolution& sub, double eta = 0.1, int node_limit = -1);

// ---------------------------------------------------------------------------
struct TraceCurve {
  std::vector<double> times;
  std::vector<double> rho;  // <rho(.,t), phi>
  std::vector<double> v1, v2;
  std::vector<double> q_grad;  // <q(.,t), grad phi>
};

TraceCurve weak_trace(const Subsolution& sub, const TestFunction& test,
                      const std::vector<double>& times, int n, int node_limit = -1);

// Spectral H^s norm of rho per slice. Convention:
//   |rho|_{H^s}^2 = |hat rho(0)|^2 + 2 sum_{k != 0} (1+|k|^2)^s |hat rho(k)|^2
// so a unit-amplitude cosine mode of wavenumber k has norm (1+|k|^2)^{s/2}.
std::vector<double> sobolev_diagnostic(const FieldGrid& grid, double s,
                                       const std::vector<int>& slices);

// Least-squares spectral pressure: grad p = -(v + (0, rho)) on one slice.
struct PressureResult {
  std::vector<double> p;  // n x n, zero mean
  double fit_residual = 0.0;
  double mean_defect = 0.0;
};
PressureResult pressure_reconstruct(const FieldGrid& grid, int slice, double tol = 1e-6);

// ---------------------------------------------------------------------------
struct VerificationReport {
  std::map<std::string, double> values;
  std::map<std::string, bool> flags;
  bool pass() const;
  void emit(std::ostream& os) const;
};

// End-to-end verification of a subsolution at the given grid resolution.
VerificationReport verify(const Subsolution& sub, const TestFamily& tests, int n, int m,
                          const std::map<std::string, double>& tolerances = {},
                          int node_limit = -1);

// ---------------------------------------------------------------------------
// Radix-2 complex FFT, forward (sign -1) or inverse (sign +1, unnormalized).
void fft_inplace(std::vector<std::complex<double>>& a, int sign);
// 2-D FFT of an n x n real field; returns n x n complex coefficients
// normalized so that coefficients are Fourier-series amplitudes.
std::vector<std::complex<double>> fft2(const std::vector<double>& field, int n);

}  // namespace wildflow::weak_verifier
