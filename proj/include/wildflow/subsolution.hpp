#pragma once

// Subsolution representation: a constant boundary state plus an ordered
// forest of localized wave patches over nested balls. Plateau values, their
// measures and the dist_K mass are tracked symbolically; grids enter only at
// verification time.

#include <iosfwd>
#include <string>
#include <vector>

#include "wildflow/t4_hull.hpp"
#include "wildflow/wave_potential.hpp"

namespace wildflow::wild_constructor {

using lambda_geometry::StateU;
using t4_hull::HullSpec;
using wave_potential::Ball3;
using wave_potential::WavePatch;

// Hull provenance of a plateau value; decides the next round's branch.
struct ValueCert {
  enum class Kind { in_ball, segment, corner, unknown } kind = Kind::unknown;
  StateU C{};
  StateU X{};
  double mix = 0.0;  // value = mix*C + (1-mix)*X when kind == segment
  int family = 0;
};

struct PatchNode {
  WavePatch patch;
  int parent = -1;        // -1 for root-level patches
  int parent_band = 0;    // +1 / -1: which plateau band of the parent it sits in
  int round = 0;
  StateU backdrop{};      // constant field value the patch perturbs
  ValueCert cert_plus{};  // certificate of backdrop + (1-lambda) * direction
  ValueCert cert_minus{};
  std::vector<int> children;

  StateU plus_value() const {
    return backdrop + (1.0 - patch.profile.lambda) * patch.direction;
  }
  StateU minus_value() const { return backdrop - patch.profile.lambda * patch.direction; }
};

// One constant-value leaf region of the current field: a plateau band minus
// the footprints of the children installed inside it, or the unprocessed
// remainder of the root slab.
struct LeafRegion {
  int node = -1;  // -1: root remainder
  int band = 0;
  StateU value{};
  ValueCert cert{};
  double measure = 0.0;
};

// Cutoff shells carry field values off the plateau; they are bounded, never
// enumerated pointwise.
struct AnnulusBudget {
  int node = -1;
  double measure = 0.0;
  double dist_upper = 0.0;    // sup over the shell of dist_K
  double rho_lo = 0.0, rho_hi = 0.0;
};

struct Interval {
  double lo = 0.0, hi = 0.0;
};

struct Subsolution {
  StateU base{};
  double horizon = 1.0;  // T
  HullSpec hull{};
  std::vector<PatchNode> nodes;
  std::vector<int> roots;

  // Field value at a space-time point; node_limit < 0 evaluates the full
  // forest, otherwise only nodes with index < node_limit (round snapshots).
  StateU evaluate(const Vec3& p, int node_limit = -1) const;

  double domain_measure() const { return horizon; }  // unit torus x (0,T)

  std::vector<LeafRegion> leaf_regions(int node_limit = -1) const;
  std::vector<AnnulusBudget> annulus_budgets(int node_limit = -1) const;

  // Exact-plus-budget accounting of the dist_K integral over T^2 x (0,T).
  Interval dist_integral(int node_limit = -1) const;
  // Measure fraction with |rho -+ 1| <= eta (exact leaves, budget annuli).
  Interval rho_near_fraction(double eta, int node_limit = -1) const;
  // Largest plateau |rho| over regions meeting the time slice.
  double slice_sup_abs_rho(double t, int node_limit = -1) const;

  // Copy containing only the first node_limit nodes (a round snapshot).
  Subsolution prefix(int node_limit) const;

  void serialize(std::ostream& os) const;
  static Subsolution deserialize(std::istream& is);
};

// Sup of dist_K over the value segment of a patch placed on `backdrop`,
// including the analytic off-segment deviation.
double patch_dist_upper(const StateU& backdrop, const WavePatch& patch);

}  // namespace wildflow::wild_constructor
