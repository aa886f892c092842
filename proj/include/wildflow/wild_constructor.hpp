#pragma once

// The iterative direct construction: perturbation rounds driving the field
// from the constant state (0,0,z) toward the constraint manifold on
// T^2 x (0,T), with exact region bookkeeping.

#include <stdexcept>
#include <vector>

#include "wildflow/subsolution.hpp"

namespace wildflow::wild_constructor {

struct InvalidConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotInHull : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ToleranceUnreachable : std::runtime_error {
  explicit ToleranceUnreachable(int round, const std::string& what)
      : std::runtime_error(what), round(round) {}
  int round;
};

struct ConstructionConfig {
  Vec2 z{0.3, -0.2};
  double delta = 0.0;  // 0: computed by admissible_delta
  double horizon = 1.0;
  double lambda_default = 1.0 / 3.0;
  int rounds = 3;
  int freq_base = 512;  // N_k = freq_base * freq_growth^k, nondecreasing
  int freq_growth = 2;
  int freq_cap = 1 << 14;
  double app_epsilon = 0.05;  // staircase mixing parameter, clamped per step
  double shrink = 0.95;
  int staircase_depth = 1;
  std::vector<double> eta;      // per-round block slack; default 0.08 * 0.8^k
  double cutoff_base = 0.005;   // cutoff width per round: cutoff_base * 0.8^k
  double cover_fraction = 0.6;  // per-round processed-measure target
  double t_margin_factor = 0.05;
  int root_lattice = 2;            // root ball family is root_lattice^2 x 2 per round
  int max_regions_per_round = 48;  // processed leaf regions per round
  int max_balls_per_region = 10;
  int slabs_per_region = 4;
  int test_family_size = 5;
  uint64_t seed = 1;

  // Derivative sups of the verification family the weak-closeness gate is
  // checked against; the standard family of this size uses Fourier modes
  // with |k|_inf <= 2 and a quintic time bump.
  double family_deriv1_bound() const {
    double kk = 2.0 * M_PI * std::sqrt(8.0);  // mode (2,2) headroom
    return std::max(kk, 1.875 / horizon) * 1.1;
  }
  double family_deriv2_bound() const {
    double kk = 2.0 * M_PI * std::sqrt(8.0);
    return std::max({kk * kk, kk * 1.875 / horizon, 5.8 / (horizon * horizon)}) * 1.1;
  }

  double eta_for_round(int k) const {
    if (!eta.empty()) return eta[std::min<size_t>(k, eta.size() - 1)];
    return 0.08 * std::pow(0.8, k);
  }
  double cutoff_for_round(int k) const { return cutoff_base * std::pow(0.8, k); }
  int freq_for_round(int k) const {
    double f = double(freq_base) * std::pow(double(freq_growth), k);
    return int(std::min(f, double(freq_cap)));
  }
  void validate() const;
};

// A constant-value region selected for perturbation: the ball to act on and
// the hull certificate of its value.
struct RegionTask {
  int parent = -1;  // forest node owning the region (-1: root slab)
  int band = 0;
  Ball3 ball{};
  StateU value{};
  ValueCert cert{};
};

struct RoundLog {
  int round = 0;
  Interval dist_before{}, dist_after{};
  double processed_measure = 0.0;
  // L1 mass of the round increment over the processed region (exact plateau
  // accounting; annuli excluded on both sides of the APP inequality).
  double increment_l1 = 0.0;
  double increment_l2sq = 0.0;
  // Fraction of the processed region where |increment| >= c1 * dist(value).
  double app_fraction = 0.0;
  double c1 = 0.0;
  Interval rho_near{};  // measure fraction with |rho| within 0.1 of +-1
  int patches_added = 0;
  int freq = 0;
  double pairing_bound = 0.0;    // FWC gate: sum of analytic pairing bounds
  double pairing_gate = 0.0;     // 2^{-k}
  double mollifier_width = 0.0;  // width meeting the 2^{-k} L1 proximity bound
  double contraction = 0.0;      // dist_after.hi / dist_before.hi
};

struct ConvergenceLog {
  std::vector<RoundLog> rounds;
  std::vector<int> node_counts;  // forest size after each round (round 0 = 0)
  void serialize(std::ostream& os) const;
};

// Constant subsolution at the anchor state (0,0,z).
Subsolution initialize(const ConstructionConfig& config);

// One analytic-perturbation step in a single ball: case split on the value's
// hull certificate (ball state -> staircase generation; segment state ->
// block along the witness, recursing into the ball case above mix 7/8).
// Returns the indices of the created nodes.
std::vector<int> app_step(Subsolution& sub, const RegionTask& task,
                          const ConstructionConfig& config, int round);

// Selects a disjoint ball family carrying at least half of the dist_K mass
// (capacity permitting) and applies app_step in each ball.
RoundLog perturbation_round(Subsolution& sub, const ConstructionConfig& config, int round);

struct ConstructionResult {
  Subsolution final;
  ConvergenceLog log;
  // Snapshot of round r: evaluate/account with node_limit = log.node_counts[r].
  int node_limit_for_round(int r) const { return log.node_counts.at(r); }
};

ConstructionResult direct_construction(const ConstructionConfig& config);

// Analytic upper bound for |<patch component, w>| over smooth w with the
// given first- and second-derivative sup bounds, via the potential form.
double patch_pairing_bound(const WavePatch& patch, double w_d1, double w_d2);

// Total-variation style bound driving the mollifier width choice.
double patch_tv_bound(const WavePatch& patch);

}  // namespace wildflow::wild_constructor
