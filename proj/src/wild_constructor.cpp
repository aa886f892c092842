#include "wildflow/wild_constructor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "wildflow/wave_potential.hpp"

namespace wildflow::wild_constructor {

using lambda_geometry::cone_residual;
using lambda_geometry::dist_to_K;
using t4_hull::T4Configuration;
using t4_hull::t4_for_center;
using wave_potential::Ball3;
using wildflow::ball_volume;
using wave_potential::building_block;
using wave_potential::BuildingBlock;
using wave_potential::CoverOptions;
using wave_potential::Domain;

namespace {

constexpr double kMinTaskRadius = 2e-4;
constexpr double kDistDoneTol = 1e-9;
// Wave directions need |v2| bounded away from zero relative to the segment.
constexpr double kV2Floor = 0.02;

double sub_seed(uint64_t seed, int round, int salt) {
  return double(seed * 1000003ULL + uint64_t(round) * 8191ULL + uint64_t(salt));
}

}  // namespace

void ConstructionConfig::validate() const {
  if (!(horizon > 0.0)) throw InvalidConfig("horizon must be positive");
  if (rounds < 0) throw InvalidConfig("rounds must be nonnegative");
  if (freq_base < 1 || freq_growth < 1) throw InvalidConfig("frequency schedule must be positive");
  if (!(app_epsilon > 0.0 && app_epsilon < 0.5)) throw InvalidConfig("app_epsilon in (0, 1/2)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidConfig("shrink in (0,1)");
  if (!(cutoff_base > 0.0 && cutoff_base < 0.2)) throw InvalidConfig("cutoff_base in (0, 0.2)");
  if (!(cover_fraction > 0.0 && cover_fraction < 1.0)) throw InvalidConfig("cover_fraction in (0,1)");
  if (!(t_margin_factor > 0.0 && t_margin_factor < 0.4)) throw InvalidConfig("t margin in (0, 0.4)");
  if (lambda_default <= 0.0 || lambda_default >= 1.0) throw InvalidConfig("lambda in (0,1)");
  double prod = 1.0;
  for (int k = 0; k < std::max(rounds, 1); ++k) prod *= 1.0 - eta_for_round(k);
  if (prod < 0.5) throw InvalidConfig("eta sequence must keep prod(1-eta) >= 1/2");
}

Subsolution initialize(const ConstructionConfig& config) {
  config.validate();
  Subsolution sub;
  sub.hull = t4_hull::make_hull_spec(config.z, config.delta);
  sub.base = sub.hull.anchor();
  sub.horizon = config.horizon;
  return sub;
}

namespace {

// Orthonormal frame transverse to the patch phase gradient, for slab lattices.
void transverse_frame(const Vec3& g, Vec3& e1, Vec3& e2) {
  Vec3 n = g * (1.0 / g.norm());
  Vec3 pick = std::abs(n.x1) < 0.8 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  // e1 = normalize(pick - (pick.n) n)
  double d = pick.dot(n);
  e1 = pick - n * d;
  e1 = e1 * (1.0 / e1.norm());
  // e2 = n x e1
  e2 = Vec3{n.x2 * e1.t - n.t * e1.x2, n.t * e1.x1 - n.x1 * e1.t, n.x1 * e1.x2 - n.x2 * e1.x1};
}

int install_node(Subsolution& sub, PatchNode&& node) {
  int id = int(sub.nodes.size());
  sub.nodes.push_back(std::move(node));
  if (sub.nodes[id].parent < 0)
    sub.roots.push_back(id);
  else
    sub.nodes[sub.nodes[id].parent].children.push_back(id);
  return id;
}

struct StepGeometry {
  StateU bulk_next;
  StateU deposit;
  StateU block_dir;
  double block_lambda = 0.0;
  double deposit_mix = 0.0;
  int corner = 0;
  StateU corner_state;
};

// One staircase step anchored at the current bulk state: a small fraction
// deposits onto the segment toward a pulled-in corner, the bulk recedes to
// keep the block mean-free. Steps alternate between the two near corners
// (x2 and y2 side); their rho- and w-recoils cancel pairwise, so the bulk
// oscillates inside the ball instead of drifting out.
StepGeometry staircase_step(const StateU& bulk, const HullSpec& hull,
                            const ConstructionConfig& cfg, int step_index) {
  T4Configuration t4 = t4_for_center(bulk);
  double dist = dist_to_K(bulk);

  static constexpr int kCycle[4] = {1, 3, 0, 2};  // near corners first
  for (int attempt = 0; attempt < 4; ++attempt) {
    int i = kCycle[(step_index + attempt) % 4];
    StateU edge = t4.corners[i] - bulk;
    if (std::abs(edge.v.y) < kV2Floor * edge.norm()) continue;
    double s = std::clamp(cfg.shrink, 0.0, 0.995);
    if (2.0 * s * edge.norm() < dist) continue;  // (dist) inequality
    StateU D = s * edge;
    double eps = std::min(cfg.app_epsilon, 0.999 / s - 1.0);
    for (int halving = 0; halving < 7; ++halving, eps *= 0.5) {
      if (eps < 1e-4) break;
      StateU next = bulk - eps * (1.0 + eps) * D;
      if (!hull.in_ball(next)) continue;
      StepGeometry g;
      g.corner = i;
      g.corner_state = t4.corners[i];
      g.deposit = bulk + (1.0 + eps) * D;
      g.bulk_next = next;
      g.block_dir = (1.0 + eps) * (1.0 + eps) * D;
      g.block_lambda = eps / (1.0 + eps);
      g.deposit_mix = 1.0 - (1.0 + eps) * s;
      return g;
    }
  }
  throw t4_hull::BadShrink("staircase_step: no corner satisfies the cone and (dist) guards");
}

// Pack task balls inside one plateau band of a node, avoiding its children.
std::vector<RegionTask> pack_band_tasks(const Subsolution& sub, int node_id, int band,
                                        int max_balls, int max_slabs, uint64_t seed) {
  const PatchNode& n = sub.nodes[node_id];
  const WavePatch& p = n.patch;
  std::vector<RegionTask> tasks;
  double L = p.freq * p.wc.g.norm();
  double R = 1.0 - p.cutoff_width;
  double l = p.profile.lambda;
  Vec3 ghat = p.wc.g * (1.0 / p.wc.g.norm());
  Vec3 e1, e2;
  transverse_frame(p.wc.g, e1, e2);
  Rng rng(seed);
  double jitter = rng.uniform(-0.2, 0.2);

  StateU value = band > 0 ? n.plus_value() : n.minus_value();
  ValueCert cert = band > 0 ? n.cert_plus : n.cert_minus;

  std::vector<Ball3> obstacles;
  for (int child : n.children)
    obstacles.push_back({sub.nodes[child].patch.center, sub.nodes[child].patch.radius});

  // Band intervals in phase units; the minus band is one interval, the plus
  // band wraps around integers.
  std::vector<std::pair<double, double>> ivs;
  if (band > 0)
    ivs = {{-0.5 * l, 0.5 * l}};
  else
    ivs = {{0.5 * l, 1.0 - 0.5 * l}};

  // Slabs ordered from the ball equator outward.
  std::vector<int> slab_order;
  int m_max = int(std::ceil(R * L));
  for (int m = 0; m <= m_max; ++m) {
    slab_order.push_back(m);
    if (m > 0) slab_order.push_back(-m);
  }

  int used_slabs = 0;
  for (int m : slab_order) {
    if (int(tasks.size()) >= max_balls || used_slabs >= max_slabs) break;
    for (auto [a, b] : ivs) {
      double u1 = (m + a) / L, u2 = (m + b) / L;
      double um = 0.5 * (u1 + u2);
      double half = 0.5 * (u2 - u1);
      if (std::abs(um) + half > 0.9 * R) continue;
      double rb = 0.8 * std::min(half, 0.2 * (R - std::abs(um)));
      if (rb * p.radius < kMinTaskRadius) continue;
      double disk = std::sqrt(std::max(0.0, R * R - um * um)) - 1.5 * rb;
      if (disk <= rb) continue;
      bool slab_used = false;
      int per_axis = std::max(1, int(std::floor(disk / (1.6 * rb))));
      for (int i = -per_axis; i <= per_axis && int(tasks.size()) < max_balls; ++i)
        for (int j = -per_axis; j <= per_axis && int(tasks.size()) < max_balls; ++j) {
          Vec3 y = ghat * um + e1 * ((i + jitter) * 1.6 * rb) + e2 * ((j + jitter) * 1.6 * rb);
          if ((y - ghat * um).norm() > disk) continue;
          Vec3 c = p.center + y * p.radius;
          double r_phys = rb * p.radius;
          bool clash = false;
          for (const Ball3& o : obstacles)
            if ((c - o.c).norm() < r_phys + o.r + 1e-9) clash = true;
          if (clash) continue;
          tasks.push_back(RegionTask{node_id, band, Ball3{c, r_phys}, value, cert});
          obstacles.push_back(Ball3{c, r_phys});
          slab_used = true;
        }
      if (slab_used) ++used_slabs;
    }
  }
  return tasks;
}

std::vector<RegionTask> pack_root_tasks(const Subsolution& sub, const ConstructionConfig& cfg,
                                        int round) {
  std::vector<RegionTask> tasks;
  double tm = cfg.t_margin_factor * cfg.horizon;
  int n = std::max(1, cfg.root_lattice);
  double r0 = std::min(0.42 / n, 0.35 * (cfg.horizon - 2 * tm));
  if (r0 < kMinTaskRadius) return tasks;
  Rng rng(uint64_t(sub_seed(cfg.seed, round, 17)));
  ValueCert cert{ValueCert::Kind::in_ball, sub.base, sub.base, 1.0, 0};

  std::vector<Ball3> occupied;
  for (int id : sub.roots)
    occupied.push_back({sub.nodes[id].patch.center, sub.nodes[id].patch.radius});

  // A radius ladder fills the gaps the previous rounds left; larger slots
  // first, down to the task-size floor or the per-round budget.
  int budget = std::max(4, cfg.max_regions_per_round / 2);
  for (int level = 0; level < 8 && int(tasks.size()) < budget; ++level) {
    double r = r0 / (1 << level);
    if (r < 4.0 * kMinTaskRadius) break;
    int nx = n * (1 << level);
    double jx = rng.uniform(0.0, 1.0) / nx, jy = rng.uniform(0.0, 1.0) / nx;
    int layers = std::max(1, int(std::floor((cfg.horizon - 2 * tm) / (2.1 * r))));
    for (int lt = 0; lt < layers && int(tasks.size()) < budget; ++lt) {
      double t = tm + 1.05 * r + lt * 2.1 * r;
      if (t + r > cfg.horizon - tm) break;
      for (int i = 0; i < nx && int(tasks.size()) < budget; ++i)
        for (int j = 0; j < nx && int(tasks.size()) < budget; ++j) {
          Vec3 c{std::fmod((i + 0.5) / nx + jx, 1.0), std::fmod((j + 0.5) / nx + jy, 1.0), t};
          bool clash = false;
          for (const Ball3& q : occupied) {
            Vec3 d = torus_offset(c, q.c);
            if (d.norm() < r + q.r + 1e-9) clash = true;
          }
          if (clash) continue;
          tasks.push_back(RegionTask{-1, 0, Ball3{c, r}, sub.base, cert});
          occupied.push_back(Ball3{c, r});
        }
    }
  }
  return tasks;
}

// Installs one mean-free block over the task ball and returns the new nodes.
std::vector<int> install_block(Subsolution& sub, const RegionTask& task, const StateU& dir,
                               double lambda, const ValueCert& cert_plus,
                               const ValueCert& cert_minus, const ConstructionConfig& cfg,
                               int round, int salt) {
  CoverOptions cov;
  cov.seed = uint64_t(sub_seed(cfg.seed, round, salt));
  BuildingBlock blk =
      building_block(Domain::make_ball(task.ball.c, task.ball.r), dir, lambda,
                     cfg.eta_for_round(round), cfg.freq_for_round(round), cov,
                     cfg.cutoff_for_round(round));
  std::vector<int> ids;
  for (const WavePatch& p : blk.patches) {
    PatchNode node;
    node.patch = p;
    node.parent = task.parent;
    node.parent_band = task.band;
    node.round = round;
    node.backdrop = task.value;
    node.cert_plus = cert_plus;
    node.cert_minus = cert_minus;
    ids.push_back(install_node(sub, std::move(node)));
  }
  return ids;
}

std::vector<int> app_step_in_ball(Subsolution& sub, const RegionTask& task,
                                  const ConstructionConfig& cfg, int round);

std::vector<int> app_step_segment(Subsolution& sub, const RegionTask& task,
                                  const ConstructionConfig& cfg, int round) {
  const ValueCert& c = task.cert;
  double mix = c.mix;
  if (mix <= 1e-3) return {};  // value essentially on K already
  StateU U = c.C - c.X;
  if (std::abs(U.v.y) < kV2Floor * U.norm() || !lambda_geometry::in_cone(U)) {
    // Witness direction unusable for waves; try a fresh witness.
    auto res = t4_hull::membership_in_Uz(task.value, sub.hull);
    if (!res.member) throw NotInHull("app_step: segment value lost its hull witness");
    const auto& w = res.witness;
    if (w.mix <= 1e-3 || w.mix >= 1.0 - 1e-3) return {};
    StateU U2 = w.C - w.X;
    if (std::abs(U2.v.y) < kV2Floor * U2.norm()) return {};  // skip this region, log upstream
    ValueCert plus{ValueCert::Kind::in_ball, w.C, w.C, 1.0, w.family};
    ValueCert minus{ValueCert::Kind::corner, w.X, w.X, 0.0, w.family};
    return install_block(sub, task, U2, w.mix, plus, minus, cfg, round, 23);
  }
  ValueCert plus{ValueCert::Kind::in_ball, c.C, c.C, 1.0, c.family};
  ValueCert minus{ValueCert::Kind::corner, c.X, c.X, 0.0, c.family};
  std::vector<int> ids = install_block(sub, task, U, mix, plus, minus, cfg, round, 29);

  if (mix >= 7.0 / 8.0) {
    // Concentrated at C in B_z: recurse into the ball case inside the
    // plus-band subregions.
    std::vector<int> extra;
    for (int id : ids) {
      auto subtasks = pack_band_tasks(sub, id, +1, cfg.max_balls_per_region,
                                      cfg.slabs_per_region, uint64_t(sub_seed(cfg.seed, round, id)));
      for (const RegionTask& st : subtasks) {
        auto more = app_step_in_ball(sub, st, cfg, round);
        extra.insert(extra.end(), more.begin(), more.end());
      }
    }
    ids.insert(ids.end(), extra.begin(), extra.end());
  }
  return ids;
}

std::vector<int> app_step_in_ball(Subsolution& sub, const RegionTask& task,
                                  const ConstructionConfig& cfg, int round) {
  std::vector<int> ids;
  std::vector<RegionTask> regions = {task};
  StateU bulk = task.value;
  for (int depth = 0; depth < std::max(1, cfg.staircase_depth); ++depth) {
    StepGeometry g;
    try {
      g = staircase_step(bulk, sub.hull, cfg, depth % 4);
    } catch (const t4_hull::BadShrink&) {
      break;  // remaining budget too small; stop deepening
    }
    ValueCert cert_dep{ValueCert::Kind::segment, bulk, g.corner_state, g.deposit_mix, g.corner};
    ValueCert cert_blk{ValueCert::Kind::in_ball, g.bulk_next, g.bulk_next, 1.0, 0};
    std::vector<RegionTask> next_regions;
    for (const RegionTask& r : regions) {
      auto created = install_block(sub, r, g.block_dir, g.block_lambda, cert_dep, cert_blk, cfg,
                                   round, 31 + depth);
      ids.insert(ids.end(), created.begin(), created.end());
      if (depth + 1 < cfg.staircase_depth) {
        for (int id : created) {
          auto subtasks =
              pack_band_tasks(sub, id, -1, cfg.max_balls_per_region, cfg.slabs_per_region,
                              uint64_t(sub_seed(cfg.seed, round, 1000 + id)));
          next_regions.insert(next_regions.end(), subtasks.begin(), subtasks.end());
        }
      }
    }
    regions = std::move(next_regions);
    bulk = g.bulk_next;
    if (regions.empty()) break;
  }
  return ids;
}

}  // namespace

std::vector<int> app_step(Subsolution& sub, const RegionTask& task,
                          const ConstructionConfig& cfg, int round) {
  if (dist_to_K(task.value) <= kDistDoneTol) return {};
  RegionTask t = task;
  if (t.cert.kind == ValueCert::Kind::unknown) {
    auto res = t4_hull::membership_in_Uz(t.value, sub.hull);
    if (!res.member) throw NotInHull("app_step: value is not in the relaxed hull");
    if (sub.hull.in_ball(t.value))
      t.cert = ValueCert{ValueCert::Kind::in_ball, t.value, t.value, 1.0, 0};
    else
      t.cert = ValueCert{ValueCert::Kind::segment, res.witness.C, res.witness.X, res.witness.mix,
                         res.witness.family};
  }
  if (t.cert.kind == ValueCert::Kind::corner) return {};
  if (sub.hull.in_ball(t.value)) return app_step_in_ball(sub, t, cfg, round);
  return app_step_segment(sub, t, cfg, round);
}

double patch_pairing_bound(const WavePatch& patch, double w_d1, double w_d2) {
  double l = patch.profile.lambda;
  double s_max = 0.5 * l * (1.0 - l);
  double S_max = l * (1.0 - l) / 8.0;
  double r = patch.radius;
  double N = patch.freq;
  double vol = ball_volume(r);
  double g2 = 1.0 + patch.wc.g.norm2();
  double psi_sup = r * r * std::abs(patch.wc.alpha) * S_max / (N * N);
  double phi_sup = r * std::abs(patch.wc.d) * s_max / N;
  // Five components, each at most two psi-derivative moves and one phi move.
  return vol * (5.0 * psi_sup * g2 * w_d2 + 2.0 * phi_sup * w_d1);
}

double patch_tv_bound(const WavePatch& patch) {
  double gn = patch.wc.g.norm();
  double r = patch.radius;
  return 12.0 * patch.freq * gn * patch.direction.norm() * r * r;
}

RoundLog perturbation_round(Subsolution& sub, const ConstructionConfig& cfg, int round) {
  RoundLog log;
  log.round = round;
  log.freq = cfg.freq_for_round(round);
  log.dist_before = sub.dist_integral();
  log.rho_near = sub.rho_near_fraction(0.1);

  // Candidate regions carrying dist mass, largest first.
  struct Candidate {
    double mass = 0.0;
    std::vector<RegionTask> tasks;
  };
  std::vector<Candidate> cands;

  {
    Candidate root;
    root.tasks = pack_root_tasks(sub, cfg, round);
    for (const RegionTask& t : root.tasks)
      root.mass += ball_volume(t.ball.r) * dist_to_K(t.value);
    if (!root.tasks.empty()) cands.push_back(std::move(root));
  }
  auto leaves = sub.leaf_regions();
  std::vector<size_t> order(leaves.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dist_to_K(leaves[a].value) * leaves[a].measure >
           dist_to_K(leaves[b].value) * leaves[b].measure;
  });
  int regions_used = 0;
  for (size_t oi : order) {
    if (regions_used >= cfg.max_regions_per_round) break;
    const LeafRegion& lr = leaves[oi];
    if (lr.node < 0) continue;  // root remainder handled by the lattice above
    if (lr.measure < 1e-14 || dist_to_K(lr.value) <= kDistDoneTol) continue;
    if (lr.cert.kind == ValueCert::Kind::corner) continue;
    Candidate c;
    c.tasks = pack_band_tasks(sub, lr.node, lr.band, cfg.max_balls_per_region,
                              cfg.slabs_per_region, uint64_t(sub_seed(cfg.seed, round, int(oi))));
    for (const RegionTask& t : c.tasks) c.mass += ball_volume(t.ball.r) * dist_to_K(t.value);
    if (c.tasks.empty()) continue;
    cands.push_back(std::move(c));
    ++regions_used;
  }

  // Process tasks; measure the increment against the pre-round values.
  size_t first_new = sub.nodes.size();
  double c1;
  {
    // c1(delta) = (1-delta)/(8 M(delta)) with M = 1 + delta + max |T_i| over
    // the ball, estimated at the anchor with the ball radius as slack.
    T4Configuration t4 = t4_for_center(sub.hull.anchor());
    double corner_max = 0.0;
    for (const StateU& T : t4.corners) corner_max = std::max(corner_max, T.norm());
    double M = 1.0 + sub.hull.delta + corner_max + 2.0 * sub.hull.delta;
    c1 = (1.0 - sub.hull.delta) / (8.0 * M);
  }
  log.c1 = c1;

  std::vector<std::pair<std::vector<int>, StateU>> generations;  // ids + pre-round value
  for (const Candidate& c : cands)
    for (const RegionTask& t : c.tasks) {
      log.processed_measure += ball_volume(t.ball.r);
      auto ids = app_step(sub, t, cfg, round);
      generations.push_back({std::move(ids), t.value});
    }

  // Exact plateau accounting of the increment.
  double qualifying = 0.0;
  for (auto& [ids, pre] : generations) {
    double threshold = c1 * dist_to_K(pre);
    for (int id : ids) {
      const PatchNode& n = sub.nodes[id];
      double plus = wave_potential::patch_plus_band_measure(n.patch);
      double minus = wave_potential::patch_minus_band_measure(n.patch);
      for (int child : n.children) {
        double v = ball_volume(sub.nodes[child].patch.radius);
        if (sub.nodes[child].parent_band > 0)
          plus -= v;
        else
          minus -= v;
      }
      double zp = (n.plus_value() - pre).norm();
      double zm = (n.minus_value() - pre).norm();
      log.increment_l1 += zp * plus + zm * minus;
      log.increment_l2sq += zp * zp * plus + zm * zm * minus;
      if (zp >= threshold) qualifying += plus;
      if (zm >= threshold) qualifying += minus;
    }
  }
  log.app_fraction = log.processed_measure > 0 ? qualifying / log.processed_measure : 0.0;
  log.patches_added = int(sub.nodes.size() - first_new);

  // FWC pairing gate and mollifier width from analytic bounds against the
  // verification family's derivative sups.
  const double w_d1 = cfg.family_deriv1_bound(), w_d2 = cfg.family_deriv2_bound();
  double pairing = 0.0, tv = 0.0;
  for (size_t id = first_new; id < sub.nodes.size(); ++id) {
    pairing += patch_pairing_bound(sub.nodes[id].patch, w_d1, w_d2);
    tv += patch_tv_bound(sub.nodes[id].patch);
  }
  log.pairing_bound = pairing;
  log.pairing_gate = std::pow(2.0, -(round + 1));
  log.mollifier_width = tv > 0 ? log.pairing_gate / tv : 0.0;

  log.dist_after = sub.dist_integral();
  log.contraction = log.dist_before.hi > 0 ? log.dist_after.hi / log.dist_before.hi : 1.0;
  return log;
}

ConstructionResult direct_construction(const ConstructionConfig& config) {
  config.validate();
  ConstructionResult result;
  result.final = initialize(config);
  result.log.node_counts.push_back(0);

  for (int k = 0; k < config.rounds; ++k) {
    ConstructionConfig cfg_k = config;
    size_t checkpoint_nodes = result.final.nodes.size();
    size_t checkpoint_roots = result.final.roots.size();
    RoundLog rl;
    for (;;) {
      rl = perturbation_round(result.final, cfg_k, k);
      if (rl.pairing_bound <= rl.pairing_gate) break;
      // Roll the round back and raise the frequency until the weak-closeness
      // gate holds.
      result.final.nodes.resize(checkpoint_nodes);
      result.final.roots.resize(checkpoint_roots);
      for (auto& n : result.final.nodes) {
        auto& ch = n.children;
        ch.erase(std::remove_if(ch.begin(), ch.end(),
                                [&](int id) { return id >= int(checkpoint_nodes); }),
                 ch.end());
      }
      if (cfg_k.freq_base >= cfg_k.freq_cap)
        throw ToleranceUnreachable(k, "no admissible frequency meets the 2^-k pairing bound");
      cfg_k.freq_base = std::min(cfg_k.freq_cap, cfg_k.freq_base * cfg_k.freq_growth);
    }
    result.log.rounds.push_back(rl);
    result.log.node_counts.push_back(int(result.final.nodes.size()));
  }
  return result;
}

void ConvergenceLog::serialize(std::ostream& os) const {
  os << "wildflow-convergence v1\n";
  os << "rounds " << rounds.size() << '\n';
  char buf[512];
  for (const RoundLog& r : rounds) {
    std::snprintf(buf, sizeof buf,
                  "round %d dist_before %.17g %.17g dist_after %.17g %.17g processed %.17g "
                  "incr_l1 %.17g incr_l2sq %.17g app_fraction %.17g c1 %.17g rho_near %.17g %.17g "
                  "patches %d freq %d pairing %.17g gate %.17g mollifier %.17g contraction %.17g\n",
                  r.round, r.dist_before.lo, r.dist_before.hi, r.dist_after.lo, r.dist_after.hi,
                  r.processed_measure, r.increment_l1, r.increment_l2sq, r.app_fraction, r.c1,
                  r.rho_near.lo, r.rho_near.hi, r.patches_added, r.freq, r.pairing_bound,
                  r.pairing_gate, r.mollifier_width, r.contraction);
    os << buf;
  }
  os << "nodes";
  for (int n : node_counts) os << ' ' << n;
  os << '\n';
}

}  // namespace wildflow::wild_constructor
