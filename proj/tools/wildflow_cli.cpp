// Command-line front end: configuration, pipelines and artifact emission for
// the construction and verification library.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "wildflow/weak_verifier.hpp"
#include "wildflow/wild_constructor.hpp"

namespace fs = std::filesystem;
using namespace wildflow;
using namespace wildflow::lambda_geometry;
namespace hull = wildflow::t4_hull;
namespace wave = wildflow::wave_potential;
namespace build = wildflow::wild_constructor;
namespace verif = wildflow::weak_verifier;

namespace {

struct RunConfig {
  build::ConstructionConfig construction;
  int grid_n = 64;
  int grid_m = 48;
  std::string out_dir = "out";
  std::map<std::string, double> tolerances;

  void apply_kv(const std::string& key, const std::string& value) {
    auto d = [&] { return std::stod(value); };
    auto i = [&] { return std::stoi(value); };
    if (key == "z1")
      construction.z.x = d();
    else if (key == "z2")
      construction.z.y = d();
    else if (key == "delta")
      construction.delta = d();
    else if (key == "horizon")
      construction.horizon = d();
    else if (key == "rounds")
      construction.rounds = i();
    else if (key == "freq_base")
      construction.freq_base = i();
    else if (key == "freq_growth")
      construction.freq_growth = i();
    else if (key == "app_epsilon")
      construction.app_epsilon = d();
    else if (key == "shrink")
      construction.shrink = d();
    else if (key == "staircase_depth")
      construction.staircase_depth = i();
    else if (key == "cutoff_base")
      construction.cutoff_base = d();
    else if (key == "cover_fraction")
      construction.cover_fraction = d();
    else if (key == "t_margin_factor")
      construction.t_margin_factor = d();
    else if (key == "root_lattice")
      construction.root_lattice = i();
    else if (key == "max_regions_per_round")
      construction.max_regions_per_round = i();
    else if (key == "max_balls_per_region")
      construction.max_balls_per_region = i();
    else if (key == "seed")
      construction.seed = std::stoull(value);
    else if (key == "grid_n")
      grid_n = i();
    else if (key == "grid_m")
      grid_m = i();
    else if (key.rfind("tolerance.", 0) == 0)
      tolerances[key.substr(10)] = d();
    else
      throw CLI::ValidationError("config", "unknown config key: " + key);
  }

  void load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CLI::ValidationError("config", "cannot open " + path);
    std::string line;
    while (std::getline(is, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        return s;
      };
      apply_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  // Every effective value, defaults included, for provenance headers.
  void echo(std::ostream& os) const {
    const auto& c = construction;
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "z1 = %.17g\nz2 = %.17g\ndelta = %.17g\nhorizon = %.17g\nrounds = %d\n"
                  "freq_base = %d\nfreq_growth = %d\napp_epsilon = %.17g\nshrink = %.17g\n"
                  "staircase_depth = %d\ncutoff_base = %.17g\ncover_fraction = %.17g\n"
                  "t_margin_factor = %.17g\nroot_lattice = %d\nmax_regions_per_round = %d\n"
                  "max_balls_per_region = %d\nseed = %llu\ngrid_n = %d\ngrid_m = %d\n",
                  c.z.x, c.z.y, c.delta, c.horizon, c.rounds, c.freq_base, c.freq_growth,
                  c.app_epsilon, c.shrink, c.staircase_depth, c.cutoff_base, c.cover_fraction,
                  c.t_margin_factor, c.root_lattice, c.max_regions_per_round,
                  c.max_balls_per_region, (unsigned long long)c.seed, grid_n, grid_m);
    os << buf;
    for (const auto& [k, v] : tolerances) {
      std::snprintf(buf, sizeof buf, "tolerance.%s = %.17g\n", k.c_str(), v);
      os << buf;
    }
  }
};

struct CheckRow {
  std::string name;
  bool pass;
  std::string detail;
};

void print_rows(const std::vector<CheckRow>& rows) {
  int failures = 0;
  for (const auto& r : rows) {
    std::printf("  [%s] %-44s %s\n", r.pass ? "pass" : "FAIL", r.name.c_str(), r.detail.c_str());
    if (!r.pass) ++failures;
  }
  std::printf("%zu checks, %d failed\n", rows.size(), failures);
}

bool all_pass(const std::vector<CheckRow>& rows) {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

StateU random_state(Rng& rng, double scale) {
  return StateU{rng.uniform(-scale, scale),
                Vec2{rng.uniform(-scale, scale), rng.uniform(-scale, scale)},
                Vec2{rng.uniform(-scale, scale), rng.uniform(-scale, scale)}};
}

// ---------------------------------------------------------------------------
int cmd_geometry(int samples, uint64_t seed, bool inject_radius_bug) {
  std::vector<CheckRow> rows;
  Rng rng(seed);
  char buf[160];

  {  // cone residual against the determinant oracle
    double worst = 0.0;
    bool ok = true;
    for (int it = 0; it < samples * 100; ++it) {
      StateU s = random_state(rng, 3.0);
      double n = s.norm();
      double err = std::abs(cone_residual(s) + det3(to_matrix(s)));
      worst = std::max(worst, err / (1.0 + n * n * n));
      if (err > 1e-10 * (1.0 + n * n * n)) ok = false;
    }
    std::snprintf(buf, sizeof buf, "worst scaled error %.2e", worst);
    rows.push_back({"cone residual equals -det", ok, buf});
  }

  hull::RadiusMode mode = inject_radius_bug ? hull::RadiusMode::doubled_bug
                                            : hull::RadiusMode::corrected;
  {  // T4 singularity oracle over sampled anchors
    bool ok = true;
    double worst = 0.0;
    int tested = 0;
    while (tested < samples) {
      Vec2 z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      StateU anchor{0, {0, 0}, z};
      if (hull::t4_margin(anchor) < 0.02) continue;
      ++tested;
      hull::T4Configuration t4 = hull::t4_for_center(anchor, mode);
      double wsum = 0.0;
      StateU rec{};
      for (int i = 0; i < 4; ++i) {
        wsum += t4.weights[i];
        rec += t4.weights[i] * t4.corners[i];
        worst = std::max(worst, std::abs(cone_residual(anchor - t4.corners[i])));
      }
      if (worst > 1e-10) ok = false;
      if (std::abs(wsum - 1.0) > 1e-12 || (rec - anchor).norm() > 1e-10) ok = false;
    }
    std::snprintf(buf, sizeof buf, "worst corner cone residual %.2e%s", worst,
                  inject_radius_bug ? " (doubled radius)" : "");
    rows.push_back({"T4 corners rank-one connect to centers", ok, buf});
  }

  {  // barrier on K and on staircase nodes
    bool ok = true;
    for (int it = 0; it < samples * 10; ++it) {
      double r = rng.uniform(-2, 2);
      Vec2 u{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      if (lambda_convex_f(StateU{r, u, r * u}) != 0.0) ok = false;
    }
    hull::HullSpec spec = hull::make_hull_spec(Vec2{0.3, -0.2});
    auto lam = hull::staircase_nodes(spec.anchor(), spec, 0.01, 0.9, 6);
    for (const StateU& nd : lam.bulk)
      if (lambda_convex_f(nd) > 1e-10) ok = false;
    for (const StateU& nd : lam.deposit)
      if (lambda_convex_f(nd) > 1e-10) ok = false;
    rows.push_back({"barrier vanishes on K, nonpositive on laminates", ok, ""});
  }

  {  // hull membership with witnesses
    hull::HullSpec spec = hull::make_hull_spec(Vec2{0.3, -0.2});
    bool ok = true;
    for (int it = 0; it < std::max(4, samples / 4); ++it) {
      double g[5];
      double n2 = 0;
      for (double& gi : g) {
        gi = rng.normal();
        n2 += gi * gi;
      }
      double f = 0.9 * spec.delta * std::cbrt(rng.uniform()) / std::sqrt(n2);
      StateU s = spec.anchor() + StateU{f * g[0], {f * g[1], f * g[2]}, {f * g[3], f * g[4]}};
      auto res = hull::membership_in_Uz(s, spec);
      if (!res.member) ok = false;
      if (res.member) {
        StateU rec = res.witness.mix * res.witness.C + (1.0 - res.witness.mix) * res.witness.X;
        if ((rec - s).norm() > 1e-8) ok = false;
      }
    }
    if (hull::membership_in_Uz(StateU{1.0, {5, 5}, {5, 5}}, spec).member) ok = false;
    rows.push_back({"first-hull membership with exact witnesses", ok, ""});
  }

  {  // distance projection consistency
    bool ok = true;
    for (int it = 0; it < samples * 5; ++it) {
      StateU a = random_state(rng, 1.5), b = random_state(rng, 1.5);
      if (std::abs(dist_to_K(a) - dist_to_K(b)) > (a - b).norm() + 1e-9) ok = false;
      auto p = project_to_K(a);
      if (std::abs((a - StateU{p.r, p.u, p.r * p.u}).norm() - p.dist) > 1e-7) ok = false;
    }
    rows.push_back({"dist_to_K is 1-Lipschitz with realizable argmin", ok, ""});
  }

  print_rows(rows);
  return all_pass(rows) ? 0 : 1;
}

// ---------------------------------------------------------------------------
int cmd_t4(const RunConfig& cfg) {
  const Vec2 z = cfg.construction.z;
  double delta = cfg.construction.delta > 0 ? cfg.construction.delta : hull::admissible_delta(z);
  hull::HullSpec spec{z, delta};
  std::printf("anchor z = (%g, %g)\n", z.x, z.y);
  std::printf("admissible delta = %.6f\n", delta);
  hull::T4Configuration t4 = hull::t4_for_center(spec.anchor());
  std::printf("corner weights:");
  for (double w : t4.weights) std::printf(" %.6f", w);
  std::printf("\nanchor margin = %.6f\n", hull::t4_margin(spec.anchor()));
  StateU mid = 0.5 * (spec.anchor() + t4.corners[0]);
  auto res = hull::membership_in_Uz(mid, spec);
  std::printf("midpoint membership: %s (mix %.4f, family %d)\n", res.member ? "member" : "OUT",
              res.witness.mix, res.witness.family);
  if (res.member)
    std::printf("openness margin at midpoint = %.3e\n", hull::openness_margin(res.witness, spec));
  auto lam = hull::staircase_nodes(spec.anchor(), spec, 0.01, 0.9, 4);
  std::printf("staircase shrink threshold s0 = %.4f\n",
              hull::find_min_shrink(spec.anchor(), t4));
  std::printf("staircase nodes: %zu bulk, %zu deposits, mix ratio %.5f\n", lam.bulk.size(),
              lam.deposit.size(), lam.mix_ratio);
  return res.member ? 0 : 1;
}

// ---------------------------------------------------------------------------
int cmd_wave(double lambda, double epsilon, int freq) {
  StateU dir{1.0, Vec2{0.35355339059327373, -0.85355339059327373}, Vec2{0.2, -0.1}};
  wave::Domain dom = wave::Domain::make_ball(Vec3{0.5, 0.5, 0.0}, 0.4);
  wave::BuildingBlock blk = wave::building_block(dom, dir, lambda, epsilon, freq);
  const auto& st = blk.stats;
  std::printf("building block: lambda=%.4f epsilon=%.3f N=%d\n", lambda, epsilon, freq);
  std::printf("  patches             %zu\n", blk.patches.size());
  std::printf("  covered fraction    %.6f\n", st.covered_fraction);
  std::printf("  fraction at +end    %.6f  (target >= %.6f)\n", st.plus_fraction,
              lambda * (1 - epsilon));
  std::printf("  fraction at -end    %.6f  (target >= %.6f)\n", st.minus_fraction,
              (1 - lambda) * (1 - epsilon));
  std::printf("  annulus fraction    %.6f\n", st.annulus_fraction);
  std::printf("  deviation bound     %.6f\n", st.sup_segment_distance);
  std::printf("  N_min(epsilon)      %d\n", st.n_min);
  bool ok = st.plus_fraction >= lambda * (1 - epsilon) &&
            st.minus_fraction >= (1 - lambda) * (1 - epsilon);
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
int cmd_construct(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  build::ConstructionResult res = build::direct_construction(cfg.construction);

  {
    std::ofstream os(fs::path(cfg.out_dir) / "config.txt", std::ios::binary);
    os << "wildflow-config v1\n";
    cfg.echo(os);
  }
  for (size_t r = 0; r < res.log.node_counts.size(); ++r) {
    std::ostringstream name;
    name << "subsolution_round" << r << ".txt";
    std::ofstream os(fs::path(cfg.out_dir) / name.str(), std::ios::binary);
    res.final.prefix(res.log.node_counts[r]).serialize(os);
  }
  {
    std::ofstream os(fs::path(cfg.out_dir) / "convergence.txt", std::ios::binary);
    res.log.serialize(os);
  }
  std::printf("construction: %d rounds, %zu patches -> %s\n", cfg.construction.rounds,
              res.final.nodes.size(), cfg.out_dir.c_str());
  for (const auto& rl : res.log.rounds)
    std::printf("  round %d: dist upper %.6f -> %.6f, app fraction %.3f, patches +%d\n", rl.round,
                rl.dist_before.hi, rl.dist_after.hi, rl.app_fraction, rl.patches_added);
  return 0;
}

// ---------------------------------------------------------------------------
int cmd_verify(const std::string& path, const RunConfig& cfg) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    std::fprintf(stderr, "verify: cannot open %s\n", path.c_str());
    return 2;
  }
  std::string header;
  std::getline(is, header);
  is.seekg(0);
  verif::TestFamily fam = verif::TestFamily::standard(cfg.construction.horizon, 5);
  verif::VerificationReport rep;
  try {
    if (header.rfind("wildflow-subsolution", 0) == 0) {
      auto sub = build::Subsolution::deserialize(is);
      fam = verif::TestFamily::standard(sub.horizon, 5);
      rep = verif::verify(sub, fam, cfg.grid_n, cfg.grid_m, cfg.tolerances);
    } else if (header.rfind("wildflow-field", 0) == 0) {
      verif::FieldGrid grid = verif::FieldGrid::read(is);
      fam = verif::TestFamily::standard(grid.horizon, 5);
      double rtol = cfg.tolerances.count("residual") ? cfg.tolerances.at("residual") : 1e-6;
      auto tables = verif::weak_residuals_grid(grid, fam);
      const char* names[3] = {"residual.mass_q", "residual.incompressibility", "residual.curl"};
      for (size_t i = 0; i < tables.size(); ++i) {
        rep.values[std::string(names[i]) + ".max"] = tables[i].max_abs();
        double est = 0.0;
        for (const auto& e : tables[i].entries) est = std::max(est, e.self_estimate);
        rep.values[std::string(names[i]) + ".self_estimate"] = est;
        rep.flags[std::string("pass.") + names[i]] = tables[i].max_abs() <= rtol;
      }
      auto stats = verif::constraint_stats_grid(grid);
      rep.values["stats.defect_l1"] = stats.defect_l1;
      rep.values["stats.dist_l1"] = stats.dist_l1;
      rep.values["stats.rho_plus_frac"] = stats.rho_plus_frac;
      rep.values["stats.rho_minus_frac"] = stats.rho_minus_frac;
    } else {
      std::fprintf(stderr, "verify: unrecognized file header in %s\n", path.c_str());
      return 2;
    }
  } catch (const verif::GridTooCoarse& e) {
    std::fprintf(stderr,
                 "verify: %s\n  advice: raise --grid until the Richardson self-estimate "
                 "drops below the reporting tolerance\n",
                 e.what());
    return 3;
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / "report.txt", std::ios::binary);
  rep.emit(os);
  rep.emit(std::cout);
  return rep.pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
int cmd_report(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    std::fprintf(stderr, "report: cannot open %s\n", path.c_str());
    return 2;
  }
  std::string line;
  std::getline(is, line);
  if (line.rfind("wildflow-report", 0) != 0 && line.rfind("wildflow-convergence", 0) != 0) {
    std::fprintf(stderr, "report: unrecognized header %s\n", line.c_str());
    return 2;
  }
  std::cout << line << '\n';
  while (std::getline(is, line)) std::cout << line << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for convex-integration solutions of 2-D porous media flow"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::vector<std::string> tol_args;
  std::string grid_arg;
  std::string zarg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--seed", cfg.construction.seed, "deterministic seed");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--rounds", cfg.construction.rounds, "construction rounds");
    sub->add_option("--grid", grid_arg, "verification grid as n,m");
    sub->add_option("--z", zarg, "anchor flux as a,b");
    sub->add_option("--delta", cfg.construction.delta, "hull ball radius (0 = auto)");
    sub->add_option("--tolerance", tol_args, "NAME=VAL tolerance override")->take_all();
  };

  int samples = 40;
  bool radius_bug = false;
  CLI::App* geometry = app.add_subcommand("geometry", "run the state-space property suites");
  geometry->add_option("--samples", samples, "sample count scale");
  geometry->add_flag("--doubled-radius-bug", radius_bug,
                     "use the doubled corner radius; the singularity oracle must fail");
  add_common(geometry);

  CLI::App* t4 = app.add_subcommand("t4", "T4 configurations and hull diagnostics");
  add_common(t4);

  double wave_lambda = 1.0 / 3.0, wave_eps = 0.1;
  int wave_freq = 64;
  CLI::App* wavec = app.add_subcommand("wave", "building-block demo with measure statistics");
  wavec->add_option("--lambda", wave_lambda, "volume fraction");
  wavec->add_option("--epsilon", wave_eps, "measure slack");
  wavec->add_option("--freq", wave_freq, "saw-tooth frequency");
  add_common(wavec);

  CLI::App* construct = app.add_subcommand("construct", "run the direct construction");
  add_common(construct);

  std::string verify_path;
  CLI::App* verifyc = app.add_subcommand("verify", "verify a subsolution or field file");
  verifyc->add_option("path", verify_path, "subsolution or field file")->required();
  add_common(verifyc);

  std::string report_path;
  CLI::App* reportc = app.add_subcommand("report", "print a saved report or convergence log");
  reportc->add_option("path", report_path, "report file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) cfg.load_file(config_path);
    if (!zarg.empty()) {
      if (std::sscanf(zarg.c_str(), "%lf,%lf", &cfg.construction.z.x, &cfg.construction.z.y) != 2)
        throw CLI::ValidationError("--z", "expected a,b");
    }
    if (!grid_arg.empty()) {
      if (std::sscanf(grid_arg.c_str(), "%d,%d", &cfg.grid_n, &cfg.grid_m) != 2)
        throw CLI::ValidationError("--grid", "expected n,m");
    }
    for (const std::string& t : tol_args) {
      auto eq = t.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--tolerance", "expected NAME=VAL");
      cfg.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    }

    if (*geometry) return cmd_geometry(samples, cfg.construction.seed, radius_bug);
    if (*t4) return cmd_t4(cfg);
    if (*wavec) return cmd_wave(wave_lambda, wave_eps, wave_freq);
    if (*construct) return cmd_construct(cfg);
    if (*verifyc) return cmd_verify(verify_path, cfg);
    if (*reportc) return cmd_report(report_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
