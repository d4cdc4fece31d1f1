#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hlearn/hlearn.hpp"

using namespace hlearn;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSuiteFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "hlearn_out";
  std::optional<double> scale;
  std::optional<int> workers;
  bool timing = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "run only this seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--scale", c.scale, "multiplier on every shot-count scale");
  cmd->add_option("--workers", c.workers, "parallel (eps, seed) jobs");
  cmd->add_flag("--timing", c.timing, "fill the wall_time column");
}

SweepConfig load_sweep(const Common& c) {
  auto cfg = sweep_from_json(parse_json_strict(read_text(c.config), c.config));
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.scale) cfg.rescale(*c.scale);
  if (c.workers) cfg.workers = *c.workers;
  if (c.timing) cfg.timing = true;
  cfg.validate();
  return cfg;
}

int cmd_sweep(const Common& c, const std::string& name, std::optional<LearnMode> force_mode, bool baseline) {
  auto cfg = load_sweep(c);
  if (force_mode) cfg.mode = *force_mode;
  if (baseline) cfg.algorithm = Algorithm::Baseline;
  const auto rows = run_sweep(cfg);
  write_sweep(c.out, name, cfg, rows);
  std::cout << learn_csv(rows, cfg.timing);
  std::cerr << "wrote " << (fs::path(c.out) / (name + ".csv")).string() << " and " << rows.size()
            << " run reports\n";
  return kExitOk;
}

struct GenArgs {
  std::string family = "low-intersection";
  int n = 6;
  int d = 1;
  int k = 2;
  double alpha = 3.0;
  int degree = 2;
  double coeff_min = 0.0;
  double coeff_max = 0.5;
  std::uint64_t seed = 0;
  std::string out = "hlearn_out";
};

int cmd_gen(const GenArgs& g) {
  InstanceSpec spec;
  spec.family = g.family;
  spec.n = g.n;
  spec.k = g.k;
  spec.d = g.d;
  spec.alpha = g.alpha;
  spec.degree = g.degree;
  spec.coeff_min = g.coeff_min;
  spec.coeff_max = g.coeff_max;
  if (g.family != "low-intersection" && g.family != "power-law") {
    throw ParameterError("gen: family must be low-intersection or power-law");
  }
  const auto h = make_instance(spec, g.seed);
  fs::create_directories(g.out);
  const auto path =
      fs::path(g.out) / (g.family + "_n" + std::to_string(g.n) + "_seed" + std::to_string(g.seed) + ".json");
  save_hamiltonian(path.string(), h);

  std::printf("file            %s\n", path.string().c_str());
  std::printf("terms           %zu\n", h.size());
  std::printf("locality        %d\n", h.locality());
  std::printf("local_norm_1    %.6f\n", local_norm_1(h));
  std::printf("local_norm_2    %.6f\n", local_norm_2(h));
  std::printf("dual_degree     %d\n", dual_graph_max_degree(h));
  const bool power = g.family == "power-law";
  if (power) std::printf("pair_audit      %.6f (<= 1 passes)\n", power_law_audit(h, cube_geometry(g.n, g.d), g.alpha));
  std::printf("\n%-8s %-10s%s\n", "eps", "s_eps", power ? " bound" : "");
  for (double eps : {0.5, 0.25, 0.125, 0.1, 0.05}) {
    std::printf("%-8g %-10.4f", eps, effective_sparsity(h, eps));
    if (power) std::printf(" %.4f", power_law_sparsity_bound(g.d, g.k, g.alpha, eps));
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_trotter(const Common& c) {
  TrotterScanConfig cfg;
  if (!c.config.empty()) cfg = trotter_scan_from_json(parse_json_strict(read_text(c.config), c.config));
  if (c.seed) cfg.seeds = {*c.seed};
  const auto csv = trotter_csv(run_trotter_scan(cfg));
  fs::create_directories(c.out);
  write_text((fs::path(c.out) / "trotter_scan.csv").string(), csv);
  std::cout << csv;
  return kExitOk;
}

int cmd_verify() {
  bool ok = true;
  for (const auto& r : run_all_suites()) {
    std::printf("%-4s %-22s checks=%-6lld worst=%.3g %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                static_cast<long long>(r.checks), r.worst, r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitSuiteFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian learning from real-time evolution: generators, learners, baselines, checks"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a Hamiltonian file");
  g->add_option("--family", gen.family, "low-intersection | power-law");
  g->add_option("--n", gen.n, "qubits");
  g->add_option("--d", gen.d, "lattice dimension (power-law)");
  g->add_option("--k", gen.k, "locality");
  g->add_option("--alpha", gen.alpha, "decay exponent (power-law)");
  g->add_option("--degree", gen.degree, "dual-graph degree bound (low-intersection)");
  g->add_option("--coeff-min", gen.coeff_min, "smallest |coefficient| (low-intersection)");
  g->add_option("--coeff-max", gen.coeff_max, "largest |coefficient| (low-intersection)");
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--out", gen.out, "output directory");

  Common learn, structure, baseline, trotter;
  auto* l = app.add_subcommand("learn", "bootstrapped learner over the config's eps list and seeds");
  add_common(l, learn, true);
  auto* s = app.add_subcommand("structure", "learn in structure-learning mode (support unknown)");
  add_common(s, structure, true);
  auto* b = app.add_subcommand("baseline", "single-scale derivative-estimation baseline");
  add_common(b, baseline, true);
  auto* t = app.add_subcommand("trotter-scan", "residual of the first-order expansion over eta/s/t grids");
  add_common(t, trotter, false);
  auto* v = app.add_subcommand("verify", "run every property suite; exit 1 on any failure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (l->parsed()) return cmd_sweep(learn, "learn", std::nullopt, false);
    if (s->parsed()) return cmd_sweep(structure, "structure", LearnMode::StructureLearning, false);
    if (b->parsed()) return cmd_sweep(baseline, "baseline", std::nullopt, true);
    if (t->parsed()) return cmd_trotter(trotter);
    if (v->parsed()) return cmd_verify();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapacityError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GenerationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSuiteFailure;
  }
  return kExitConfig;
}
