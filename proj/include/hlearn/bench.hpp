#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "hlearn/dense.hpp"
#include "hlearn/device.hpp"
#include "hlearn/errors.hpp"
#include "hlearn/generators.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/io.hpp"
#include "hlearn/learner.hpp"
#include "hlearn/random.hpp"

namespace hlearn {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string fmt_num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// ---- hidden Hamiltonian sources

struct InstanceSpec {
  std::string family = "low-intersection";  // low-intersection | power-law | file
  int n = 4;
  int k = 2;
  int degree = 2;
  int d = 1;
  double alpha = 3.0;
  double coeff_min = 0.0;
  double coeff_max = 0.5;
  std::string file;
};

/// Side lengths of a d-dimensional cube holding n sites.
inline LatticeGeometry cube_geometry(int n, int d) {
  if (d < 1) throw ParameterError("lattice dimension must be >= 1");
  const int side = static_cast<int>(std::lround(std::pow(static_cast<double>(n), 1.0 / d)));
  int total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  if (total != n) throw ParameterError("n = " + std::to_string(n) + " is not a perfect d-th power");
  return LatticeGeometry(std::vector<int>(static_cast<std::size_t>(d), side));
}

inline SparsePauliSum make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  if (spec.family == "file") return load_hamiltonian(spec.file);
  if (spec.family == "low-intersection") {
    LowIntersectionOptions opt;
    opt.n = spec.n;
    opt.k = spec.k;
    opt.max_degree = spec.degree;
    opt.coeff_min = spec.coeff_min;
    opt.coeff_max = spec.coeff_max;
    opt.seed = seed;
    return gen_low_intersection(opt);
  }
  if (spec.family == "power-law") return gen_power_law(cube_geometry(spec.n, spec.d), spec.k, spec.alpha, seed);
  throw ParameterError("unknown Hamiltonian family '" + spec.family + "'");
}

// ---- sweep configuration

enum class Algorithm { Bootstrap, Baseline };

struct SweepConfig {
  InstanceSpec instance;
  Algorithm algorithm = Algorithm::Bootstrap;
  LearnMode mode = LearnMode::KnownTerms;
  std::string term_set = "support";  // support | all (KnownTerms and baseline)
  std::vector<double> eps{0.5, 0.25, 0.125};
  std::vector<std::uint64_t> seeds{0};
  double delta = 0.1;
  double spam_tv = 0.0;

  double lambda_bound = 1.0;
  double sparsity_bound = 1.0;
  double t_scale = 1.0;
  double c_exponent = 0.0;
  double shadow_scale = 1.0;
  GLScale gl_scale;
  double baseline_time_constant = 1.0;
  double baseline_shadow_scale = 1.0;

  int workers = 1;
  bool timing = false;

  /// Applies a global multiplier to every shot-count scale.
  void rescale(double f) {
    if (!(f > 0.0)) throw ParameterError("--scale must be positive");
    shadow_scale *= f;
    gl_scale.partitions *= f;
    baseline_shadow_scale *= f;
  }

  void validate() const {
    if (eps.empty() || seeds.empty()) throw ParameterError("config: eps and seeds must be non-empty");
    for (double e : eps) {
      if (!(e > 0.0 && e < 1.0)) throw ParameterError("config: every eps must lie in (0, 1)");
    }
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("config: delta must lie in (0, 1)");
    if (term_set != "support" && term_set != "all") throw ParameterError("config: term_set must be support or all");
    if (workers < 1) throw ParameterError("config: workers must be >= 1");
    if (spam_tv < 0.0 || spam_tv > 1.0) throw ParameterError("config: spam_tv must lie in [0, 1]");
    if (!(shadow_scale > 0.0 && gl_scale.partitions > 0.0 && gl_scale.inner > 0.0 &&
          baseline_shadow_scale > 0.0 && baseline_time_constant > 0.0 && t_scale > 0.0)) {
      throw ParameterError("config: scale multipliers must be positive");
    }
  }
};

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParameterError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

inline InstanceSpec instance_from_json(const json& j) {
  detail::reject_unknown(j, {"family", "n", "k", "degree", "d", "alpha", "coeff_min", "coeff_max", "file"},
                         "hamiltonian");
  InstanceSpec s;
  detail::read_opt(j, "family", s.family);
  detail::read_opt(j, "n", s.n);
  detail::read_opt(j, "k", s.k);
  detail::read_opt(j, "degree", s.degree);
  detail::read_opt(j, "d", s.d);
  detail::read_opt(j, "alpha", s.alpha);
  detail::read_opt(j, "coeff_min", s.coeff_min);
  detail::read_opt(j, "coeff_max", s.coeff_max);
  detail::read_opt(j, "file", s.file);
  if (s.family == "file" && s.file.empty()) throw ParameterError("hamiltonian: family 'file' needs a path");
  return s;
}

/// Keys: hamiltonian, mode (known | structure), term_set, eps, delta, seeds, spam_tv,
/// learner{...}, baseline{...}, workers, timing.
inline SweepConfig sweep_from_json(const json& j) {
  try {
    detail::reject_unknown(j, {"hamiltonian", "mode", "term_set", "eps", "delta", "seeds", "spam_tv", "learner",
                               "baseline", "workers", "timing", "comment"},
                           "config");
    SweepConfig c;
    if (j.contains("hamiltonian")) c.instance = instance_from_json(j.at("hamiltonian"));
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "known") c.mode = LearnMode::KnownTerms;
      else if (m == "structure") c.mode = LearnMode::StructureLearning;
      else throw ParameterError("config: mode must be known or structure");
    }
    detail::read_opt(j, "term_set", c.term_set);
    detail::read_opt(j, "eps", c.eps);
    detail::read_opt(j, "delta", c.delta);
    detail::read_opt(j, "seeds", c.seeds);
    detail::read_opt(j, "spam_tv", c.spam_tv);
    detail::read_opt(j, "workers", c.workers);
    detail::read_opt(j, "timing", c.timing);
    if (j.contains("learner")) {
      const auto& l = j.at("learner");
      detail::reject_unknown(l, {"lambda_bound", "sparsity_bound", "t_scale", "c_exponent", "shadow_scale",
                                 "gl_partition_scale", "gl_inner_scale"},
                             "learner");
      detail::read_opt(l, "lambda_bound", c.lambda_bound);
      detail::read_opt(l, "sparsity_bound", c.sparsity_bound);
      detail::read_opt(l, "t_scale", c.t_scale);
      detail::read_opt(l, "c_exponent", c.c_exponent);
      detail::read_opt(l, "shadow_scale", c.shadow_scale);
      detail::read_opt(l, "gl_partition_scale", c.gl_scale.partitions);
      detail::read_opt(l, "gl_inner_scale", c.gl_scale.inner);
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      detail::reject_unknown(b, {"time_constant", "shadow_scale"}, "baseline");
      detail::read_opt(b, "time_constant", c.baseline_time_constant);
      detail::read_opt(b, "shadow_scale", c.baseline_shadow_scale);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
}

// ---- sweeps

struct RunRecord {
  int n = 0;
  int k = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::string mode;
  SparsePauliSum truth;
  LearnResult result;
  double linf_error = 0.0;
  double wall_seconds = 0.0;

  bool support_exact() const { return result.estimate.keys() == truth.keys(); }
};

inline std::vector<PauliString> term_list(const SparsePauliSum& truth, const std::string& term_set, int k) {
  if (term_set == "all") return enumerate_paulis(truth.num_qubits(), k, 1);
  auto keys = truth.keys();
  if (keys.empty()) throw ParameterError("term_set 'support' on an empty Hamiltonian");
  return keys;
}

inline RunRecord run_one(const SweepConfig& cfg, double eps, std::uint64_t seed) {
  RunRecord rec;
  rec.eps = eps;
  rec.seed = seed;
  rec.truth = make_instance(cfg.instance, seed);
  rec.n = rec.truth.num_qubits();
  rec.k = std::max(cfg.instance.k, rec.truth.locality());
  Device device({rec.truth, splitmix64(seed ^ 0x5eedULL), cfg.spam_tv});
  const auto start = std::chrono::steady_clock::now();
  if (cfg.algorithm == Algorithm::Baseline) {
    BaselineConfig b;
    b.eps = eps;
    b.delta = cfg.delta;
    b.time_constant = cfg.baseline_time_constant;
    b.shadow_scale = cfg.baseline_shadow_scale;
    b.seed = splitmix64(seed ^ 0xba5eULL);
    rec.mode = "baseline";
    rec.result = derivative_baseline(device, term_list(rec.truth, cfg.term_set, rec.k), b);
  } else {
    LearnerConfig l;
    l.k = rec.k;
    l.eps = eps;
    l.delta = cfg.delta;
    l.lambda_bound = cfg.lambda_bound;
    l.sparsity_bound = cfg.sparsity_bound;
    l.t_scale = cfg.t_scale;
    l.c_exponent = cfg.c_exponent;
    l.shadow_scale = cfg.shadow_scale;
    l.gl_scale = cfg.gl_scale;
    l.mode = cfg.mode;
    if (cfg.mode == LearnMode::KnownTerms) l.terms = term_list(rec.truth, cfg.term_set, rec.k);
    l.seed = splitmix64(seed ^ 0x1ea7ULL);
    rec.mode = mode_name(cfg.mode);
    rec.result = bootstrap_learn(device, l);
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.linf_error = linf_distance(rec.result.estimate, rec.truth);
  return rec;
}

/// Runs every (eps, seed) job on up to `workers` threads; output is ordered by (eps index, seed index).
inline std::vector<RunRecord> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t jobs = cfg.eps.size() * cfg.seeds.size();
  std::vector<RunRecord> out(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        out[i] = run_one(cfg, cfg.eps[i / cfg.seeds.size()], cfg.seeds[i % cfg.seeds.size()]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(cfg.workers, static_cast<int>(jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline const char* kLearnCsvHeader = "n,k,eps,seed,mode,linf_error,tet,min_t,experiments,wall_time";

inline std::string learn_csv(const std::vector<RunRecord>& rows, bool timing) {
  std::string s = std::string(kLearnCsvHeader) + "\n";
  for (const auto& r : rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.k) + "," + fmt_num(r.eps) + "," + std::to_string(r.seed) +
         "," + r.mode + "," + fmt_num(r.linf_error) + "," + fmt_num(r.result.ledger.total_evolution_time) + "," +
         fmt_num(r.result.ledger.min_applied_t) + "," + std::to_string(r.result.ledger.experiment_count) + "," +
         (timing ? fmt_num(r.wall_seconds) : std::string("NA")) + "\n";
  }
  return s;
}

inline std::string run_file_stem(const RunRecord& r) {
  return r.mode + "_eps" + fmt_num(r.eps) + "_seed" + std::to_string(r.seed);
}

/// Writes `<out>/<name>.csv` plus one JSON sidecar per run under `<out>/runs/`.
inline void write_sweep(const std::string& out_dir, const std::string& name, const SweepConfig& cfg,
                        const std::vector<RunRecord>& rows) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "runs");
  write_text((fs::path(out_dir) / (name + ".csv")).string(), learn_csv(rows, cfg.timing));
  for (const auto& r : rows) {
    json doc = run_report(r.result, r.eps, cfg.delta, r.mode);
    doc["seed"] = r.seed;
    doc["n"] = r.n;
    doc["k"] = r.k;
    doc["linf_error"] = r.linf_error;
    doc["support_exact"] = r.support_exact();
    doc["hidden"] = hamiltonian_to_json(r.truth);
    write_text((fs::path(out_dir) / "runs" / (run_file_stem(r) + ".json")).string(), doc.dump(2) + "\n");
  }
}

// ---- Trotter residual scans

struct TrotterScanConfig {
  InstanceSpec instance;
  std::vector<std::uint64_t> seeds{0};
  double perturbation_scale = 0.05;  // max |coefficient| of Δ = H - H0 before η scaling
  std::vector<double> eta{1.0, 0.5, 0.25};
  std::vector<int> s{4, 8};
  std::vector<double> t{0.1, 0.05};
};

inline TrotterScanConfig trotter_scan_from_json(const json& j) {
  try {
    detail::reject_unknown(j, {"hamiltonian", "seeds", "perturbation_scale", "eta", "s", "t", "comment"},
                           "trotter-scan config");
    TrotterScanConfig c;
    if (j.contains("hamiltonian")) c.instance = instance_from_json(j.at("hamiltonian"));
    detail::read_opt(j, "seeds", c.seeds);
    detail::read_opt(j, "perturbation_scale", c.perturbation_scale);
    detail::read_opt(j, "eta", c.eta);
    detail::read_opt(j, "s", c.s);
    detail::read_opt(j, "t", c.t);
    if (c.seeds.empty() || c.eta.empty() || c.s.empty() || c.t.empty()) {
      throw ParameterError("trotter-scan: seeds, eta, s and t must be non-empty");
    }
    return c;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("trotter-scan config: ") + e.what());
  }
}

struct TrotterRow {
  int n = 0;
  std::uint64_t seed = 0;
  double eta = 0.0;
  int s = 0;
  double t = 0.0;
  std::string probe;
  TrotterResidual r;
};

/// Probe: the 1-local Pauli with the largest first-order response i[Δ, P].
inline PauliString trotter_probe(const SparsePauliSum& delta) {
  PauliString best(delta.num_qubits());
  double best_norm = -1.0;
  for (const auto& p : enumerate_paulis(delta.num_qubits(), 1, 1)) {
    const double v = coefficient_norm(commutator_sum(delta, single_term(p)));
    if (v > best_norm) {
      best_norm = v;
      best = p;
    }
  }
  return best;
}

inline std::vector<TrotterRow> run_trotter_scan(const TrotterScanConfig& cfg) {
  std::vector<TrotterRow> rows;
  for (auto seed : cfg.seeds) {
    const auto h = make_instance(cfg.instance, seed);
    LowIntersectionOptions opt;
    opt.n = h.num_qubits();
    opt.k = std::min(cfg.instance.k, h.num_qubits());
    opt.max_degree = h.num_qubits();
    opt.coeff_max = cfg.perturbation_scale;
    opt.seed = splitmix64(seed ^ 0xde17aULL);
    const auto delta = gen_low_intersection(opt);
    const auto probe = trotter_probe(delta);
    for (double eta : cfg.eta) {
      for (int s : cfg.s) {
        for (double t : cfg.t) {
          TrotterRow row{h.num_qubits(), seed, eta, s, t, probe.str(), {}};
          row.r = trotter_residual({h, h - delta.scaled(eta), t, s}, probe);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

inline std::string trotter_csv(const std::vector<TrotterRow>& rows) {
  std::string s = "n,seed,eta,s,t,probe,residual,envelope\n";
  for (const auto& r : rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.seed) + "," + fmt_num(r.eta) + "," + std::to_string(r.s) +
         "," + fmt_num(r.t) + "," + r.probe + "," + fmt_num(r.r.residual) + "," + fmt_num(r.r.envelope) + "\n";
  }
  return s;
}

}  // namespace hlearn
