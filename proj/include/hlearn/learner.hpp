#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hlearn/device.hpp"
#include "hlearn/errors.hpp"
#include "hlearn/gl.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/pauli.hpp"
#include "hlearn/shadows.hpp"

namespace hlearn {

enum class LearnMode { KnownTerms, StructureLearning };

inline const char* mode_name(LearnMode m) {
  return m == LearnMode::KnownTerms ? "known" : "structure";
}

struct LearnerConfig {
  int k = 2;                    // locality
  double eps = 0.125;
  double delta = 0.1;
  double lambda_bound = 1.0;    // Λ, bound on the local 1-norm
  double sparsity_bound = 1.0;  // s, bound on the effective sparsity
  double t_scale = 1.0;         // multiplies the 1/(500·max(1, Λ/√s)·s·k^{2Ck}) step
  double c_exponent = 0.0;      // C in k^{2Ck}
  double shadow_scale = 1.0;
  GLScale gl_scale;
  LearnMode mode = LearnMode::KnownTerms;
  std::vector<PauliString> terms;  // candidate terms for KnownTerms mode
  std::uint64_t seed = 0;
  int workers = 1;

  int iterations_T() const { return static_cast<int>(std::floor(std::log2(1.0 / eps) + 1e-12)); }

  double step_t() const {
    const double amp = std::max(1.0, lambda_bound / std::sqrt(sparsity_bound));
    return t_scale / (500.0 * amp * sparsity_bound * std::pow(k, 2.0 * c_exponent * k));
  }

  double eta(int j) const { return std::ldexp(1.0, -j); }

  int slices(int j) const {
    const double amp = std::max(1.0, lambda_bound / std::sqrt(sparsity_bound));
    return static_cast<int>(std::floor(amp / eta(j) + 1e-9));
  }

  double delta_j(int j) const {
    const double m = 2.0 * (iterations_T() + 1 - j);
    return delta / (m * m);
  }

  void validate() const {
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("LearnerConfig: eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("LearnerConfig: delta must lie in (0, 1)");
    if (!(lambda_bound > 0.0) || !(sparsity_bound > 0.0)) {
      throw ParameterError("LearnerConfig: lambda_bound and sparsity_bound must be positive");
    }
    if (k < 1) throw ParameterError("LearnerConfig: k must be >= 1");
    if (!(t_scale > 0.0) || !(shadow_scale > 0.0) || c_exponent < 0.0) {
      throw ParameterError("LearnerConfig: scale multipliers must be positive");
    }
    if (mode == LearnMode::KnownTerms) {
      if (terms.empty()) throw ParameterError("LearnerConfig: KnownTerms mode needs a term list");
      for (const auto& e : terms) {
        if (e.is_identity()) throw ParameterError("LearnerConfig: identity term");
        if (e.weight() > k) throw ParameterError("LearnerConfig: term " + e.str() + " exceeds k");
      }
    }
    double budget = 0.0;
    for (int j = 0; j <= iterations_T(); ++j) budget += delta_j(j);
    if (budget > delta) throw ParameterError("LearnerConfig: per-iteration failure budget exceeds delta");
    const double st = slices(0) * step_t();
    if (!(st / 10.0 < 1.0)) throw ParameterError("LearnerConfig: s_j·t too large for the query precision");
  }
};

/// P (1-local, anticommuting with E) and Q with i·P·E = sign·Q.
struct AnticommutingPair {
  PauliString p;
  PauliString q;
  int sign = 1;
};

/// P acts on the first qubit of supp(E) (leftmost factor, the highest bit) with the first letter in
/// X, Y, Z order that differs from E's letter there.
inline AnticommutingPair choose_anticommuting_pair(const PauliString& e) {
  if (e.is_identity()) throw ParameterError("choose_anticommuting_pair: identity has no partner");
  const int qubit = std::bit_width(e.support_mask()) - 1;
  const PauliLetter own = e.letter(qubit);
  PauliLetter pick = PauliLetter::X;
  for (PauliLetter l : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z}) {
    if (l != own) {
      pick = l;
      break;
    }
  }
  const PauliString p = PauliString::single(e.num_qubits(), qubit, pick);
  const auto [phase, r] = mul(p, e);
  return {p, r, (Phase::i() * phase).sign()};
}

/// Coefficient write from a response μ ≈ (1/2^n) tr(Z†PZQ): R = (-1)^b·i·P·Q, value (-1)^b·μ/2.
struct CoefficientWrite {
  PauliString r;
  double value = 0.0;
};

inline CoefficientWrite coefficient_from_response(const PauliString& p, const PauliString& q, double mu) {
  const auto [phase, r] = mul(p, q);
  const Phase ipq = Phase::i() * phase;
  if (!ipq.is_real()) throw ParameterError("coefficient_from_response: P and Q commute");
  return {r, ipq.sign() * mu / 2.0};
}

struct StructureStats {
  std::size_t gl_queries = 0;
  std::size_t gl_passes = 0;
  std::size_t shadow_queries = 0;
};

/// Coefficients of Ĥ from shadow and GL data for Z ≈ e^{-iĤ}.
inline SparsePauliSum structure_learn(const ShadowDataset& sh, const GLDataset& gl, int k,
                                      StructureStats* stats = nullptr) {
  const int n = sh.num_qubits();
  if (gl.num_qubits() != n) throw DimensionError("structure_learn: datasets disagree on n");
  if (k < 1 || sh.params().k < k || sh.params().k_prime < 1 || gl.params().k_loc < k) {
    throw ParameterError("structure_learn: datasets built for a smaller locality than k");
  }
  StructureStats local;
  SparsePauliSum est(n);
  for (const auto& p : one_local_paulis(n)) {
    const int qubit = std::countr_zero(p.support_mask());
    std::vector<PauliString> level;
    for (PauliLetter l : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z}) {
      const auto cand = PauliString::single(n, qubit, l);
      if (cand != p) level.push_back(cand);
    }
    std::sort(level.begin(), level.end());
    std::vector<PauliString> all = level;
    for (int w = 2; w <= k; ++w) {
      std::set<PauliString> next;
      std::set<PauliString> seen;
      for (const auto& base : level) {
        for (int r = 0; r < n; ++r) {
          if ((base.support_mask() >> r) & 1U) continue;
          for (PauliLetter l : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z}) {
            const auto cand = base.with_letter(r, l);
            if (!seen.insert(cand).second) continue;
            ++local.gl_queries;
            if (gl_query(gl, cand, p).pass()) {
              ++local.gl_passes;
              next.insert(cand);
            }
          }
        }
      }
      level.assign(next.begin(), next.end());
      all.insert(all.end(), level.begin(), level.end());
    }
    for (const auto& q : all) {
      ++local.shadow_queries;
      const auto write = coefficient_from_response(p, q, shadow_query(sh, q, p));
      est.set(write.r, write.value);
    }
  }
  if (stats) *stats = local;
  return est;
}

struct IterationDiagnostics {
  int j = 0;
  double eta = 0.0;
  int s_j = 0;
  double delta_j = 0.0;
  double query_eps = 0.0;
  std::int64_t experiments = 0;
  double tet_contribution = 0.0;
  StructureStats structure;
  SparsePauliSum estimate;  // λ^{(j+1)} after rounding
};

struct LearnResult {
  SparsePauliSum estimate;
  ResourceLedger ledger;
  std::vector<IterationDiagnostics> iterations;
  double t = 0.0;
  int T = 0;
};

inline std::uint64_t iteration_seed(std::uint64_t seed, int j, int stream) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(j) * 4 + static_cast<std::uint64_t>(stream)));
}

/// Known-terms estimate of Ĥ: one shadow query per term against its (P, Q) pair.
inline SparsePauliSum known_terms_estimate(const ShadowDataset& sh, const std::vector<PauliString>& terms) {
  SparsePauliSum est(sh.num_qubits());
  for (const auto& e : terms) {
    const auto pair = choose_anticommuting_pair(e);
    const auto write = coefficient_from_response(pair.p, pair.q, shadow_query(sh, pair.q, pair.p));
    est.set(write.r, write.value);
  }
  return est;
}

/// Bootstrapped learner: iteration j learns H - H_j from (e^{-iHt} e^{iH_j t})^{s_j} at precision
/// proportional to η_j s_j t, so the step t never shrinks while the error halves.
inline LearnResult bootstrap_learn(Device& device, const LearnerConfig& cfg) {
  cfg.validate();
  const int n = device.num_qubits();
  for (const auto& e : cfg.terms) {
    if (e.num_qubits() != n) throw DimensionError("bootstrap_learn: term qubit count mismatch");
  }
  LearnResult result;
  result.T = cfg.iterations_T();
  result.t = cfg.step_t();
  const double t = result.t;
  const ResourceLedger start = device.snapshot_ledger();
  SparsePauliSum lambda(n);
  for (int j = 0; j <= result.T; ++j) {
    IterationDiagnostics diag;
    diag.j = j;
    diag.eta = cfg.eta(j);
    diag.s_j = cfg.slices(j);
    diag.delta_j = cfg.delta_j(j);
    const double st = diag.s_j * t;
    const ResourceLedger before = device.snapshot_ledger();
    const Evolution evo{lambda, t, diag.s_j};

    SparsePauliSum hat(n);
    if (cfg.mode == LearnMode::KnownTerms) {
      // μ = c_Q/2 is needed to η s t/20, i.e. c_Q to η s t/10.
      diag.query_eps = diag.eta * st / 20.0;
      int kmax = 1;
      for (const auto& e : cfg.terms) kmax = std::max(kmax, e.weight());
      const auto sh = build_shadow_dataset(device, evo, kmax, 1, 2.0 * diag.query_eps, diag.delta_j,
                                           cfg.shadow_scale, iteration_seed(cfg.seed, j, 0), cfg.workers);
      hat = known_terms_estimate(sh, cfg.terms);
    } else {
      diag.query_eps = diag.eta * st / 10.0;
      const auto sh = build_shadow_dataset(device, evo, cfg.k, 1, diag.query_eps, diag.delta_j / 2.0,
                                           cfg.shadow_scale, iteration_seed(cfg.seed, j, 0), cfg.workers);
      const auto gl = build_gl_dataset(device, evo, cfg.k, diag.query_eps, diag.delta_j / 2.0,
                                       cfg.gl_scale, iteration_seed(cfg.seed, j, 1), cfg.workers);
      hat = structure_learn(sh, gl, cfg.k, &diag.structure);
    }

    lambda += hat.scaled(1.0 / st);
    lambda = round_small(lambda, diag.eta / 4.0);

    const ResourceLedger after = device.snapshot_ledger();
    diag.experiments = after.experiment_count - before.experiment_count;
    diag.tet_contribution = after.total_evolution_time - before.total_evolution_time;
    diag.estimate = lambda;
    result.iterations.push_back(std::move(diag));
  }
  result.estimate = lambda;
  const ResourceLedger end = device.snapshot_ledger();
  result.ledger.total_evolution_time = end.total_evolution_time - start.total_evolution_time;
  result.ledger.experiment_count = end.experiment_count - start.experiment_count;
  result.ledger.min_applied_t = t;
  return result;
}

struct BaselineConfig {
  double eps = 0.1;
  double delta = 0.1;
  double time_constant = 1.0;  // t = time_constant·eps
  double shadow_scale = 1.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Single-scale derivative estimate: one shadow dataset at t = c·ε with query precision ε²,
/// coefficient λ_a ≈ (response value)/t.
inline LearnResult derivative_baseline(Device& device, const std::vector<PauliString>& terms,
                                       const BaselineConfig& cfg) {
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0) || !(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw ParameterError("derivative_baseline: eps and delta must lie in (0, 1)");
  }
  if (!(cfg.time_constant > 0.0)) throw ParameterError("derivative_baseline: time constant must be positive");
  if (terms.empty()) throw ParameterError("derivative_baseline: empty term list");
  const int n = device.num_qubits();
  int kmax = 1;
  for (const auto& e : terms) {
    if (e.is_identity()) throw ParameterError("derivative_baseline: identity term");
    if (e.num_qubits() != n) throw DimensionError("derivative_baseline: term qubit count mismatch");
    kmax = std::max(kmax, e.weight());
  }
  LearnResult result;
  result.t = cfg.time_constant * cfg.eps;
  const ResourceLedger before = device.snapshot_ledger();
  const Evolution evo{SparsePauliSum(n), result.t, 1};
  const auto sh = build_shadow_dataset(device, evo, kmax, 1, cfg.eps * cfg.eps, cfg.delta,
                                       cfg.shadow_scale, cfg.seed, cfg.workers);
  result.estimate = known_terms_estimate(sh, terms).scaled(1.0 / result.t);
  const ResourceLedger after = device.snapshot_ledger();
  result.ledger.total_evolution_time = after.total_evolution_time - before.total_evolution_time;
  result.ledger.experiment_count = after.experiment_count - before.experiment_count;
  result.ledger.min_applied_t = result.t;
  IterationDiagnostics diag;
  diag.s_j = 1;
  diag.query_eps = cfg.eps * cfg.eps;
  diag.experiments = result.ledger.experiment_count;
  diag.tet_contribution = result.ledger.total_evolution_time;
  diag.estimate = result.estimate;
  result.iterations.push_back(diag);
  return result;
}

}  // namespace hlearn
