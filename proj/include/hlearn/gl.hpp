#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hlearn/device.hpp"
#include "hlearn/errors.hpp"
#include "hlearn/pauli.hpp"
#include "hlearn/random.hpp"
#include "hlearn/shadows.hpp"

namespace hlearn {

/// Multipliers applied to the literal partition count p and inner count q.
struct GLScale {
  double partitions = 1.0;
  double inner = 1.0;
};

/// Chernoff constant for p: a Fail instance exceeds the per-partition threshold with probability
/// <= 0.2·54^-k, a Pass instance with >= 0.5·54^-k; the cut sits at 54^-k/3 and the slower of the
/// two tails decays as exp(-p·54^-k/36).
inline constexpr double kGLChernoff = 36.0;

inline double gl_hoeffding_denominator(int k) {
  return 10000.0 * std::pow(6.0, k) * 2.0 * std::pow(3.0, 2.0 * (k + 1));
}

/// Least q with 2·exp(-q γ² / (10000·6^k·2·3^{2(k+1)})) <= 1/(100·54^k).
inline std::int64_t gl_inner_count_literal(int k, double gamma) {
  const double d = gl_hoeffding_denominator(k);
  const double target = 1.0 / (100.0 * std::pow(54.0, k));
  auto ok = [&](double q) { return 2.0 * std::exp(-q * gamma * gamma / d) <= target; };
  auto q = static_cast<std::int64_t>(std::ceil(d * std::log(200.0 * std::pow(54.0, k)) / (gamma * gamma)));
  while (q > 1 && ok(static_cast<double>(q - 1))) --q;
  while (!ok(static_cast<double>(q))) ++q;
  return q;
}

inline void check_gl_params(int k, double gamma, double delta) {
  if (k < 1) throw ParameterError("GL: locality must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("GL: gamma and delta must lie in (0, 1)");
  }
}

inline std::int64_t gl_inner_count(int k, double gamma, const GLScale& scale) {
  check_gl_params(k, gamma, 0.5);
  if (!(scale.inner > 0.0)) throw ParameterError("GL: inner scale must be positive");
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(scale.inner * gl_inner_count_literal(k, gamma))));
}

/// ceil(scale · 36·54^k · ln(n^{k+1}/δ)).
inline std::int64_t gl_partition_count(int n, int k, double delta, const GLScale& scale) {
  check_gl_params(k, 0.5, delta);
  if (!(scale.partitions > 0.0)) throw ParameterError("GL: partition scale must be positive");
  const double p = scale.partitions * kGLChernoff * std::pow(54.0, k) *
                   std::log(std::pow(static_cast<double>(n), k + 1) / delta);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(p)));
}

struct GLParams {
  int k_loc = 1;
  double gamma = 0.1;
  double delta = 0.1;
  std::int64_t p = 0;
  std::int64_t q = 0;
};

/// Partition T ⊆ [n] with the prep fixed on T: basis letters and signs stored as masks
/// restricted to T.
struct OuterPrep {
  Mask partition = 0;
  Mask ax = 0, az = 0, vneg = 0;
};

class GLDataset {
 public:
  GLDataset() = default;
  GLDataset(int n, GLParams params, std::vector<OuterPrep> outer, const std::vector<ShotRecord>& shots)
      : n_(n), params_(params), outer_(std::move(outer)) {
    params_.p = static_cast<std::int64_t>(outer_.size());
    if (outer_.empty() || shots.size() % outer_.size() != 0) {
      throw ParameterError("GLDataset: shot count is not a multiple of the partition count");
    }
    params_.q = static_cast<std::int64_t>(shots.size() / outer_.size());
    packed_.n = n;
    for (const auto& r : shots) packed_.push(r);
  }

  int num_qubits() const { return n_; }
  const GLParams& params() const { return params_; }
  const std::vector<OuterPrep>& outer() const { return outer_; }
  std::size_t size() const { return packed_.size(); }
  std::vector<ShotRecord> shots() const { return packed_.records(); }
  const PackedShots& packed() const { return packed_; }

 private:
  int n_ = 0;
  GLParams params_;
  std::vector<OuterPrep> outer_;
  PackedShots packed_;
};

/// Draws the outer randomness (T, A_T, v_T) for one partition.
inline OuterPrep random_outer(int n, Rng& rng) {
  OuterPrep o;
  for (int q = 0; q < n; ++q) {
    if (rng.coin()) o.partition |= Mask{1} << q;
  }
  const auto req = random_request(n, rng);
  o.ax = req.prep.basis.x_mask() & o.partition;
  o.az = req.prep.basis.z_mask() & o.partition;
  o.vneg = req.prep.signs & o.partition;
  return o;
}

/// Inner prep: the outer prep on T, fresh uniform letters and signs elsewhere.
inline EigenPrep inner_prep(int n, const OuterPrep& o, Rng& rng) {
  const auto req = random_request(n, rng);
  const Mask rest = low_bits(n) & ~o.partition;
  return EigenPrep(PauliString(n, o.ax | (req.prep.basis.x_mask() & rest),
                               o.az | (req.prep.basis.z_mask() & rest)),
                   o.vneg | (req.prep.signs & rest));
}

inline GLDataset build_gl_dataset_counts(Device& device, const Evolution& evo, int k_loc,
                                         double gamma, double delta, std::int64_t p,
                                         std::int64_t q, std::uint64_t seed, int workers = 1) {
  check_gl_params(k_loc, gamma, delta);
  if (p < 1 || q < 1) throw ParameterError("GL: p and q must be positive");
  check_dataset_size(static_cast<double>(p) * static_cast<double>(q), "build_gl_dataset");
  const int n = device.num_qubits();
  Rng rng(seed);
  std::vector<OuterPrep> outer;
  std::vector<CircuitRequest> requests;
  requests.reserve(static_cast<std::size_t>(p * q));
  for (std::int64_t k = 0; k < p; ++k) {
    outer.push_back(random_outer(n, rng));
    for (std::int64_t l = 0; l < q; ++l) {
      const EigenPrep prep = inner_prep(n, outer.back(), rng);
      requests.push_back({prep, random_request(n, rng).basis});
    }
  }
  return GLDataset(n, GLParams{k_loc, gamma, delta, p, q}, std::move(outer),
                   device.run_circuits(requests, evo, workers));
}

inline GLDataset build_gl_dataset(Device& device, const Evolution& evo, int k_loc, double gamma,
                                  double delta, const GLScale& scale, std::uint64_t seed,
                                  int workers = 1) {
  const auto p = gl_partition_count(device.num_qubits(), k_loc, delta, scale);
  const auto q = gl_inner_count(k_loc, gamma, scale);
  return build_gl_dataset_counts(device, evo, k_loc, gamma, delta, p, q, seed, workers);
}

enum class GLOutcome { Pass, Fail };

struct GLVerdict {
  GLOutcome value = GLOutcome::Fail;
  double statistic = 0.0;  // fraction of partitions with |μ_k| above the per-partition cut
  double threshold = 0.0;  // Pass iff statistic > threshold

  bool pass() const { return value == GLOutcome::Pass; }
};

/// μ_k for every partition (0 where T_k meets supp X).
inline std::vector<double> gl_partition_means(const GLDataset& ds, const PauliString& x,
                                              const PauliString& p) {
  const auto q = static_cast<std::size_t>(ds.params().q);
  const double unit = pow3(x.weight() + p.weight()) / static_cast<double>(q);
  std::vector<double> mu(ds.outer().size(), 0.0);
  for (std::size_t k = 0; k < ds.outer().size(); ++k) {
    if ((ds.outer()[k].partition & x.support_mask()) != 0) continue;
    mu[k] = static_cast<double>(ds.packed().signed_matches(k * q, (k + 1) * q, x, p)) * unit;
  }
  return mu;
}

inline GLVerdict gl_query(const GLDataset& ds, const PauliString& x, const PauliString& p) {
  if (x.num_qubits() != ds.num_qubits() || p.num_qubits() != ds.num_qubits()) {
    throw DimensionError("gl_query: qubit count mismatch");
  }
  const int k = ds.params().k_loc;
  if (x.weight() > k || p.weight() > 1) {
    throw QueryError("gl_query: (" + x.str() + ", " + p.str() + ") exceeds the dataset locality");
  }
  const double cut = 0.1 * ds.params().gamma / std::pow(std::sqrt(6.0), k);
  std::int64_t above = 0;
  for (double m : gl_partition_means(ds, x, p)) {
    if (std::abs(m) > cut) ++above;
  }
  GLVerdict v;
  v.statistic = static_cast<double>(above) / static_cast<double>(ds.outer().size());
  v.threshold = 1.0 / (3.0 * std::pow(54.0, k));
  v.value = v.statistic > v.threshold ? GLOutcome::Pass : GLOutcome::Fail;
  return v;
}

/// POVM dataset for weight queries on an observable O.
struct PovmDataset {
  int n = 0;
  GLParams params;
  std::vector<OuterPrep> outer;
  std::vector<EigenPrep> preps;  // p·q, partition-major
  std::vector<int> outcomes;
};

/// q = ceil(scale·2·3^{2k+2}/γ).
inline std::int64_t weight_inner_count(int k, double gamma, const GLScale& scale) {
  check_gl_params(k, gamma, 0.5);
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(scale.inner * 2.0 * std::pow(3.0, 2 * k + 2) / gamma)));
}

/// p = ceil(scale·3^{2k+2}/γ²·ln(2(3n)^k/δ)).
inline std::int64_t weight_partition_count(int n, int k, double gamma, double delta,
                                           const GLScale& scale) {
  check_gl_params(k, gamma, delta);
  const double p = scale.partitions * std::pow(3.0, 2 * k + 2) / (gamma * gamma) *
                   std::log(2.0 * std::pow(3.0 * n, k) / delta);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(p)));
}

inline PovmDataset build_povm_dataset(Device& device, const PovmObservable& o, int k_loc,
                                      double gamma, double delta, const GLScale& scale,
                                      std::uint64_t seed, int workers = 1) {
  const int n = device.num_qubits();
  PovmDataset ds;
  ds.n = n;
  ds.params = GLParams{k_loc, gamma, delta, weight_partition_count(n, k_loc, gamma, delta, scale),
                       weight_inner_count(k_loc, gamma, scale)};
  check_dataset_size(static_cast<double>(ds.params.p) * static_cast<double>(ds.params.q), "build_povm_dataset");
  Rng rng(seed);
  for (std::int64_t k = 0; k < ds.params.p; ++k) {
    ds.outer.push_back(random_outer(n, rng));
    for (std::int64_t l = 0; l < ds.params.q; ++l) ds.preps.push_back(inner_prep(n, ds.outer.back(), rng));
  }
  ds.outcomes = device.run_povms(ds.preps, o, workers);
  return ds;
}

/// 3^{-|X|}·(1/p)Σ_k μ_k², an estimate of Σ_{Q ⊇ X} c_Q² / 6^{|supp Q|}.
/// The raw mean of μ_k² concentrates on 3^{|X|} times that sum: conditioned on T ∩ supp X = ∅,
/// a Q ⊇ X survives with probability 6^{-|supp Q \ supp X|}, and the conditioning costs 2^{-|X|}.
inline double weight_query(const PovmDataset& ds, const PauliString& x) {
  if (x.num_qubits() != ds.n) throw DimensionError("weight_query: qubit count mismatch");
  if (x.weight() > ds.params.k_loc) throw QueryError("weight_query: X exceeds the dataset locality");
  const auto q = static_cast<std::size_t>(ds.params.q);
  const Mask sx = x.support_mask();
  double acc = 0.0;
  for (std::size_t k = 0; k < ds.outer.size(); ++k) {
    if ((ds.outer[k].partition & sx) != 0) continue;
    std::int64_t signed_count = 0;
    for (std::size_t l = k * q; l < (k + 1) * q; ++l) {
      const EigenPrep& a = ds.preps[l];
      if ((a.basis.x_mask() & sx) != x.x_mask() || (a.basis.z_mask() & sx) != x.z_mask()) continue;
      const int s = sign_product(a.signs, sx) * ds.outcomes[l];
      signed_count += s;
    }
    const double mu = pow3(x.weight()) * static_cast<double>(signed_count) / static_cast<double>(q);
    acc += mu * mu;
  }
  return acc / static_cast<double>(ds.outer.size()) / pow3(x.weight());
}

inline double weight_estimate(Device& device, const PovmObservable& o, const PauliString& x,
                              int k_loc, double gamma, double delta, const GLScale& scale,
                              std::uint64_t seed, int workers = 1) {
  if (x.weight() > k_loc) throw QueryError("weight_estimate: X exceeds k_loc");
  return weight_query(build_povm_dataset(device, o, k_loc, gamma, delta, scale, seed, workers), x);
}

/// Σ_{Q ⊇ X} c_Q² / 6^{|supp Q|} from an exact decomposition.
inline double exact_weight(const SparsePauliSum& c, double identity_coeff, const PauliString& x) {
  double acc = x.is_identity() ? identity_coeff * identity_coeff : 0.0;
  for (const auto& [q, v] : c) {
    if (subset(x, q)) acc += v * v / std::pow(6.0, q.weight());
  }
  return acc;
}

}  // namespace hlearn
