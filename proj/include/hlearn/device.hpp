#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hlearn/dense.hpp"
#include "hlearn/errors.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/pauli.hpp"
#include "hlearn/random.hpp"

namespace hlearn {

/// Resources spent on the unknown evolution.
struct ResourceLedger {
  double total_evolution_time = 0.0;
  double min_applied_t = std::numeric_limits<double>::infinity();
  std::int64_t experiment_count = 0;

  void record(double t, int s) {
    total_evolution_time += s * t;
    if (s > 0) min_applied_t = std::min(min_applied_t, t);
    ++experiment_count;
  }

  /// `count` experiments with the same (t, s); one multiplication keeps totals independent of batching.
  void record_batch(double t, int s, std::int64_t count) {
    if (count <= 0) return;
    total_evolution_time += static_cast<double>(count) * s * t;
    if (s > 0) min_applied_t = std::min(min_applied_t, t);
    experiment_count += count;
  }

  void merge(const ResourceLedger& other) {
    total_evolution_time += other.total_evolution_time;
    min_applied_t = std::min(min_applied_t, other.min_applied_t);
    experiment_count += other.experiment_count;
  }
};

/// Caller-visible part of an alternating evolution; the device supplies the hidden H.
struct Evolution {
  SparsePauliSum h0;
  double t = 1.0;
  int s = 1;
};

/// One run of C(A, v, B, Z): outcome bit q set means w_q = -1.
struct ShotRecord {
  EigenPrep prep;
  PauliString basis;
  Mask outcome = 0;

  int w(int q) const { return ((outcome >> q) & 1U) ? -1 : 1; }
};

struct CircuitRequest {
  EigenPrep prep;
  PauliString basis;
};

struct DeviceConfig {
  SparsePauliSum hidden;
  std::uint64_t seed = 0;
  double spam_tv = 0.0;  // weight of the noise distribution in the outcome mixture
};

/// Bounded observable for POVM access; validated once at construction (Hermitian, ‖O‖ <= 1).
class PovmObservable {
 public:
  explicit PovmObservable(DenseOperator o) : o_(std::move(o)) {
    check_capacity(o_.n);
    if ((o_.m - o_.m.adjoint()).norm() > 1e-10) throw ParameterError("PovmObservable: O is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(o_.m, Eigen::EigenvaluesOnly);
    const double norm = solver.eigenvalues().cwiseAbs().maxCoeff();
    if (norm > 1.0 + 1e-10) {
      throw ParameterError("PovmObservable: operator norm " + std::to_string(norm) + " exceeds 1");
    }
  }

  const DenseOperator& op() const { return o_; }
  int num_qubits() const { return o_.n; }

 private:
  DenseOperator o_;
};

/// |A, v> as a product state vector.
inline Vector product_state(const EigenPrep& prep) {
  const int n = prep.num_qubits();
  check_capacity(n);
  Vector psi = Vector::Ones(1);
  const double r = 1.0 / std::sqrt(2.0);
  for (int q = n - 1; q >= 0; --q) {
    const double v = prep.sign(q);
    Eigen::Vector2cd local;
    switch (prep.basis.letter(q)) {
      case PauliLetter::X: local << r, v * r; break;
      case PauliLetter::Y: local << r, cplx(0.0, v * r); break;
      default: local << (v > 0 ? 1.0 : 0.0), (v > 0 ? 0.0 : 1.0); break;
    }
    // kron(psi_high, local): qubit q becomes the new least significant factor.
    Vector next(psi.size() * 2);
    for (Eigen::Index a = 0; a < psi.size(); ++a) {
      next(2 * a) = psi(a) * local(0);
      next(2 * a + 1) = psi(a) * local(1);
    }
    psi = std::move(next);
  }
  return psi;
}

/// Applies the single-qubit gate g to qubit q.
inline void apply_1q(Vector& psi, int q, const Eigen::Matrix2cd& g) {
  const Eigen::Index bit = Eigen::Index{1} << q;
  for (Eigen::Index x = 0; x < psi.size(); ++x) {
    if (x & bit) continue;
    const cplx a = psi(x);
    const cplx b = psi(x | bit);
    psi(x) = g(0, 0) * a + g(0, 1) * b;
    psi(x | bit) = g(1, 0) * a + g(1, 1) * b;
  }
}

/// Rotation taking the +1/-1 eigenvectors of `letter` to |0>/|1>.
inline Eigen::Matrix2cd basis_rotation(PauliLetter letter) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd g;
  switch (letter) {
    case PauliLetter::X: g << r, r, r, -r; break;                                  // H
    case PauliLetter::Y: g << r, cplx(0.0, -r), r, cplx(0.0, r); break;            // H·S†
    default: g = Eigen::Matrix2cd::Identity(); break;
  }
  return g;
}

/// Outcome distribution of measuring psi in basis B, indexed by the outcome mask.
inline std::vector<double> outcome_distribution(Vector psi, const PauliString& basis) {
  for (int q = 0; q < basis.num_qubits(); ++q) apply_1q(psi, q, basis_rotation(basis.letter(q)));
  std::vector<double> p(static_cast<std::size_t>(psi.size()));
  for (Eigen::Index x = 0; x < psi.size(); ++x) p[static_cast<std::size_t>(x)] = std::norm(psi(x));
  return p;
}

inline Mask sample_index(const std::vector<double>& p, double u) {
  double total = 0.0;
  for (double v : p) total += v;
  double acc = 0.0;
  const double target = u * total;
  for (std::size_t x = 0; x < p.size(); ++x) {
    acc += p[x];
    if (target < acc) return static_cast<Mask>(x);
  }
  // Rounding can leave target == total; fall back to the last outcome with mass.
  for (std::size_t x = p.size(); x-- > 0;) {
    if (p[x] > 0.0) return static_cast<Mask>(x);
  }
  return 0;
}

/// Simulated device holding a hidden Hamiltonian. Every circuit is C(A, v, B, Z) with
/// Z = (e^{-iHt} e^{iH0 t})^s; outcomes are exact Born samples (optionally SPAM-mixed).
class Device {
 public:
  explicit Device(DeviceConfig config)
      : config_(std::move(config)), spectrum_(config_.hidden) {
    if (config_.spam_tv < 0.0 || config_.spam_tv >= 1.0) {
      throw ParameterError("Device: spam_tv must lie in [0, 1)");
    }
    Rng noise(splitmix64(config_.seed ^ 0x5A5A5A5AULL));
    noise_flip_.resize(static_cast<std::size_t>(num_qubits()));
    for (auto& f : noise_flip_) f = noise.uniform(0.0, 0.5);
  }

  Device(const Device&) = delete;
  Device& operator=(const Device&) = delete;

  int num_qubits() const { return config_.hidden.num_qubits(); }
  double spam_tv() const { return config_.spam_tv; }

  /// One circuit; consumes the next experiment index.
  ShotRecord run_circuit(const EigenPrep& prep, const PauliString& basis, const Evolution& evo) {
    return run_circuits({CircuitRequest{prep, basis}}, evo).front();
  }

  /// A batch of circuits under one evolution. Experiment indices are reserved up front so the
  /// samples do not depend on `workers`.
  std::vector<ShotRecord> run_circuits(const std::vector<CircuitRequest>& requests,
                                       const Evolution& evo, int workers = 1) {
    validate(evo);
    for (const auto& r : requests) check_request(r);
    const auto z = unitary(evo);
    const std::uint64_t base = reserve(requests.size());
    std::vector<ShotRecord> out(requests.size());
    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        Rng rng = Rng::stream(config_.seed, base + i);
        const Vector psi = z->m * product_state(requests[i].prep);
        auto dist = outcome_distribution(psi, requests[i].basis);
        Mask w = sample_index(dist, rng.uniform());
        if (config_.spam_tv > 0.0 && rng.uniform() < config_.spam_tv) w = noise_sample(rng);
        out[i] = ShotRecord{requests[i].prep, requests[i].basis, w};
      }
    };
    parallel_chunks(requests.size(), workers, work);
    charge(evo.t, evo.s, requests.size());
    return out;
  }

  /// One POVM {(I+O)/2, (I-O)/2} measurement on |A, v>; returns ±1. Charged as an experiment
  /// without evolution time.
  int run_povm(const EigenPrep& prep, const PovmObservable& o) {
    return run_povms({prep}, o).front();
  }

  std::vector<int> run_povms(const std::vector<EigenPrep>& preps, const PovmObservable& o,
                             int workers = 1) {
    if (o.num_qubits() != num_qubits()) throw DimensionError("run_povm: qubit count mismatch");
    for (const auto& p : preps) {
      if (p.num_qubits() != num_qubits()) throw DimensionError("run_povm: prep qubit count mismatch");
    }
    const std::uint64_t base = reserve(preps.size());
    std::vector<int> out(preps.size());
    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        Rng rng = Rng::stream(config_.seed, base + i);
        const Vector psi = product_state(preps[i]);
        const double expect = psi.dot(o.op().m * psi).real();
        double p_plus = std::clamp(0.5 * (1.0 + expect), 0.0, 1.0);
        if (config_.spam_tv > 0.0) p_plus = (1.0 - config_.spam_tv) * p_plus + config_.spam_tv * 0.5;
        out[i] = rng.uniform() < p_plus ? 1 : -1;
      }
    };
    parallel_chunks(preps.size(), workers, work);
    charge(0.0, 0, preps.size());
    return out;
  }

  ResourceLedger snapshot_ledger() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return ledger_;
  }

  /// Outcome distribution actually sampled (ideal Born rule mixed with the SPAM noise).
  std::vector<double> sampled_distribution(const EigenPrep& prep, const PauliString& basis,
                                           const Evolution& evo) {
    validate(evo);
    check_request({prep, basis});
    auto p = outcome_distribution(unitary(evo)->m * product_state(prep), basis);
    if (config_.spam_tv > 0.0) {
      for (std::size_t x = 0; x < p.size(); ++x) {
        p[x] = (1.0 - config_.spam_tv) * p[x] + config_.spam_tv * noise_probability(static_cast<Mask>(x));
      }
    }
    return p;
  }

 private:
  void validate(const Evolution& evo) const {
    if (evo.h0.num_qubits() != num_qubits()) throw DimensionError("Device: H0 qubit count mismatch");
    if (!(evo.t > 0.0) || !std::isfinite(evo.t)) throw ParameterError("Device: t must be positive");
    if (evo.s < 0) throw ParameterError("Device: s must be non-negative");
  }

  void check_request(const CircuitRequest& r) const {
    if (r.prep.num_qubits() != num_qubits() || r.basis.num_qubits() != num_qubits()) {
      throw DimensionError("Device: circuit qubit count mismatch");
    }
    if (r.basis.support_mask() != low_bits(num_qubits())) {
      throw ParameterError("Device: measurement basis must be non-identity on every qubit");
    }
  }

  std::uint64_t reserve(std::size_t count) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::uint64_t base = next_index_;
    next_index_ += count;
    return base;
  }

  template <typename Work>
  void parallel_chunks(std::size_t count, int workers, Work&& work) {
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                                  std::max<std::size_t>(count, 1));
    if (w == 1) {
      work(0, count);
      return;
    }
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < w; ++k) {
      threads.emplace_back([&, k] { work(count * k / w, count * (k + 1) / w); });
    }
    for (auto& t : threads) t.join();
  }

  void charge(double t, int s, std::size_t count) {
    std::lock_guard<std::mutex> lock(mutex_);
    ledger_.record_batch(t, s, static_cast<std::int64_t>(count));
  }

  static std::string digest(const Evolution& evo) {
    std::string key;
    auto put = [&key](const void* p, std::size_t len) { key.append(static_cast<const char*>(p), len); };
    put(&evo.t, sizeof evo.t);
    put(&evo.s, sizeof evo.s);
    for (const auto& [p, c] : evo.h0) {
      const Mask x = p.x_mask(), z = p.z_mask();
      put(&x, sizeof x);
      put(&z, sizeof z);
      put(&c, sizeof c);
    }
    return key;
  }

  std::shared_ptr<const DenseOperator> unitary(const Evolution& evo) {
    const std::string key = digest(evo);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto z = std::make_shared<const DenseOperator>(
        evo.s == 0 ? DenseOperator::identity(num_qubits())
                   : alternating_unitary(spectrum_, HermitianSpectrum(evo.h0), evo.t, evo.s));
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_.size() >= 8) cache_.clear();
    cache_.emplace(key, z);
    return z;
  }

  Mask noise_sample(Rng& rng) const {
    Mask w = 0;
    for (int q = 0; q < num_qubits(); ++q) {
      if (rng.uniform() < noise_flip_[static_cast<std::size_t>(q)]) w |= Mask{1} << q;
    }
    return w;
  }

  double noise_probability(Mask w) const {
    double p = 1.0;
    for (int q = 0; q < num_qubits(); ++q) {
      const double f = noise_flip_[static_cast<std::size_t>(q)];
      p *= ((w >> q) & 1U) ? f : 1.0 - f;
    }
    return p;
  }

  DeviceConfig config_;
  HermitianSpectrum spectrum_;
  std::vector<double> noise_flip_;
  mutable std::mutex mutex_;
  ResourceLedger ledger_;
  std::uint64_t next_index_ = 0;
  std::map<std::string, std::shared_ptr<const DenseOperator>> cache_;
};

}  // namespace hlearn
