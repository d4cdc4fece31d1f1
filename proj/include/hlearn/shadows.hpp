#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hlearn/device.hpp"
#include "hlearn/errors.hpp"
#include "hlearn/pauli.hpp"
#include "hlearn/random.hpp"

namespace hlearn {

/// Shots unpacked into parallel mask arrays for fast estimator evaluation.
struct PackedShots {
  int n = 0;
  std::vector<Mask> ax, az, vneg, bx, bz, wneg;

  void push(const ShotRecord& r) {
    ax.push_back(r.prep.basis.x_mask());
    az.push_back(r.prep.basis.z_mask());
    vneg.push_back(r.prep.signs);
    bx.push_back(r.basis.x_mask());
    bz.push_back(r.basis.z_mask());
    wneg.push_back(r.outcome);
  }
  std::size_t size() const { return ax.size(); }

  ShotRecord record(std::size_t i) const {
    return {EigenPrep(PauliString(n, ax[i], az[i]), vneg[i]), PauliString(n, bx[i], bz[i]), wneg[i]};
  }

  std::vector<ShotRecord> records() const {
    std::vector<ShotRecord> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
    return out;
  }

  /// Σ over shots in [lo, hi) of (3v)^{supp X}(3w)^{supp P}[X ⊆ A ∧ P ⊆ B], divided by 3^{|X|+|P|}:
  /// returns the signed count of matching shots.
  std::int64_t signed_matches(std::size_t lo, std::size_t hi, const PauliString& x,
                              const PauliString& p) const {
    const Mask sx = x.support_mask(), sp = p.support_mask();
    const Mask xx = x.x_mask(), xz = x.z_mask(), px = p.x_mask(), pz = p.z_mask();
    std::int64_t acc = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if ((ax[i] & sx) != xx || (az[i] & sx) != xz) continue;
      if ((bx[i] & sp) != px || (bz[i] & sp) != pz) continue;
      const int parity = popcount((vneg[i] & sx) ^ (wneg[i] & sp)) & 1;
      acc += parity ? -1 : 1;
    }
    return acc;
  }
};

/// Largest single dataset a build will attempt; beyond this the scale multipliers are wrong.
inline constexpr std::int64_t kMaxDatasetShots = 400'000'000;

inline void check_dataset_size(double shots, const char* what) {
  if (!(shots <= static_cast<double>(kMaxDatasetShots))) {
    throw CapacityError(std::string(what) + ": " + std::to_string(shots) +
                        " shots exceeds the dataset cap; lower the scale multiplier");
  }
}

inline double pow3(int e) { return std::pow(3.0, e); }

/// Single-shot estimator (3v)^{supp X}(3w)^{supp P}[X ⊆ A ∧ P ⊆ B].
inline double shadow_single(const ShotRecord& r, const PauliString& x, const PauliString& p) {
  if (!subset(x, r.prep.basis) || !subset(p, r.basis)) return 0.0;
  const int sign = sign_product(r.prep.signs, x.support_mask()) * sign_product(r.outcome, p.support_mask());
  return sign * pow3(x.weight() + p.weight());
}

/// Uniform random (A, v) and B.
inline CircuitRequest random_request(int n, Rng& rng) {
  Mask ax = 0, az = 0, bx = 0, bz = 0, v = 0;
  auto letter = [&rng](Mask& x, Mask& z, int q) {
    switch (rng.below(3)) {
      case 0: x |= Mask{1} << q; break;
      case 1: x |= Mask{1} << q; z |= Mask{1} << q; break;
      default: z |= Mask{1} << q; break;
    }
  };
  for (int q = 0; q < n; ++q) {
    letter(ax, az, q);
    if (rng.coin()) v |= Mask{1} << q;
    letter(bx, bz, q);
  }
  return {EigenPrep(PauliString(n, ax, az), v), PauliString(n, bx, bz)};
}

struct ShadowParams {
  int k = 1;        // max weight of the prepared-side Pauli X
  int k_prime = 1;  // max weight of the measured-side Pauli P
  double eps = 0.1;
  double delta = 0.1;
  double scale = 1.0;
  std::int64_t shots = 0;
};

/// ceil(scale · 2·3^{2(k+k')}/eps² · ln(2·n^{k+k'}/delta)).
inline std::int64_t shadow_shot_count(int n, int k, int k_prime, double eps, double delta,
                                      double scale) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("shadow_shot_count: eps and delta must lie in (0, 1)");
  }
  if (!(scale > 0.0)) throw ParameterError("shadow_shot_count: scale must be positive");
  if (k < 0 || k_prime < 0 || n < 1) throw ParameterError("shadow_shot_count: bad locality");
  const double kk = k + k_prime;
  const double s = scale * 2.0 * std::pow(3.0, 2.0 * kk) / (eps * eps) *
                   std::log(2.0 * std::pow(static_cast<double>(n), kk) / delta);
  check_dataset_size(s, "shadow_shot_count");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(s)));
}

class ShadowDataset {
 public:
  ShadowDataset() = default;
  ShadowDataset(int n, ShadowParams params, const std::vector<ShotRecord>& shots)
      : n_(n), params_(params) {
    params_.shots = static_cast<std::int64_t>(shots.size());
    packed_.n = n;
    for (const auto& r : shots) packed_.push(r);
  }

  int num_qubits() const { return n_; }
  const ShadowParams& params() const { return params_; }
  std::size_t size() const { return packed_.size(); }
  std::vector<ShotRecord> shots() const { return packed_.records(); }
  const PackedShots& packed() const { return packed_; }

 private:
  int n_ = 0;
  ShadowParams params_;
  PackedShots packed_;
};

/// Random-measurement dataset for Z = (e^{-iHt} e^{iH0 t})^s; `seed` drives the choice of
/// (A, v, B), the device's own seed drives the outcomes.
inline ShadowDataset build_shadow_dataset(Device& device, const Evolution& evo, int k, int k_prime,
                                          double eps, double delta, double scale,
                                          std::uint64_t seed, int workers = 1) {
  const int n = device.num_qubits();
  const std::int64_t count = shadow_shot_count(n, k, k_prime, eps, delta, scale);
  Rng rng(seed);
  std::vector<CircuitRequest> requests;
  requests.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) requests.push_back(random_request(n, rng));
  return ShadowDataset(n, ShadowParams{k, k_prime, eps, delta, scale, count},
                       device.run_circuits(requests, evo, workers));
}

/// Mean single-shot estimate; unbiased for (1/2^n) tr(P Z X Z†).
inline double shadow_query(const ShadowDataset& ds, const PauliString& x, const PauliString& p) {
  if (x.num_qubits() != ds.num_qubits() || p.num_qubits() != ds.num_qubits()) {
    throw DimensionError("shadow_query: qubit count mismatch");
  }
  if (x.weight() > ds.params().k || p.weight() > ds.params().k_prime) {
    throw QueryError("shadow_query: (" + x.str() + ", " + p.str() + ") exceeds the dataset locality");
  }
  if (ds.size() == 0) return 0.0;
  const auto matches = ds.packed().signed_matches(0, ds.packed().size(), x, p);
  return static_cast<double>(matches) * pow3(x.weight() + p.weight()) /
         static_cast<double>(ds.packed().size());
}

}  // namespace hlearn
