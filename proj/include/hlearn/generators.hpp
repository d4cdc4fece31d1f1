#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hlearn/errors.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/random.hpp"

namespace hlearn {

/// Open-boundary hypercubic lattice; qubit i sits at the mixed-radix coordinate of i.
class LatticeGeometry {
 public:
  explicit LatticeGeometry(std::vector<int> sides) : sides_(std::move(sides)) {
    if (sides_.empty()) throw ParameterError("LatticeGeometry: dimension must be >= 1");
    for (int s : sides_) {
      if (s < 1) throw ParameterError("LatticeGeometry: side lengths must be positive");
    }
    n_ = std::accumulate(sides_.begin(), sides_.end(), 1, std::multiplies<>());
    if (n_ > kMaxQubits) throw ParameterError("LatticeGeometry: too many sites");
  }

  /// A chain of n sites.
  static LatticeGeometry chain(int n) { return LatticeGeometry({n}); }

  int dimension() const { return static_cast<int>(sides_.size()); }
  int num_qubits() const { return n_; }
  const std::vector<int>& sides() const { return sides_; }

  std::vector<int> coordinate(int qubit) const {
    std::vector<int> c(sides_.size());
    for (std::size_t a = 0; a < sides_.size(); ++a) {
      c[a] = qubit % sides_[a];
      qubit /= sides_[a];
    }
    return c;
  }

  /// Shortest-path (L1) distance.
  int distance(int i, int j) const {
    const auto a = coordinate(i);
    const auto b = coordinate(j);
    int d = 0;
    for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
    return d;
  }

 private:
  std::vector<int> sides_;
  int n_ = 1;
};

/// Degree of the dual interaction graph: terms are vertices, edges join overlapping supports.
inline int dual_graph_max_degree(const SparsePauliSum& h) {
  const auto keys = h.keys();
  int worst = 0;
  for (std::size_t a = 0; a < keys.size(); ++a) {
    int deg = 0;
    for (std::size_t b = 0; b < keys.size(); ++b) {
      if (a != b && (keys[a].support_mask() & keys[b].support_mask()) != 0) ++deg;
    }
    worst = std::max(worst, deg);
  }
  return worst;
}

namespace detail {

inline PauliLetter random_letter(Rng& rng) {
  return static_cast<PauliLetter>(1 + rng.below(3));
}

inline PauliString random_pauli_on(int n, const std::vector<int>& qubits, Rng& rng) {
  PauliString p(n);
  for (int q : qubits) p = p.with_letter(q, random_letter(rng));
  return p;
}

inline std::vector<int> random_subset(int n, int size, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < size; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  all.resize(static_cast<std::size_t>(size));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace detail

struct LowIntersectionOptions {
  int n = 4;
  int k = 2;
  int max_degree = 2;
  double coeff_max = 0.5;  // |λ| <= coeff_max
  double coeff_min = 0.0;  // |λ| >= coeff_min
  std::uint64_t seed = 0;
  int attempts = 0;        // candidate draws; 0 means 40·n
};

/// Random k-local Hamiltonian whose dual interaction graph has degree <= max_degree.
/// Candidates with random support size in [1, k] are accepted greedily when they keep the
/// degree bound for themselves and every neighbour.
inline SparsePauliSum gen_low_intersection(const LowIntersectionOptions& opt) {
  if (opt.n < 1 || opt.n > kMaxQubits || opt.k < 1 || opt.max_degree < 0) {
    throw ParameterError("gen_low_intersection: need n in [1,16], k >= 1, max_degree >= 0");
  }
  if (!(opt.coeff_max > 0.0) || opt.coeff_min < 0.0 || opt.coeff_min > opt.coeff_max) {
    throw ParameterError("gen_low_intersection: need 0 <= coeff_min <= coeff_max, coeff_max > 0");
  }
  if (opt.k > opt.n) throw GenerationError("gen_low_intersection: locality exceeds qubit count");

  Rng rng(opt.seed);
  const int attempts = opt.attempts > 0 ? opt.attempts : 40 * opt.n;
  std::vector<PauliString> accepted;
  std::vector<int> degree;
  for (int a = 0; a < attempts; ++a) {
    const int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.k)));
    const auto qubits = detail::random_subset(opt.n, size, rng);
    const PauliString cand = detail::random_pauli_on(opt.n, qubits, rng);
    std::vector<std::size_t> neighbours;
    bool ok = true;
    for (std::size_t b = 0; b < accepted.size() && ok; ++b) {
      if (accepted[b] == cand) ok = false;
      if ((accepted[b].support_mask() & cand.support_mask()) != 0) {
        neighbours.push_back(b);
        if (degree[b] + 1 > opt.max_degree) ok = false;
      }
    }
    if (!ok || static_cast<int>(neighbours.size()) > opt.max_degree) continue;
    for (auto b : neighbours) ++degree[b];
    accepted.push_back(cand);
    degree.push_back(static_cast<int>(neighbours.size()));
  }
  if (accepted.empty()) throw GenerationError("gen_low_intersection: no term could be placed");

  SparsePauliSum h(opt.n);
  for (const auto& p : accepted) {
    const double mag = opt.coeff_min + (opt.coeff_max - opt.coeff_min) * rng.uniform();
    const double c = rng.coin() ? -mag : mag;
    h.add(p, c == 0.0 ? opt.coeff_max : c);
  }
  return h;
}

/// Pair budget max(1, dist)^-α.
inline double power_law_budget(const LatticeGeometry& g, int i, int j, double alpha) {
  return std::pow(std::max(1, g.distance(i, j)), -alpha);
}

/// Largest Σ_{terms ⊇ {i,j}} |λ| / budget(i,j) over all pairs, i == j included.
/// Values <= 1 mean the instance has α-power-law decay.
inline double power_law_audit(const SparsePauliSum& h, const LatticeGeometry& g, double alpha) {
  const int n = g.num_qubits();
  if (h.num_qubits() != n) throw DimensionError("power_law_audit: geometry/Hamiltonian mismatch");
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Mask pair = (Mask{1} << i) | (Mask{1} << j);
      double s = 0.0;
      for (const auto& [p, c] : h) {
        if ((p.support_mask() & pair) == pair) s += std::abs(c);
      }
      worst = std::max(worst, s / power_law_budget(g, i, j, alpha));
    }
  }
  return worst;
}

/// Random k-local Hamiltonian with α-power-law decay on `geometry` (α > d).
/// Every pair {i<j} receives one random Pauli covering it (plus k-2 extra random sites)
/// carrying the pair budget; every site receives one random field term. Terms are then
/// rescaled by the tightest ratio budget/load over the pairs they cover (i == j included),
/// which enforces the decay constraint exactly.
inline SparsePauliSum gen_power_law(const LatticeGeometry& geometry, int k, double alpha,
                                    std::uint64_t seed) {
  const int d = geometry.dimension();
  const int n = geometry.num_qubits();
  if (!(alpha > d)) throw ParameterError("gen_power_law: alpha must exceed the lattice dimension");
  if (k < 1 || k > n) throw ParameterError("gen_power_law: need 1 <= k <= n");

  Rng rng(seed);
  SparsePauliSum raw(n);
  for (int i = 0; i < n; ++i) {
    raw.add(PauliString::single(n, i, detail::random_letter(rng)), rng.uniform(0.5, 1.0));
  }
  if (k >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        std::vector<int> qubits{i, j};
        std::vector<int> rest;
        for (int q = 0; q < n; ++q) {
          if (q != i && q != j) rest.push_back(q);
        }
        for (int e = 0; e < k - 2 && !rest.empty(); ++e) {
          const auto pick = rng.below(rest.size());
          qubits.push_back(rest[pick]);
          rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        const double budget = power_law_budget(geometry, i, j, alpha);
        const double sign = rng.coin() ? -1.0 : 1.0;
        raw.add(detail::random_pauli_on(n, qubits, rng), sign * budget * rng.uniform(0.5, 1.0));
      }
    }
  }

  // load[i][j] = Σ |λ| over terms covering {i, j}.
  std::vector<std::vector<double>> load(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (const auto& [p, c] : raw) {
    const auto sup = p.support();
    for (int i : sup) {
      for (int j : sup) load[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += std::abs(c);
    }
  }
  SparsePauliSum out(n);
  for (const auto& [p, c] : raw) {
    double factor = 1.0;
    const auto sup = p.support();
    for (int i : sup) {
      for (int j : sup) {
        const double l = load[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        factor = std::min(factor, power_law_budget(geometry, i, j, alpha) / l);
      }
    }
    out.add(p, c * factor);
  }
  return out;
}

/// 2^{dk+1} / (ε(α-d))^{dk/(dk+(α-d))}: effective sparsity ceiling for α-power-law instances.
inline double power_law_sparsity_bound(int d, int k, double alpha, double eps) {
  const double dk = static_cast<double>(d * k);
  return std::pow(2.0, dk + 1.0) / std::pow(eps * (alpha - d), dk / (dk + (alpha - d)));
}

/// κ = dk / (dk + (α - d)).
inline double power_law_kappa(int d, int k, double alpha) {
  const double dk = static_cast<double>(d * k);
  return dk / (dk + (alpha - d));
}

}  // namespace hlearn
