#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hlearn/errors.hpp"
#include "hlearn/pauli.hpp"

namespace hlearn {

/// Real linear combination of non-identity Pauli strings, H = Σ λ_a E_a.
/// Keys iterate in canonical order; a coefficient that becomes exactly 0.0 is erased.
class SparsePauliSum {
 public:
  using Map = std::map<PauliString, double>;

  SparsePauliSum() = default;
  explicit SparsePauliSum(int n) : n_(n) {
    if (n < 0 || n > kMaxQubits) throw ParameterError("SparsePauliSum: bad qubit count");
  }

  SparsePauliSum(int n, std::initializer_list<std::pair<PauliString, double>> terms)
      : SparsePauliSum(n) {
    for (const auto& [p, c] : terms) add(p, c);
  }

  /// Convenience for tests and literals: {{"XZ", 0.5}, {"IY", -1.0}}.
  SparsePauliSum(int n, std::initializer_list<std::pair<const char*, double>> terms)
      : SparsePauliSum(n) {
    for (const auto& [s, c] : terms) add(PauliString::parse(s), c);
  }

  int num_qubits() const { return n_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const Map& terms() const { return terms_; }
  Map::const_iterator begin() const { return terms_.begin(); }
  Map::const_iterator end() const { return terms_.end(); }

  double coeff(const PauliString& p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? 0.0 : it->second;
  }
  bool contains(const PauliString& p) const { return terms_.count(p) != 0; }

  void add(const PauliString& p, double c) {
    check_key(p);
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(p, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  void set(const PauliString& p, double c) {
    check_key(p);
    if (c == 0.0) {
      terms_.erase(p);
    } else {
      terms_[p] = c;
    }
  }

  void erase(const PauliString& p) { terms_.erase(p); }

  /// Maximum support size over terms (0 for the empty sum).
  int locality() const {
    int k = 0;
    for (const auto& [p, c] : terms_) k = std::max(k, p.weight());
    return k;
  }

  std::vector<PauliString> keys() const {
    std::vector<PauliString> out;
    out.reserve(terms_.size());
    for (const auto& [p, c] : terms_) out.push_back(p);
    return out;
  }

  SparsePauliSum scaled(double factor) const {
    SparsePauliSum out(n_);
    for (const auto& [p, c] : terms_) out.add(p, factor * c);
    return out;
  }

  SparsePauliSum& operator+=(const SparsePauliSum& other) {
    check_n(other);
    for (const auto& [p, c] : other.terms_) add(p, c);
    return *this;
  }
  SparsePauliSum& operator-=(const SparsePauliSum& other) {
    check_n(other);
    for (const auto& [p, c] : other.terms_) add(p, -c);
    return *this;
  }
  friend SparsePauliSum operator+(SparsePauliSum a, const SparsePauliSum& b) { return a += b; }
  friend SparsePauliSum operator-(SparsePauliSum a, const SparsePauliSum& b) { return a -= b; }
  friend bool operator==(const SparsePauliSum&, const SparsePauliSum&) = default;

  void check_n(const SparsePauliSum& other) const {
    if (other.n_ != n_) {
      throw DimensionError("SparsePauliSum operands on " + std::to_string(n_) + " and " +
                           std::to_string(other.n_) + " qubits");
    }
  }

 private:
  void check_key(const PauliString& p) const {
    if (p.num_qubits() != n_) throw DimensionError("SparsePauliSum: key qubit count mismatch");
    if (p.is_identity()) throw ParameterError("SparsePauliSum: identity term is not allowed");
  }

  int n_ = 0;
  Map terms_;
};

/// Largest |a_P - b_P| over the union of keys (‖a - b‖_∞ on coefficient vectors).
inline double linf_distance(const SparsePauliSum& a, const SparsePauliSum& b) {
  a.check_n(b);
  double worst = 0.0;
  for (const auto& [p, c] : a) worst = std::max(worst, std::abs(c - b.coeff(p)));
  for (const auto& [p, c] : b) {
    if (!a.contains(p)) worst = std::max(worst, std::abs(c));
  }
  return worst;
}

/// sqrt(Σ c²): the normalized Frobenius norm (1/√2^n)‖H‖_F.
inline double coefficient_norm(const SparsePauliSum& h) {
  double s = 0.0;
  for (const auto& [p, c] : h) s += c * c;
  return std::sqrt(s);
}

/// Per-site sums Σ_{terms ∋ i} f(coefficient).
template <typename F>
std::vector<double> per_site_sums(const SparsePauliSum& h, F&& f) {
  std::vector<double> sums(static_cast<std::size_t>(h.num_qubits()), 0.0);
  for (const auto& [p, c] : h) {
    const double v = f(c);
    for (int q : p.support()) sums[static_cast<std::size_t>(q)] += v;
  }
  return sums;
}

/// max_i Σ_{terms ∋ i} |λ|.
inline double local_norm_1(const SparsePauliSum& h) {
  const auto sums = per_site_sums(h, [](double c) { return std::abs(c); });
  return sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
}

/// max_i sqrt(Σ_{terms ∋ i} λ²).
inline double local_norm_2(const SparsePauliSum& h) {
  const auto sums = per_site_sums(h, [](double c) { return c * c; });
  return sums.empty() ? 0.0 : std::sqrt(*std::max_element(sums.begin(), sums.end()));
}

/// Clamp every coefficient to [-eps, eps].
inline SparsePauliSum clip(const SparsePauliSum& h, double eps) {
  if (!(eps > 0.0)) throw ParameterError("clip: eps must be positive");
  SparsePauliSum out(h.num_qubits());
  for (const auto& [p, c] : h) out.add(p, std::clamp(c, -eps, eps));
  return out;
}

enum class SparsityForm {
  PerSite,    // max(1, max_i Σ_{terms ∋ i} min(1, λ²/ε²))
  GlobalSum,  // max(1, Σ_a min(1, λ²/ε²)), kept for comparison only
};

inline double effective_sparsity(const SparsePauliSum& h, double eps,
                                 SparsityForm form = SparsityForm::PerSite) {
  if (!(eps > 0.0)) throw ParameterError("effective_sparsity: eps must be positive");
  const auto weight = [eps](double c) { return std::min(1.0, c * c / (eps * eps)); };
  double s = 0.0;
  if (form == SparsityForm::GlobalSum) {
    for (const auto& [p, c] : h) s += weight(c);
  } else {
    const auto sums = per_site_sums(h, weight);
    if (!sums.empty()) s = *std::max_element(sums.begin(), sums.end());
  }
  return std::max(1.0, s);
}

/// Pauli-basis expansion of i·[H, G]. Storing i·[·,·] keeps every coefficient real:
/// for anticommuting E, F we have [E, F] = 2·(±i)·R, so i[E, F] = ∓2·R.
inline SparsePauliSum commutator_sum(const SparsePauliSum& h, const SparsePauliSum& g) {
  h.check_n(g);
  SparsePauliSum out(h.num_qubits());
  for (const auto& [e, a] : h) {
    for (const auto& [f, b] : g) {
      auto comm = commutator(e, f);
      if (!comm) continue;
      const Phase times_i = Phase::i() * comm->first;
      out.add(comm->second, 2.0 * times_i.sign() * a * b);
    }
  }
  return out;
}

/// i^order·[H, X]_order, iterating commutator_sum(H, ·).
inline SparsePauliSum nested_commutator(const SparsePauliSum& h, const SparsePauliSum& x,
                                        int order) {
  if (order < 1) throw ParameterError("nested_commutator: order must be >= 1");
  SparsePauliSum acc = commutator_sum(h, x);
  for (int k = 2; k <= order; ++k) acc = commutator_sum(h, acc);
  return acc;
}

/// Coefficients of a single Pauli as a one-term sum.
inline SparsePauliSum single_term(const PauliString& p, double c = 1.0) {
  SparsePauliSum out(p.num_qubits());
  out.add(p, c);
  return out;
}

/// Drop every coefficient with |c| <= threshold.
inline SparsePauliSum round_small(const SparsePauliSum& h, double threshold) {
  SparsePauliSum out(h.num_qubits());
  for (const auto& [p, c] : h) {
    if (std::abs(c) > threshold) out.add(p, c);
  }
  return out;
}

}  // namespace hlearn
