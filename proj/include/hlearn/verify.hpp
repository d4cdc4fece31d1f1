#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hlearn/dense.hpp"
#include "hlearn/device.hpp"
#include "hlearn/generators.hpp"
#include "hlearn/gl.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/pauli.hpp"
#include "hlearn/shadows.hpp"

namespace hlearn {

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::int64_t checks = 0;
  double worst = 0.0;  // largest observed deviation, where meaningful
  std::string detail;  // first failure
};

namespace detail {

inline SparsePauliSum random_sum(int n, int k, int terms, Rng& rng, double scale = 1.0) {
  const auto pool = enumerate_paulis(n, k, 1);
  SparsePauliSum h(n);
  for (int i = 0; i < terms; ++i) h.add(pool[rng.below(pool.size())], scale * rng.uniform(-1.0, 1.0));
  return h;
}

inline PauliString random_full_basis(int n, Rng& rng) {
  Mask x = 0, z = 0;
  for (int q = 0; q < n; ++q) {
    const auto l = rng.below(3);
    if (l != 2) x |= Mask{1} << q;
    if (l != 0) z |= Mask{1} << q;
  }
  return PauliString(n, x, z);
}

class Checker {
 public:
  explicit Checker(std::string name) { r_.name = std::move(name); }

  void expect(bool ok, const std::string& what) {
    ++r_.checks;
    if (!ok && r_.passed) {
      r_.passed = false;
      r_.detail = what;
    }
  }

  void near(double got, double want, double tol, const std::string& what) {
    const double dev = std::abs(got - want);
    r_.worst = std::max(r_.worst, dev);
    if (!(dev <= tol)) {
      std::ostringstream os;
      os << what << ": got " << got << ", expected " << want << " (tol " << tol << ")";
      expect(false, os.str());
    } else {
      ++r_.checks;
    }
  }

  SuiteResult done() { return r_; }

 private:
  SuiteResult r_;
};

}  // namespace detail

using MulFn = std::function<std::pair<Phase, PauliString>(const PauliString&, const PauliString&)>;

/// mul, commutator and eig_expect against dense matrices on every pair of Paulis for n <= 3.
/// `mul_impl` exists so a tampered product can be injected.
inline SuiteResult verify_pauli_algebra(const MulFn& mul_impl = [](const PauliString& a, const PauliString& b) {
  return mul(a, b);
}) {
  detail::Checker c("pauli_algebra");
  for (int n = 1; n <= 3; ++n) {
    const auto all = enumerate_paulis(n, n);
    std::vector<Matrix> dense;
    for (const auto& p : all) dense.push_back(dense_pauli(p).m);
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = 0; j < all.size(); ++j) {
        const auto [ph, r] = mul_impl(all[i], all[j]);
        const Matrix prod = dense[i] * dense[j];
        const Matrix want = ph.value() * dense_pauli(r).m;
        c.expect((prod - want).norm() == 0.0, "mul " + all[i].str() + "*" + all[j].str());
        const Matrix comm = prod - dense[j] * dense[i];
        const bool commute = comm.norm() == 0.0;
        c.expect(commute == all[i].commutes_with(all[j]), "commutes " + all[i].str() + "," + all[j].str());
      }
    }
    for (const auto& a : enumerate_paulis(n, n, n)) {
      for (Mask v = 0; v < (Mask{1} << n); ++v) {
        const EigenPrep prep(a, v);
        const Vector psi = product_state(prep);
        for (std::size_t j = 0; j < all.size(); ++j) {
          c.near(eig_expect(prep, all[j]), psi.dot(dense[j] * psi).real(), 1e-12, "eig_expect " + all[j].str());
        }
      }
    }
  }
  return c.done();
}

/// Σ_w w^S |B,w><B,w| = B_S ⊗ I for random full bases B and subsets S.
inline SuiteResult verify_eigenvector_sum(int n = 4, int trials = 100, std::uint64_t seed = 1) {
  detail::Checker c("eigenvector_sum");
  Rng rng(seed);
  const Mask full = low_bits(n);
  for (int trial = 0; trial < trials; ++trial) {
    const auto b = detail::random_full_basis(n, rng);
    const auto s = static_cast<Mask>(rng.below(std::uint64_t{1} << n));
    Matrix acc = Matrix::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (Mask w = 0; w <= full; ++w) {
      const Vector v = product_state(EigenPrep(b, w));
      acc += static_cast<double>(sign_product(w, s)) * v * v.adjoint();
    }
    const PauliString bs(n, b.x_mask() & s, b.z_mask() & s);
    c.near((acc - dense_pauli(bs).m).norm(), 0.0, 1e-12, "B=" + b.str() + " S=" + bs.str());
  }
  return c.done();
}

/// ‖e^{iHt}Xe^{-iHt} - X - t·i[H,X]‖ <= (t²/2)‖[H,[H,X]]‖ in normalized Frobenius norm.
inline SuiteResult verify_first_order_bound(int trials = 200, std::uint64_t seed = 2) {
  detail::Checker c("first_order_bound");
  const SparsePauliSum h1(1, {{"Z", 1.0}});
  const SparsePauliSum x1(1, {{"X", 1.0}});
  c.near(first_order_residual(h1, x1, 0.1), 0.01998, 5e-6, "analytic residual");
  c.near(first_order_bound(h1, x1, 0.1), 0.02, 1e-15, "analytic bound");
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const auto h = detail::random_sum(n, 2, 5, rng);
    const auto x = detail::random_sum(n, 2, 3, rng);
    const double t = rng.uniform(0.01, 0.3);
    const double r = first_order_residual(h, x, t), b = first_order_bound(h, x, t);
    c.expect(r <= b * (1 + 1e-12) + 1e-15, "violation at trial " + std::to_string(trial));
  }
  return c.done();
}

inline SuiteResult verify_hadamard_truncation(int trials = 30, std::uint64_t seed = 3) {
  detail::Checker c("hadamard_truncation");
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const auto h = detail::random_sum(3, 2, 4, rng);
    const auto x = detail::random_sum(3, 2, 3, rng);
    const double t = rng.uniform(0.01, 0.1);
    c.expect(hadamard_truncation_error(h, x, t, 3) < hadamard_truncation_error(h, x, t, 2), "not decreasing");
    c.near(hadamard_truncation_error(h, x, t, 12), 0.0, 1e-12, "order 12");
  }
  return c.done();
}

inline SuiteResult verify_decompose_roundtrip(int trials = 20, std::uint64_t seed = 4) {
  detail::Checker c("decompose_roundtrip");
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const auto h = detail::random_sum(n, n, 6, rng);
    c.near(linf_distance(pauli_decompose(dense_from_sum(h), n).terms, h), 0.0, 1e-13, "roundtrip");
  }
  return c.done();
}

/// Jacobi identity, and i[H, G] against dense matrix products.
inline SuiteResult verify_commutators(int trials = 50, std::uint64_t seed = 5) {
  detail::Checker c("commutators");
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const auto x = detail::random_sum(3, 2, 3, rng);
    const auto y = detail::random_sum(3, 2, 3, rng);
    const auto a = detail::random_sum(3, 2, 3, rng);
    const auto lhs = commutator_sum(x, commutator_sum(y, a)) - commutator_sum(y, commutator_sum(x, a));
    c.near(linf_distance(lhs, commutator_sum(commutator_sum(x, y), a)), 0.0, 1e-12, "Jacobi");
    const Matrix hm = dense_from_sum(x).m, am = dense_from_sum(a).m;
    const Matrix want = cplx(0, 1) * (hm * am - am * hm);
    c.near((dense_from_sum(commutator_sum(x, a)).m - want).norm(), 0.0, 1e-10, "dense commutator");
  }
  return c.done();
}

/// Averages the single-shot shadow estimator over the exact outcome distribution.
inline SuiteResult verify_shadow_unbiased(int n = 2, std::uint64_t seed = 6) {
  detail::Checker c("shadow_unbiased");
  Rng rng(seed);
  const auto h = detail::random_sum(n, 2, 4, rng);
  const auto h0 = detail::random_sum(n, 2, 2, rng);
  Device dev({h, seed, 0.0});
  const Evolution evo{h0, 0.4, 2};
  const auto z = alternating_unitary({h, h0, 0.4, 2});
  const auto bases = enumerate_paulis(n, n, n);
  const auto xs = enumerate_paulis(n, n);
  const auto ps = enumerate_paulis(n, 1);
  std::vector<double> mean(xs.size() * ps.size(), 0.0);
  const double weight = 1.0 / (std::pow(3.0, 2 * n) * std::pow(2.0, n));
  for (const auto& a : bases) {
    for (Mask v = 0; v < (Mask{1} << n); ++v) {
      const EigenPrep prep(a, v);
      for (const auto& b : bases) {
        const auto dist = dev.sampled_distribution(prep, b, evo);
        for (Mask w = 0; w < (Mask{1} << n); ++w) {
          const ShotRecord shot{prep, b, w};
          for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ps.size(); ++j) {
              mean[i * ps.size() + j] += weight * dist[w] * shadow_single(shot, xs[i], ps[j]);
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) {
      c.near(mean[i * ps.size() + j], exact_mu(ps[j], z, xs[i]), 1e-10, xs[i].str() + "," + ps[j].str());
    }
  }
  return c.done();
}

/// GL identities by enumeration over (T, A, v) for a random Hermitian O:
/// inner: E_{A_T̄, v_T̄}[3^{|X|} v^X [X ⊆ A] <A,v|O|A,v>] = Σ_Q c_Q v^{Q∩T}[Q_T ⊆ A_T ∧ Q_T̄ = X_T̄];
/// outer: E_{T, A_T, v_T}[[T ∩ X = ∅]·inner²] = 3^{|X|}·Σ_{Q ⊇ X} c_Q²/6^{|Q|}.
inline SuiteResult verify_gl_moments(int n = 3, std::uint64_t seed = 7) {
  detail::Checker c("gl_moments");
  Rng rng(seed);
  const auto dim = Eigen::Index{1} << n;
  Matrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  const DenseOperator o(n, 0.5 * (m + m.adjoint()));
  const auto dec = pauli_decompose(o, n);
  const Mask full = low_bits(n);

  // All local preps on the qubits of `mask`, weight 6^{-|mask|} each.
  auto local_preps = [n](Mask mask) {
    std::vector<std::pair<PauliString, Mask>> out{{PauliString(n), Mask{0}}};
    for (int q = 0; q < n; ++q) {
      if (!((mask >> q) & 1U)) continue;
      std::vector<std::pair<PauliString, Mask>> next;
      for (const auto& [a, v] : out) {
        for (PauliLetter l : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z}) {
          next.emplace_back(a.with_letter(q, l), v);
          next.emplace_back(a.with_letter(q, l), v | (Mask{1} << q));
        }
      }
      out = std::move(next);
    }
    return out;
  };

  for (const auto& x : enumerate_paulis(n, 2)) {
    const Mask sx = x.support_mask();
    double outer = 0.0;
    for (Mask t = 0; t <= full; ++t) {
      if (t & sx) continue;
      const auto outs = local_preps(t);
      const auto ins = local_preps(full & ~t);
      for (const auto& [at, vt] : outs) {
        double inner = 0.0;
        for (const auto& [ar, vr] : ins) {
          const EigenPrep prep(PauliString(n, at.x_mask() | ar.x_mask(), at.z_mask() | ar.z_mask()), vt | vr);
          if (!subset(x, prep.basis)) continue;
          const Vector psi = product_state(prep);
          inner += pow3(x.weight()) * sign_product(prep.signs, sx) * psi.dot(o.m * psi).real();
        }
        inner /= static_cast<double>(ins.size());
        double formula = 0.0;
        for (const auto& [q, cq] : dec.terms) {
          const Mask st = q.support_mask() & t;
          if ((q.x_mask() & st) != (at.x_mask() & st) || (q.z_mask() & st) != (at.z_mask() & st)) continue;
          if ((q.x_mask() & ~t) != x.x_mask() || (q.z_mask() & ~t) != x.z_mask()) continue;
          formula += cq * sign_product(vt, st);
        }
        if (x.is_identity()) formula += dec.identity;
        c.near(inner, formula, 1e-10, "inner X=" + x.str());
        outer += std::pow(0.5, n) * inner * inner / static_cast<double>(outs.size());
      }
    }
    c.near(outer, pow3(x.weight()) * exact_weight(dec.terms, dec.identity, x), 1e-10, "outer X=" + x.str());
  }
  return c.done();
}

inline SuiteResult verify_power_law(std::uint64_t seed = 8) {
  detail::Checker c("power_law_sparsity");
  c.near(power_law_sparsity_bound(1, 2, 3.0, 0.1), 17.8885, 1e-4, "bound at alpha=3, eps=0.1");
  for (double alpha : {2.5, 3.0, 4.0}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto g = LatticeGeometry::chain(10);
      const auto h = gen_power_law(g, 2, alpha, seed + s);
      c.expect(power_law_audit(h, g, alpha) <= 1.0 + 1e-12, "pair budget");
      for (double eps : {0.05, 0.1, 0.3}) {
        c.expect(effective_sparsity(h, eps) <= power_law_sparsity_bound(1, 2, alpha, eps), "sparsity bound");
      }
    }
  }
  return c.done();
}

/// Residual halves with η at fixed (s, t) when H dominates the difference.
inline SuiteResult verify_trotter_linearity(std::uint64_t seed = 9) {
  detail::Checker c("trotter_linearity");
  Rng rng(seed);
  for (int trial = 0; trial < 3; ++trial) {
    const auto h = detail::random_sum(4, 2, 6, rng, 1.0);
    const auto d = detail::random_sum(4, 2, 4, rng, 0.05);
    std::vector<double> r;
    for (double scale : {1.0, 0.5, 0.25}) {
      r.push_back(trotter_residual({h, h - d.scaled(scale), 0.1, 4}, PauliString::parse("IIXI")).residual);
    }
    for (int i = 0; i < 2; ++i) {
      const double ratio = r[static_cast<std::size_t>(i + 1)] / r[static_cast<std::size_t>(i)];
      c.expect(ratio >= 0.35 && ratio <= 0.65, "halving ratio " + std::to_string(ratio));
    }
  }
  return c.done();
}

inline SuiteResult verify_ledger() {
  detail::Checker c("ledger");
  Device dev({SparsePauliSum(1, {{"Z", 0.3}}), 1, 0.0});
  const auto fresh = dev.snapshot_ledger();
  c.expect(fresh.total_evolution_time == 0.0 && std::isinf(fresh.min_applied_t) && fresh.experiment_count == 0,
           "fresh ledger");
  for (int i = 0; i < 4; ++i) {
    dev.run_circuit(EigenPrep(PauliString::parse("X"), 0), PauliString::parse("Y"), {SparsePauliSum(1), 0.25, 4});
  }
  const auto l = dev.snapshot_ledger();
  c.near(l.total_evolution_time, 4.0, 0.0, "4 runs at s=4, t=0.25");
  c.near(l.min_applied_t, 0.25, 0.0, "min t");
  c.expect(l.experiment_count == 4, "experiment count");
  return c.done();
}

inline std::vector<SuiteResult> run_all_suites() {
  return {verify_pauli_algebra(),    verify_eigenvector_sum(),   verify_first_order_bound(),
          verify_hadamard_truncation(), verify_decompose_roundtrip(), verify_commutators(),
          verify_shadow_unbiased(),  verify_gl_moments(),        verify_power_law(),
          verify_trotter_linearity(), verify_ledger()};
}

}  // namespace hlearn
