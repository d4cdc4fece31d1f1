#include <gtest/gtest.h>

#include <numbers>

#include "hlearn/dense.hpp"
#include "hlearn/gl.hpp"
#include "oracle.hpp"

using namespace hlearn;

namespace {

PauliString P(const char* s) { return PauliString::parse(s); }

// c_Q = tr(Q O)/N through Kronecker products.
double oracle_coeff(const oracle::Mat& o, const PauliString& q) {
  return (oracle::pauli(q) * o).trace().real() / static_cast<double>(o.rows());
}

oracle::Mat random_hermitian(int n, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(1) << n;
  oracle::Mat m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = oracle::cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  return 0.5 * (m + m.adjoint());
}

// Every assignment of letters and signs to the qubits in `mask`; letters are 0:X 1:Y 2:Z.
template <typename F>
void for_each_local_prep(int n, Mask mask, F&& f) {
  std::vector<int> qubits;
  for (int q = 0; q < n; ++q) {
    if ((mask >> q) & 1U) qubits.push_back(q);
  }
  const int m = static_cast<int>(qubits.size());
  int combos = 1;
  for (int i = 0; i < m; ++i) combos *= 6;
  for (int c = 0; c < combos; ++c) {
    Mask ax = 0, az = 0, v = 0;
    int rest = c;
    for (int q : qubits) {
      const int l = rest % 3;
      rest /= 3;
      if (rest % 2) v |= Mask{1} << q;
      rest /= 2;
      if (l != 2) ax |= Mask{1} << q;
      if (l != 0) az |= Mask{1} << q;
    }
    f(ax, az, v, 1.0 / combos);
  }
}

}  // namespace

TEST(GLCounts, InnerCountSolvesTheDisplay) {
  for (int k : {1, 2}) {
    for (double gamma : {0.5, 0.2}) {
      const auto q = gl_inner_count_literal(k, gamma);
      const double d = 10000.0 * std::pow(6.0, k) * 2.0 * std::pow(3.0, 2.0 * (k + 1));
      const double target = 1.0 / (100.0 * std::pow(54.0, k));
      EXPECT_LE(2.0 * std::exp(-static_cast<double>(q) * gamma * gamma / d), target);
      EXPECT_GT(2.0 * std::exp(-static_cast<double>(q - 1) * gamma * gamma / d), target);
    }
  }
  // k = 1, γ = 0.5: q = ceil(9.72e6·ln(10800)/0.25).
  EXPECT_EQ(gl_inner_count_literal(1, 0.5), static_cast<std::int64_t>(std::ceil(9.72e6 * std::log(10800.0) / 0.25)));
}

TEST(GLCounts, MonotoneInGammaAndDelta) {
  const GLScale unit;
  EXPECT_LT(gl_inner_count(1, 0.5, unit), gl_inner_count(1, 0.25, unit));
  EXPECT_LT(gl_partition_count(4, 1, 0.1, unit), gl_partition_count(4, 1, 0.01, unit));
  EXPECT_LT(weight_inner_count(1, 0.5, unit), weight_inner_count(1, 0.25, unit));
  EXPECT_LT(weight_partition_count(4, 1, 0.5, 0.1, unit), weight_partition_count(4, 1, 0.25, 0.1, unit));
  EXPECT_LT(weight_partition_count(4, 1, 0.5, 0.1, unit), weight_partition_count(4, 1, 0.5, 0.01, unit));
  EXPECT_THROW(gl_partition_count(4, 1, 1.0, unit), ParameterError);
  EXPECT_THROW(gl_inner_count(1, 0.0, unit), ParameterError);
  EXPECT_THROW(gl_partition_count(4, 0, 0.1, unit), ParameterError);
}

TEST(GLDataset, InnerShotsMatchOuterPrep) {
  Device dev({SparsePauliSum(4, {{"XZII", 0.4}}), 2, 0.0});
  const auto ds = build_gl_dataset_counts(dev, {SparsePauliSum(4), 0.1, 1}, 1, 0.5, 0.1, 30, 7, 5);
  const auto shots = ds.shots();
  ASSERT_EQ(shots.size(), 210u);
  EXPECT_EQ(dev.snapshot_ledger().experiment_count, 210);
  for (std::size_t k = 0; k < 30; ++k) {
    const auto& o = ds.outer()[k];
    for (std::size_t l = 0; l < 7; ++l) {
      const auto& prep = shots[k * 7 + l].prep;
      EXPECT_EQ(prep.basis.x_mask() & o.partition, o.ax);
      EXPECT_EQ(prep.basis.z_mask() & o.partition, o.az);
      EXPECT_EQ(prep.signs & o.partition, o.vneg);
    }
  }
}

// O = Z†PZ with H = (π/4)Z on qubit 0 and P = X on qubit 0 gives O = -Y on qubit 0.
TEST(GLQuery, EngineeredPassAndFail) {
  const SparsePauliSum h(2, {{"IZ", std::numbers::pi / 4.0}});
  const auto z = alternating_unitary({h, SparsePauliSum(2), 1.0, 1});
  EXPECT_NEAR(exact_mu(P("IX"), z, P("IY")), -1.0, 1e-12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Device dev({h, seed, 0.0});
    const auto ds = build_gl_dataset_counts(dev, {SparsePauliSum(2), 1.0, 1}, 1, 0.9, 0.1, 24, 100000, seed);
    const auto pass = gl_query(ds, P("IY"), P("IX"));
    const auto fail = gl_query(ds, P("ZI"), P("IX"));
    EXPECT_TRUE(pass.pass()) << pass.statistic;
    EXPECT_FALSE(fail.pass()) << fail.statistic;
    EXPECT_EQ(pass.value == GLOutcome::Pass, pass.statistic > pass.threshold);
    EXPECT_THROW(gl_query(ds, P("ZY"), P("IX")), QueryError);
  }
}

TEST(GLQuery, PartitionsHittingXGiveZero) {
  const SparsePauliSum h(2, {{"IZ", std::numbers::pi / 4.0}});
  Device dev({h, 1, 0.0});
  Rng rng(3);
  std::vector<OuterPrep> outer;
  std::vector<CircuitRequest> reqs;
  for (int k = 0; k < 10; ++k) {
    auto o = random_outer(2, rng);
    o.partition |= 1;  // always contains qubit 0
    o.ax |= 1;
    o.az &= ~Mask{1};
    o.vneg &= ~Mask{1};
    outer.push_back(o);
    for (int l = 0; l < 50; ++l) reqs.push_back({inner_prep(2, o, rng), random_request(2, rng).basis});
  }
  auto shots = dev.run_circuits(reqs, {SparsePauliSum(2), 1.0, 1});
  const GLDataset ds(2, GLParams{1, 0.9, 0.1, 10, 50}, outer, shots);
  for (double m : gl_partition_means(ds, P("IY"), P("IX"))) EXPECT_EQ(m, 0.0);
  EXPECT_FALSE(gl_query(ds, P("IY"), P("IX")).pass());
}

// Exact inner expectation vs Σ_Q c_Q v^{supp Q ∩ T}[Q_T ⊆ A_T ∧ Q_{T̄} = X_{T̄}], and the outer
// second moment vs 3^{|X|}·Σ_{Q ⊇ X} c_Q²/6^{|supp Q|}.
TEST(GLMoments, InnerAndOuterIdentitiesByEnumeration) {
  const int n = 3;
  const Mask full = low_bits(n);
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const oracle::Mat o = random_hermitian(n, rng);
    const auto paulis = enumerate_paulis(n, n);
    std::vector<double> c;
    for (const auto& q : paulis) c.push_back(oracle_coeff(o, q));
    for (const auto& x : enumerate_paulis(n, 2)) {
      const Mask sx = x.support_mask();
      double outer_moment = 0.0;
      for (Mask t = 0; t <= full; ++t) {
        if (t & sx) continue;
        const double pt = std::pow(0.5, n);
        for_each_local_prep(n, t, [&](Mask ax, Mask az, Mask vt, double w_outer) {
          double inner = 0.0;
          for_each_local_prep(n, full & ~t, [&](Mask bx, Mask bz, Mask vr, double w_inner) {
            const EigenPrep prep(PauliString(n, ax | bx, az | bz), vt | vr);
            const Eigen::VectorXcd psi = oracle::product_state(prep);
            const double expect = psi.dot(o * psi).real();
            const double est = subset(x, prep.basis) ? pow3(x.weight()) * sign_product(prep.signs, sx) * expect : 0.0;
            inner += w_inner * est;
          });
          double formula = 0.0;
          for (std::size_t i = 0; i < paulis.size(); ++i) {
            const auto& q = paulis[i];
            const Mask st = q.support_mask() & t;
            if ((q.x_mask() & st) != (ax & st) || (q.z_mask() & st) != (az & st)) continue;
            if ((q.x_mask() & ~t) != x.x_mask() || (q.z_mask() & ~t) != x.z_mask()) continue;
            formula += c[i] * sign_product(vt, q.support_mask() & t);
          }
          EXPECT_NEAR(inner, formula, 1e-10);
          outer_moment += pt * w_outer * inner * inner;
        });
      }
      double expected = 0.0;
      for (std::size_t i = 0; i < paulis.size(); ++i) {
        if (subset(x, paulis[i])) expected += c[i] * c[i] / std::pow(6.0, paulis[i].weight());
      }
      EXPECT_NEAR(outer_moment, pow3(x.weight()) * expected, 1e-10) << x.str();
    }
  }
}

TEST(WeightEstimate, ExactTargetExamples) {
  const SparsePauliSum o(2, {{"ZI", 0.6}, {"IX", 0.8}});
  EXPECT_NEAR(exact_weight(o, 0.0, P("ZI")), 0.06, 1e-15);
  const auto dec = pauli_decompose(dense_from_sum(o), 2);
  EXPECT_NEAR(exact_weight(dec.terms, dec.identity, P("ZI")), 0.06, 1e-15);
  // ‖O‖ = 1.4 here, so the device rejects it.
  EXPECT_THROW(PovmObservable(dense_from_sum(o)), ParameterError);
}

TEST(WeightEstimate, ZeroAndSingleTermObservables) {
  Device dev({SparsePauliSum(2, {{"XX", 0.2}}), 5, 0.0});
  const GLScale scale{0.05, 0.1};
  const PovmObservable zero(DenseOperator(2, Matrix::Zero(4, 4)));
  EXPECT_NEAR(weight_estimate(dev, zero, P("ZI"), 1, 0.1, 0.1, scale, 1), 0.0, 0.1);
  const PovmObservable o(dense_from_sum(SparsePauliSum(2, {{"ZI", 0.6}, {"IX", 0.4}})));
  EXPECT_NEAR(weight_estimate(dev, o, P("ZI"), 1, 0.1, 0.1, scale, 2), 0.06, 0.1);
  EXPECT_NEAR(weight_estimate(dev, o, P("IX"), 1, 0.1, 0.1, scale, 3), 0.16 / 6.0, 0.1);
  EXPECT_THROW(weight_estimate(dev, o, P("ZX"), 1, 0.1, 0.1, scale, 3), QueryError);
}

TEST(WeightEstimate, RandomLowWeightObservables) {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    const auto pool = enumerate_paulis(3, 2, 1);
    SparsePauliSum o(3);
    for (int i = 0; i < 3; ++i) o.add(pool[rng.below(pool.size())], rng.uniform(-1.0, 1.0));
    double l1 = 0.0;
    for (const auto& [q, v] : o) l1 += std::abs(v);
    o = o.scaled(0.95 / l1);
    const auto x = one_local_paulis(3)[rng.below(9)];
    Device dev({SparsePauliSum(3), seed, 0.0});
    const double est = weight_estimate(dev, PovmObservable(dense_from_sum(o)), x, 1, 0.1, 0.1, {0.05, 0.1}, seed);
    good += std::abs(est - exact_weight(o, 0.0, x)) <= 0.1;
  }
  EXPECT_GE(good, 18);
}
