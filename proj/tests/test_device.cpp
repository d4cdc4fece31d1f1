#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "hlearn/device.hpp"
#include "hlearn/shadows.hpp"
#include "oracle.hpp"

using namespace hlearn;

namespace {

PauliString P(const char* s) { return PauliString::parse(s); }

SparsePauliSum random_sum(int n, int k, int terms, Rng& rng) {
  const auto pool = enumerate_paulis(n, k, 1);
  SparsePauliSum h(n);
  for (int i = 0; i < terms; ++i) h.add(pool[rng.below(pool.size())], rng.uniform(-1.0, 1.0));
  return h;
}

// |<B,w| Z |A,v>|² from Kronecker-built states.
std::vector<double> oracle_distribution(const EigenPrep& prep, const PauliString& basis, const oracle::Mat& z) {
  const int n = prep.num_qubits();
  const Eigen::VectorXcd psi = z * oracle::product_state(prep);
  std::vector<double> out;
  for (Mask w = 0; w < (1u << n); ++w) {
    std::string signs;
    for (int q = n - 1; q >= 0; --q) signs += ((w >> q) & 1U) ? '-' : '+';
    const Eigen::VectorXcd b = oracle::product_state(basis.str(), signs);
    out.push_back(std::norm(b.dot(psi)));
  }
  return out;
}

}  // namespace

TEST(Ledger, Arithmetic) {
  Device dev({SparsePauliSum(1, {{"Z", 0.3}}), 1, 0.0});
  const auto fresh = dev.snapshot_ledger();
  EXPECT_EQ(fresh.total_evolution_time, 0.0);
  EXPECT_TRUE(std::isinf(fresh.min_applied_t));
  EXPECT_EQ(fresh.experiment_count, 0);

  dev.run_circuit(EigenPrep(P("Z"), 0), P("Z"), {SparsePauliSum(1), 0.5, 2});
  const auto one = dev.snapshot_ledger();
  EXPECT_DOUBLE_EQ(one.total_evolution_time, 1.0);
  EXPECT_DOUBLE_EQ(one.min_applied_t, 0.5);
  EXPECT_EQ(one.experiment_count, 1);

  Device dev4({SparsePauliSum(1, {{"Z", 0.3}}), 1, 0.0});
  for (int i = 0; i < 4; ++i) dev4.run_circuit(EigenPrep(P("X"), 0), P("Y"), {SparsePauliSum(1), 0.25, 4});
  EXPECT_DOUBLE_EQ(dev4.snapshot_ledger().total_evolution_time, 4.0);
}

TEST(Device, IdentityEvolutionIsDeterministic) {
  Device dev({SparsePauliSum(1, {{"X", 0.7}}), 3, 0.0});
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(dev.run_circuit(EigenPrep(P("Z"), 0), P("Z"), {SparsePauliSum(1), 1.0, 0}).w(0), 1);
  }
  const auto l = dev.snapshot_ledger();
  EXPECT_EQ(l.total_evolution_time, 0.0);
  EXPECT_TRUE(std::isinf(l.min_applied_t));
}

TEST(Device, RejectsBadEvolution) {
  Device dev({SparsePauliSum(2, {{"XX", 0.7}}), 3, 0.0});
  EXPECT_THROW(dev.run_circuit(EigenPrep(P("ZZ"), 0), P("ZZ"), {SparsePauliSum(2), 0.0, 1}), ParameterError);
  EXPECT_THROW(dev.run_circuit(EigenPrep(P("ZZ"), 0), P("ZI"), {SparsePauliSum(2), 0.1, 1}), ParameterError);
  EXPECT_THROW(dev.run_circuit(EigenPrep(P("ZZ"), 0), P("ZZ"), {SparsePauliSum(3), 0.1, 1}), DimensionError);
  EXPECT_THROW(Device({SparsePauliSum(1), 0, 1.0}), ParameterError);
}

TEST(Device, DistributionMatchesOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(3));
    const auto h = random_sum(n, 2, 4, rng);
    const auto h0 = random_sum(n, 2, 3, rng);
    Device dev({h, 5, 0.0});
    const Evolution evo{h0, 0.3, 2};
    const auto req = random_request(n, rng);
    const oracle::Mat slice = oracle::expm_taylor(oracle::hamiltonian(h), 0.3) *
                              oracle::expm_taylor(oracle::hamiltonian(h0), -0.3);
    const auto expected = oracle_distribution(req.prep, req.basis, slice * slice);
    const auto got = dev.sampled_distribution(req.prep, req.basis, evo);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-10);
  }
}

TEST(Device, SamplesPassChiSquared) {
  Rng rng(31);
  const auto h = random_sum(3, 2, 5, rng);
  Device dev({h, 8, 0.0});
  const Evolution evo{SparsePauliSum(3), 0.6, 1};
  const auto req = random_request(3, rng);
  const auto p = dev.sampled_distribution(req.prep, req.basis, evo);
  const int shots = 100000;
  std::vector<CircuitRequest> reqs(shots, req);
  std::vector<double> counts(p.size(), 0.0);
  for (const auto& r : dev.run_circuits(reqs, evo)) counts[r.outcome] += 1.0;
  double chi2 = 0.0;
  int dof = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 1e-12) {
      EXPECT_EQ(counts[i], 0.0);
      continue;
    }
    const double e = p[i] * shots;
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
    ++dof;
  }
  ASSERT_GT(dof, 0);
  const double pvalue = 1.0 - boost::math::cdf(boost::math::chi_squared(dof), chi2);
  EXPECT_GT(pvalue, 0.001);
}

TEST(Device, IdenticalSeedsReproduceShots) {
  Rng rng(41);
  const auto h = random_sum(3, 2, 5, rng);
  std::vector<CircuitRequest> reqs;
  for (int i = 0; i < 500; ++i) reqs.push_back(random_request(3, rng));
  const Evolution evo{SparsePauliSum(3), 0.2, 3};
  Device a({h, 99, 0.1});
  Device b({h, 99, 0.1});
  const auto ra = a.run_circuits(reqs, evo, 1);
  const auto rb = b.run_circuits(reqs, evo, 3);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].outcome, rb[i].outcome);
  EXPECT_EQ(a.snapshot_ledger().experiment_count, b.snapshot_ledger().experiment_count);
  EXPECT_DOUBLE_EQ(a.snapshot_ledger().total_evolution_time, b.snapshot_ledger().total_evolution_time);
}

TEST(Device, SpamStaysWithinTotalVariationBudget) {
  Rng rng(51);
  const auto h = random_sum(2, 2, 3, rng);
  const double kappa = 0.1;
  Device clean({h, 7, 0.0});
  Device noisy({h, 7, kappa});
  const Evolution evo{SparsePauliSum(2), 0.4, 1};
  const auto req = random_request(2, rng);
  const auto p = clean.sampled_distribution(req.prep, req.basis, evo);
  const auto q = noisy.sampled_distribution(req.prep, req.basis, evo);
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += 0.5 * std::abs(p[i] - q[i]);
  EXPECT_LE(tv, kappa + 1e-12);

  const int shots = 40000;
  std::vector<double> counts(p.size(), 0.0);
  for (const auto& r : noisy.run_circuits(std::vector<CircuitRequest>(shots, req), evo)) counts[r.outcome] += 1;
  double emp_tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) emp_tv += 0.5 * std::abs(counts[i] / shots - p[i]);
  EXPECT_LE(emp_tv, kappa + 4.0 * std::sqrt(p.size() / static_cast<double>(shots)));
}

TEST(Povm, ExpectationsAndValidation) {
  Device dev({SparsePauliSum(2, {{"XX", 0.3}}), 12, 0.0});
  const PovmObservable zero(DenseOperator(2, Matrix::Zero(4, 4)));
  int plus = 0;
  const int shots = 20000;
  for (int v : dev.run_povms(std::vector<EigenPrep>(shots, EigenPrep(P("ZZ"), 0)), zero)) plus += v > 0;
  EXPECT_NEAR(plus / static_cast<double>(shots), 0.5, 4 * 0.5 / std::sqrt(shots));

  const PovmObservable z(dense_pauli(P("IZ")));
  for (int i = 0; i < 50; ++i) EXPECT_EQ(dev.run_povm(EigenPrep(P("ZZ"), 0), z), 1);

  const SparsePauliSum o(2, {{"ZI", 0.6}, {"IX", 0.4}});
  const PovmObservable obs(dense_from_sum(o));
  const EigenPrep prep(P("ZX"), 0b01);  // <Z₁> = +1, <X₂> = -1
  const double exact = 0.6 - 0.4;
  double mean = 0.0;
  for (int v : dev.run_povms(std::vector<EigenPrep>(shots, prep), obs)) mean += v;
  mean /= shots;
  const double sigma = std::sqrt((1 - exact * exact) / shots);
  EXPECT_NEAR(mean, exact, 3 * sigma);

  EXPECT_THROW(PovmObservable(dense_from_sum(SparsePauliSum(2, {{"ZI", 0.6}, {"IX", 0.8}}))), ParameterError);
  EXPECT_EQ(dev.snapshot_ledger().total_evolution_time, 0.0);
}
