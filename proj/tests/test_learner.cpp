#include <gtest/gtest.h>

#include "hlearn/dense.hpp"
#include "hlearn/learner.hpp"
#include "oracle.hpp"

using namespace hlearn;

namespace {

PauliString P(const char* s) { return PauliString::parse(s); }

}  // namespace

TEST(AnticommutingPair, Examples) {
  const auto a = choose_anticommuting_pair(P("Z"));
  EXPECT_EQ(a.p, P("X"));
  EXPECT_EQ(a.q, P("Y"));
  EXPECT_EQ(a.sign, 1);

  const auto b = choose_anticommuting_pair(P("XX"));
  EXPECT_EQ(b.p, P("YI"));
  EXPECT_EQ(b.q, P("ZX"));
  EXPECT_EQ(b.sign, 1);

  const auto c = choose_anticommuting_pair(P("IYZ"));
  EXPECT_EQ(c.p, P("IXI"));
  EXPECT_EQ(choose_anticommuting_pair(P("IYZ")).q, c.q);
  EXPECT_THROW(choose_anticommuting_pair(P("II")), ParameterError);
}

TEST(AnticommutingPair, MatchesDenseProduct) {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& e : enumerate_paulis(n, n, 1)) {
      const auto pair = choose_anticommuting_pair(e);
      EXPECT_EQ(pair.p.weight(), 1);
      EXPECT_FALSE(pair.p.commutes_with(e));
      const oracle::Mat lhs = oracle::cplx(0, 1) * oracle::pauli(pair.p) * oracle::pauli(e);
      EXPECT_EQ((lhs - static_cast<double>(pair.sign) * oracle::pauli(pair.q)).norm(), 0.0) << e.str();
    }
  }
}

TEST(CoefficientMapping, SingleQubitChain) {
  // Ĥ = 0.4 Z: c_Y of e^{iĤ} X e^{-iĤ} is about -2λ, and i·X·Y = -Z flips it back.
  const double lambda = 0.4;
  const auto w = coefficient_from_response(P("X"), P("Y"), -2.0 * lambda);
  EXPECT_EQ(w.r, P("Z"));
  EXPECT_DOUBLE_EQ(w.value, lambda);
  const double tau = 0.01;
  const auto z = expm_hermitian(SparsePauliSum(1, {{"Z", lambda}}), tau);
  const auto exact = coefficient_from_response(P("X"), P("Y"), exact_mu(P("X"), z, P("Y")));
  EXPECT_NEAR(exact.value / tau, lambda, 1e-3);
  EXPECT_THROW(coefficient_from_response(P("X"), P("X"), 0.1), ParameterError);
}

TEST(CoefficientMapping, RecoversEveryTermToFirstOrder) {
  Rng rng(3);
  const auto pool = enumerate_paulis(3, 2, 1);
  const double tau = 1e-3;
  for (int trial = 0; trial < 10; ++trial) {
    SparsePauliSum h(3);
    for (int i = 0; i < 4; ++i) h.add(pool[rng.below(pool.size())], rng.uniform(-1.0, 1.0));
    const auto z = expm_hermitian(h, tau);
    for (const auto& e : pool) {
      const auto pair = choose_anticommuting_pair(e);
      const auto w = coefficient_from_response(pair.p, pair.q, exact_mu(pair.p, z, pair.q));
      EXPECT_EQ(w.r, e);
      EXPECT_NEAR(w.value / tau, h.coeff(e), 5e-3) << e.str();
    }
  }
}

TEST(StructureLearn, SingleTermLambda) {
  const SparsePauliSum h(1, {{"Z", 0.4}});
  Device dev({h, 1, 0.0});
  const double t = 0.05;
  const Evolution evo{SparsePauliSum(1), t, 1};
  const auto sh = build_shadow_dataset(dev, evo, 1, 1, 0.005, 0.1, 0.2, 2);
  const auto gl = build_gl_dataset_counts(dev, evo, 1, 0.5, 0.1, 4, 4, 3);
  StructureStats stats;
  const auto est = round_small(structure_learn(sh, gl, 1, &stats).scaled(1.0 / t), 0.1);
  EXPECT_EQ(est.size(), 1u);
  EXPECT_NEAR(est.coeff(P("Z")), 0.4, 0.05);
  EXPECT_EQ(stats.gl_queries, 0u);
  EXPECT_EQ(stats.shadow_queries, 6u);
}

TEST(StructureLearn, ZeroHamiltonianRoundsAway) {
  Device dev({SparsePauliSum(2), 1, 0.0});
  const Evolution evo{SparsePauliSum(2), 0.1, 1};
  const auto sh = build_shadow_dataset(dev, evo, 2, 1, 0.05, 0.1, 0.2, 4);
  const auto gl = build_gl_dataset_counts(dev, evo, 2, 0.5, 0.1, 8, 8, 5);
  const auto est = structure_learn(sh, gl, 2);
  EXPECT_LT(linf_distance(est, SparsePauliSum(2)), 0.05);
  EXPECT_TRUE(round_small(est, 0.05).empty());
  EXPECT_THROW(structure_learn(sh, gl, 3), ParameterError);
}

TEST(LearnerConfig, Schedule) {
  LearnerConfig cfg;
  cfg.eps = 0.1;
  cfg.terms = {P("ZI")};
  EXPECT_EQ(cfg.iterations_T(), 3);
  EXPECT_EQ(cfg.eta(0), 1.0);
  EXPECT_EQ(cfg.eta(3), 0.125);
  EXPECT_EQ(cfg.slices(2), 4);
  double budget = 0.0;
  for (int j = 0; j <= 3; ++j) budget += cfg.delta_j(j);
  EXPECT_LE(budget, cfg.delta);
  EXPECT_NEAR(cfg.delta_j(3), cfg.delta / 4.0, 1e-15);
  EXPECT_NEAR(cfg.step_t(), 1.0 / 500.0, 1e-15);
  cfg.eps = 1.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg.eps = 0.1;
  cfg.terms = {P("II")};
  EXPECT_THROW(cfg.validate(), ParameterError);
}

namespace {

LearnerConfig known_config(const std::vector<PauliString>& terms, double eps, std::uint64_t seed) {
  LearnerConfig cfg;
  cfg.k = 2;
  cfg.eps = eps;
  cfg.delta = 0.1;
  cfg.lambda_bound = 1.0;
  cfg.sparsity_bound = 1.0;
  cfg.t_scale = 100.0;  // t = 0.2
  cfg.shadow_scale = 0.01;
  cfg.mode = LearnMode::KnownTerms;
  cfg.terms = terms;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Bootstrap, KnownTermsRecoversAndKeepsInvariants) {
  const SparsePauliSum h(2, {{"XZ", 0.3}, {"IY", -0.25}, {"ZI", 0.2}});
  const std::vector<PauliString> terms{P("XZ"), P("IY"), P("ZI"), P("XX")};
  Device dev({h, 17, 0.0});
  const auto cfg = known_config(terms, 0.25, 5);
  const auto res = bootstrap_learn(dev, cfg);
  EXPECT_EQ(res.T, 2);
  ASSERT_EQ(res.iterations.size(), 3u);
  EXPECT_LE(linf_distance(res.estimate, h), cfg.eps);
  EXPECT_EQ(res.estimate.coeff(P("XX")), 0.0);

  double tet = 0.0;
  std::int64_t experiments = 0;
  for (const auto& it : res.iterations) {
    EXPECT_LE(linf_distance(it.estimate, h), cfg.eta(it.j + 1)) << "iteration " << it.j;
    EXPECT_LE(local_norm_1(it.estimate), 2.0 * cfg.lambda_bound);
    EXPECT_LE(local_norm_2(it.estimate - h), 4.0 * cfg.eta(it.j) * std::sqrt(cfg.sparsity_bound));
    for (const auto& [p, c] : it.estimate) EXPECT_GT(std::abs(c), it.eta / 4.0);
    EXPECT_DOUBLE_EQ(it.tet_contribution, static_cast<double>(it.experiments) * it.s_j * res.t);
    tet += it.tet_contribution;
    experiments += it.experiments;
  }
  EXPECT_DOUBLE_EQ(res.ledger.min_applied_t, res.t);
  EXPECT_DOUBLE_EQ(dev.snapshot_ledger().min_applied_t, res.t);
  EXPECT_NEAR(res.ledger.total_evolution_time, tet, 1e-9 * tet);
  EXPECT_EQ(res.ledger.experiment_count, experiments);
}

TEST(Bootstrap, ZeroHamiltonianStaysEmpty) {
  Device dev({SparsePauliSum(2), 3, 0.0});
  const auto res = bootstrap_learn(dev, known_config({P("XZ"), P("IY")}, 0.25, 1));
  for (const auto& it : res.iterations) EXPECT_TRUE(it.estimate.empty());
  EXPECT_TRUE(res.estimate.empty());
}

TEST(Bootstrap, StructureModeSmallInstance) {
  const SparsePauliSum h(2, {{"XZ", 0.3}, {"IY", -0.25}});
  Device dev({h, 23, 0.0});
  LearnerConfig cfg = known_config({}, 0.25, 9);
  cfg.mode = LearnMode::StructureLearning;
  cfg.shadow_scale = 0.02;
  cfg.gl_scale = {1e-4, 1e-12};  // a few dozen partitions of ~16 shots
  const auto res = bootstrap_learn(dev, cfg);
  EXPECT_LE(linf_distance(res.estimate, h), cfg.eps);
  EXPECT_EQ(res.estimate.size(), h.size());
  EXPECT_GT(res.iterations.back().structure.gl_queries, 0u);
}

TEST(Baseline, SingleTermAndZero) {
  Device dev({SparsePauliSum(1, {{"Z", 0.4}}), 2, 0.0});
  BaselineConfig cfg;
  cfg.eps = 0.1;
  cfg.shadow_scale = 0.05;
  cfg.seed = 8;
  const auto res = derivative_baseline(dev, {P("Z")}, cfg);
  EXPECT_NEAR(res.estimate.coeff(P("Z")), 0.4, 0.1);
  EXPECT_DOUBLE_EQ(res.t, 0.1);

  Device zero({SparsePauliSum(1), 2, 0.0});
  const auto r0 = derivative_baseline(zero, {P("Z"), P("X")}, cfg);
  EXPECT_LE(linf_distance(r0.estimate, SparsePauliSum(1)), 0.1);
  EXPECT_THROW(derivative_baseline(zero, {P("I")}, cfg), ParameterError);
}
