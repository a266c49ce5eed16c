#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fedexprox/engine.hpp"
#include "fedexprox/errors.hpp"
#include "fedexprox/harness.hpp"
#include "test_util.hpp"

namespace fedexprox::engine {
namespace {

using Kind = ExtrapolationPolicy::Kind;
using testing::test_engine;

RunConfig base_config(const FederatedProblem& p, double gamma, std::size_t K) {
  RunConfig rc;
  rc.gamma = gamma;
  rc.K = K;
  rc.tau = p.n_clients();
  auto eng = test_engine(100);
  rc.x0 = p.x_star() + testing::random_vector(p.dim(), eng);
  rc.seed = 7;
  return rc;
}

TEST(Policy, NamesRoundTrip) {
  for (const char* name : {"theory-exact", "theory-absolute", "theory-rel-sgd",
                           "theory-rel-compression", "theory-minibatch", "gradient-diversity",
                           "polyak"}) {
    EXPECT_EQ(ExtrapolationPolicy::parse(name).name(), name);
  }
  EXPECT_EQ(ExtrapolationPolicy::parse("constant", 2.5).alpha(), 2.5);
  EXPECT_EQ(ExtrapolationPolicy::parse("fedprox").alpha(), 1.0);
  EXPECT_THROW(ExtrapolationPolicy::parse("constant"), InvalidArgument);
  EXPECT_THROW(ExtrapolationPolicy::parse("sideways"), InvalidArgument);
  EXPECT_THROW(ExtrapolationPolicy::constant(0.0), InvalidArgument);
}

TEST(Policy, TheoryAlphasFromContext) {
  const FederatedProblem p = testing::small_problem(101);
  moreau::EnvelopeContext ctx{&p, 0.1, 2.0, 0.0};
  const auto spec = prox::InexactnessSpec::exact();
  EXPECT_DOUBLE_EQ(alpha_for(ExtrapolationPolicy::of(Kind::kTheoryExact), ctx, spec, p.n_clients()), 5.0);
  EXPECT_DOUBLE_EQ(alpha_for(ExtrapolationPolicy::of(Kind::kTheoryAbsolute), ctx, spec, p.n_clients()), 1.25);
  EXPECT_DOUBLE_EQ(alpha_for(ExtrapolationPolicy::constant(3.0), ctx, spec, p.n_clients()), 3.0);
  // eps2 = 0: the full-batch SGD-view step is the compression step divided by S(0) = 1
  EXPECT_DOUBLE_EQ(
      alpha_for(ExtrapolationPolicy::of(Kind::kTheoryRelativeCompression), ctx, spec, p.n_clients()), 5.0);
}

TEST(Policy, RelativeTheoryRejectsAbsoluteOracle) {
  const FederatedProblem p = testing::small_problem(102);
  const moreau::EnvelopeContext ctx = moreau::make_context(p, 1.0);
  const auto abs = prox::InexactnessSpec::absolute_injected(1e-3);
  for (Kind k : {Kind::kTheoryRelativeSGD, Kind::kTheoryRelativeCompression, Kind::kTheoryMinibatch}) {
    EXPECT_THROW(alpha_for(ExtrapolationPolicy::of(k), ctx, abs, p.n_clients()), InadmissibleInexactness);
  }
  const auto big = prox::InexactnessSpec::relative_injected(0.9);
  EXPECT_THROW(alpha_for(ExtrapolationPolicy::of(Kind::kTheoryRelativeSGD), ctx, big, p.n_clients()),
               InadmissibleInexactness);
  RunConfig rc = base_config(p, 1.0, 3);
  rc.spec = big;
  rc.policy = ExtrapolationPolicy::of(Kind::kTheoryRelativeCompression);
  EXPECT_THROW(Engine(p, rc), InadmissibleInexactness);
}

TEST(Policy, GradientDiversityWithEqualDisplacements) {
  const FederatedProblem p = testing::small_problem(103);
  const moreau::EnvelopeContext ctx = moreau::make_context(p, 0.5);
  auto eng = test_engine(103);
  const Vector x = testing::random_vector(p.dim(), eng);
  const Vector v = testing::random_vector(p.dim(), eng);
  const std::vector<std::size_t> sampled{0, 1, 2};
  const std::vector<Vector> returned(3, Vector(x - v));
  const RoundSnapshot snap{&x, sampled, returned};
  const double L = p.L_max();
  EXPECT_NEAR(alpha_for(ExtrapolationPolicy::of(Kind::kGradientDiversity), ctx,
                        prox::InexactnessSpec::exact(), 3, &snap),
              (1.0 + 0.5 * L) / (0.5 * L), 1e-12);
}

TEST(Policy, AdaptiveDegenerateStep) {
  const FederatedProblem p = testing::small_problem(104);
  const moreau::EnvelopeContext ctx = moreau::make_context(p, 0.5);
  const Vector x = p.x_star();
  const std::vector<std::size_t> sampled{0, 1};
  const std::vector<Vector> returned(2, x);
  const RoundSnapshot snap{&x, sampled, returned};
  for (Kind k : {Kind::kGradientDiversity, Kind::kPolyak}) {
    EXPECT_THROW(alpha_for(ExtrapolationPolicy::of(k), ctx, prox::InexactnessSpec::exact(), 2, &snap),
                 DegenerateStep);
    EXPECT_THROW(alpha_for(ExtrapolationPolicy::of(k), ctx, prox::InexactnessSpec::exact(), 2),
                 InvalidArgument);
  }
}

TEST(Policy, PolyakMatchesDirectFormula) {
  const FederatedProblem p = testing::small_problem(105);
  const double g = 0.7;
  const moreau::EnvelopeContext ctx = moreau::make_context(p, g);
  auto eng = test_engine(105);
  const Vector x = testing::random_vector(p.dim(), eng);
  std::vector<std::size_t> all;
  std::vector<Vector> proxes;
  double env = 0.0;
  Vector mean = Vector::Zero(p.dim());
  for (std::size_t i = 0; i < p.n_clients(); ++i) {
    all.push_back(i);
    proxes.push_back(prox::prox_exact(p.client(i), x, g));
    env += moreau::envelope_value(ctx, i, x);
    mean += (x - proxes.back()) / g;
  }
  env /= static_cast<double>(p.n_clients());
  mean /= static_cast<double>(p.n_clients());
  const RoundSnapshot snap{&x, all, proxes};
  const double expected = env / (g * mean.squaredNorm());
  EXPECT_NEAR(alpha_for(ExtrapolationPolicy::of(Kind::kPolyak), ctx, prox::InexactnessSpec::exact(),
                        p.n_clients(), &snap),
              expected, 1e-10 * expected);
}

TEST(Engine, SingleClientUnitStepIsProximalPoint) {
  const FederatedProblem p = testing::small_problem(106, 1, 5, Spectrum{1.0, 5.0, 1.0});
  RunConfig rc = base_config(p, 0.8, 1);
  rc.policy = ExtrapolationPolicy::constant(1.0);
  const RunTrace t = run(rc, p);
  EXPECT_LE((t.x_final - prox::prox_exact(p.client(0), rc.x0, 0.8)).norm(), 1e-13);
}

TEST(Engine, MinimizerIsFixedPoint) {
  const FederatedProblem p = testing::small_problem(107);
  RunConfig rc = base_config(p, 1.0, 20);
  rc.x0 = p.x_star();
  const RunTrace t = run(rc, p);
  EXPECT_FALSE(t.diverged());
  for (const TraceRecord& r : t.records) {
    EXPECT_LE(r.sq_dist, 1e-24);
    EXPECT_LE(r.envelope_gap, 1e-20);
  }
}

TEST(Engine, ExactStepFollowsAveragedProx) {
  const FederatedProblem p = testing::small_problem(108);
  const RunConfig rc = base_config(p, 0.3, 1);
  const RunTrace t = run(rc, p);
  Vector mean = Vector::Zero(p.dim());
  for (const QuadraticClient& c : p.clients()) mean += prox::prox_exact(c, rc.x0, 0.3);
  mean /= static_cast<double>(p.n_clients());
  const double alpha = 1.0 / (0.3 * moreau::make_context(p, 0.3).L_gamma);
  EXPECT_DOUBLE_EQ(t.records[1].alpha, alpha);
  EXPECT_LE((t.x_final - (rc.x0 + alpha * (mean - rc.x0))).norm(), 1e-12 * (1.0 + rc.x0.norm()));
}

TEST(Engine, ZeroRoundsGivesInitialRecord) {
  const FederatedProblem p = testing::small_problem(109);
  const RunConfig rc = base_config(p, 1.0, 0);
  const RunTrace t = run(rc, p);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0].iter, 0u);
  EXPECT_DOUBLE_EQ(t.records[0].sq_dist, (rc.x0 - p.x_star()).squaredNorm());
  EXPECT_TRUE(t.records[0].sampled.empty());
}

TEST(Engine, ExactGapIsNonincreasingAndWithinEnvelope) {
  const FederatedProblem p = testing::small_problem(110);
  for (double g : {0.01, 1.0, 100.0}) {
    const RunTrace t = run(base_config(p, g, 200), p);
    const moreau::EnvelopeContext ctx = moreau::make_context(p, g);
    const auto env = theory::envelope_exact(constants_of(ctx, p.n_clients()));
    const double e0 = t.records[0].envelope_gap;
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      EXPECT_LE(t.records[k].envelope_gap, t.records[k - 1].envelope_gap * (1.0 + 1e-9) + 1e-12 * e0);
      EXPECT_LE(t.records[k].envelope_gap, env.gap_bound(k, e0) * (1.0 + 1e-9) + 1e-12);
    }
    EXPECT_LE(t.max_identity_error, kIdentityTolerance);
  }
}

TEST(Engine, AbsoluteInjectionPlateausAboveZero) {
  const FederatedProblem p = testing::small_problem(111);
  RunConfig rc = base_config(p, 1.0, 3000);
  rc.spec = prox::InexactnessSpec::absolute_injected(1e-2);
  rc.policy = ExtrapolationPolicy::of(Kind::kTheoryAbsolute);
  const RunTrace t = run(rc, p);
  const auto env = theory::envelope_absolute(constants_of(moreau::make_context(p, 1.0), p.n_clients()), 1e-2);
  double tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 2500; k < t.records.size(); ++k) tail_min = std::min(tail_min, t.records[k].sq_dist);
  EXPECT_GT(tail_min, 1e-8);
  EXPECT_LT(t.records.back().sq_dist, env.neighborhood_dist);
  EXPECT_LT(t.records.back().sq_dist, t.records.front().sq_dist);
  EXPECT_GT(t.records.back().bias_norm, 0.0);
}

TEST(Engine, Deterministic) {
  const FederatedProblem p = testing::small_problem(112);
  RunConfig rc = base_config(p, 1.0, 50);
  rc.spec = prox::InexactnessSpec::relative_injected(1e-3);
  rc.tau = 3;
  rc.policy = ExtrapolationPolicy::of(Kind::kTheoryMinibatch);
  const RunTrace a = run(rc, p);
  const RunTrace b = run(rc, p);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].sq_dist, b.records[k].sq_dist);
    EXPECT_EQ(a.records[k].sampled, b.records[k].sampled);
  }
  rc.seed = 8;
  const RunTrace c = run(rc, p);
  EXPECT_NE(a.records.back().sq_dist, c.records.back().sq_dist);
}

TEST(Engine, TauNiceSamplingIsUniform) {
  const FederatedProblem p = testing::small_problem(113);
  const std::size_t K = 3000;
  const std::size_t tau = 2;
  RunConfig rc = base_config(p, 1.0, K);
  rc.tau = tau;
  rc.policy = ExtrapolationPolicy::constant(1.0);
  const RunTrace t = run(rc, p);
  std::vector<double> count(p.n_clients(), 0.0);
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    const auto& s = t.records[k].sampled;
    ASSERT_EQ(s.size(), tau);
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), tau);
    for (std::size_t i : s) count[i] += 1.0;
  }
  const double prob = static_cast<double>(tau) / static_cast<double>(p.n_clients());
  const double mean = static_cast<double>(K) * prob;
  const double sd = std::sqrt(static_cast<double>(K) * prob * (1.0 - prob));
  for (double c : count) EXPECT_LE(std::abs(c - mean), 3.0 * sd);
}

TEST(Engine, IdentityHoldsForEveryOracle) {
  const FederatedProblem p = testing::small_problem(114);
  const std::vector<prox::InexactnessSpec> specs{
      prox::InexactnessSpec::absolute_injected(1e-3), prox::InexactnessSpec::relative_injected(1e-3),
      prox::InexactnessSpec::solver_gd(prox::Target::relative(1e-3)),
      prox::InexactnessSpec::solver_agd(prox::Target::absolute(1e-6))};
  for (const auto& spec : specs) {
    RunConfig rc = base_config(p, 1.0, 40);
    rc.spec = spec;
    rc.policy = ExtrapolationPolicy::of(Kind::kTheoryAbsolute);
    const RunTrace t = run(rc, p);
    EXPECT_LE(t.max_identity_error, kIdentityTolerance) << spec.describe();
  }
}

TEST(Engine, SolverModesCountLocalIterations) {
  const FederatedProblem p = testing::small_problem(115);
  RunConfig rc = base_config(p, 1.0, 5);
  rc.spec = prox::InexactnessSpec::solver_gd(prox::Target::relative(1e-2));
  const RunTrace t = run(rc, p);
  for (std::size_t k = 1; k < t.records.size(); ++k) EXPECT_GT(t.records[k].local_iters, 0u);
  EXPECT_EQ(t.records[0].local_iters, 0u);
}

TEST(Engine, DivergenceIsReported) {
  const FederatedProblem p = testing::small_problem(116);
  RunConfig rc = base_config(p, 1.0, 500);
  rc.policy = ExtrapolationPolicy::constant(50.0 / moreau::make_context(p, 1.0).L_gamma);
  const RunTrace t = run(rc, p);
  ASSERT_TRUE(t.diverged());
  EXPECT_EQ(*t.diverged_at, t.records.back().iter);
  EXPECT_LT(t.records.size(), 501u);

  Engine e(p, rc);
  EXPECT_THROW(
      {
        for (int k = 0; k < 500; ++k) e.step();
      },
      DivergenceDetected);
}

TEST(Engine, ConfigValidation) {
  const FederatedProblem p = testing::small_problem(117);
  RunConfig rc = base_config(p, 1.0, 5);
  rc.tau = 0;
  EXPECT_THROW(Engine(p, rc), InvalidArgument);
  rc.tau = p.n_clients() + 1;
  EXPECT_THROW(Engine(p, rc), InvalidArgument);
  rc = base_config(p, -1.0, 5);
  EXPECT_THROW(Engine(p, rc), InvalidArgument);
  rc = base_config(p, 1.0, 5);
  rc.x0 = Vector::Zero(3);
  EXPECT_THROW(Engine(p, rc), DimensionMismatch);
}

}  // namespace
}  // namespace fedexprox::engine
