#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedexprox/moreau.hpp"
#include "fedexprox/problem.hpp"
#include "fedexprox/prox.hpp"
#include "fedexprox/theory.hpp"

namespace fedexprox::engine {

class ExtrapolationPolicy {
 public:
  enum class Kind {
    kConstant,
    kTheoryExact,
    kTheoryAbsolute,
    kTheoryRelativeSGD,
    kTheoryRelativeCompression,
    kTheoryMinibatch,
    kGradientDiversity,
    kPolyak,
  };

  static ExtrapolationPolicy constant(double alpha);
  static ExtrapolationPolicy of(Kind kind);  // any kind except kConstant

  Kind kind() const { return kind_; }
  // Only meaningful for kConstant.
  double alpha() const { return alpha_; }
  bool adaptive() const { return kind_ == Kind::kGradientDiversity || kind_ == Kind::kPolyak; }
  bool theory() const { return !adaptive() && kind_ != Kind::kConstant; }

  // Config-file name: constant, theory-exact, ..., polyak.
  std::string name() const;
  static ExtrapolationPolicy parse(const std::string& name, std::optional<double> alpha = {});

 private:
  ExtrapolationPolicy(Kind kind, double alpha) : kind_(kind), alpha_(alpha) {}
  Kind kind_ = Kind::kTheoryExact;
  double alpha_ = 0.0;
};

struct RunConfig {
  double gamma = 1.0;
  std::size_t K = 1;
  std::size_t tau = 1;
  prox::InexactnessSpec spec = prox::InexactnessSpec::exact();
  ExtrapolationPolicy policy = ExtrapolationPolicy::of(ExtrapolationPolicy::Kind::kTheoryExact);
  Vector x0;
  std::uint64_t seed = 0;

  // Checks gamma > 0, 1 <= tau <= n and dim(x0) = d. K = 0 is accepted and
  // yields the k = 0 record only.
  void validate(const FederatedProblem& problem) const;
};

// Record k describes x_k together with the round that produced it; the
// round fields (alpha, sampled, local_iters, bias_norm) are empty at k = 0.
struct TraceRecord {
  std::size_t iter = 0;
  double sq_dist = 0.0;       // ||x_k - x_star||^2
  double envelope_gap = 0.0;  // gamma M(x_k) - gamma M_inf
  double alpha = 0.0;
  double bias_norm = 0.0;     // ||mean_S (x_tilde_i - prox_i(x_{k-1}))||
  double grad_norm = 0.0;     // ||gamma grad M(x_k)||
  std::size_t local_iters = 0;
  std::vector<std::size_t> sampled;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  Vector x_final;
  std::optional<std::size_t> diverged_at;
  // Largest deviation between the update rule and x - alpha g(x), divided by
  // max(1, |x|, |alpha| |x|, |step|).
  double max_identity_error = 0.0;

  bool diverged() const { return diverged_at.has_value(); }
};

// What the adaptive policies see after a round's prox evaluations.
struct RoundSnapshot {
  const Vector* x = nullptr;
  std::span<const std::size_t> sampled;
  std::span<const Vector> returned;  // x_tilde_i for i in sampled
};

// Policy value for one round. Theory kinds ignore the snapshot; adaptive
// kinds need it and use the returned approximations.
double alpha_for(const ExtrapolationPolicy& policy, const moreau::EnvelopeContext& ctx,
                 const prox::InexactnessSpec& spec, std::size_t tau,
                 const RoundSnapshot* snapshot = nullptr);

theory::ProblemConstants constants_of(const moreau::EnvelopeContext& ctx, std::size_t tau);

inline constexpr double kDivergenceFactor = 1e12;
inline constexpr double kIdentityTolerance = 1e-12;

class Engine {
 public:
  Engine(const FederatedProblem& problem, RunConfig config);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const moreau::EnvelopeContext& context() const { return ctx_; }
  const Vector& x() const { return x_; }
  std::size_t iteration() const { return k_; }
  // Record for the current iterate (round fields from the last step).
  const TraceRecord& last_record() const { return record_; }
  double max_identity_error() const { return max_identity_error_; }

  // One round: x_k -> x_{k+1}. Throws DivergenceDetected past the threshold.
  const TraceRecord& step();

  // Executes the remaining rounds up to K, stopping early on divergence.
  RunTrace run();

 private:
  bool advance();  // false when the new iterate diverged
  void measure(TraceRecord& record);

  const FederatedProblem* problem_;
  RunConfig config_;
  moreau::EnvelopeContext ctx_;
  std::optional<moreau::GapEvaluator> gap_;  // refers to ctx_
  std::optional<double> fixed_alpha_;
  Vector x_;
  std::size_t k_ = 0;
  double initial_sq_dist_ = 0.0;
  std::vector<Vector> exact_;  // prox_i(x_k) for every client
  TraceRecord record_;
  double max_identity_error_ = 0.0;
};

RunTrace run(const RunConfig& config, const FederatedProblem& problem);

}  // namespace fedexprox::engine
