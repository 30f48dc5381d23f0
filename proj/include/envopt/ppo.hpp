// Model-free policy-gradient training loop (clipped-surrogate PPO with GAE),
// shared by the offline CNN and online GNN settings.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "envopt/autodiff.hpp"
#include "envopt/policy.hpp"

namespace envopt {

struct PpoConfig {
  double clip_ratio = 0.2;
  double gae_lambda = 0.95;
  int epochs_per_batch = 4;
  int minibatch_size = 64;
  double learning_rate = 3e-4;
  double entropy_coeff = 0.01;
  double value_coeff = 0.5;
  int batch_episodes = 16;
  std::uint64_t seed = 1;
  long long total_env_steps = 200000;  // training budget
  int checkpoint_every = 50;           // updates between checkpoints
  int eval_every = 10;                 // updates between eval rows in the log
  int eval_trials = 5;
};

// Scalar view of one stored step; observations and actions stay inside the
// task that collected them.
struct RolloutSample {
  int episode = 0;  // stream id within the batch
  int t = 0;        // time index within the stream
  double reward = 0.0;
  double value = 0.0;     // V(s_t) under the collection-time parameters
  double log_prob = 0.0;  // log pi(a_t | s_t) at collection time
};

struct RolloutBatch {
  std::vector<RolloutSample> samples;  // grouped by episode, time-ordered
  long long env_steps = 0;
  std::vector<double> episode_returns;  // undiscounted, diagnostics
};

// Environment adapter: owns rollout storage in its native observation types.
class PpoTask {
 public:
  virtual ~PpoTask() = default;

  virtual RolloutBatch collect(int episodes, std::mt19937_64& rng) = 0;

  struct Eval {
    ad::Var log_prob;
    ad::Var entropy;
    ad::Var value;
  };
  // Re-evaluates stored sample `index` under the current parameters.
  virtual Eval eval_sample(size_t index, ad::Tape& tape, std::span<const ad::Var> pv) = 0;

  virtual std::vector<ad::Var> register_params(ad::Tape& tape) const = 0;
  virtual std::vector<Tensor*> parameters() = 0;
};

// Raw GAE(gamma, lambda) advantages per episode stream (value bootstrap 0 at
// episode end).
std::vector<double> compute_gae(const RolloutBatch& batch, double gamma, double lambda);

// GAE normalized to zero mean / unit variance across the batch.
std::vector<double> compute_advantages(const RolloutBatch& batch, double gamma, double lambda);

// Per-sample clipped surrogate objective min(r*A, clip(r, 1 +/- eps)*A).
double clipped_surrogate(double ratio, double advantage, double clip_ratio);

struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void step(std::span<Tensor*> params, std::span<const double> grad, double lr);
};

struct UpdateStats {
  double mean_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  bool aborted = false;  // non-finite loss encountered; parameters untouched
};

// One PPO update over an already-collected batch (epochs x minibatches of
// gradient ascent on the clipped objective). Parameters update in place.
UpdateStats ppo_update(PpoTask& task, const RolloutBatch& batch, double gamma,
                       const PpoConfig& cfg, AdamState& adam, std::mt19937_64& rng);

}  // namespace envopt
