#include "envopt/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace envopt {

std::vector<double> compute_gae(const RolloutBatch& batch, double gamma, double lambda) {
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("compute_gae: gamma/lambda out of range");
  const auto& s = batch.samples;
  std::vector<double> adv(s.size(), 0.0);
  // Streams are stored contiguously in time order; sweep each backwards.
  size_t end = s.size();
  while (end > 0) {
    size_t begin = end - 1;
    while (begin > 0 && s[begin - 1].episode == s[end - 1].episode) --begin;
    double acc = 0.0;
    double next_value = 0.0;  // terminal bootstrap
    for (size_t i = end; i-- > begin;) {
      const double delta = s[i].reward + gamma * next_value - s[i].value;
      acc = delta + gamma * lambda * acc;
      adv[i] = acc;
      next_value = s[i].value;
    }
    end = begin;
  }
  return adv;
}

std::vector<double> compute_advantages(const RolloutBatch& batch, double gamma, double lambda) {
  std::vector<double> adv = compute_gae(batch, gamma, lambda);
  if (adv.empty()) return adv;
  double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / adv.size());
  for (double& a : adv) a = (a - mean) / (stddev + 1e-8);
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double clip_ratio) {
  const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
  return std::min(ratio * advantage, clipped * advantage);
}

void AdamState::step(std::span<Tensor*> params, std::span<const double> grad, double lr) {
  size_t total = 0;
  for (const Tensor* p : params) total += p->data.size();
  if (grad.size() != total) throw std::invalid_argument("adam: gradient size mismatch");
  if (m.empty()) {
    m.assign(total, 0.0);
    v.assign(total, 0.0);
  }
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, (double)t);
  const double bc2 = 1.0 - std::pow(beta2, (double)t);
  size_t k = 0;
  for (Tensor* p : params) {
    for (double& w : p->data) {
      const double g = grad[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * g;
      v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
      w += lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);  // ascent
      ++k;
    }
  }
}

UpdateStats ppo_update(PpoTask& task, const RolloutBatch& batch, double gamma,
                       const PpoConfig& cfg, AdamState& adam, std::mt19937_64& rng) {
  if (!(cfg.clip_ratio > 0.0)) throw std::invalid_argument("ppo_update: clip_ratio <= 0");
  UpdateStats stats;
  const size_t n = batch.samples.size();
  if (n == 0) return stats;

  const std::vector<double> adv_raw = compute_gae(batch, gamma, cfg.gae_lambda);
  std::vector<double> adv = adv_raw;
  {
    double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double stddev = std::sqrt(var / adv.size());
    for (double& a : adv) a = (a - mean) / (stddev + 1e-8);
  }
  std::vector<double> returns(n);
  for (size_t i = 0; i < n; ++i) returns[i] = adv_raw[i] + batch.samples[i].value;

  if (!batch.episode_returns.empty())
    stats.mean_return = std::accumulate(batch.episode_returns.begin(),
                                        batch.episode_returns.end(), 0.0) /
                        batch.episode_returns.size();

  auto params = task.parameters();
  size_t param_count = 0;
  for (const Tensor* p : params) param_count += p->data.size();

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  double policy_loss_acc = 0.0, value_loss_acc = 0.0, entropy_acc = 0.0;
  long long terms = 0;

  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t mb_start = 0; mb_start < n; mb_start += cfg.minibatch_size) {
      const size_t mb_end = std::min(n, mb_start + (size_t)cfg.minibatch_size);
      const size_t mb_n = mb_end - mb_start;

      ad::Tape tape;
      const auto pv = task.register_params(tape);
      ad::Var loss = tape.scalar(0.0);
      double mb_policy = 0.0, mb_value = 0.0, mb_entropy = 0.0;
      for (size_t k = mb_start; k < mb_end; ++k) {
        const size_t idx = order[k];
        const auto& sample = batch.samples[idx];
        const auto ev = task.eval_sample(idx, tape, pv);
        // ratio = exp(logp_new - logp_old)
        const ad::Var ratio =
            tape.exp_(tape.sub(ev.log_prob, tape.scalar(sample.log_prob)));
        const double a = adv[idx];
        const double r_val = tape.val(ratio)[0];
        // Outside the clip band with clipping binding, the clipped branch is
        // constant: drop the gradient exactly, as the objective dictates.
        ad::Var surrogate;
        const bool clip_binds = (a >= 0.0 && r_val > 1.0 + cfg.clip_ratio) ||
                                (a < 0.0 && r_val < 1.0 - cfg.clip_ratio);
        if (clip_binds) {
          surrogate = tape.scalar(std::clamp(r_val, 1.0 - cfg.clip_ratio,
                                             1.0 + cfg.clip_ratio) * a);
        } else {
          surrogate = tape.scale(ratio, a);
        }
        const ad::Var value_err = tape.square(tape.sub(ev.value, tape.scalar(returns[idx])));
        ad::Var term = tape.sub(
            tape.add(surrogate, tape.scale(ev.entropy, cfg.entropy_coeff)),
            tape.scale(value_err, cfg.value_coeff));
        loss = tape.add(loss, term);
        mb_policy += clipped_surrogate(r_val, a, cfg.clip_ratio);
        mb_value += tape.val(value_err)[0];
        mb_entropy += tape.val(ev.entropy)[0];
      }
      loss = tape.scale(loss, 1.0 / (double)mb_n);
      if (!std::isfinite(tape.val(loss)[0])) {
        stats.aborted = true;
        stats.policy_loss = tape.val(loss)[0];
        return stats;
      }
      tape.backward(loss);
      std::vector<double> grad;
      grad.reserve(param_count);
      for (size_t pi = 0; pi < params.size(); ++pi) {
        const auto& g = tape.grad(pv[pi]);
        grad.insert(grad.end(), g.begin(), g.end());
      }
      bool finite = true;
      for (double g : grad)
        if (!std::isfinite(g)) finite = false;
      if (!finite) {
        stats.aborted = true;
        return stats;
      }
      adam.step(params, grad, cfg.learning_rate);
      policy_loss_acc += mb_policy / mb_n;
      value_loss_acc += mb_value / mb_n;
      entropy_acc += mb_entropy / mb_n;
      ++terms;
    }
  }
  if (terms > 0) {
    stats.policy_loss = policy_loss_acc / terms;
    stats.value_loss = value_loss_acc / terms;
    stats.entropy = entropy_acc / terms;
  }
  return stats;
}

}  // namespace envopt
