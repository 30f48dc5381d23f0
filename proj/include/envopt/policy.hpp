// Policy parameterizations: a small CNN for the offline discrete setting and
// a single-layer message-passing GNN for the online continuous setting, with
// stochastic action heads and exact gradients via the autodiff tape.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "envopt/autodiff.hpp"
#include "envopt/grid_env.hpp"
#include "envopt/world.hpp"

namespace envopt {

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;

  int size() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
  }
};

// Draws from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor init_tensor(const std::string& name, std::vector<int> shape, int fan_in,
                   std::mt19937_64& rng);

// --- action heads ---

enum class ActionKind { Categorical5, Gaussian2 };

struct SampledAction {
  int discrete = 0;          // Categorical5
  Vec2 continuous;           // Gaussian2 (normalized command units)
  double log_prob = 0.0;
};

// head layout: Categorical5 -> 5 logits; Gaussian2 -> [mean_x, mean_y,
// log_std_x, log_std_y]. Deterministic given the rng state.
SampledAction sample_action(std::span<const double> head, ActionKind kind, std::mt19937_64& rng);

// Standard normal via Box-Muller on explicit 53-bit uniforms (keeps draws
// identical across standard library implementations).
double standard_normal(std::mt19937_64& rng);

// --- CNN policy (offline / discrete) ---

struct CnnConfig {
  int height = 8;
  int width = 8;
  int in_channels = 4;
  int features = 25;
  int conv_layers = 4;
  int kernel = 2;
  int actions = kGridActionCount;
  int value_hidden = 64;
};

class CnnPolicy {
 public:
  CnnConfig cfg;
  std::vector<Tensor> params;

  static CnnPolicy init(const CnnConfig& cfg, std::uint64_t seed);

  // Registers every parameter tensor as a tape leaf, in params order.
  std::vector<ad::Var> register_params(ad::Tape& tape) const;

  struct AdOut {
    ad::Var logits;  // [actions]
    ad::Var value;   // scalar
  };
  AdOut forward(ad::Tape& tape, std::span<const ad::Var> param_vars,
                const Observation& obs) const;

  struct Out {
    std::vector<double> logits;
    double value = 0.0;
  };
  Out forward(const Observation& obs) const;
};

// --- GNN policy (online / continuous) ---

struct GnnConfig {
  int node_dim = 9;   // [v (2), agent count (1), sum rel pos (2), sum rel vel (2), sum goal dir (2)]
  int edge_dim = 2;   // relative displacement
  int pub_dim = 2;    // neighbor components consumed by the message MLP (velocity)
  int hidden = 64;
  int msg_dim = 64;
  int feat_dim = 64;
  int action_dim = 2;
  int value_hidden = 32;
  double comm_radius = 2.0;
  double v_scale = 0.1;  // velocity normalization
};

// Feature vectors handed to the GNN; built from a LocalObservation.
struct GnnNodeInput {
  std::vector<double> self;                    // node_dim
  std::vector<std::vector<double>> neighbors;  // per neighbor: node_dim
  std::vector<std::vector<double>> edges;      // per neighbor: edge_dim
};

std::vector<double> obstacle_node_features(const ObstacleState& self,
                                           std::span<const AgentState> agent_neighbors,
                                           const GnnConfig& cfg);
GnnNodeInput build_gnn_input(const LocalObservation& obs, const GnnConfig& cfg);

class GnnPolicy {
 public:
  GnnConfig cfg;
  std::vector<Tensor> params;

  static GnnPolicy init(const GnnConfig& cfg, std::uint64_t seed);

  std::vector<ad::Var> register_params(ad::Tape& tape) const;

  struct AdOut {
    ad::Var head;   // [4]: mean (2), log std (2)
    ad::Var value;  // scalar
  };
  // Local evaluation: the node's own features plus 1-hop neighbor features.
  AdOut forward_local(ad::Tape& tape, std::span<const ad::Var> param_vars,
                      const GnnNodeInput& input) const;

  struct Out {
    std::vector<double> head;
    double value = 0.0;
  };
  Out forward_local(const GnnNodeInput& input) const;
};

// Centralized whole-graph evaluation of the same layer:
//   out_i = F_u(x_i, sum_{j in N_i} F_m(x_i, x_j, e_ij)).
// Edges are directed j -> i (src contributes a message to dst).
struct GraphEdge {
  int dst = 0;
  int src = 0;
  std::vector<double> feat;
};

std::vector<GnnPolicy::Out> gnn_forward(const std::vector<std::vector<double>>& node_features,
                                        const std::vector<GraphEdge>& edges,
                                        const GnnPolicy& policy);

// --- parameter container serialization (JSON header + raw doubles) ---

void save_params(const std::string& path, const std::string& kind,
                 const std::string& config_json, std::span<const Tensor> tensors);

struct LoadedParams {
  std::string kind;
  std::string config_json;
  std::vector<Tensor> tensors;
};

LoadedParams load_params(const std::string& path);

void save_policy(const std::string& path, const CnnPolicy& policy);
void save_policy(const std::string& path, const GnnPolicy& policy);
CnnPolicy load_cnn_policy(const std::string& path);
GnnPolicy load_gnn_policy(const std::string& path);

}  // namespace envopt
