#include "envopt/policy.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace envopt {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

// tanh MLP chain over a row-major matrix input [rows, in].
ad::Var mlp_forward(ad::Tape& t, ad::Var x, std::span<const ad::Var> layers, bool tanh_out) {
  // layers = [W0, b0, W1, b1, ...] with W stored [in, out].
  ad::Var h = x;
  for (size_t l = 0; l + 1 < layers.size(); l += 2) {
    h = t.add_rowvec(t.matmul(h, layers[l]), layers[l + 1]);
    const bool last = l + 2 >= layers.size();
    if (!last || tanh_out) h = t.tanh_(h);
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Tensor init_tensor(const std::string& name, std::vector<int> shape, int fan_in,
                   std::mt19937_64& rng) {
  Tensor t;
  t.name = name;
  t.shape = std::move(shape);
  const double bound = fan_in > 0 ? 1.0 / std::sqrt((double)fan_in) : 0.0;
  std::uniform_real_distribution<double> dist(-bound, bound);
  t.data.resize(t.size());
  for (auto& v : t.data) v = fan_in > 0 ? dist(rng) : 0.0;
  return t;
}

double standard_normal(std::mt19937_64& rng) {
  // 53-bit uniforms in (0,1] and [0,1).
  const double u1 = ((rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = (rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SampledAction sample_action(std::span<const double> head, ActionKind kind,
                            std::mt19937_64& rng) {
  for (double v : head)
    if (!std::isfinite(v)) throw std::invalid_argument("sample_action: non-finite head");
  SampledAction out;
  if (kind == ActionKind::Categorical5) {
    if (head.size() != 5) throw std::invalid_argument("sample_action: want 5 logits");
    double mx = head[0];
    for (double v : head) mx = std::max(mx, v);
    double z = 0.0;
    std::array<double, 5> p{};
    for (size_t i = 0; i < 5; ++i) {
      p[i] = std::exp(head[i] - mx);
      z += p[i];
    }
    const double u = (rng() >> 11) * 0x1.0p-53 * z;
    double acc = 0.0;
    int a = 4;
    for (int i = 0; i < 5; ++i) {
      acc += p[i];
      if (u < acc) {
        a = i;
        break;
      }
    }
    out.discrete = a;
    out.log_prob = head[a] - mx - std::log(z);
  } else {
    if (head.size() != 4) throw std::invalid_argument("sample_action: want mean+log_std");
    out.log_prob = 0.0;
    double sample[2];
    for (int d = 0; d < 2; ++d) {
      const double mean = head[d];
      const double log_std = head[2 + d];
      const double sigma = std::exp(log_std);
      const double z = standard_normal(rng);
      sample[d] = mean + sigma * z;
      out.log_prob += -0.5 * z * z - log_std - 0.5 * kLogTwoPi;
    }
    out.continuous = {sample[0], sample[1]};
  }
  return out;
}

// --- CNN ---

CnnPolicy CnnPolicy::init(const CnnConfig& cfg, std::uint64_t seed) {
  CnnPolicy p;
  p.cfg = cfg;
  std::mt19937_64 rng(mix_seed(seed, 0xc0ffee));
  int in_c = cfg.in_channels;
  int h = cfg.height, w = cfg.width;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    const int fan_in = in_c * cfg.kernel * cfg.kernel;
    p.params.push_back(init_tensor("conv" + std::to_string(l) + ".w",
                                   {cfg.features, in_c, cfg.kernel, cfg.kernel}, fan_in, rng));
    p.params.push_back(init_tensor("conv" + std::to_string(l) + ".b", {cfg.features}, 0, rng));
    in_c = cfg.features;
    h -= cfg.kernel - 1;
    w -= cfg.kernel - 1;
    if (h <= 0 || w <= 0) throw std::invalid_argument("cnn: grid too small for conv stack");
  }
  const int flat = cfg.features * h * w;
  p.params.push_back(init_tensor("policy.w", {flat, cfg.actions}, flat, rng));
  p.params.push_back(init_tensor("policy.b", {cfg.actions}, 0, rng));
  p.params.push_back(init_tensor("value.w1", {flat, cfg.value_hidden}, flat, rng));
  p.params.push_back(init_tensor("value.b1", {cfg.value_hidden}, 0, rng));
  p.params.push_back(init_tensor("value.w2", {cfg.value_hidden, 1}, cfg.value_hidden, rng));
  p.params.push_back(init_tensor("value.b2", {1}, 0, rng));
  return p;
}

std::vector<ad::Var> CnnPolicy::register_params(ad::Tape& tape) const {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const auto& t : params) vars.push_back(tape.leaf(t.data, t.shape));
  return vars;
}

CnnPolicy::AdOut CnnPolicy::forward(ad::Tape& t, std::span<const ad::Var> pv,
                                    const Observation& obs) const {
  if (obs.channels != cfg.in_channels || obs.height != cfg.height || obs.width != cfg.width)
    throw std::invalid_argument("cnn forward: observation shape mismatch");
  ad::Var x = t.leaf(obs.data, {obs.channels, obs.height, obs.width});
  size_t k = 0;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    x = t.tanh_(t.conv2d(x, pv[k], pv[k + 1]));
    k += 2;
  }
  const auto& s = t.shape(x);
  const int flat = s[0] * s[1] * s[2];
  x = t.reshape(x, {1, flat});
  const ad::Var logits = t.reshape(t.add_rowvec(t.matmul(x, pv[k]), pv[k + 1]), {cfg.actions});
  const ad::Var vh = t.tanh_(t.add_rowvec(t.matmul(x, pv[k + 2]), pv[k + 3]));
  const ad::Var value =
      t.reshape(t.add_rowvec(t.matmul(vh, pv[k + 4]), pv[k + 5]), {1});
  return {logits, value};
}

CnnPolicy::Out CnnPolicy::forward(const Observation& obs) const {
  ad::Tape t;
  const auto pv = register_params(t);
  const AdOut out = forward(t, pv, obs);
  return {t.val(out.logits), t.val(out.value)[0]};
}

// --- GNN ---

GnnPolicy GnnPolicy::init(const GnnConfig& cfg, std::uint64_t seed) {
  GnnPolicy p;
  p.cfg = cfg;
  std::mt19937_64 rng(mix_seed(seed, 0x6e6e));
  auto mlp = [&](const std::string& name, int in, int hidden, int out) {
    p.params.push_back(init_tensor(name + ".w1", {in, hidden}, in, rng));
    p.params.push_back(init_tensor(name + ".b1", {hidden}, 0, rng));
    p.params.push_back(init_tensor(name + ".w2", {hidden, hidden}, hidden, rng));
    p.params.push_back(init_tensor(name + ".b2", {hidden}, 0, rng));
    p.params.push_back(init_tensor(name + ".w3", {hidden, out}, hidden, rng));
    p.params.push_back(init_tensor(name + ".b3", {out}, 0, rng));
  };
  mlp("fm", cfg.node_dim + cfg.pub_dim + cfg.edge_dim, cfg.hidden, cfg.msg_dim);
  mlp("fu", cfg.node_dim + cfg.msg_dim, cfg.hidden, cfg.feat_dim);
  p.params.push_back(init_tensor("head.w", {cfg.feat_dim, 2 * cfg.action_dim}, cfg.feat_dim, rng));
  p.params.push_back(init_tensor("head.b", {2 * cfg.action_dim}, 0, rng));
  p.params.push_back(init_tensor("value.w1", {cfg.feat_dim, cfg.value_hidden}, cfg.feat_dim, rng));
  p.params.push_back(init_tensor("value.b1", {cfg.value_hidden}, 0, rng));
  p.params.push_back(init_tensor("value.w2", {cfg.value_hidden, 1}, cfg.value_hidden, rng));
  p.params.push_back(init_tensor("value.b2", {1}, 0, rng));
  return p;
}

std::vector<ad::Var> GnnPolicy::register_params(ad::Tape& tape) const {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const auto& t : params) vars.push_back(tape.leaf(t.data, t.shape));
  return vars;
}

std::vector<double> obstacle_node_features(const ObstacleState& self,
                                           std::span<const AgentState> agent_neighbors,
                                           const GnnConfig& cfg) {
  std::vector<double> f(cfg.node_dim, 0.0);
  f[0] = self.velocity.x / cfg.v_scale;
  f[1] = self.velocity.y / cfg.v_scale;
  f[2] = (double)agent_neighbors.size();
  const Vec2 c = self.body.center();
  for (const auto& a : agent_neighbors) {
    f[3] += (a.position.x - c.x) / cfg.comm_radius;
    f[4] += (a.position.y - c.y) / cfg.comm_radius;
    f[5] += (a.velocity.x - self.velocity.x) / cfg.v_scale;
    f[6] += (a.velocity.y - self.velocity.y) / cfg.v_scale;
    const Vec2 g = (a.goal - a.position).normalized();
    f[7] += g.x;
    f[8] += g.y;
  }
  return f;
}

GnnNodeInput build_gnn_input(const LocalObservation& obs, const GnnConfig& cfg) {
  GnnNodeInput in;
  in.self = obstacle_node_features(obs.self, obs.agent_neighbors, cfg);
  const Vec2 c = obs.self.body.center();
  for (const auto& nb : obs.obstacle_neighbors) {
    // Only the neighbor's broadcast velocity is visible; its own agent
    // aggregate lives outside this node's communication radius.
    std::vector<double> nf(cfg.node_dim, 0.0);
    nf[0] = nb.velocity.x / cfg.v_scale;
    nf[1] = nb.velocity.y / cfg.v_scale;
    in.neighbors.push_back(std::move(nf));
    const Vec2 d = nb.body.center() - c;
    in.edges.push_back({d.x / cfg.comm_radius, d.y / cfg.comm_radius});
  }
  return in;
}

GnnPolicy::AdOut GnnPolicy::forward_local(ad::Tape& t, std::span<const ad::Var> pv,
                                          const GnnNodeInput& input) const {
  if ((int)input.self.size() != cfg.node_dim)
    throw std::invalid_argument("gnn forward: node feature dim");
  const ad::Var x_self = t.leaf(input.self, {1, cfg.node_dim});

  ad::Var aggregated;
  if (input.neighbors.empty()) {
    aggregated = t.leaf(std::vector<double>(cfg.msg_dim, 0.0), {1, cfg.msg_dim});
  } else {
    const int k = (int)input.neighbors.size();
    std::vector<double> rows;
    rows.reserve((size_t)k * (cfg.node_dim + cfg.pub_dim + cfg.edge_dim));
    for (int i = 0; i < k; ++i) {
      if ((int)input.neighbors[i].size() != cfg.node_dim ||
          (int)input.edges[i].size() != cfg.edge_dim)
        throw std::invalid_argument("gnn forward: neighbor/edge dim");
      rows.insert(rows.end(), input.self.begin(), input.self.end());
      rows.insert(rows.end(), input.neighbors[i].begin(),
                  input.neighbors[i].begin() + cfg.pub_dim);
      rows.insert(rows.end(), input.edges[i].begin(), input.edges[i].end());
    }
    const ad::Var edge_in =
        t.leaf(std::move(rows), {k, cfg.node_dim + cfg.pub_dim + cfg.edge_dim});
    const ad::Var msgs = mlp_forward(t, edge_in, pv.subspan(0, 6), true);
    aggregated = t.sum_rows(msgs);
  }

  const ad::Var fu_in = t.concat_cols(x_self, aggregated);
  const ad::Var feat = mlp_forward(t, fu_in, pv.subspan(6, 6), true);
  const ad::Var head =
      t.reshape(t.add_rowvec(t.matmul(feat, pv[12]), pv[13]), {2 * cfg.action_dim});
  const ad::Var vh = t.tanh_(t.add_rowvec(t.matmul(feat, pv[14]), pv[15]));
  const ad::Var value = t.reshape(t.add_rowvec(t.matmul(vh, pv[16]), pv[17]), {1});
  return {head, value};
}

GnnPolicy::Out GnnPolicy::forward_local(const GnnNodeInput& input) const {
  ad::Tape t;
  const auto pv = register_params(t);
  const AdOut out = forward_local(t, pv, input);
  return {t.val(out.head), t.val(out.value)[0]};
}

std::vector<GnnPolicy::Out> gnn_forward(const std::vector<std::vector<double>>& node_features,
                                        const std::vector<GraphEdge>& edges,
                                        const GnnPolicy& policy) {
  const auto& cfg = policy.cfg;
  const int n = (int)node_features.size();
  ad::Tape t;
  const auto pv = policy.register_params(t);

  // Batched edge pass: every message row is (x_dst, pub(x_src), e).
  ad::Var aggregated;
  if (edges.empty()) {
    aggregated = t.leaf(std::vector<double>((size_t)n * cfg.msg_dim, 0.0), {n, cfg.msg_dim});
  } else {
    const int in_dim = cfg.node_dim + cfg.pub_dim + cfg.edge_dim;
    std::vector<double> rows;
    rows.reserve(edges.size() * in_dim);
    std::vector<int> dst;
    dst.reserve(edges.size());
    for (const auto& e : edges) {
      const auto& xi = node_features[e.dst];
      const auto& xj = node_features[e.src];
      rows.insert(rows.end(), xi.begin(), xi.end());
      rows.insert(rows.end(), xj.begin(), xj.begin() + cfg.pub_dim);
      rows.insert(rows.end(), e.feat.begin(), e.feat.end());
      dst.push_back(e.dst);
    }
    const ad::Var edge_in = t.leaf(std::move(rows), {(int)edges.size(), in_dim});
    const ad::Var msgs = mlp_forward(t, edge_in, std::span(pv).subspan(0, 6), true);
    aggregated = t.scatter_sum_rows(msgs, std::move(dst), n);
  }

  std::vector<double> xall;
  xall.reserve((size_t)n * cfg.node_dim);
  for (const auto& x : node_features) xall.insert(xall.end(), x.begin(), x.end());
  const ad::Var xs = t.leaf(std::move(xall), {n, cfg.node_dim});
  const ad::Var fu_in = t.concat_cols(xs, aggregated);
  const ad::Var feat = mlp_forward(t, fu_in, std::span(pv).subspan(6, 6), true);
  const ad::Var head = t.add_rowvec(t.matmul(feat, pv[12]), pv[13]);
  const ad::Var vh = t.tanh_(t.add_rowvec(t.matmul(feat, pv[14]), pv[15]));
  const ad::Var value = t.add_rowvec(t.matmul(vh, pv[16]), pv[17]);

  std::vector<GnnPolicy::Out> out(n);
  const auto& hv = t.val(head);
  const auto& vv = t.val(value);
  for (int i = 0; i < n; ++i) {
    out[i].head.assign(hv.begin() + (size_t)i * 2 * cfg.action_dim,
                       hv.begin() + (size_t)(i + 1) * 2 * cfg.action_dim);
    out[i].value = vv[i];
  }
  return out;
}

// --- serialization ---

void save_params(const std::string& path, const std::string& kind,
                 const std::string& config_json, std::span<const Tensor> tensors) {
  ordered_json header;
  header["format"] = "envopt-params";
  header["version"] = 1;
  header["kind"] = kind;
  header["config"] = ordered_json::parse(config_json);
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a of the config text
  for (unsigned char c : config_json) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  header["config_hash"] = hash;
  ordered_json tens = ordered_json::array();
  for (const auto& t : tensors) tens.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = tens;
  const std::string head_str = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_params: cannot open " + path);
  const std::uint64_t len = head_str.size();
  f.write("EOPM", 4);
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(head_str.data(), (std::streamsize)len);
  for (const auto& t : tensors)
    f.write(reinterpret_cast<const char*>(t.data.data()),
            (std::streamsize)(t.data.size() * sizeof(double)));
  if (!f) throw std::runtime_error("save_params: write failed for " + path);
}

LoadedParams load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_params: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "EOPM", 4) != 0)
    throw std::runtime_error("load_params: bad magic in " + path);
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head_str(len, '\0');
  f.read(head_str.data(), (std::streamsize)len);
  const auto header = ordered_json::parse(head_str);
  if (header.at("format") != "envopt-params")
    throw std::runtime_error("load_params: unknown format");
  LoadedParams out;
  out.kind = header.at("kind");
  out.config_json = header.at("config").dump();
  for (const auto& th : header.at("tensors")) {
    Tensor t;
    t.name = th.at("name");
    t.shape = th.at("shape").get<std::vector<int>>();
    t.data.resize(t.size());
    f.read(reinterpret_cast<char*>(t.data.data()),
           (std::streamsize)(t.data.size() * sizeof(double)));
    out.tensors.push_back(std::move(t));
  }
  if (!f) throw std::runtime_error("load_params: truncated file " + path);
  return out;
}

namespace {

ordered_json cnn_config_json(const CnnConfig& c) {
  return ordered_json{{"height", c.height},       {"width", c.width},
                      {"in_channels", c.in_channels}, {"features", c.features},
                      {"conv_layers", c.conv_layers}, {"kernel", c.kernel},
                      {"actions", c.actions},     {"value_hidden", c.value_hidden}};
}

ordered_json gnn_config_json(const GnnConfig& c) {
  return ordered_json{{"node_dim", c.node_dim},   {"edge_dim", c.edge_dim},
                      {"pub_dim", c.pub_dim},     {"hidden", c.hidden},
                      {"msg_dim", c.msg_dim},     {"feat_dim", c.feat_dim},
                      {"action_dim", c.action_dim}, {"value_hidden", c.value_hidden},
                      {"comm_radius", c.comm_radius}, {"v_scale", c.v_scale}};
}

}  // namespace

void save_policy(const std::string& path, const CnnPolicy& policy) {
  save_params(path, "cnn", cnn_config_json(policy.cfg).dump(), policy.params);
}

void save_policy(const std::string& path, const GnnPolicy& policy) {
  save_params(path, "gnn", gnn_config_json(policy.cfg).dump(), policy.params);
}

CnnPolicy load_cnn_policy(const std::string& path) {
  LoadedParams lp = load_params(path);
  if (lp.kind != "cnn") throw std::runtime_error("checkpoint is not a cnn policy: " + path);
  const auto c = ordered_json::parse(lp.config_json);
  CnnPolicy p;
  p.cfg.height = c.at("height");
  p.cfg.width = c.at("width");
  p.cfg.in_channels = c.at("in_channels");
  p.cfg.features = c.at("features");
  p.cfg.conv_layers = c.at("conv_layers");
  p.cfg.kernel = c.at("kernel");
  p.cfg.actions = c.at("actions");
  p.cfg.value_hidden = c.at("value_hidden");
  p.params = std::move(lp.tensors);
  return p;
}

GnnPolicy load_gnn_policy(const std::string& path) {
  LoadedParams lp = load_params(path);
  if (lp.kind != "gnn") throw std::runtime_error("checkpoint is not a gnn policy: " + path);
  const auto c = ordered_json::parse(lp.config_json);
  GnnPolicy p;
  p.cfg.node_dim = c.at("node_dim");
  p.cfg.edge_dim = c.at("edge_dim");
  p.cfg.pub_dim = c.at("pub_dim");
  p.cfg.hidden = c.at("hidden");
  p.cfg.msg_dim = c.at("msg_dim");
  p.cfg.feat_dim = c.at("feat_dim");
  p.cfg.action_dim = c.at("action_dim");
  p.cfg.value_hidden = c.at("value_hidden");
  p.cfg.comm_radius = c.at("comm_radius");
  p.cfg.v_scale = c.at("v_scale");
  p.params = std::move(lp.tensors);
  return p;
}

}  // namespace envopt
