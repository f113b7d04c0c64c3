// DDPG with a hybrid action head: a shared feature extractor feeding per-UE
// sub-nets that emit a softmax score over base stations and a tanh pair of
// beam angles. The critic consumes [state || flat action] where the flat
// action keeps the pseudo-discrete scores, so the actor->critic path stays
// differentiable end to end.
//
// Variants:
//   proposed     - extractor + per-UE (softmax BS head, tanh angle head fed
//                  with z_i = [x_L, bs_scores_i])
//   vanilla      - extractor + one wide head; softmax/tanh applied per slice
//   bs_oracle    - input widened with a per-UE one-hot of the best BS; heads
//                  predict angles only
//   angle_oracle - heads predict BS scores only; a genie supplies the exact
//                  LOS angles of the chosen BS
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamrl/env.hpp"
#include "beamrl/nn.hpp"

namespace beamrl::agent {

enum class Variant { proposed, vanilla, bs_oracle, angle_oracle };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::proposed: return "proposed";
    case Variant::vanilla: return "vanilla";
    case Variant::bs_oracle: return "bs_oracle";
    case Variant::angle_oracle: return "angle_oracle";
  }
  return "unknown";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "proposed") return Variant::proposed;
  if (s == "vanilla") return Variant::vanilla;
  if (s == "bs_oracle" || s == "bs-oracle") return Variant::bs_oracle;
  if (s == "angle_oracle" || s == "angle-oracle") return Variant::angle_oracle;
  throw std::invalid_argument("unknown agent variant: " + s);
}

// ---------------------------------------------------------------------------
// Actor

struct ActorNetwork {
  Variant variant = Variant::proposed;
  int n_ue = 0;
  int n_bs = 0;
  int state_dim = 0;
  int feat_dim = 0;
  nn::LayerStack extractor;                    // relu stack
  std::vector<nn::LayerStack> bs_heads;        // per UE, single softmax layer
  std::vector<nn::LayerStack> angle_heads;     // per UE, single tanh layer
  nn::LayerStack vanilla_head;                 // single identity layer

  int action_dim() const { return n_ue * (n_bs + 2); }
  int block_width() const { return n_bs + 2; }
};

struct ActorCache {
  nn::BatchCache extractor;
  std::vector<nn::BatchCache> bs_heads;
  std::vector<nn::BatchCache> angle_heads;
  nn::BatchCache vanilla;
  Matrix flat;  // action_dim x N
};

struct ActorGrads {
  nn::StackGrads extractor;
  std::vector<nn::StackGrads> bs_heads;
  std::vector<nn::StackGrads> angle_heads;
  nn::StackGrads vanilla_head;
};

// Noiseless actor pass over a batch of states (one column per sample).
// genie_units must hold the per-sample genie angle table (rows of size
// n_ue*n_bs*2) for the angle_oracle variant and may be null otherwise.
inline Matrix actor_forward_batch(const ActorNetwork& actor, const Matrix& states,
                                  ActorCache& cache, const Matrix* genie_units = nullptr) {
  const std::size_t n = states.cols;
  const int bw = actor.block_width();
  Matrix xl = nn::forward_batch(actor.extractor, states, cache.extractor);
  cache.flat = Matrix(actor.action_dim(), n);
  cache.bs_heads.assign(actor.bs_heads.size(), {});
  cache.angle_heads.assign(actor.angle_heads.size(), {});

  if (actor.variant == Variant::vanilla) {
    const Matrix raw = nn::forward_batch(actor.vanilla_head, xl, cache.vanilla);
    // per-UE slice squash: softmax over score rows, tanh over angle rows
    for (int i = 0; i < actor.n_ue; ++i) {
      const int r0 = i * bw;
      for (std::size_t j = 0; j < n; ++j) {
        double mx = raw(r0, j);
        for (int k = 1; k < actor.n_bs; ++k) mx = std::max(mx, raw(r0 + k, j));
        double sum = 0.0;
        for (int k = 0; k < actor.n_bs; ++k) {
          const double e = std::exp(raw(r0 + k, j) - mx);
          cache.flat(r0 + k, j) = e;
          sum += e;
        }
        for (int k = 0; k < actor.n_bs; ++k) cache.flat(r0 + k, j) /= sum;
        cache.flat(r0 + actor.n_bs, j) = std::tanh(raw(r0 + actor.n_bs, j));
        cache.flat(r0 + actor.n_bs + 1, j) = std::tanh(raw(r0 + actor.n_bs + 1, j));
      }
    }
    return cache.flat;
  }

  for (int i = 0; i < actor.n_ue; ++i) {
    const int r0 = i * bw;
    Matrix scores;
    if (actor.variant == Variant::bs_oracle) {
      // the one-hot lives in the input features: per-UE block starts with it
      const int in0 = i * (2 * actor.n_bs + 1);
      scores = Matrix(actor.n_bs, n);
      for (int k = 0; k < actor.n_bs; ++k) {
        for (std::size_t j = 0; j < n; ++j) scores(k, j) = states(in0 + k, j);
      }
    } else {
      scores = nn::forward_batch(actor.bs_heads[i], xl, cache.bs_heads[i]);
    }
    for (int k = 0; k < actor.n_bs; ++k) {
      for (std::size_t j = 0; j < n; ++j) cache.flat(r0 + k, j) = scores(k, j);
    }

    if (actor.variant == Variant::angle_oracle) {
      if (genie_units == nullptr) {
        throw std::invalid_argument("angle_oracle actor requires genie angle units");
      }
      for (std::size_t j = 0; j < n; ++j) {
        int best = 0;
        for (int k = 1; k < actor.n_bs; ++k) {
          if (scores(k, j) > scores(best, j)) best = k;
        }
        const int g0 = (i * actor.n_bs + best) * 2;
        cache.flat(r0 + actor.n_bs, j) = (*genie_units)(g0, j);
        cache.flat(r0 + actor.n_bs + 1, j) = (*genie_units)(g0 + 1, j);
      }
    } else {
      Matrix angle_in =
          actor.variant == Variant::proposed ? vstack(xl, scores) : xl;
      const Matrix angles =
          nn::forward_batch(actor.angle_heads[i], angle_in, cache.angle_heads[i]);
      for (std::size_t j = 0; j < n; ++j) {
        cache.flat(r0 + actor.n_bs, j) = angles(0, j);
        cache.flat(r0 + actor.n_bs + 1, j) = angles(1, j);
      }
    }
  }
  return cache.flat;
}

// Gradients of a scalar objective wrt every actor parameter, given its
// gradient wrt the flat action. Slots that are not produced by the network
// (genie angles, one-hot scores) are constants and their incoming gradient
// is dropped.
inline ActorGrads actor_backward_batch(const ActorNetwork& actor, const ActorCache& cache,
                                       const Matrix& d_flat) {
  const std::size_t n = d_flat.cols;
  const int bw = actor.block_width();
  ActorGrads grads;
  grads.bs_heads.resize(actor.bs_heads.size());
  grads.angle_heads.resize(actor.angle_heads.size());
  Matrix d_xl(static_cast<std::size_t>(actor.feat_dim), n);

  if (actor.variant == Variant::vanilla) {
    Matrix d_raw(cache.vanilla.output().rows, n);
    for (int i = 0; i < actor.n_ue; ++i) {
      const int r0 = i * bw;
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int k = 0; k < actor.n_bs; ++k) dot += d_flat(r0 + k, j) * cache.flat(r0 + k, j);
        for (int k = 0; k < actor.n_bs; ++k) {
          d_raw(r0 + k, j) = cache.flat(r0 + k, j) * (d_flat(r0 + k, j) - dot);
        }
        for (int k = actor.n_bs; k < bw; ++k) {
          const double y = cache.flat(r0 + k, j);
          d_raw(r0 + k, j) = d_flat(r0 + k, j) * (1.0 - y * y);
        }
      }
    }
    Matrix d_head_in;
    grads.vanilla_head = nn::backward_batch(actor.vanilla_head, cache.vanilla, d_raw, &d_head_in);
    for (std::size_t i = 0; i < d_xl.data.size(); ++i) d_xl.data[i] += d_head_in.data[i];
    grads.extractor = nn::backward_batch(actor.extractor, cache.extractor, d_xl);
    return grads;
  }

  for (int i = 0; i < actor.n_ue; ++i) {
    const int r0 = i * bw;
    Matrix d_scores(static_cast<std::size_t>(actor.n_bs), n);
    for (int k = 0; k < actor.n_bs; ++k) {
      for (std::size_t j = 0; j < n; ++j) d_scores(k, j) = d_flat(r0 + k, j);
    }

    if (actor.variant == Variant::proposed || actor.variant == Variant::bs_oracle) {
      Matrix d_angles(2, n);
      for (std::size_t j = 0; j < n; ++j) {
        d_angles(0, j) = d_flat(r0 + actor.n_bs, j);
        d_angles(1, j) = d_flat(r0 + actor.n_bs + 1, j);
      }
      Matrix d_angle_in;
      grads.angle_heads[i] =
          nn::backward_batch(actor.angle_heads[i], cache.angle_heads[i], d_angles, &d_angle_in);
      if (actor.variant == Variant::proposed) {
        // z_i = [x_L, scores]: route the tail back into the score head too
        for (int f = 0; f < actor.feat_dim; ++f) {
          for (std::size_t j = 0; j < n; ++j) d_xl(f, j) += d_angle_in(f, j);
        }
        for (int k = 0; k < actor.n_bs; ++k) {
          for (std::size_t j = 0; j < n; ++j) {
            d_scores(k, j) += d_angle_in(actor.feat_dim + k, j);
          }
        }
      } else {
        for (std::size_t i2 = 0; i2 < d_xl.data.size(); ++i2) {
          d_xl.data[i2] += d_angle_in.data[i2];
        }
      }
    }

    if (actor.variant == Variant::proposed || actor.variant == Variant::angle_oracle) {
      Matrix d_bs_in;
      grads.bs_heads[i] =
          nn::backward_batch(actor.bs_heads[i], cache.bs_heads[i], d_scores, &d_bs_in);
      for (std::size_t i2 = 0; i2 < d_xl.data.size(); ++i2) d_xl.data[i2] += d_bs_in.data[i2];
    }
  }
  grads.extractor = nn::backward_batch(actor.extractor, cache.extractor, d_xl);
  return grads;
}

// Single-state convenience view of the actor output.
struct ActorEval {
  std::vector<std::vector<double>> bs_scores;           // per UE, length n_bs
  std::vector<std::array<double, 2>> angle_units;       // per UE, in [-1,1]^2
  std::vector<double> flat;                             // length n_ue*(n_bs+2)
};

inline ActorEval actor_forward(const ActorNetwork& actor, const std::vector<double>& state,
                               const std::vector<double>* genie_units = nullptr) {
  Matrix x(state.size(), 1);
  x.data = state;
  Matrix genie;
  const Matrix* gp = nullptr;
  if (genie_units != nullptr) {
    genie = Matrix(genie_units->size(), 1);
    genie.data = *genie_units;
    gp = &genie;
  }
  ActorCache cache;
  const Matrix flat = actor_forward_batch(actor, x, cache, gp);
  ActorEval out;
  out.flat = flat.data;
  const int bw = actor.block_width();
  for (int i = 0; i < actor.n_ue; ++i) {
    out.bs_scores.emplace_back(out.flat.begin() + i * bw, out.flat.begin() + i * bw + actor.n_bs);
    out.angle_units.push_back({out.flat[i * bw + actor.n_bs], out.flat[i * bw + actor.n_bs + 1]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exploration

struct ExplorationSchedule {
  double eps_bs_init = 1.0;
  double eps_bs_decay_rate = 1e-6;     // exponential, per step
  double sigma_theta_init = 0.5;       // Gaussian std in tanh units
  double sigma_theta_final = 0.01;
  std::int64_t sigma_theta_steps = 500000;  // linear decay horizon

  double eps_bs(std::int64_t t) const {
    const double e = eps_bs_init * std::exp(-eps_bs_decay_rate * static_cast<double>(t));
    return std::clamp(e, 0.0, 1.0);
  }

  double sigma_theta(std::int64_t t) const {
    if (sigma_theta_steps <= 0 || t >= sigma_theta_steps) return sigma_theta_final;
    const double frac = static_cast<double>(t) / static_cast<double>(sigma_theta_steps);
    return sigma_theta_init + (sigma_theta_final - sigma_theta_init) * frac;
  }
};

inline double elevation_from_unit(double u) {
  return 0.75 * std::numbers::pi + u * std::numbers::pi / 4.0;
}

inline double azimuth_from_unit(double u) { return u * std::numbers::pi / 2.0; }

inline int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

struct ExploredAction {
  std::vector<double> flat;          // stored in the replay buffer
  env::ResolvedAction resolved;      // applied to the radio
};

// Applies the exploration noise of the given variant and converts the result
// into beam commands: per UE, the whole score vector gets N(0,1) noise with
// probability eps_bs(t); angle units always get N(0, sigma_theta(t)) and are
// clamped back into [-1,1] before the angle formulas. BS index is the argmax
// of the (possibly noisy) scores, ties broken toward the lowest index.
inline ExploredAction explore_and_resolve(const ActorEval& raw, const ExplorationSchedule& sched,
                                          Variant variant, std::int64_t t, std::mt19937_64& rng,
                                          const std::vector<double>* genie_units = nullptr) {
  const int n_ue = static_cast<int>(raw.bs_scores.size());
  const int n_bs = static_cast<int>(raw.bs_scores.front().size());
  const int bw = n_bs + 2;
  ExploredAction out;
  out.flat.assign(static_cast<std::size_t>(n_ue) * bw, 0.0);
  out.resolved.resize(n_ue);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double eps = sched.eps_bs(t);
  const double sigma = sched.sigma_theta(t);

  for (int i = 0; i < n_ue; ++i) {
    std::vector<double> scores = raw.bs_scores[i];
    if (variant != Variant::bs_oracle && unif(rng) < eps) {
      for (double& s : scores) s += std_normal(rng);
    }
    const int bs = argmax_lowest(scores);
    double u1, u2;
    if (variant == Variant::angle_oracle) {
      if (genie_units == nullptr) {
        throw std::invalid_argument("angle_oracle exploration requires genie angle units");
      }
      u1 = (*genie_units)[(i * n_bs + bs) * 2];
      u2 = (*genie_units)[(i * n_bs + bs) * 2 + 1];
    } else {
      u1 = std::clamp(raw.angle_units[i][0] + sigma * std_normal(rng), -1.0, 1.0);
      u2 = std::clamp(raw.angle_units[i][1] + sigma * std_normal(rng), -1.0, 1.0);
    }
    for (int k = 0; k < n_bs; ++k) out.flat[i * bw + k] = scores[k];
    out.flat[i * bw + n_bs] = u1;
    out.flat[i * bw + n_bs + 1] = u2;
    out.resolved[i] = env::UeChoice{bs, elevation_from_unit(u1), azimuth_from_unit(u2)};
  }
  return out;
}

inline env::ResolvedAction resolve_noiseless(const ActorEval& raw) {
  const int n_ue = static_cast<int>(raw.bs_scores.size());
  env::ResolvedAction act(n_ue);
  for (int i = 0; i < n_ue; ++i) {
    act[i] = env::UeChoice{argmax_lowest(raw.bs_scores[i]),
                           elevation_from_unit(raw.angle_units[i][0]),
                           azimuth_from_unit(raw.angle_units[i][1])};
  }
  return act;
}

// ---------------------------------------------------------------------------
// Critic

inline double critic_forward(const nn::LayerStack& critic, const std::vector<double>& state,
                             const std::vector<double>& flat_action) {
  std::vector<double> in;
  in.reserve(state.size() + flat_action.size());
  in.insert(in.end(), state.begin(), state.end());
  in.insert(in.end(), flat_action.begin(), flat_action.end());
  nn::BatchCache cache;
  return nn::forward(critic, in, cache)[0];
}

// ---------------------------------------------------------------------------
// Replay buffer

struct Experience {
  std::vector<double> state;
  std::vector<double> action;  // flat, post-noise, as executed
  double reward = 0.0;
  std::vector<double> next_state;
  // genie angle tables for s and s' (angle_oracle only, else empty)
  std::vector<double> genie_units;
  std::vector<double> next_genie_units;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(Experience e) {
    if (store_.size() < capacity_) {
      store_.push_back(std::move(e));
    } else {
      store_[head_] = std::move(e);  // overwrite oldest
      head_ = (head_ + 1) % capacity_;
    }
  }

  // k-th oldest experience
  const Experience& at(std::size_t k) const {
    return store_[(head_ + k) % store_.size()];
  }

  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const {
    if (store_.empty()) throw std::invalid_argument("cannot sample from empty replay buffer");
    std::uniform_int_distribution<std::size_t> dist(0, store_.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& v : idx) v = dist(rng);
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Experience> store_;
};

// ---------------------------------------------------------------------------
// Training configuration (defaults mirror the reference hyperparameters)

struct TrainConfig {
  double gamma = 0.60;
  double soft_lambda = 0.001;
  double eta_a = 0.0001;
  double eta_c = 0.001;
  int batch_n = 64;
  int episodes = 1000;
  int steps_per_episode = 1000;
  std::size_t buffer_capacity = 100000;
  std::vector<int> hidden = {128, 128};
};

// ---------------------------------------------------------------------------
// Soft target update, elementwise: target <- lambda*active + (1-lambda)*target

inline void soft_update(const nn::LayerStack& active, nn::LayerStack& target, double lambda) {
  if (active.size() != target.size()) throw std::invalid_argument("soft_update: stack mismatch");
  for (std::size_t l = 0; l < active.size(); ++l) {
    for (std::size_t i = 0; i < active[l].weights.data.size(); ++i) {
      target[l].weights.data[i] =
          lambda * active[l].weights.data[i] + (1.0 - lambda) * target[l].weights.data[i];
    }
    for (std::size_t i = 0; i < active[l].bias.size(); ++i) {
      target[l].bias[i] = lambda * active[l].bias[i] + (1.0 - lambda) * target[l].bias[i];
    }
  }
}

inline void soft_update(const ActorNetwork& active, ActorNetwork& target, double lambda) {
  soft_update(active.extractor, target.extractor, lambda);
  for (std::size_t i = 0; i < active.bs_heads.size(); ++i) {
    soft_update(active.bs_heads[i], target.bs_heads[i], lambda);
  }
  for (std::size_t i = 0; i < active.angle_heads.size(); ++i) {
    soft_update(active.angle_heads[i], target.angle_heads[i], lambda);
  }
  if (!active.vanilla_head.empty()) soft_update(active.vanilla_head, target.vanilla_head, lambda);
}

// ---------------------------------------------------------------------------
// Agent

struct DdpgAgent {
  Variant variant = Variant::proposed;
  int n_ue = 0;
  int n_bs = 0;
  ActorNetwork actor;
  ActorNetwork actor_target;
  nn::LayerStack critic;
  nn::LayerStack critic_target;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  ReplayBuffer buffer{1};
  ExplorationSchedule schedule;
  TrainConfig cfg;
  std::mt19937_64 rng;
  std::int64_t global_step = 0;

  int state_dim() const { return actor.state_dim; }
  int action_dim() const { return actor.action_dim(); }
  bool needs_oracle_state() const { return variant == Variant::bs_oracle; }
  bool needs_genie_angles() const { return variant == Variant::angle_oracle; }
};

inline std::vector<nn::ParamRef> actor_param_refs(ActorNetwork& a) {
  std::vector<nn::ParamRef> refs = nn::param_refs(a.extractor);
  for (auto& h : a.bs_heads) {
    auto r = nn::param_refs(h);
    refs.insert(refs.end(), r.begin(), r.end());
  }
  for (auto& h : a.angle_heads) {
    auto r = nn::param_refs(h);
    refs.insert(refs.end(), r.begin(), r.end());
  }
  if (!a.vanilla_head.empty()) {
    auto r = nn::param_refs(a.vanilla_head);
    refs.insert(refs.end(), r.begin(), r.end());
  }
  return refs;
}

inline std::vector<nn::GradRef> actor_grad_refs(const ActorGrads& g) {
  std::vector<nn::GradRef> refs = nn::grad_refs(g.extractor);
  for (const auto& h : g.bs_heads) {
    auto r = nn::grad_refs(h);
    refs.insert(refs.end(), r.begin(), r.end());
  }
  for (const auto& h : g.angle_heads) {
    auto r = nn::grad_refs(h);
    refs.insert(refs.end(), r.begin(), r.end());
  }
  if (!g.vanilla_head.empty()) {
    auto r = nn::grad_refs(g.vanilla_head);
    refs.insert(refs.end(), r.begin(), r.end());
  }
  return refs;
}

inline DdpgAgent make_variant(Variant kind, int n_ue, int n_bs, const TrainConfig& cfg,
                              const ExplorationSchedule& schedule, std::uint64_t seed) {
  if (n_ue < 1 || n_bs < 1) throw std::invalid_argument("make_variant: bad dimensions");
  if (cfg.hidden.empty()) throw std::invalid_argument("make_variant: empty hidden layout");
  DdpgAgent a;
  a.variant = kind;
  a.n_ue = n_ue;
  a.n_bs = n_bs;
  a.cfg = cfg;
  a.schedule = schedule;
  a.buffer = ReplayBuffer(cfg.buffer_capacity);
  a.rng.seed(seed);

  const int state_dim =
      kind == Variant::bs_oracle ? n_ue * (2 * n_bs + 1) : n_ue * (n_bs + 1);
  const int action_dim = n_ue * (n_bs + 2);
  const int feat = cfg.hidden.back();

  ActorNetwork& actor = a.actor;
  actor.variant = kind;
  actor.n_ue = n_ue;
  actor.n_bs = n_bs;
  actor.state_dim = state_dim;
  actor.feat_dim = feat;
  int in = state_dim;
  for (int width : cfg.hidden) {
    actor.extractor.push_back(nn::make_dense(width, in, nn::Activation::relu, a.rng));
    in = width;
  }
  switch (kind) {
    case Variant::proposed:
      for (int i = 0; i < n_ue; ++i) {
        actor.bs_heads.push_back({nn::make_dense(n_bs, feat, nn::Activation::softmax, a.rng)});
        actor.angle_heads.push_back(
            {nn::make_dense(2, feat + n_bs, nn::Activation::tanh, a.rng)});
      }
      break;
    case Variant::vanilla:
      actor.vanilla_head = {nn::make_dense(action_dim, feat, nn::Activation::identity, a.rng)};
      break;
    case Variant::bs_oracle:
      for (int i = 0; i < n_ue; ++i) {
        actor.angle_heads.push_back({nn::make_dense(2, feat, nn::Activation::tanh, a.rng)});
      }
      break;
    case Variant::angle_oracle:
      for (int i = 0; i < n_ue; ++i) {
        actor.bs_heads.push_back({nn::make_dense(n_bs, feat, nn::Activation::softmax, a.rng)});
      }
      break;
  }

  in = state_dim + action_dim;
  for (int width : cfg.hidden) {
    a.critic.push_back(nn::make_dense(width, in, nn::Activation::relu, a.rng));
    in = width;
  }
  a.critic.push_back(nn::make_dense(1, in, nn::Activation::identity, a.rng));

  a.actor_target = a.actor;
  a.critic_target = a.critic;
  return a;
}

// Column-per-sample packing of a minibatch field.
inline Matrix pack_columns(const std::vector<const Experience*>& batch,
                           const std::vector<double> Experience::* field) {
  const std::size_t n = batch.size();
  const std::size_t dim = (batch.front()->*field).size();
  Matrix m(dim, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double>& v = batch[j]->*field;
    for (std::size_t r = 0; r < dim; ++r) m(r, j) = v[r];
  }
  return m;
}

// y_i = r_i + gamma * C_target(s', A_target(s'))
inline std::vector<double> bellman_targets(const std::vector<const Experience*>& batch,
                                           const ActorNetwork& actor_target,
                                           const nn::LayerStack& critic_target, double gamma) {
  if (batch.empty()) throw std::invalid_argument("ddpg_update: empty batch");
  const std::size_t n = batch.size();
  const Matrix s2 = pack_columns(batch, &Experience::next_state);
  Matrix genie2;
  const Matrix* gp = nullptr;
  if (actor_target.variant == Variant::angle_oracle) {
    genie2 = pack_columns(batch, &Experience::next_genie_units);
    gp = &genie2;
  }
  ActorCache acache;
  const Matrix a2 = actor_forward_batch(actor_target, s2, acache, gp);
  nn::BatchCache ccache;
  const Matrix q2 = nn::forward_batch(critic_target, vstack(s2, a2), ccache);
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = batch[j]->reward + gamma * q2(0, j);
  return y;
}

// Mean squared Bellman error of the critic on [states; actions] vs targets y.
inline double critic_msbe(const nn::LayerStack& critic, const Matrix& state_action,
                          const std::vector<double>& y) {
  nn::BatchCache cache;
  const Matrix q = nn::forward_batch(critic, state_action, cache);
  double msbe = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double diff = q(0, j) - y[j];
    msbe += diff * diff;
  }
  return msbe / static_cast<double>(y.size());
}

// MSBE plus its gradient wrt the critic parameters (y held constant).
inline std::pair<double, nn::StackGrads> critic_loss_grads(const nn::LayerStack& critic,
                                                           const Matrix& state_action,
                                                           const std::vector<double>& y) {
  const std::size_t n = y.size();
  nn::BatchCache cache;
  const Matrix q = nn::forward_batch(critic, state_action, cache);
  double msbe = 0.0;
  Matrix dq(1, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double diff = q(0, j) - y[j];
    msbe += diff * diff;
    dq(0, j) = 2.0 * diff / static_cast<double>(n);
  }
  msbe /= static_cast<double>(n);
  return {msbe, nn::backward_batch(critic, cache, dq)};
}

// Deterministic-policy objective J = (1/N) sum_i C(s_i, A(s_i)).
inline double actor_objective(const ActorNetwork& actor, const nn::LayerStack& critic,
                              const Matrix& states, const Matrix* genie_units = nullptr) {
  ActorCache acache;
  const Matrix a_pi = actor_forward_batch(actor, states, acache, genie_units);
  nn::BatchCache ccache;
  const Matrix q = nn::forward_batch(critic, vstack(states, a_pi), ccache);
  double sum = 0.0;
  for (std::size_t j = 0; j < q.cols; ++j) sum += q(0, j);
  return sum / static_cast<double>(q.cols);
}

// Gradient of J wrt the actor parameters (ascent direction), obtained by
// backing the critic's action-input gradient through the actor.
inline ActorGrads actor_objective_grads(const ActorNetwork& actor, const nn::LayerStack& critic,
                                        const Matrix& states,
                                        const Matrix* genie_units = nullptr) {
  const std::size_t n = states.cols;
  const std::size_t sdim = states.rows;
  const std::size_t adim = static_cast<std::size_t>(actor.action_dim());
  ActorCache acache;
  const Matrix a_pi = actor_forward_batch(actor, states, acache, genie_units);
  nn::BatchCache ccache;
  nn::forward_batch(critic, vstack(states, a_pi), ccache);
  Matrix dq(1, n);
  for (std::size_t j = 0; j < n; ++j) dq(0, j) = 1.0 / static_cast<double>(n);
  const Matrix d_in = nn::backward_input_batch(critic, ccache, dq);
  Matrix d_action(adim, n);
  for (std::size_t r = 0; r < adim; ++r) {
    for (std::size_t j = 0; j < n; ++j) d_action(r, j) = d_in(sdim + r, j);
  }
  return actor_backward_batch(actor, acache, d_action);
}

// One DDPG update on a minibatch: critic descends the mean squared Bellman
// error, the actor ascends the deterministic policy gradient evaluated at its
// own noiseless action, then both targets are blended. Returns the MSBE.
inline double ddpg_update(DdpgAgent& agent, const std::vector<const Experience*>& batch) {
  if (batch.empty()) throw std::invalid_argument("ddpg_update: empty batch");
  const std::vector<double> y =
      bellman_targets(batch, agent.actor_target, agent.critic_target, agent.cfg.gamma);

  const Matrix s = pack_columns(batch, &Experience::state);
  const Matrix a = pack_columns(batch, &Experience::action);
  const auto [msbe, cgrads] = critic_loss_grads(agent.critic, vstack(s, a), y);
  nn::adam_step(nn::param_refs(agent.critic), nn::grad_refs(cgrads), agent.critic_opt,
                agent.cfg.eta_c);

  Matrix genie;
  const Matrix* gp = nullptr;
  if (agent.variant == Variant::angle_oracle) {
    genie = pack_columns(batch, &Experience::genie_units);
    gp = &genie;
  }
  ActorGrads agrads = actor_objective_grads(agent.actor, agent.critic, s, gp);
  // Adam minimizes, the policy gradient ascends: flip sign
  auto negate = [](nn::StackGrads& g) {
    for (auto& lg : g) {
      for (double& v : lg.d_weights.data) v = -v;
      for (double& v : lg.d_bias) v = -v;
    }
  };
  negate(agrads.extractor);
  for (auto& g : agrads.bs_heads) negate(g);
  for (auto& g : agrads.angle_heads) negate(g);
  negate(agrads.vanilla_head);
  nn::adam_step(actor_param_refs(agent.actor), actor_grad_refs(agrads), agent.actor_opt,
                agent.cfg.eta_a);

  soft_update(agent.critic, agent.critic_target, agent.cfg.soft_lambda);
  soft_update(agent.actor, agent.actor_target, agent.cfg.soft_lambda);
  return msbe;
}

// Samples a minibatch and updates once |B| >= N; no-op before that.
inline std::optional<double> maybe_update(DdpgAgent& agent) {
  if (agent.buffer.size() < static_cast<std::size_t>(agent.cfg.batch_n)) return std::nullopt;
  const std::vector<std::size_t> idx =
      agent.buffer.sample_indices(static_cast<std::size_t>(agent.cfg.batch_n), agent.rng);
  std::vector<const Experience*> batch;
  batch.reserve(idx.size());
  for (std::size_t k : idx) batch.push_back(&agent.buffer.at(k));
  return ddpg_update(agent, batch);
}

// ---------------------------------------------------------------------------
// Checkpointing (binary, bit-exact round trip)

inline void write_actor(std::ostream& os, const ActorNetwork& a) {
  io::write_u32(os, static_cast<std::uint32_t>(a.variant));
  io::write_u64(os, static_cast<std::uint64_t>(a.n_ue));
  io::write_u64(os, static_cast<std::uint64_t>(a.n_bs));
  io::write_u64(os, static_cast<std::uint64_t>(a.state_dim));
  io::write_u64(os, static_cast<std::uint64_t>(a.feat_dim));
  nn::write_stack(os, a.extractor);
  io::write_u64(os, a.bs_heads.size());
  for (const auto& h : a.bs_heads) nn::write_stack(os, h);
  io::write_u64(os, a.angle_heads.size());
  for (const auto& h : a.angle_heads) nn::write_stack(os, h);
  nn::write_stack(os, a.vanilla_head);
}

inline ActorNetwork read_actor(std::istream& is) {
  ActorNetwork a;
  a.variant = static_cast<Variant>(io::read_u32(is));
  a.n_ue = static_cast<int>(io::read_u64(is));
  a.n_bs = static_cast<int>(io::read_u64(is));
  a.state_dim = static_cast<int>(io::read_u64(is));
  a.feat_dim = static_cast<int>(io::read_u64(is));
  a.extractor = nn::read_stack(is);
  a.bs_heads.resize(io::read_u64(is));
  for (auto& h : a.bs_heads) h = nn::read_stack(is);
  a.angle_heads.resize(io::read_u64(is));
  for (auto& h : a.angle_heads) h = nn::read_stack(is);
  a.vanilla_head = nn::read_stack(is);
  return a;
}

inline constexpr std::uint32_t kCheckpointMagic = 0x42524C31;  // "BRL1"
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(std::ostream& os, const DdpgAgent& a) {
  io::write_u32(os, kCheckpointMagic);
  io::write_u32(os, kCheckpointVersion);
  io::write_u32(os, static_cast<std::uint32_t>(a.variant));
  io::write_u64(os, static_cast<std::uint64_t>(a.n_ue));
  io::write_u64(os, static_cast<std::uint64_t>(a.n_bs));
  io::write_u64(os, static_cast<std::uint64_t>(a.global_step));
  write_actor(os, a.actor);
  write_actor(os, a.actor_target);
  nn::write_stack(os, a.critic);
  nn::write_stack(os, a.critic_target);
  nn::write_adam(os, a.actor_opt);
  nn::write_adam(os, a.critic_opt);
}

inline DdpgAgent load_checkpoint(std::istream& is) {
  if (io::read_u32(is) != kCheckpointMagic) throw std::runtime_error("not a checkpoint file");
  if (io::read_u32(is) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  DdpgAgent a;
  a.variant = static_cast<Variant>(io::read_u32(is));
  a.n_ue = static_cast<int>(io::read_u64(is));
  a.n_bs = static_cast<int>(io::read_u64(is));
  a.global_step = static_cast<std::int64_t>(io::read_u64(is));
  a.actor = read_actor(is);
  a.actor_target = read_actor(is);
  a.critic = nn::read_stack(is);
  a.critic_target = nn::read_stack(is);
  a.actor_opt = nn::read_adam(is);
  a.critic_opt = nn::read_adam(is);
  return a;
}

}  // namespace beamrl::agent
