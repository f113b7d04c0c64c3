// Test-only finite-difference oracle for the DDPG objectives. Central
// differences need a smooth neighbourhood, so probe batches are redrawn until
// every relu pre-activation on the objective paths clears the kink by a wide
// margin relative to the probe step (and, for the angle-genie variant, until
// every argmax decision has a clear score gap). The oracle itself never calls
// the analytic backward path it is checking.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "beamrl/agent.hpp"

namespace gradcheck {

using namespace beamrl;

struct Probe {
  agent::DdpgAgent ag;
  Matrix states;
  Matrix actions;
  std::vector<double> y;
  Matrix genie;
  bool has_genie = false;
  int redraws = 0;

  const Matrix* genie_ptr() const { return has_genie ? &genie : nullptr; }
};

inline double min_relu_margin(const nn::LayerStack& stack, const nn::BatchCache& cache) {
  double m = 1e300;
  for (std::size_t l = 0; l < stack.size(); ++l) {
    if (stack[l].activation != nn::Activation::relu) continue;
    for (double v : cache.preacts[l].data) m = std::min(m, std::abs(v));
  }
  return m;
}

// Smallest kink/argmax clearance over every forward pass the two objectives
// take: actor extractor, critic at [s; a_batch] and critic at [s; A(s)].
inline double probe_margin(const Probe& p) {
  double m = 1e300;
  agent::ActorCache acache;
  const Matrix a_pi = agent::actor_forward_batch(p.ag.actor, p.states, acache, p.genie_ptr());
  m = std::min(m, min_relu_margin(p.ag.actor.extractor, acache.extractor));

  nn::BatchCache c1, c2;
  nn::forward_batch(p.ag.critic, vstack(p.states, p.actions), c1);
  m = std::min(m, min_relu_margin(p.ag.critic, c1));
  nn::forward_batch(p.ag.critic, vstack(p.states, a_pi), c2);
  m = std::min(m, min_relu_margin(p.ag.critic, c2));

  if (p.ag.variant == agent::Variant::angle_oracle) {
    // genie slots follow argmax(scores); need a stable winner under the probe
    const int bw = p.ag.actor.block_width();
    for (int i = 0; i < p.ag.n_ue; ++i) {
      for (std::size_t j = 0; j < p.states.cols; ++j) {
        double top1 = -1e300, top2 = -1e300;
        for (int k = 0; k < p.ag.n_bs; ++k) {
          const double v = a_pi(i * bw + k, j);
          if (v > top1) {
            top2 = top1;
            top1 = v;
          } else if (v > top2) {
            top2 = v;
          }
        }
        m = std::min(m, top1 - top2);
      }
    }
  }
  return m;
}

inline Probe make_probe(agent::Variant variant, int n_ue, int n_bs, std::vector<int> hidden,
                        int batch, std::mt19937_64& rng, double margin = 1e-3) {
  agent::TrainConfig cfg;
  cfg.hidden = std::move(hidden);
  cfg.buffer_capacity = 16;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Probe p;
    p.ag = agent::make_variant(variant, n_ue, n_bs, cfg, {}, rng());
    const int sdim = p.ag.state_dim();
    const int adim = p.ag.action_dim();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> u11(-1.0, 1.0);

    p.states = Matrix(sdim, batch);
    if (variant == agent::Variant::bs_oracle) {
      for (int j = 0; j < batch; ++j) {
        for (int i = 0; i < n_ue; ++i) {
          const int base = i * (2 * n_bs + 1);
          const int hot = static_cast<int>(u01(rng) * n_bs);
          for (int k = 0; k < n_bs; ++k) p.states(base + k, j) = k == hot ? 1.0 : 0.0;
          for (int k = 0; k < n_bs + 1; ++k) p.states(base + n_bs + k, j) = u01(rng);
        }
      }
    } else {
      for (auto& v : p.states.data) v = u01(rng);
    }

    p.actions = Matrix(adim, batch);
    for (int j = 0; j < batch; ++j) {
      for (int i = 0; i < n_ue; ++i) {
        double sum = 0.0;
        for (int k = 0; k < n_bs; ++k) {
          const double e = u01(rng) + 0.1;
          p.actions(i * (n_bs + 2) + k, j) = e;
          sum += e;
        }
        for (int k = 0; k < n_bs; ++k) p.actions(i * (n_bs + 2) + k, j) /= sum;
        p.actions(i * (n_bs + 2) + n_bs, j) = u11(rng);
        p.actions(i * (n_bs + 2) + n_bs + 1, j) = u11(rng);
      }
    }

    p.y.resize(batch);
    for (auto& v : p.y) v = u11(rng);

    if (variant == agent::Variant::angle_oracle) {
      p.has_genie = true;
      p.genie = Matrix(static_cast<std::size_t>(n_ue) * n_bs * 2, batch);
      for (auto& v : p.genie.data) v = u11(rng);
    }

    p.redraws = attempt;
    if (probe_margin(p) >= margin) return p;
  }
  throw std::runtime_error("gradcheck: no well-conditioned probe found");
}

struct Result {
  double max_rel_err = 0.0;          // over components with gradient >= 1e-6
  double max_tiny_abs_err = 0.0;     // over components below the floor
  std::size_t params_checked = 0;

  bool ok(double rel_tol) const { return max_rel_err < rel_tol && max_tiny_abs_err < 1e-8; }
};

// Central differences at h=1e-5 carry ~5e-12 of float cancellation noise on
// the derivative, so the relative criterion is meaningless for gradients near
// zero. Components with magnitude >= 1e-6 are held to the relative tolerance;
// smaller ones must agree absolutely to 1e-8 (three orders above the noise
// floor, far below any live gradient).
inline void fd_compare(double analytic, double fd, Result& res) {
  res.params_checked += 1;
  const double denom = std::max(std::abs(analytic), std::abs(fd));
  if (denom >= 1e-6) {
    res.max_rel_err = std::max(res.max_rel_err, std::abs(fd - analytic) / denom);
  } else {
    res.max_tiny_abs_err = std::max(res.max_tiny_abs_err, std::abs(fd - analytic));
  }
}

// Central differences of the critic MSBE over every critic parameter.
inline Result check_critic_grads(Probe& p, double h = 1e-5) {
  const Matrix sa = vstack(p.states, p.actions);
  const auto [msbe, grads] = agent::critic_loss_grads(p.ag.critic, sa, p.y);
  (void)msbe;
  Result res;
  for (std::size_t l = 0; l < p.ag.critic.size(); ++l) {
    auto probe_param = [&](double& param, double analytic) {
      const double orig = param;
      param = orig + h;
      const double up = agent::critic_msbe(p.ag.critic, sa, p.y);
      param = orig - h;
      const double dn = agent::critic_msbe(p.ag.critic, sa, p.y);
      param = orig;
      fd_compare(analytic, (up - dn) / (2.0 * h), res);
    };
    for (std::size_t i = 0; i < p.ag.critic[l].weights.data.size(); ++i) {
      probe_param(p.ag.critic[l].weights.data[i], grads[l].d_weights.data[i]);
    }
    for (std::size_t i = 0; i < p.ag.critic[l].bias.size(); ++i) {
      probe_param(p.ag.critic[l].bias[i], grads[l].d_bias[i]);
    }
  }
  return res;
}

// Central differences of the policy objective over every actor parameter.
inline Result check_actor_grads(Probe& p, double h = 1e-5) {
  const agent::ActorGrads grads =
      agent::actor_objective_grads(p.ag.actor, p.ag.critic, p.states, p.genie_ptr());
  Result res;
  auto probe_stack = [&](nn::LayerStack& stack, const nn::StackGrads& g) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      auto probe_param = [&](double& param, double analytic) {
        const double orig = param;
        param = orig + h;
        const double up =
            agent::actor_objective(p.ag.actor, p.ag.critic, p.states, p.genie_ptr());
        param = orig - h;
        const double dn =
            agent::actor_objective(p.ag.actor, p.ag.critic, p.states, p.genie_ptr());
        param = orig;
        fd_compare(analytic, (up - dn) / (2.0 * h), res);
      };
      for (std::size_t i = 0; i < stack[l].weights.data.size(); ++i) {
        probe_param(stack[l].weights.data[i], g[l].d_weights.data[i]);
      }
      for (std::size_t i = 0; i < stack[l].bias.size(); ++i) {
        probe_param(stack[l].bias[i], g[l].d_bias[i]);
      }
    }
  };
  probe_stack(p.ag.actor.extractor, grads.extractor);
  for (std::size_t i = 0; i < p.ag.actor.bs_heads.size(); ++i) {
    probe_stack(p.ag.actor.bs_heads[i], grads.bs_heads[i]);
  }
  for (std::size_t i = 0; i < p.ag.actor.angle_heads.size(); ++i) {
    probe_stack(p.ag.actor.angle_heads[i], grads.angle_heads[i]);
  }
  if (!p.ag.actor.vanilla_head.empty()) {
    probe_stack(p.ag.actor.vanilla_head, grads.vanilla_head);
  }
  return res;
}

}  // namespace gradcheck
