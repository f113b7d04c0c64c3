// Dense neural-network engine: forward pass, exact reverse-mode gradients,
// bias-corrected Adam, and a central-finite-difference gradient oracle.
// Everything is 64-bit; minibatches are processed as column-major batches
// (one sample per column) through the Matrix kernels in linalg.hpp.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "beamrl/io.hpp"
#include "beamrl/linalg.hpp"

namespace beamrl::nn {

enum class Activation : std::uint32_t { identity = 0, relu = 1, tanh = 2, softmax = 3 };

struct DenseLayer {
  Matrix weights;            // d_out x d_in
  std::vector<double> bias;  // d_out
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }
};

// Uniform[-1/sqrt(d_in), +1/sqrt(d_in)] init for weights and biases.
inline DenseLayer make_dense(std::size_t d_out, std::size_t d_in, Activation act,
                             std::mt19937_64& rng) {
  DenseLayer l;
  l.weights = Matrix(d_out, d_in);
  l.bias.assign(d_out, 0.0);
  l.activation = act;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : l.weights.data) w = dist(rng);
  for (double& b : l.bias) b = dist(rng);
  return l;
}

inline DenseLayer make_dense_zero(std::size_t d_out, std::size_t d_in, Activation act) {
  DenseLayer l;
  l.weights = Matrix(d_out, d_in);
  l.bias.assign(d_out, 0.0);
  l.activation = act;
  return l;
}

using LayerStack = std::vector<DenseLayer>;

inline void apply_activation(Activation act, const Matrix& pre, Matrix& post) {
  post = pre;
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (double& v : post.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (double& v : post.data) v = std::tanh(v);
      break;
    case Activation::softmax:
      // column-wise, max-shifted for stability
      for (std::size_t j = 0; j < post.cols; ++j) {
        double mx = post(0, j);
        for (std::size_t i = 1; i < post.rows; ++i) mx = std::max(mx, post(i, j));
        double sum = 0.0;
        for (std::size_t i = 0; i < post.rows; ++i) {
          const double e = std::exp(post(i, j) - mx);
          post(i, j) = e;
          sum += e;
        }
        for (std::size_t i = 0; i < post.rows; ++i) post(i, j) /= sum;
      }
      break;
  }
}

// d(loss)/d(pre) from d(loss)/d(post). The softmax case applies the full
// Jacobian per column: g_i = y_i * (gpost_i - <gpost, y>).
inline Matrix activation_backward(Activation act, const Matrix& pre, const Matrix& post,
                                  const Matrix& gpost) {
  Matrix gpre = gpost;
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < gpre.data.size(); ++i) {
        if (pre.data[i] <= 0.0) gpre.data[i] = 0.0;
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < gpre.data.size(); ++i) {
        gpre.data[i] *= 1.0 - post.data[i] * post.data[i];
      }
      break;
    case Activation::softmax:
      for (std::size_t j = 0; j < gpre.cols; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < gpre.rows; ++i) dot += gpost(i, j) * post(i, j);
        for (std::size_t i = 0; i < gpre.rows; ++i) {
          gpre(i, j) = post(i, j) * (gpost(i, j) - dot);
        }
      }
      break;
  }
  return gpre;
}

// Retains everything backward needs: the batch input plus per-layer pre- and
// post-activations.
struct BatchCache {
  Matrix input;
  std::vector<Matrix> preacts;
  std::vector<Matrix> posts;

  const Matrix& layer_input(std::size_t l) const { return l == 0 ? input : posts[l - 1]; }
  const Matrix& output() const { return posts.back(); }
};

inline Matrix forward_batch(const LayerStack& layers, const Matrix& x, BatchCache& cache) {
  if (layers.empty()) throw std::invalid_argument("forward: empty layer stack");
  if (x.rows != layers.front().in_dim()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  cache.input = x;
  cache.preacts.clear();
  cache.posts.clear();
  cache.preacts.reserve(layers.size());
  cache.posts.reserve(layers.size());
  const Matrix* cur = &cache.input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (cur->rows != layers[l].in_dim()) {
      throw std::invalid_argument("forward: inter-layer dimension mismatch");
    }
    if (layers[l].activation == Activation::softmax && l + 1 != layers.size()) {
      throw std::invalid_argument("forward: softmax is only valid as a final activation");
    }
    Matrix pre = gemm_nn(layers[l].weights, *cur);
    for (std::size_t i = 0; i < pre.rows; ++i) {
      double* prow = pre.row(i);
      const double b = layers[l].bias[i];
      for (std::size_t j = 0; j < pre.cols; ++j) prow[j] += b;
    }
    Matrix post;
    apply_activation(layers[l].activation, pre, post);
    cache.preacts.push_back(std::move(pre));
    cache.posts.push_back(std::move(post));
    cur = &cache.posts.back();
  }
  return cache.output();
}

struct LayerGrads {
  Matrix d_weights;
  std::vector<double> d_bias;
};

using StackGrads = std::vector<LayerGrads>;

inline StackGrads zero_grads(const LayerStack& layers) {
  StackGrads g(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    g[l].d_weights = Matrix(layers[l].out_dim(), layers[l].in_dim());
    g[l].d_bias.assign(layers[l].out_dim(), 0.0);
  }
  return g;
}

inline void accumulate(StackGrads& into, const StackGrads& from) {
  for (std::size_t l = 0; l < into.size(); ++l) {
    for (std::size_t i = 0; i < into[l].d_weights.data.size(); ++i) {
      into[l].d_weights.data[i] += from[l].d_weights.data[i];
    }
    for (std::size_t i = 0; i < into[l].d_bias.size(); ++i) {
      into[l].d_bias[i] += from[l].d_bias[i];
    }
  }
}

// Reverse-mode gradients of the scalar whose output-gradient is grad_output.
// Returns per-layer gradients; grad_input receives d(loss)/d(batch input).
inline StackGrads backward_batch(const LayerStack& layers, const BatchCache& cache,
                                 const Matrix& grad_output, Matrix* grad_input = nullptr) {
  if (cache.posts.size() != layers.size()) {
    throw std::invalid_argument("backward: cache does not match layer stack");
  }
  if (grad_output.rows != layers.back().out_dim() ||
      grad_output.cols != cache.output().cols) {
    throw std::invalid_argument("backward: grad_output shape mismatch");
  }
  StackGrads grads(layers.size());
  Matrix gpost = grad_output;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Matrix gpre =
        activation_backward(layers[li].activation, cache.preacts[li], cache.posts[li], gpost);
    const Matrix& in = cache.layer_input(li);
    grads[li].d_weights = gemm_nt(gpre, in);
    grads[li].d_bias.assign(layers[li].out_dim(), 0.0);
    for (std::size_t i = 0; i < gpre.rows; ++i) {
      const double* r = gpre.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < gpre.cols; ++j) acc += r[j];
      grads[li].d_bias[i] = acc;
    }
    if (li > 0 || grad_input != nullptr) {
      Matrix gin = gemm_tn(layers[li].weights, gpre);
      if (li == 0) {
        *grad_input = std::move(gin);
      } else {
        gpost = std::move(gin);
      }
    }
  }
  return grads;
}

// Backpropagates only d(loss)/d(input), skipping parameter gradients (used
// where the stack is held frozen, e.g. the critic inside the policy update).
inline Matrix backward_input_batch(const LayerStack& layers, const BatchCache& cache,
                                   const Matrix& grad_output) {
  if (cache.posts.size() != layers.size()) {
    throw std::invalid_argument("backward: cache does not match layer stack");
  }
  Matrix gpost = grad_output;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Matrix gpre =
        activation_backward(layers[li].activation, cache.preacts[li], cache.posts[li], gpost);
    gpost = gemm_tn(layers[li].weights, gpre);
  }
  return gpost;
}

// Single-sample wrappers around the batch path.
inline std::vector<double> forward(const LayerStack& layers, const std::vector<double>& x,
                                   BatchCache& cache) {
  Matrix xm(x.size(), 1);
  xm.data = x;
  const Matrix y = forward_batch(layers, xm, cache);
  return y.data;
}

inline StackGrads backward(const LayerStack& layers, const BatchCache& cache,
                           const std::vector<double>& grad_output,
                           std::vector<double>* grad_input = nullptr) {
  Matrix g(grad_output.size(), 1);
  g.data = grad_output;
  Matrix gin;
  StackGrads grads = backward_batch(layers, cache, g, grad_input ? &gin : nullptr);
  if (grad_input) *grad_input = gin.data;
  return grads;
}

// ---------------------------------------------------------------------------
// Adam

struct ParamRef {
  double* data;
  std::size_t size;
};

struct GradRef {
  const double* data;
  std::size_t size;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

inline void adam_step(const std::vector<ParamRef>& params, const std::vector<GradRef>& grads,
                      AdamState& state, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: block count mismatch");
  if (state.first_moment.empty()) {
    state.first_moment.resize(params.size());
    state.second_moment.resize(params.size());
    for (std::size_t b = 0; b < params.size(); ++b) {
      state.first_moment[b].assign(params[b].size, 0.0);
      state.second_moment[b].assign(params[b].size, 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: state/block count mismatch");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size != grads[b].size || params[b].size != state.first_moment[b].size()) {
      throw std::invalid_argument("adam_step: block size mismatch");
    }
    double* p = params[b].data;
    const double* g = grads[b].data;
    double* m = state.first_moment[b].data();
    double* v = state.second_moment[b].data();
    for (std::size_t i = 0; i < params[b].size; ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

inline std::vector<ParamRef> param_refs(LayerStack& layers) {
  std::vector<ParamRef> refs;
  refs.reserve(layers.size() * 2);
  for (auto& l : layers) {
    refs.push_back({l.weights.data.data(), l.weights.data.size()});
    refs.push_back({l.bias.data(), l.bias.size()});
  }
  return refs;
}

inline std::vector<GradRef> grad_refs(const StackGrads& grads) {
  std::vector<GradRef> refs;
  refs.reserve(grads.size() * 2);
  for (const auto& g : grads) {
    refs.push_back({g.d_weights.data.data(), g.d_weights.data.size()});
    refs.push_back({g.d_bias.data(), g.d_bias.size()});
  }
  return refs;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

// Max relative error between backward gradients and central differences of
// the scalar loss sum(outputs). Components where both gradients are below
// 1e-12 in magnitude are treated as matching.
inline double finite_diff_check(LayerStack layers, const std::vector<double>& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be positive");
  BatchCache cache;
  const std::vector<double> y = forward(layers, x, cache);
  const std::vector<double> ones(y.size(), 1.0);
  const StackGrads analytic = backward(layers, cache, ones);

  auto loss = [&]() {
    BatchCache c;
    const std::vector<double> out = forward(layers, x, c);
    double s = 0.0;
    for (double v : out) s += v;
    return s;
  };

  double max_rel = 0.0;
  auto probe = [&](double& p, double a) {
    const double orig = p;
    p = orig + h;
    const double up = loss();
    p = orig - h;
    const double down = loss();
    p = orig;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max(std::abs(fd), std::abs(a));
    if (denom < 1e-12) return;
    max_rel = std::max(max_rel, std::abs(fd - a) / denom);
  };

  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weights.data.size(); ++i) {
      probe(layers[l].weights.data[i], analytic[l].d_weights.data[i]);
    }
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      probe(layers[l].bias[i], analytic[l].d_bias[i]);
    }
  }
  return max_rel;
}

// ---------------------------------------------------------------------------
// Serialization (raw little-endian doubles; round-trips bit-exactly)

inline void write_stack(std::ostream& os, const LayerStack& layers) {
  io::write_u64(os, layers.size());
  for (const auto& l : layers) {
    io::write_u32(os, static_cast<std::uint32_t>(l.activation));
    io::write_u64(os, l.out_dim());
    io::write_u64(os, l.in_dim());
    io::write_f64_array(os, l.weights.data);
    io::write_f64_array(os, l.bias);
  }
}

inline LayerStack read_stack(std::istream& is) {
  LayerStack layers(io::read_u64(is));
  for (auto& l : layers) {
    l.activation = static_cast<Activation>(io::read_u32(is));
    const std::uint64_t d_out = io::read_u64(is);
    const std::uint64_t d_in = io::read_u64(is);
    l.weights = Matrix(d_out, d_in);
    l.weights.data = io::read_f64_array(is);
    l.bias = io::read_f64_array(is);
    if (l.weights.data.size() != d_out * d_in || l.bias.size() != d_out) {
      throw std::runtime_error("checkpoint: layer shape mismatch");
    }
  }
  return layers;
}

inline void write_adam(std::ostream& os, const AdamState& s) {
  io::write_f64(os, s.beta1);
  io::write_f64(os, s.beta2);
  io::write_f64(os, s.epsilon);
  io::write_u64(os, static_cast<std::uint64_t>(s.step_count));
  io::write_u64(os, s.first_moment.size());
  for (std::size_t b = 0; b < s.first_moment.size(); ++b) {
    io::write_f64_array(os, s.first_moment[b]);
    io::write_f64_array(os, s.second_moment[b]);
  }
}

inline AdamState read_adam(std::istream& is) {
  AdamState s;
  s.beta1 = io::read_f64(is);
  s.beta2 = io::read_f64(is);
  s.epsilon = io::read_f64(is);
  s.step_count = static_cast<std::int64_t>(io::read_u64(is));
  const std::uint64_t blocks = io::read_u64(is);
  s.first_moment.resize(blocks);
  s.second_moment.resize(blocks);
  for (std::uint64_t b = 0; b < blocks; ++b) {
    s.first_moment[b] = io::read_f64_array(is);
    s.second_moment[b] = io::read_f64_array(is);
  }
  return s;
}

}  // namespace beamrl::nn
