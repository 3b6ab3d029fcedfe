#include "mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace gbwm {

Mlp::Mlp(std::vector<size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("need >= 2 layer sizes");
  for (size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("layer size must be > 0");
  }
  size_t offset = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(offset);
    offset += sizes_[l + 1] * sizes_[l];
    b_off_.push_back(offset);
    offset += sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

void Mlp::init_glorot(Rng& rng) {
  for (size_t l = 0; l < layer_count(); ++l) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
    std::span<double> w = weights(l);
    for (double& x : w) x = (2.0 * rng.uniform() - 1.0) * limit;
    std::span<double> b = biases(l);
    for (double& x : b) x = 0.0;
  }
}

std::span<const double> Mlp::weights(size_t layer) const {
  return {params_.data() + w_off_[layer], sizes_[layer + 1] * sizes_[layer]};
}

std::span<const double> Mlp::biases(size_t layer) const {
  return {params_.data() + b_off_[layer], sizes_[layer + 1]};
}

std::span<double> Mlp::weights(size_t layer) {
  return {params_.data() + w_off_[layer], sizes_[layer + 1] * sizes_[layer]};
}

std::span<double> Mlp::biases(size_t layer) {
  return {params_.data() + b_off_[layer], sizes_[layer + 1]};
}

std::vector<double> Mlp::forward(std::span<const double> x,
                                 Cache* cache) const {
  if (x.size() != sizes_.front()) {
    throw std::invalid_argument("input size mismatch");
  }
  std::vector<double> a(x.begin(), x.end());
  if (cache != nullptr) {
    cache->pre.assign(layer_count(), {});
    cache->post.assign(layer_count() + 1, {});
    cache->post[0] = a;
  }
  for (size_t l = 0; l < layer_count(); ++l) {
    const size_t in = sizes_[l];
    const size_t out = sizes_[l + 1];
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    std::vector<double> z(out);
    for (size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (size_t i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    if (cache != nullptr) cache->pre[l] = z;
    const bool last = l + 1 == layer_count();
    if (!last) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    a = std::move(z);
    if (cache != nullptr) cache->post[l + 1] = a;
  }
  return a;
}

std::vector<double> Mlp::backward(const Cache& cache,
                                  std::span<const double> grad_out,
                                  std::vector<double>& grads) const {
  if (grads.size() != params_.size()) {
    throw std::invalid_argument("grads size mismatch");
  }
  if (grad_out.size() != sizes_.back()) {
    throw std::invalid_argument("grad_out size mismatch");
  }
  std::vector<double> g(grad_out.begin(), grad_out.end());
  for (size_t l = layer_count(); l-- > 0;) {
    const size_t in = sizes_[l];
    const size_t out = sizes_[l + 1];
    const bool last = l + 1 == layer_count();
    // dL/dz: ReLU gate on hidden layers (derivative 0 at exactly 0).
    if (!last) {
      const std::vector<double>& z = cache.pre[l];
      for (size_t o = 0; o < out; ++o) {
        if (z[o] <= 0.0) g[o] = 0.0;
      }
    }
    const std::vector<double>& a = cache.post[l];
    double* gw = grads.data() + w_off_[l];
    double* gb = grads.data() + b_off_[l];
    const double* w = params_.data() + w_off_[l];
    std::vector<double> g_in(in, 0.0);
    for (size_t o = 0; o < out; ++o) {
      const double go = g[o];
      double* grow = gw + o * in;
      const double* wrow = w + o * in;
      for (size_t i = 0; i < in; ++i) {
        grow[i] += go * a[i];
        g_in[i] += wrow[i] * go;
      }
      gb[o] += go;
    }
    g = std::move(g_in);
  }
  return g;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

}  // namespace gbwm
