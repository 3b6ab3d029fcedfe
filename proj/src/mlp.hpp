#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rng.hpp"

namespace gbwm {

// Fully-connected net with ReLU hidden layers and a linear output layer.
// All parameters live in one flat vector (per-layer weight block then bias
// block, weights row-major out x in), so optimizers and finite-difference
// checks can treat the model as a single parameter array.
class Mlp {
 public:
  explicit Mlp(std::vector<size_t> layer_sizes);

  // Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
  void init_glorot(Rng& rng);

  struct Cache {
    std::vector<std::vector<double>> pre;   // z of each layer
    std::vector<std::vector<double>> post;  // post[0] = input, then activations
  };

  // Returns the output; fills `cache` for a later backward() if non-null.
  std::vector<double> forward(std::span<const double> x,
                              Cache* cache = nullptr) const;

  // Given dL/d(output), accumulates dL/d(params) into `grads` (same layout
  // and size as params()) and returns dL/d(input).
  std::vector<double> backward(const Cache& cache,
                               std::span<const double> grad_out,
                               std::vector<double>& grads) const;

  size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  const std::vector<size_t>& layer_sizes() const { return sizes_; }
  size_t layer_count() const { return sizes_.size() - 1; }
  std::span<const double> weights(size_t layer) const;
  std::span<const double> biases(size_t layer) const;
  std::span<double> weights(size_t layer);
  std::span<double> biases(size_t layer);

 private:
  std::vector<size_t> sizes_;
  std::vector<size_t> w_off_, b_off_;
  std::vector<double> params_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators for one parameter vector.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update (in place on `params`).
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& config);

}  // namespace gbwm
