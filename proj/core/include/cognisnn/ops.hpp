#pragma once

#include <vector>

#include "cognisnn/tensor.hpp"

namespace cognisnn {

/// Surrogate-gradient settings for the step function. relaxed_forward swaps
/// the hard step for the sigmoid itself and exists only so gradient checks
/// can run end to end; training always uses the default.
struct SurrogateConfig {
  double alpha = 4.0;
  bool relaxed_forward = false;

  void validate() const {
    if (alpha <= 0.0) throw InvalidSpecError("surrogate alpha must be > 0");
  }
};

/// Cross-correlation over NCHW input with OIkk weights. Bias is optional
/// (pass an undefined Tensor); output spatial dim = (H + 2*pad - k)/stride + 1.
Tensor conv2d(Tensor x, Tensor w, Tensor bias, int stride,
              int padding);

/// Batch normalization state: per-channel affine parameters plus running
/// statistics updated in train mode and consumed in eval mode.
struct BatchNorm2d {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  static BatchNorm2d create(int channels);
};

Tensor batchnorm2d(Tensor x, BatchNorm2d& bn, bool train);

/// Non-overlapping average pooling, stride = kernel; kernel must divide both
/// spatial dims.
Tensor avg_pool2d(Tensor x, int kernel);

/// Mean over the spatial dims: NCHW -> (N, C).
Tensor global_avg_pool(Tensor x);

/// Step function with sigmoid surrogate gradient. Default forward emits
/// 1.0 where u - threshold >= 0 (spike at exact threshold) and 0.0 elsewhere;
/// the recorded adjoint is alpha * sigma * (1 - sigma) at u - threshold.
Tensor heaviside_surrogate(Tensor u, double threshold,
                           const SurrogateConfig& cfg);

/// Differentiable OR gate: a + b - a*b, adjoints (1 - b) and (1 - a).
Tensor or_combine(Tensor a, Tensor b);

/// x: (N, F), w: (C, F), b: (C) -> (N, C).
Tensor linear(Tensor x, Tensor w, Tensor b);

Tensor sigmoid(Tensor x);

/// Mean cross-entropy over the batch via log-sum-exp.
/// logits: (N, C), labels: N entries in [0, C).
Tensor softmax_cross_entropy(Tensor logits,
                             const std::vector<int>& labels);

/// Distillation loss: mean over the batch of -sum_c target(c) * log
/// softmax(logits / temperature)(c). Targets are plain probabilities and
/// receive no gradient.
Tensor soft_cross_entropy(Tensor logits,
                          const std::vector<std::vector<double>>& targets,
                          double temperature);

/// Row-wise softmax probabilities of logits / temperature, no taping.
std::vector<std::vector<double>> softmax_rows(const Tensor& logits,
                                              double temperature);

}  // namespace cognisnn
