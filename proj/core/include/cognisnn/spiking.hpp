#pragma once

#include <vector>

#include "cognisnn/ops.hpp"
#include "cognisnn/rng.hpp"
#include "cognisnn/tensor.hpp"

namespace cognisnn {

struct LIFParams {
  double tau = 0.5;
  double u_th = 1.0;
  SurrogateConfig surrogate;

  void validate() const {
    if (tau <= 0.0 || tau > 1.0)
      throw InvalidSpecError("LIF tau must lie in (0, 1]");
    if (u_th <= 0.0) throw InvalidSpecError("LIF threshold must be > 0");
    surrogate.validate();
  }
};

/// Membrane potential and last spike train. Tensors stay undefined until the
/// first step supplies a shape; reset drops them back to that state.
struct LIFState {
  Tensor u;
  Tensor s_prev;

  void reset() {
    u = Tensor();
    s_prev = Tensor();
  }
};

/// One LIF update with soft reset by threshold subtraction:
/// u[t] = tau * u[t-1] + I[t] - s_prev * u_th, spike = step(u[t] - u_th).
/// The state advances (u, s_prev) and the step is differentiable through the
/// surrogate; membrane dynamics stay on the active tape for BPTT.
Tensor lif_step(LIFState& state, const LIFParams& params, Tensor input_current);

/// Conv -> BN -> spiking neuron, the network's basic block. Convs are
/// bias-free; BN provides the affine terms.
struct ConvBNSNTriplet {
  Tensor conv_weight;  // (out, in, k, k)
  BatchNorm2d bn;
  LIFParams lif;
  LIFState state;
  int kernel = 3;

  static ConvBNSNTriplet create(int in_channels, int out_channels, int kernel,
                                const LIFParams& lif, Rng& rng);

  void reset_state() { state.reset(); }
};

/// Conv input and output captured during a forward pass, for op counting.
struct TripletTrace {
  Tensor conv_in;
  Tensor conv_out;
};

/// bn_train selects batch vs running statistics; pad = kernel/2 keeps
/// spatial dims. A non-null trace receives the conv boundary tensors.
Tensor triplet_forward(ConvBNSNTriplet& t, Tensor x, bool bn_train,
                       TripletTrace* trace = nullptr);

/// Two stacked triplets with an OR-gate residual: O = O2 + O1 - O2*O1.
struct ResNode {
  ConvBNSNTriplet triplet1;
  ConvBNSNTriplet triplet2;

  static ResNode create(int in_channels, int channels, const LIFParams& lif,
                        Rng& rng);

  void reset_state() {
    triplet1.reset_state();
    triplet2.reset_state();
  }
};

struct ResNodeTrace {
  TripletTrace t1;
  TripletTrace t2;
};

Tensor resnode_forward(ResNode& node, Tensor input, bool bn_train,
                       ResNodeTrace* trace = nullptr);

struct PoolingPolicy {
  int eta = 1;    // minimum spatial dimension preserved by pooling
  int kappa = 2;  // standard pooling kernel

  void validate() const {
    if (eta < 1 || kappa < 1)
      throw InvalidSpecError("pooling policy requires eta >= 1 and kappa >= 1");
  }
};

/// Average-pools by kappa when the result keeps dimension >= eta, otherwise
/// returns the input unchanged. Input must be spatially square.
Tensor standard_pool(Tensor x, const PoolingPolicy& policy);

/// Pools every input down to the smallest spatial dimension among them with
/// kernel floor(D_i / D*). Inputs must be square and integer multiples of the
/// minimum.
std::vector<Tensor> adaptive_pool(const std::vector<Tensor>& inputs);

/// The kernel adaptive_pool would use to take dimension `dim` to `target`.
/// Throws IncompatibleDimensionsError when no integer kernel restores
/// equality.
int adaptive_pool_kernel(int dim, int target);

}  // namespace cognisnn
