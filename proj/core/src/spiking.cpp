#include "cognisnn/spiking.hpp"

#include <cmath>

namespace cognisnn {

Tensor lif_step(LIFState& state, const LIFParams& params,
                Tensor input_current) {
  params.validate();
  if (!input_current.defined())
    throw ShapeMismatchError("lif_step: undefined input current");
  if (!state.u.defined()) {
    state.u = Tensor::zeros(input_current.shape());
    state.s_prev = Tensor::zeros(input_current.shape());
  }
  if (!state.u.same_shape(input_current))
    throw ShapeMismatchError("lif_step: state shape " +
                             shape_string(state.u.shape()) +
                             " != input shape " +
                             shape_string(input_current.shape()));
  Tensor u = add(scale(state.u, params.tau),
                 sub(input_current, scale(state.s_prev, params.u_th)));
  Tensor spike = heaviside_surrogate(u, params.u_th, params.surrogate);
  state.u = u;
  state.s_prev = spike;
  return spike;
}

ConvBNSNTriplet ConvBNSNTriplet::create(int in_channels, int out_channels,
                                        int kernel, const LIFParams& lif,
                                        Rng& rng) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0)
    throw InvalidSpecError("triplet needs positive channels and an odd kernel");
  lif.validate();
  ConvBNSNTriplet t;
  t.kernel = kernel;
  t.lif = lif;
  t.conv_weight =
      Tensor::zeros({out_channels, in_channels, kernel, kernel}, true);
  const double std_dev =
      std::sqrt(2.0 / (static_cast<double>(in_channels) * kernel * kernel));
  for (auto& v : t.conv_weight.values()) v = rng.normal() * std_dev;
  t.bn = BatchNorm2d::create(out_channels);
  return t;
}

Tensor triplet_forward(ConvBNSNTriplet& t, Tensor x, bool bn_train,
                       TripletTrace* trace) {
  Tensor c = conv2d(x, t.conv_weight, Tensor(), 1, t.kernel / 2);
  if (trace) {
    trace->conv_in = x;
    trace->conv_out = c;
  }
  Tensor b = batchnorm2d(c, t.bn, bn_train);
  return lif_step(t.state, t.lif, b);
}

ResNode ResNode::create(int in_channels, int channels, const LIFParams& lif,
                        Rng& rng) {
  ResNode node;
  node.triplet1 = ConvBNSNTriplet::create(in_channels, channels, 3, lif, rng);
  node.triplet2 = ConvBNSNTriplet::create(channels, channels, 3, lif, rng);
  return node;
}

Tensor resnode_forward(ResNode& node, Tensor input, bool bn_train,
                       ResNodeTrace* trace) {
  Tensor o1 = triplet_forward(node.triplet1, input, bn_train,
                              trace ? &trace->t1 : nullptr);
  Tensor o2 = triplet_forward(node.triplet2, o1, bn_train,
                              trace ? &trace->t2 : nullptr);
  return or_combine(o2, o1);
}

Tensor standard_pool(Tensor x, const PoolingPolicy& policy) {
  policy.validate();
  if (!x.defined() || x.rank() != 4)
    throw ShapeMismatchError("standard_pool: input must be NCHW");
  if (x.dim(2) != x.dim(3))
    throw ShapeMismatchError("standard_pool: input must be square, got " +
                             shape_string(x.shape()));
  const int d = x.dim(2);
  if (d / policy.kappa < policy.eta || d < policy.kappa) return x;
  return avg_pool2d(x, policy.kappa);
}

int adaptive_pool_kernel(int dim, int target) {
  if (target < 1 || dim < target)
    throw IncompatibleDimensionsError("cannot pool dimension " +
                                      std::to_string(dim) + " to " +
                                      std::to_string(target));
  const int kernel = dim / target;
  if (kernel * target != dim)
    throw IncompatibleDimensionsError(
        "floor kernel " + std::to_string(kernel) + " cannot take dimension " +
        std::to_string(dim) + " to " + std::to_string(target));
  return kernel;
}

std::vector<Tensor> adaptive_pool(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) return {};
  int target = 0;
  for (const auto& x : inputs) {
    if (!x.defined() || x.rank() != 4)
      throw ShapeMismatchError("adaptive_pool: inputs must be NCHW");
    if (x.dim(2) != x.dim(3))
      throw IncompatibleDimensionsError(
          "adaptive_pool: inputs must be square, got " +
          shape_string(x.shape()));
    if (x.dim(0) != inputs[0].dim(0) || x.dim(1) != inputs[0].dim(1))
      throw IncompatibleDimensionsError(
          "adaptive_pool: batch/channel dims differ across inputs");
    target = target == 0 ? x.dim(2) : std::min(target, x.dim(2));
  }
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    const int kernel = adaptive_pool_kernel(x.dim(2), target);
    out.push_back(kernel == 1 ? x : avg_pool2d(x, kernel));
  }
  return out;
}

}  // namespace cognisnn
