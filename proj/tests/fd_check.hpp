#pragma once

// Finite-difference gradient oracle shared by the op tests: analytic
// gradients from one taped backward pass are compared against central
// differences of the re-evaluated loss.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cognisnn/tensor.hpp"

namespace fdcheck {

struct Result {
  double max_rel = 0.0;
  double max_abs = 0.0;
  int failures = 0;
  std::string worst;
};

// loss_fn must rebuild the computation from the current values of `leaves`
// and return a scalar tensor. h = 1e-5 per the gradient-check contract.
inline Result run(const std::function<cognisnn::Tensor()>& loss_fn,
                  const std::vector<cognisnn::Tensor>& leaves,
                  double h = 1e-5, double rel_tol = 1e-4,
                  double abs_tol = 1e-6) {
  using cognisnn::Tape;
  using cognisnn::Tensor;

  std::vector<std::vector<double>> analytic;
  {
    for (auto leaf : leaves) leaf.zero_grad();
    Tape tape;
    Tensor loss;
    {
      Tape::Scope scope(tape);
      loss = loss_fn();
    }
    cognisnn::backward(loss, tape);
    for (const auto& leaf : leaves) analytic.push_back(leaf.grad());
  }

  Result r;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor leaf = leaves[li];
    for (std::int64_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.values()[i];
      leaf.values()[i] = saved + h;
      const double up = loss_fn().item();
      leaf.values()[i] = saved - h;
      const double down = loss_fn().item();
      leaf.values()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic[li][i];
      const double abs_err = std::fabs(a - fd);
      const double rel =
          abs_err / std::max({std::fabs(a), std::fabs(fd), 1e-12});
      r.max_abs = std::max(r.max_abs, abs_err);
      if (abs_err > abs_tol && rel > rel_tol) {
        ++r.failures;
        if (rel > r.max_rel)
          r.worst = "leaf " + std::to_string(li) + " index " +
                    std::to_string(i) + ": analytic " + std::to_string(a) +
                    " vs fd " + std::to_string(fd);
      }
      if (abs_err > abs_tol) r.max_rel = std::max(r.max_rel, rel);
    }
  }
  return r;
}

}  // namespace fdcheck
