#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cognisnn/errors.hpp"

namespace cognisnn {

/// Dense row-major tensor of doubles with a same-shape gradient buffer.
/// Copies share storage; ops allocate fresh outputs.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[i]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t size() const {
    return static_cast<std::int64_t>(impl_->values.size());
  }

  std::vector<double>& values() { return impl_->values; }
  const std::vector<double>& values() const { return impl_->values; }
  std::vector<double>& grad() { return impl_->grad; }
  const std::vector<double>& grad() const { return impl_->grad; }

  double item() const {
    if (size() != 1) throw NotScalarLossError("tensor is not a scalar");
    return impl_->values[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  void zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

  /// Identity of the underlying buffer; used to dedupe parameter lists.
  const void* id() const { return impl_.get(); }

  bool same_shape(const Tensor& other) const {
    return impl_->shape == other.impl_->shape;
  }

 private:
  struct Impl {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

std::int64_t shape_size(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

/// Reverse-mode tape: ops append adjoint closures while a Scope is active;
/// backward() replays them newest-first. One tape per training step.
class Tape {
 public:
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  /// Runs every recorded adjoint, newest first.
  void replay_backward();

  /// Installs this tape as the recording target for the current thread.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* current();

 private:
  std::vector<std::function<void()>> nodes_;
};

/// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every tensor the
/// taped ops touched. Throws NotScalarLossError unless loss has one element.
void backward(Tensor& loss, Tape& tape);

// Elementwise arithmetic. Shapes must match exactly; only scalar broadcasting
// via scale/add_scalar.
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor scale(Tensor a, double s);
/// Multiplies by a single-element gate tensor; gradients reach the gate.
Tensor scale_by(Tensor a, Tensor s);
Tensor add_scalar(Tensor a, double s);

Tensor sum(Tensor a);
Tensor mean(Tensor a);

}  // namespace cognisnn
