#include "cognisnn/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace cognisnn {

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeMismatchError("non-positive dimension in shape");
    n *= d;
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '(';
  for (size_t i = 0; i < shape.size(); ++i)
    out << (i ? ", " : "") << shape[i];
  out << ')';
  return out.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto n = shape_size(shape);
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->values.assign(n, 0.0);
  t.impl_->grad.assign(n, 0.0);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
    throw ShapeMismatchError("value count does not match shape " +
                             shape_string(shape));
  Tensor t = zeros(std::move(shape), requires_grad);
  t.values() = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

namespace {
thread_local Tape* g_current_tape = nullptr;
}

Tape::Scope::Scope(Tape& tape) : prev_(g_current_tape) {
  g_current_tape = &tape;
}

Tape::Scope::~Scope() { g_current_tape = prev_; }

Tape* Tape::current() { return g_current_tape; }

void Tape::replay_backward() {
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

void backward(Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.size() != 1)
    throw NotScalarLossError("backward requires a scalar loss");
  loss.grad()[0] += 1.0;
  tape.replay_backward();
}

namespace {

void check_same_shape(Tensor a, Tensor b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeMismatchError(std::string(op) + ": shapes " +
                             shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " differ");
}

void maybe_record(std::function<void()> fn) {
  if (Tape* t = Tape::current()) t->record(std::move(fn));
}

}  // namespace

Tensor add(Tensor a, Tensor b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const auto n = out.size();
  for (std::int64_t i = 0; i < n; ++i)
    out.values()[i] = a.values()[i] + b.values()[i];
  maybe_record([a, b, out]() mutable {
    for (std::int64_t i = 0; i < out.size(); ++i) {
      a.grad()[i] += out.grad()[i];
      b.grad()[i] += out.grad()[i];
    }
  });
  return out;
}

Tensor sub(Tensor a, Tensor b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  const auto n = out.size();
  for (std::int64_t i = 0; i < n; ++i)
    out.values()[i] = a.values()[i] - b.values()[i];
  maybe_record([a, b, out]() mutable {
    for (std::int64_t i = 0; i < out.size(); ++i) {
      a.grad()[i] += out.grad()[i];
      b.grad()[i] -= out.grad()[i];
    }
  });
  return out;
}

Tensor mul(Tensor a, Tensor b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const auto n = out.size();
  for (std::int64_t i = 0; i < n; ++i)
    out.values()[i] = a.values()[i] * b.values()[i];
  maybe_record([a, b, out]() mutable {
    for (std::int64_t i = 0; i < out.size(); ++i) {
      a.grad()[i] += out.grad()[i] * b.values()[i];
      b.grad()[i] += out.grad()[i] * a.values()[i];
    }
  });
  return out;
}

Tensor scale(Tensor a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  const auto n = out.size();
  for (std::int64_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * s;
  maybe_record([a, out, s]() mutable {
    for (std::int64_t i = 0; i < out.size(); ++i)
      a.grad()[i] += out.grad()[i] * s;
  });
  return out;
}

Tensor scale_by(Tensor a, Tensor s) {
  if (s.size() != 1)
    throw ShapeMismatchError("scale_by: gate must hold a single value, got " +
                             shape_string(s.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const double g = s.values()[0];
  const auto n = out.size();
  for (std::int64_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * g;
  maybe_record([a, s, out, g]() mutable {
    double ds = 0.0;
    for (std::int64_t i = 0; i < out.size(); ++i) {
      a.grad()[i] += out.grad()[i] * g;
      ds += out.grad()[i] * a.values()[i];
    }
    s.grad()[0] += ds;
  });
  return out;
}

Tensor add_scalar(Tensor a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  const auto n = out.size();
  for (std::int64_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + s;
  maybe_record([a, out]() mutable {
    for (std::int64_t i = 0; i < out.size(); ++i)
      a.grad()[i] += out.grad()[i];
  });
  return out;
}

Tensor sum(Tensor a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor out = Tensor::scalar(total);
  maybe_record([a, out]() mutable {
    const double g = out.grad()[0];
    for (auto& gi : a.grad()) gi += g;
  });
  return out;
}

Tensor mean(Tensor a) {
  const double inv = 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor out = Tensor::scalar(total * inv);
  maybe_record([a, out, inv]() mutable {
    const double g = out.grad()[0] * inv;
    for (auto& gi : a.grad()) gi += g;
  });
  return out;
}

}  // namespace cognisnn
