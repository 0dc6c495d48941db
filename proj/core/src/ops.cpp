#include "cognisnn/ops.hpp"

#include <algorithm>
#include <cmath>

namespace cognisnn {

namespace {

void maybe_record(std::function<void()> fn) {
  if (Tape* t = Tape::current()) t->record(std::move(fn));
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeMismatchError(msg);
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor conv2d(Tensor x, Tensor w, Tensor bias, int stride,
              int padding) {
  require(x.defined() && x.rank() == 4, "conv2d: input must be NCHW");
  require(w.defined() && w.rank() == 4, "conv2d: weight must be OIkk");
  require(stride >= 1 && padding >= 0, "conv2d: bad stride/padding");
  const int N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  require(w.dim(1) == Cin, "conv2d: weight input channels " +
                               std::to_string(w.dim(1)) + " != " +
                               std::to_string(Cin));
  if (bias.defined())
    require(bias.rank() == 1 && bias.dim(0) == Cout,
            "conv2d: bias length != output channels");
  const int Hout = (H + 2 * padding - kh) / stride + 1;
  const int Wout = (W + 2 * padding - kw) / stride + 1;
  if (H + 2 * padding < kh || W + 2 * padding < kw || Hout <= 0 || Wout <= 0)
    throw NonPositiveOutputError("conv2d: output would be empty for input " +
                                 shape_string(x.shape()));

  Tensor out = Tensor::zeros({N, Cout, Hout, Wout});
  const double* xv = x.values().data();
  const double* wv = w.values().data();
  double* ov = out.values().data();

  if (bias.defined()) {
    for (int n = 0; n < N; ++n)
      for (int oc = 0; oc < Cout; ++oc) {
        double b = bias.values()[oc];
        double* dst = ov + ((static_cast<std::int64_t>(n) * Cout + oc) * Hout) * Wout;
        for (int i = 0; i < Hout * Wout; ++i) dst[i] = b;
      }
  }

  // Accumulate one kernel tap at a time; the inner loop runs over a
  // precomputed valid output-column range so padding needs no branch.
  for (int n = 0; n < N; ++n) {
    for (int oc = 0; oc < Cout; ++oc) {
      double* dst = ov + ((static_cast<std::int64_t>(n) * Cout + oc) * Hout) * Wout;
      for (int ic = 0; ic < Cin; ++ic) {
        const double* src =
            xv + ((static_cast<std::int64_t>(n) * Cin + ic) * H) * W;
        for (int i = 0; i < kh; ++i) {
          for (int j = 0; j < kw; ++j) {
            const double wval =
                wv[(((static_cast<std::int64_t>(oc) * Cin + ic) * kh) + i) * kw + j];
            if (wval == 0.0) continue;
            for (int oh = 0; oh < Hout; ++oh) {
              const int ih = oh * stride - padding + i;
              if (ih < 0 || ih >= H) continue;
              int ow_lo = 0, ow_hi = Wout - 1;
              while (ow_lo <= ow_hi && ow_lo * stride - padding + j < 0) ++ow_lo;
              while (ow_hi >= ow_lo && ow_hi * stride - padding + j >= W) --ow_hi;
              const double* srow = src + static_cast<std::int64_t>(ih) * W;
              double* drow = dst + static_cast<std::int64_t>(oh) * Wout;
              for (int ow = ow_lo; ow <= ow_hi; ++ow)
                drow[ow] += wval * srow[ow * stride - padding + j];
            }
          }
        }
      }
    }
  }

  maybe_record([x, w, bias, out, stride, padding]() mutable {
    const int N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int Hout = out.dim(2), Wout = out.dim(3);
    const double* xv = x.values().data();
    const double* wv = w.values().data();
    const double* gv = out.grad().data();
    double* xg = x.grad().data();
    double* wg = w.grad().data();
    for (int n = 0; n < N; ++n) {
      for (int oc = 0; oc < Cout; ++oc) {
        const double* grow0 =
            gv + ((static_cast<std::int64_t>(n) * Cout + oc) * Hout) * Wout;
        if (bias.defined()) {
          double acc = 0.0;
          for (int i = 0; i < Hout * Wout; ++i) acc += grow0[i];
          bias.grad()[oc] += acc;
        }
        for (int ic = 0; ic < Cin; ++ic) {
          const double* src =
              xv + ((static_cast<std::int64_t>(n) * Cin + ic) * H) * W;
          double* sgrad =
              xg + ((static_cast<std::int64_t>(n) * Cin + ic) * H) * W;
          for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
              const std::int64_t widx =
                  (((static_cast<std::int64_t>(oc) * Cin + ic) * kh) + i) * kw + j;
              const double wval = wv[widx];
              double wacc = 0.0;
              for (int oh = 0; oh < Hout; ++oh) {
                const int ih = oh * stride - padding + i;
                if (ih < 0 || ih >= H) continue;
                int ow_lo = 0, ow_hi = Wout - 1;
                while (ow_lo <= ow_hi && ow_lo * stride - padding + j < 0)
                  ++ow_lo;
                while (ow_hi >= ow_lo && ow_hi * stride - padding + j >= W)
                  --ow_hi;
                const double* grow =
                    grow0 + static_cast<std::int64_t>(oh) * Wout;
                const double* srow = src + static_cast<std::int64_t>(ih) * W;
                double* sgrow = sgrad + static_cast<std::int64_t>(ih) * W;
                for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                  const int iw = ow * stride - padding + j;
                  wacc += grow[ow] * srow[iw];
                  sgrow[iw] += grow[ow] * wval;
                }
              }
              wg[widx] += wacc;
            }
          }
        }
      }
    }
  });
  return out;
}

BatchNorm2d BatchNorm2d::create(int channels) {
  BatchNorm2d bn;
  bn.gamma = Tensor::full({channels}, 1.0, true);
  bn.beta = Tensor::zeros({channels}, true);
  bn.running_mean = Tensor::zeros({channels});
  bn.running_var = Tensor::full({channels}, 1.0);
  return bn;
}

Tensor batchnorm2d(Tensor x, BatchNorm2d& bn, bool train) {
  require(x.defined() && x.rank() == 4, "batchnorm2d: input must be NCHW");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(bn.gamma.size() == C && bn.beta.size() == C &&
              bn.running_mean.size() == C && bn.running_var.size() == C,
          "batchnorm2d: parameter length != channel count");
  const std::int64_t m = static_cast<std::int64_t>(N) * H * W;
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  Tensor out = Tensor::zeros(x.shape());

  std::vector<double> mu(C), var(C);
  if (train) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* p =
            x.values().data() + ((static_cast<std::int64_t>(n) * C + c)) * plane;
        for (std::int64_t i = 0; i < plane; ++i) s += p[i];
      }
      mu[c] = s / static_cast<double>(m);
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* p =
            x.values().data() + ((static_cast<std::int64_t>(n) * C + c)) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double d = p[i] - mu[c];
          v += d * d;
        }
      }
      var[c] = v / static_cast<double>(m);  // biased, also fed to running stats
      bn.running_mean.values()[c] =
          (1.0 - bn.momentum) * bn.running_mean.values()[c] + bn.momentum * mu[c];
      bn.running_var.values()[c] =
          (1.0 - bn.momentum) * bn.running_var.values()[c] + bn.momentum * var[c];
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mu[c] = bn.running_mean.values()[c];
      var[c] = bn.running_var.values()[c];
    }
  }

  for (int c = 0; c < C; ++c) {
    const double istd = 1.0 / std::sqrt(var[c] + bn.eps);
    const double g = bn.gamma.values()[c];
    const double b = bn.beta.values()[c];
    for (int n = 0; n < N; ++n) {
      const double* p =
          x.values().data() + ((static_cast<std::int64_t>(n) * C + c)) * plane;
      double* q =
          out.values().data() + ((static_cast<std::int64_t>(n) * C + c)) * plane;
      for (std::int64_t i = 0; i < plane; ++i)
        q[i] = g * (p[i] - mu[c]) * istd + b;
    }
  }

  Tensor gamma = bn.gamma, beta = bn.beta;
  const double eps = bn.eps;
  maybe_record([x, out, gamma, beta, mu, var, eps, train]() mutable {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    const std::int64_t m = static_cast<std::int64_t>(N) * plane;
    for (int c = 0; c < C; ++c) {
      const double istd = 1.0 / std::sqrt(var[c] + eps);
      const double g = gamma.values()[c];
      double dgamma = 0.0, dbeta = 0.0;
      double dvar = 0.0, dmu_a = 0.0, sum_xc = 0.0;
      for (int n = 0; n < N; ++n) {
        const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * plane;
        const double* xp = x.values().data() + base;
        const double* gp = out.grad().data() + base;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double xc = xp[i] - mu[c];
          const double xhat = xc * istd;
          dgamma += gp[i] * xhat;
          dbeta += gp[i];
          dvar += gp[i] * g * xc;
          dmu_a += gp[i] * g;
          sum_xc += xc;
        }
      }
      gamma.grad()[c] += dgamma;
      beta.grad()[c] += dbeta;
      if (!train) {
        // Running statistics are constants here; only the affine path flows.
        const double k = g * istd;
        for (int n = 0; n < N; ++n) {
          const std::int64_t base =
              (static_cast<std::int64_t>(n) * C + c) * plane;
          const double* gp = out.grad().data() + base;
          double* xg = x.grad().data() + base;
          for (std::int64_t i = 0; i < plane; ++i) xg[i] += gp[i] * k;
        }
        continue;
      }
      dvar *= -0.5 * istd * istd * istd;
      const double dmu =
          -dmu_a * istd + dvar * (-2.0 / static_cast<double>(m)) * sum_xc;
      for (int n = 0; n < N; ++n) {
        const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * plane;
        const double* xp = x.values().data() + base;
        const double* gp = out.grad().data() + base;
        double* xg = x.grad().data() + base;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double xc = xp[i] - mu[c];
          xg[i] += gp[i] * g * istd +
                   dvar * 2.0 * xc / static_cast<double>(m) +
                   dmu / static_cast<double>(m);
        }
      }
    }
  });
  return out;
}

Tensor avg_pool2d(Tensor x, int kernel) {
  require(x.defined() && x.rank() == 4, "avg_pool2d: input must be NCHW");
  if (kernel < 1) throw InvalidSpecError("avg_pool2d: kernel must be >= 1");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % kernel != 0 || W % kernel != 0)
    throw IndivisibleDimensionError(
        "avg_pool2d: kernel " + std::to_string(kernel) +
        " does not divide spatial dims " + shape_string(x.shape()));
  const int Ho = H / kernel, Wo = W / kernel;
  Tensor out = Tensor::zeros({N, C, Ho, Wo});
  const double inv = 1.0 / (static_cast<double>(kernel) * kernel);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src =
          x.values().data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
      double* dst =
          out.values().data() + (static_cast<std::int64_t>(n) * C + c) * Ho * Wo;
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          double s = 0.0;
          for (int i = 0; i < kernel; ++i)
            for (int j = 0; j < kernel; ++j)
              s += src[(oh * kernel + i) * W + ow * kernel + j];
          dst[oh * Wo + ow] = s * inv;
        }
    }
  maybe_record([x, out, kernel, inv]() mutable {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Ho = out.dim(2), Wo = out.dim(3);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        double* xg =
            x.grad().data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
        const double* gp =
            out.grad().data() + (static_cast<std::int64_t>(n) * C + c) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh)
          for (int ow = 0; ow < Wo; ++ow) {
            const double g = gp[oh * Wo + ow] * inv;
            for (int i = 0; i < kernel; ++i)
              for (int j = 0; j < kernel; ++j)
                xg[(oh * kernel + i) * W + ow * kernel + j] += g;
          }
      }
  });
  return out;
}

Tensor global_avg_pool(Tensor x) {
  require(x.defined() && x.rank() == 4, "global_avg_pool: input must be NCHW");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  const double inv = 1.0 / static_cast<double>(plane);
  Tensor out = Tensor::zeros({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* p =
          x.values().data() + (static_cast<std::int64_t>(n) * C + c) * plane;
      double s = 0.0;
      for (std::int64_t i = 0; i < plane; ++i) s += p[i];
      out.values()[n * C + c] = s * inv;
    }
  maybe_record([x, out, inv]() mutable {
    const int N = x.dim(0), C = x.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const double g = out.grad()[n * C + c] * inv;
        double* xg =
            x.grad().data() + (static_cast<std::int64_t>(n) * C + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) xg[i] += g;
      }
  });
  return out;
}

Tensor heaviside_surrogate(Tensor u, double threshold,
                           const SurrogateConfig& cfg) {
  cfg.validate();
  Tensor out = Tensor::zeros(u.shape());
  const auto n = u.size();
  if (cfg.relaxed_forward) {
    for (std::int64_t i = 0; i < n; ++i)
      out.values()[i] = sigmoid_scalar(cfg.alpha * (u.values()[i] - threshold));
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      out.values()[i] = u.values()[i] - threshold >= 0.0 ? 1.0 : 0.0;
  }
  const double alpha = cfg.alpha;
  maybe_record([u, out, threshold, alpha]() mutable {
    for (std::int64_t i = 0; i < u.size(); ++i) {
      const double s = sigmoid_scalar(alpha * (u.values()[i] - threshold));
      u.grad()[i] += out.grad()[i] * alpha * s * (1.0 - s);
    }
  });
  return out;
}

Tensor or_combine(Tensor a, Tensor b) {
  require(a.same_shape(b), "or_combine: shapes " + shape_string(a.shape()) +
                               " and " + shape_string(b.shape()) + " differ");
  Tensor out = Tensor::zeros(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i)
    out.values()[i] =
        a.values()[i] + b.values()[i] - a.values()[i] * b.values()[i];
  maybe_record([a, b, out]() mutable {
    for (std::int64_t i = 0; i < a.size(); ++i) {
      a.grad()[i] += out.grad()[i] * (1.0 - b.values()[i]);
      b.grad()[i] += out.grad()[i] * (1.0 - a.values()[i]);
    }
  });
  return out;
}

Tensor linear(Tensor x, Tensor w, Tensor b) {
  require(x.defined() && x.rank() == 2, "linear: input must be (N, F)");
  require(w.defined() && w.rank() == 2, "linear: weight must be (C, F)");
  const int N = x.dim(0), F = x.dim(1), C = w.dim(0);
  require(w.dim(1) == F, "linear: weight features " + std::to_string(w.dim(1)) +
                             " != input features " + std::to_string(F));
  require(b.defined() && b.rank() == 1 && b.dim(0) == C,
          "linear: bias length != output features");
  Tensor out = Tensor::zeros({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double s = b.values()[c];
      for (int f = 0; f < F; ++f)
        s += x.values()[n * F + f] * w.values()[c * F + f];
      out.values()[n * C + c] = s;
    }
  maybe_record([x, w, b, out]() mutable {
    const int N = x.dim(0), F = x.dim(1), C = w.dim(0);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const double g = out.grad()[n * C + c];
        if (g == 0.0) continue;
        b.grad()[c] += g;
        for (int f = 0; f < F; ++f) {
          x.grad()[n * F + f] += g * w.values()[c * F + f];
          w.grad()[c * F + f] += g * x.values()[n * F + f];
        }
      }
  });
  return out;
}

Tensor sigmoid(Tensor x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i)
    out.values()[i] = sigmoid_scalar(x.values()[i]);
  maybe_record([x, out]() mutable {
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const double s = out.values()[i];
      x.grad()[i] += out.grad()[i] * s * (1.0 - s);
    }
  });
  return out;
}

Tensor softmax_cross_entropy(Tensor logits,
                             const std::vector<int>& labels) {
  require(logits.defined() && logits.rank() == 2,
          "softmax_cross_entropy: logits must be (N, C)");
  const int N = logits.dim(0), C = logits.dim(1);
  require(static_cast<int>(labels.size()) == N,
          "softmax_cross_entropy: label count != batch size");
  for (int y : labels)
    if (y < 0 || y >= C)
      throw LabelOutOfRangeError("label " + std::to_string(y) +
                                 " outside [0, " + std::to_string(C) + ")");
  std::vector<double> probs(static_cast<size_t>(N) * C);
  double loss = 0.0;
  for (int n = 0; n < N; ++n) {
    const double* row = logits.values().data() + static_cast<size_t>(n) * C;
    double mx = row[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    loss += lse - row[labels[n]];
    for (int c = 0; c < C; ++c)
      probs[static_cast<size_t>(n) * C + c] = std::exp(row[c] - lse);
  }
  loss /= static_cast<double>(N);
  Tensor out = Tensor::scalar(loss);
  maybe_record([logits, out, probs = std::move(probs), labels]() mutable {
    const int N = logits.dim(0), C = logits.dim(1);
    const double g = out.grad()[0] / static_cast<double>(N);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        logits.grad()[n * C + c] +=
            g * (probs[static_cast<size_t>(n) * C + c] -
                 (labels[n] == c ? 1.0 : 0.0));
  });
  return out;
}

std::vector<std::vector<double>> softmax_rows(const Tensor& logits,
                                              double temperature) {
  require(logits.defined() && logits.rank() == 2,
          "softmax_rows: logits must be (N, C)");
  if (temperature <= 0.0)
    throw InvalidSpecError("softmax temperature must be > 0");
  const int N = logits.dim(0), C = logits.dim(1);
  std::vector<std::vector<double>> rows(N, std::vector<double>(C));
  for (int n = 0; n < N; ++n) {
    const double* row = logits.values().data() + static_cast<size_t>(n) * C;
    double mx = row[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp((row[c] - mx) / temperature);
    for (int c = 0; c < C; ++c)
      rows[n][c] = std::exp((row[c] - mx) / temperature) / z;
  }
  return rows;
}

Tensor soft_cross_entropy(Tensor logits,
                          const std::vector<std::vector<double>>& targets,
                          double temperature) {
  require(logits.defined() && logits.rank() == 2,
          "soft_cross_entropy: logits must be (N, C)");
  if (temperature <= 0.0)
    throw InvalidSpecError("softmax temperature must be > 0");
  const int N = logits.dim(0), C = logits.dim(1);
  require(static_cast<int>(targets.size()) == N,
          "soft_cross_entropy: target count != batch size");
  for (const auto& t : targets)
    require(static_cast<int>(t.size()) == C,
            "soft_cross_entropy: target width != class count");
  std::vector<double> probs(static_cast<size_t>(N) * C);
  std::vector<double> tmass(N);
  double loss = 0.0;
  for (int n = 0; n < N; ++n) {
    const double* row = logits.values().data() + static_cast<size_t>(n) * C;
    double mx = row[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp((row[c] - mx) / temperature);
    const double logz = std::log(z);
    for (int c = 0; c < C; ++c) {
      const double logp = (row[c] - mx) / temperature - logz;
      probs[static_cast<size_t>(n) * C + c] = std::exp(logp);
      loss -= targets[n][c] * logp;
      tmass[n] += targets[n][c];
    }
  }
  loss /= static_cast<double>(N);
  Tensor out = Tensor::scalar(loss);
  maybe_record([logits, out, probs = std::move(probs),
                tmass = std::move(tmass), targets, temperature]() mutable {
    const int N = logits.dim(0), C = logits.dim(1);
    const double g = out.grad()[0] / (static_cast<double>(N) * temperature);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        logits.grad()[n * C + c] +=
            g * (tmass[n] * probs[static_cast<size_t>(n) * C + c] -
                 targets[n][c]);
  });
  return out;
}

}  // namespace cognisnn
