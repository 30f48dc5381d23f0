#include "envopt/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace envopt::ad {

int Tape::numel(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

Var Tape::push(std::vector<double> val, std::vector<int> shape,
               std::function<void(Tape&)> back) {
  if ((int)val.size() != numel(shape)) throw std::invalid_argument("tape: shape mismatch");
  Node n;
  n.grad.assign(val.size(), 0.0);
  n.val = std::move(val);
  n.shape = std::move(shape);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return (int)nodes_.size() - 1;
}

Var Tape::leaf(std::vector<double> data, std::vector<int> shape) {
  return push(std::move(data), std::move(shape), {});
}

Var Tape::matmul(Var a, Var b) {
  const auto sa = shape(a);
  const auto sb = shape(b);
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    throw std::invalid_argument("matmul: bad shapes");
  const int m = sa[0], k = sa[1], n = sb[1];
  std::vector<double> out((size_t)m * n, 0.0);
  {
    const auto& A = val(a);
    const auto& B = val(b);
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        for (int j = 0; j < n; ++j) out[i * n + j] += av * B[p * n + j];
      }
  }
  const Var o = push(std::move(out), {m, n}, {});
  nodes_[o].back = [o, a, b, m, k, n](Tape& t) {
    const auto& g = t.grad(o);
    const auto& A = t.val(a);
    const auto& B = t.val(b);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    // dA = g * B^T, dB = A^T * g
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double gv = g[i * n + j];
        if (gv == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          ga[i * k + p] += gv * B[p * n + j];
          gb[p * n + j] += gv * A[i * k + p];
        }
      }
  };
  return o;
}

Var Tape::add(Var a, Var b) {
  if (shape(a) != shape(b)) throw std::invalid_argument("add: shape mismatch");
  std::vector<double> out(val(a));
  {
    const auto& B = val(b);
    for (size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  }
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a, b](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return o;
}

Var Tape::add_rowvec(Var a, Var bias) {
  const auto sa = shape(a);
  const auto sbv = shape(bias);
  if (sa.size() != 2 || (int)val(bias).size() != sa[1])
    throw std::invalid_argument("add_rowvec: bad shapes");
  (void)sbv;
  const int m = sa[0], n = sa[1];
  std::vector<double> out(val(a));
  {
    const auto& B = val(bias);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] += B[j];
  }
  const Var o = push(std::move(out), sa, {});
  nodes_[o].back = [o, a, bias, m, n](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(bias);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j];
        gb[j] += g[i * n + j];
      }
  };
  return o;
}

Var Tape::sub(Var a, Var b) {
  if (shape(a) != shape(b)) throw std::invalid_argument("sub: shape mismatch");
  std::vector<double> out(val(a));
  {
    const auto& B = val(b);
    for (size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  }
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a, b](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return o;
}

Var Tape::mul(Var a, Var b) {
  if (shape(a) != shape(b)) throw std::invalid_argument("mul: shape mismatch");
  std::vector<double> out(val(a));
  {
    const auto& B = val(b);
    for (size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  }
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a, b](Tape& t) {
    const auto& g = t.grad(o);
    const auto& A = t.val(a);
    const auto& B = t.val(b);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * B[i];
      gb[i] += g[i] * A[i];
    }
  };
  return o;
}

Var Tape::scale(Var a, double s) {
  std::vector<double> out(val(a));
  for (auto& v : out) v *= s;
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a, s](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  };
  return o;
}

Var Tape::tanh_(Var a) {
  std::vector<double> out(val(a));
  for (auto& v : out) v = std::tanh(v);
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a](Tape& t) {
    const auto& g = t.grad(o);
    const auto& y = t.val(o);
    auto& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  };
  return o;
}

Var Tape::exp_(Var a) {
  std::vector<double> out(val(a));
  for (auto& v : out) v = std::exp(v);
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a](Tape& t) {
    const auto& g = t.grad(o);
    const auto& y = t.val(o);
    auto& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  };
  return o;
}

Var Tape::square(Var a) {
  std::vector<double> out(val(a));
  for (auto& v : out) v *= v;
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a](Tape& t) {
    const auto& g = t.grad(o);
    const auto& x = t.val(a);
    auto& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * x[i];
  };
  return o;
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : val(a)) s += v;
  const Var o = push({s}, {1}, {});
  nodes_[o].back = [o, a](Tape& t) {
    const double g = t.grad(o)[0];
    auto& ga = t.grad_mut(a);
    for (auto& v : ga) v += g;
  };
  return o;
}

Var Tape::mean(Var a) {
  const double n = (double)val(a).size();
  return scale(sum(a), 1.0 / n);
}

Var Tape::concat_cols(Var a, Var b) {
  const auto sa = shape(a);
  const auto sb = shape(b);
  if (sa.size() != 2 || sb.size() != 2 || sa[0] != sb[0])
    throw std::invalid_argument("concat_cols: bad shapes");
  const int m = sa[0], p = sa[1], q = sb[1];
  std::vector<double> out((size_t)m * (p + q));
  {
    const auto& A = val(a);
    const auto& B = val(b);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < p; ++j) out[i * (p + q) + j] = A[i * p + j];
      for (int j = 0; j < q; ++j) out[i * (p + q) + p + j] = B[i * q + j];
    }
  }
  const Var o = push(std::move(out), {m, p + q}, {});
  nodes_[o].back = [o, a, b, m, p, q](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
      for (int j = 0; j < q; ++j) gb[i * q + j] += g[i * (p + q) + p + j];
    }
  };
  return o;
}

Var Tape::sum_rows(Var a) {
  const auto sa = shape(a);
  if (sa.size() != 2) throw std::invalid_argument("sum_rows: need matrix");
  const int m = sa[0], n = sa[1];
  std::vector<double> out((size_t)n, 0.0);
  {
    const auto& A = val(a);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out[j] += A[i * n + j];
  }
  const Var o = push(std::move(out), {1, n}, {});
  nodes_[o].back = [o, a, m, n](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga[i * n + j] += g[j];
  };
  return o;
}

Var Tape::scatter_sum_rows(Var a, std::vector<int> dst, int out_rows) {
  const auto sa = shape(a);
  if (sa.size() != 2 || (int)dst.size() != sa[0])
    throw std::invalid_argument("scatter_sum_rows: bad shapes");
  const int e = sa[0], n = sa[1];
  std::vector<double> out((size_t)out_rows * n, 0.0);
  {
    const auto& A = val(a);
    for (int i = 0; i < e; ++i)
      for (int j = 0; j < n; ++j) out[dst[i] * n + j] += A[i * n + j];
  }
  const Var o = push(std::move(out), {out_rows, n}, {});
  nodes_[o].back = [o, a, dst = std::move(dst), e, n](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    for (int i = 0; i < e; ++i)
      for (int j = 0; j < n; ++j) ga[i * n + j] += g[dst[i] * n + j];
  };
  return o;
}

Var Tape::pick(Var a, int index) {
  if (index < 0 || index >= (int)val(a).size()) throw std::out_of_range("pick: index");
  const Var o = push({val(a)[index]}, {1}, {});
  nodes_[o].back = [o, a, index](Tape& t) { t.grad_mut(a)[index] += t.grad(o)[0]; };
  return o;
}

Var Tape::log_softmax(Var a) {
  const auto& x = val(a);
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(x);
  for (auto& v : out) v -= lse;
  const Var o = push(std::move(out), shape(a), {});
  nodes_[o].back = [o, a](Tape& t) {
    const auto& g = t.grad(o);
    const auto& y = t.val(o);
    auto& ga = t.grad_mut(a);
    double gsum = 0.0;
    for (double v : g) gsum += v;
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * gsum;
  };
  return o;
}

Var Tape::conv2d(Var x, Var w, Var b) {
  const auto sx = shape(x);
  const auto sw = shape(w);
  if (sx.size() != 3 || sw.size() != 4 || sx[0] != sw[1])
    throw std::invalid_argument("conv2d: bad shapes");
  const int C = sx[0], H = sx[1], W = sx[2];
  const int O = sw[0], kh = sw[2], kw = sw[3];
  const int Ho = H - kh + 1, Wo = W - kw + 1;
  if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: kernel larger than input");
  if ((int)val(b).size() != O) throw std::invalid_argument("conv2d: bias size");
  std::vector<double> out((size_t)O * Ho * Wo, 0.0);
  {
    const auto& X = val(x);
    const auto& Wt = val(w);
    const auto& B = val(b);
    for (int o = 0; o < O; ++o)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          double acc = B[o];
          for (int c = 0; c < C; ++c)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v)
                acc += Wt[((o * C + c) * kh + u) * kw + v] * X[(c * H + i + u) * W + j + v];
          out[(o * Ho + i) * Wo + j] = acc;
        }
  }
  const Var ov = push(std::move(out), {O, Ho, Wo}, {});
  nodes_[ov].back = [ov, x, w, b, C, H, W, O, kh, kw, Ho, Wo](Tape& t) {
    const auto& g = t.grad(ov);
    const auto& X = t.val(x);
    const auto& Wt = t.val(w);
    auto& gx = t.grad_mut(x);
    auto& gw = t.grad_mut(w);
    auto& gb = t.grad_mut(b);
    for (int o = 0; o < O; ++o)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          const double gv = g[(o * Ho + i) * Wo + j];
          if (gv == 0.0) continue;
          gb[o] += gv;
          for (int c = 0; c < C; ++c)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                gw[((o * C + c) * kh + u) * kw + v] += gv * X[(c * H + i + u) * W + j + v];
                gx[(c * H + i + u) * W + j + v] += gv * Wt[((o * C + c) * kh + u) * kw + v];
              }
        }
  };
  return ov;
}

Var Tape::reshape(Var a, std::vector<int> new_shape) {
  if (numel(new_shape) != (int)val(a).size()) throw std::invalid_argument("reshape: size");
  const Var o = push(val(a), std::move(new_shape), {});
  nodes_[o].back = [o, a](Tape& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  };
  return o;
}

void Tape::backward(Var root) {
  if (val(root).size() != 1) throw std::invalid_argument("backward: root not scalar");
  nodes_[root].grad[0] += 1.0;
  for (int i = root; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

}  // namespace envopt::ad
