#include "vtreid/tensor/ops.hpp"

#include <algorithm>
#include <cmath>

#include "vtreid/core/error.hpp"
#include "vtreid/simd/kernels.hpp"

namespace vtreid::tensor {

using simd::Trans;

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

Node* parent(Node& self, std::size_t i) { return self.parents[i].get(); }

bool wants(Node* p) { return p != nullptr && p->requires_grad; }

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  Tensor out(a.shape());
  const auto& in = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make_result(std::move(out), {a}, [deriv](Node& self) {
    Node* pa = parent(self, 0);
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv(pa->value[i], self.value[i]);
    }
  });
}

void im2col(const double* x, int channels, int height, int width, int k, int stride, int pad,
            int out_h, int out_w, double* col) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* dst = col + (static_cast<std::size_t>(c * k + ki) * k + kj) * plane;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + ki;
          double* row = dst + static_cast<std::size_t>(oh) * out_w;
          if (ih < 0 || ih >= height) {
            std::fill(row, row + out_w, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::size_t>(c) * height + ih) * width;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kj;
            row[ow] = (iw >= 0 && iw < width) ? src[iw] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, int channels, int height, int width, int k, int stride,
                int pad, int out_h, int out_w, double* x) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const double* src = col + (static_cast<std::size_t>(c * k + ki) * k + kj) * plane;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= height) continue;
          double* dst = x + (static_cast<std::size_t>(c) * height + ih) * width;
          const double* row = src + static_cast<std::size_t>(oh) * out_w;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < width) dst[iw] += row[ow];
          }
        }
      }
    }
  }
}

void add_bias_planes(double* out, const double* bias, int channels, std::size_t plane) {
  for (int c = 0; c < channels; ++c) {
    double* p = out + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bias[c];
  }
}

void accumulate_bias_grad(const double* dout, double* dbias, int channels, std::size_t plane) {
  const auto& k = simd::active();
  for (int c = 0; c < channels; ++c) dbias[c] += k.sum(dout + static_cast<std::size_t>(c) * plane, plane);
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node* pa = parent(self, p);
      if (!wants(pa)) continue;
      simd::active().axpy(1.0, self.grad.data(), pa->ensure_grad().data(), self.grad.size());
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    if (Node* pa = parent(self, 0); wants(pa)) {
      simd::active().axpy(1.0, self.grad.data(), pa->ensure_grad().data(), self.grad.size());
    }
    if (Node* pb = parent(self, 1); wants(pb)) {
      simd::active().axpy(-1.0, self.grad.data(), pb->ensure_grad().data(), self.grad.size());
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node* pa = parent(self, 0);
    Node* pb = parent(self, 1);
    if (wants(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (wants(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  return make_result(std::move(out), {a}, [s](Node& self) {
    simd::active().axpy(s, self.grad.data(), parent(self, 0)->ensure_grad().data(), self.grad.size());
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + s;
  return make_result(std::move(out), {a}, [](Node& self) {
    simd::active().axpy(1.0, self.grad.data(), parent(self, 0)->ensure_grad().data(), self.grad.size());
  });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var abs(const Var& a) {
  return unary(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(const Var& a) {
  Tensor out(Shape{1});
  out[0] = simd::active().sum(a.value().data(), a.size());
  return make_result(std::move(out), {a}, [](Node& self) {
    auto& g = parent(self, 0)->ensure_grad();
    const double s = self.grad[0];
    for (auto& v : g.values()) v += s;
  });
}

Var mean(const Var& a) {
  if (a.size() == 0) throw ContractError("mean of empty tensor");
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out(Shape{1});
  out[0] = simd::active().sum(a.value().data(), a.size()) * inv;
  return make_result(std::move(out), {a}, [inv](Node& self) {
    auto& g = parent(self, 0)->ensure_grad();
    const double s = self.grad[0] * inv;
    for (auto& v : g.values()) v += s;
  });
}

Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) throw ShapeError("weighted_sum: size mismatch");
  Tensor out(Shape{1});
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) acc += weights[i] * terms[i].item();
  out[0] = acc;
  std::vector<double> w(weights.begin(), weights.end());
  return make_result(std::move(out), std::vector<Var>(terms.begin(), terms.end()),
                     [w](Node& self) {
                       for (std::size_t i = 0; i < w.size(); ++i) {
                         Node* p = parent(self, i);
                         if (wants(p)) p->ensure_grad()[0] += w[i] * self.grad[0];
                       }
                     });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_result(std::move(out), {a}, [](Node& self) {
    simd::active().axpy(1.0, self.grad.data(), parent(self, 0)->ensure_grad().data(), self.grad.size());
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int o = w.dim(0), k = w.dim(2);
  if (w.dim(1) != c || w.dim(3) != k) {
    throw ShapeError("conv2d: weight " + shape_string(w.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  }
  if (b.defined() && (b.shape().size() != 1 || b.dim(0) != o)) throw ShapeError("conv2d: bias shape");
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: bad stride/pad");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  if (h + 2 * pad < k || wd + 2 * pad < k || oh <= 0 || ow <= 0) {
    throw ShapeError("conv2d: kernel larger than padded input " + shape_string(x.shape()));
  }
  const int ckk = c * k * k;
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  const std::size_t in_plane = static_cast<std::size_t>(c) * h * wd;
  Tensor out(Shape{n, o, oh, ow});
  std::vector<double> col(static_cast<std::size_t>(ckk) * plane);
  for (int s = 0; s < n; ++s) {
    im2col(x.value().data() + s * in_plane, c, h, wd, k, stride, pad, oh, ow, col.data());
    double* dst = out.data() + static_cast<std::size_t>(s) * o * plane;
    simd::gemm(Trans::no, Trans::no, o, static_cast<int>(plane), ckk, w.value().data(), ckk,
               col.data(), static_cast<int>(plane), 0.0, dst, static_cast<int>(plane));
    if (b.defined()) add_bias_planes(dst, b.value().data(), o, plane);
  }
  return make_result(std::move(out), {x, w, b}, [=](Node& self) {
    Node* px = parent(self, 0);
    Node* pw = parent(self, 1);
    Node* pb = parent(self, 2);
    std::vector<double> buf(static_cast<std::size_t>(ckk) * plane);
    for (int s = 0; s < n; ++s) {
      const double* dout = self.grad.data() + static_cast<std::size_t>(s) * o * plane;
      if (wants(pw)) {
        im2col(px->value.data() + s * in_plane, c, h, wd, k, stride, pad, oh, ow, buf.data());
        simd::gemm(Trans::no, Trans::yes, o, ckk, static_cast<int>(plane), dout,
                   static_cast<int>(plane), buf.data(), static_cast<int>(plane), 1.0,
                   pw->ensure_grad().data(), ckk);
      }
      if (wants(px)) {
        simd::gemm(Trans::yes, Trans::no, ckk, static_cast<int>(plane), o, pw->value.data(), ckk,
                   dout, static_cast<int>(plane), 0.0, buf.data(), static_cast<int>(plane));
        col2im_add(buf.data(), c, h, wd, k, stride, pad, oh, ow,
                   px->ensure_grad().data() + s * in_plane);
      }
      if (wants(pb)) accumulate_bias_grad(dout, pb->ensure_grad().data(), o, plane);
    }
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
                     int output_pad) {
  require_rank(x, 4, "conv_transpose2d input");
  require_rank(w, 4, "conv_transpose2d weight");
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int o = w.dim(1), k = w.dim(2);
  if (w.dim(0) != ci || w.dim(3) != k) {
    throw ShapeError("conv_transpose2d: weight " + shape_string(w.shape()) +
                     " incompatible with input " + shape_string(x.shape()));
  }
  if (b.defined() && (b.shape().size() != 1 || b.dim(0) != o)) {
    throw ShapeError("conv_transpose2d: bias shape");
  }
  if (output_pad < 0 || output_pad >= stride) throw ShapeError("conv_transpose2d: output_pad");
  const int oh = (h - 1) * stride - 2 * pad + k + output_pad;
  const int ow = (wd - 1) * stride - 2 * pad + k + output_pad;
  if (oh <= 0 || ow <= 0) throw ShapeError("conv_transpose2d: empty output");
  const int okk = o * k * k;
  const std::size_t in_plane = static_cast<std::size_t>(h) * wd;
  const std::size_t out_size = static_cast<std::size_t>(o) * oh * ow;
  Tensor out(Shape{n, o, oh, ow});
  std::vector<double> col(static_cast<std::size_t>(okk) * in_plane);
  for (int s = 0; s < n; ++s) {
    simd::gemm(Trans::yes, Trans::no, okk, static_cast<int>(in_plane), ci, w.value().data(), okk,
               x.value().data() + s * ci * in_plane, static_cast<int>(in_plane), 0.0, col.data(),
               static_cast<int>(in_plane));
    double* dst = out.data() + s * out_size;
    col2im_add(col.data(), o, oh, ow, k, stride, pad, h, wd, dst);
    if (b.defined()) add_bias_planes(dst, b.value().data(), o, static_cast<std::size_t>(oh) * ow);
  }
  return make_result(std::move(out), {x, w, b}, [=](Node& self) {
    Node* px = parent(self, 0);
    Node* pw = parent(self, 1);
    Node* pb = parent(self, 2);
    std::vector<double> dcol(static_cast<std::size_t>(okk) * in_plane);
    for (int s = 0; s < n; ++s) {
      const double* dout = self.grad.data() + s * out_size;
      if (wants(px) || wants(pw)) {
        im2col(dout, o, oh, ow, k, stride, pad, h, wd, dcol.data());
      }
      if (wants(px)) {
        simd::gemm(Trans::no, Trans::no, ci, static_cast<int>(in_plane), okk, pw->value.data(),
                   okk, dcol.data(), static_cast<int>(in_plane), 1.0,
                   px->ensure_grad().data() + s * ci * in_plane, static_cast<int>(in_plane));
      }
      if (wants(pw)) {
        simd::gemm(Trans::no, Trans::yes, ci, okk, static_cast<int>(in_plane),
                   px->value.data() + s * ci * in_plane, static_cast<int>(in_plane), dcol.data(),
                   static_cast<int>(in_plane), 1.0, pw->ensure_grad().data(), okk);
      }
      if (wants(pb)) {
        accumulate_bias_grad(dout, pb->ensure_grad().data(), o, static_cast<std::size_t>(oh) * ow);
      }
    }
  });
}

Var instance_norm(const Var& x, double eps) {
  require_rank(x, 4, "instance_norm");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (plane == 0) throw ShapeError("instance_norm: empty spatial extent");
  Tensor out(x.shape());
  std::vector<double> inv_std(static_cast<std::size_t>(n) * c);
  const auto& kern = simd::active();
  for (std::size_t q = 0; q < inv_std.size(); ++q) {
    const double* src = x.value().data() + q * plane;
    double* dst = out.data() + q * plane;
    const double mu = kern.sum(src, plane) / static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) var += (src[i] - mu) * (src[i] - mu);
    var /= static_cast<double>(plane);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[q] = is;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = (src[i] - mu) * is;
  }
  return make_result(std::move(out), {x}, [inv_std, plane](Node& self) {
    Node* px = parent(self, 0);
    auto& g = px->ensure_grad();
    const auto& kern = simd::active();
    const double inv_m = 1.0 / static_cast<double>(plane);
    for (std::size_t q = 0; q < inv_std.size(); ++q) {
      const double* dy = self.grad.data() + q * plane;
      const double* y = self.value.data() + q * plane;
      double* dx = g.data() + q * plane;
      const double mean_dy = kern.sum(dy, plane) * inv_m;
      const double mean_dy_y = kern.dot(dy, y, plane) * inv_m;
      for (std::size_t i = 0; i < plane; ++i) {
        dx[i] += inv_std[q] * (dy[i] - mean_dy - y[i] * mean_dy_y);
      }
    }
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank(p, 4, "concat_channels");
  const int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  int total = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w) {
      throw ShapeError("concat_channels: mismatched " + shape_string(p.shape()) + " vs " +
                       shape_string(parts[0].shape()));
    }
    total += p.dim(1);
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  Tensor out(Shape{n, total, h, w});
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const int c = p.dim(1);
    for (int s = 0; s < n; ++s) {
      std::copy_n(p.value().data() + static_cast<std::size_t>(s) * c * plane, c * plane,
                  out.data() + (static_cast<std::size_t>(s) * total + off) * plane);
    }
    off += c;
  }
  return make_result(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                     [offsets, n, total, plane](Node& self) {
                       for (std::size_t i = 0; i < offsets.size(); ++i) {
                         Node* p = parent(self, i);
                         if (!wants(p)) continue;
                         const int c = p->value.dim(1);
                         auto& g = p->ensure_grad();
                         for (int s = 0; s < n; ++s) {
                           simd::active().axpy(
                               1.0, self.grad.data() + (static_cast<std::size_t>(s) * total + offsets[i]) * plane,
                               g.data() + static_cast<std::size_t>(s) * c * plane, c * plane);
                         }
                       }
                     });
}

Var mul_channel_broadcast(const Var& x, const Var& m) {
  require_rank(x, 4, "mul_channel_broadcast");
  require_rank(m, 4, "mul_channel_broadcast mask");
  if (m.dim(0) != x.dim(0) || m.dim(1) != 1 || m.dim(2) != x.dim(2) || m.dim(3) != x.dim(3)) {
    throw ShapeError("mask " + shape_string(m.shape()) + " does not match features " +
                     shape_string(x.shape()));
  }
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor out(x.shape());
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i)
        out[(static_cast<std::size_t>(s) * c + ch) * plane + i] =
            x.value()[(static_cast<std::size_t>(s) * c + ch) * plane + i] * m.value()[s * plane + i];
  return make_result(std::move(out), {x, m}, [n, c, plane](Node& self) {
    Node* px = parent(self, 0);
    Node* pm = parent(self, 1);
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t base = (static_cast<std::size_t>(s) * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double dy = self.grad[base + i];
          if (wants(px)) px->ensure_grad()[base + i] += dy * pm->value[s * plane + i];
          if (wants(pm)) pm->ensure_grad()[s * plane + i] += dy * px->value[base + i];
        }
      }
    }
  });
}

Var slice_batch(const Var& x, int begin, int end) {
  if (x.shape().empty() || begin < 0 || end > x.dim(0) || begin >= end) {
    throw ShapeError("slice_batch: bad range for " + shape_string(x.shape()));
  }
  Shape shape = x.shape();
  const std::size_t row = x.size() / static_cast<std::size_t>(shape[0]);
  shape[0] = end - begin;
  Tensor out(shape);
  std::copy_n(x.value().data() + begin * row, out.size(), out.data());
  return make_result(std::move(out), {x}, [begin, row](Node& self) {
    simd::active().axpy(1.0, self.grad.data(), parent(self, 0)->ensure_grad().data() + begin * row,
                        self.grad.size());
  });
}

Var concat_batch(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_batch: no inputs");
  Shape shape = parts[0].shape();
  int rows = 0;
  for (const auto& p : parts) {
    Shape a = p.shape();
    if (a.size() != shape.size() || !std::equal(a.begin() + 1, a.end(), shape.begin() + 1)) {
      throw ShapeError("concat_batch: mismatched " + shape_string(a));
    }
    rows += a[0];
  }
  shape[0] = rows;
  Tensor out(shape);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.size(), out.data() + off);
    off += p.size();
  }
  return make_result(std::move(out), std::vector<Var>(parts.begin(), parts.end()), [](Node& self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      Node* p = parent(self, i);
      const std::size_t sz = p->value.size();
      if (wants(p)) simd::active().axpy(1.0, self.grad.data() + off, p->ensure_grad().data(), sz);
      off += sz;
    }
  });
}

Var gram(const Var& x) {
  require_rank(x, 4, "gram");
  const int n = x.dim(0), c = x.dim(1);
  const int m = x.dim(2) * x.dim(3);
  if (n == 0 || c == 0 || m == 0) throw ContractError("gram of empty feature map");
  Tensor out(Shape{n, c, c});
  for (int s = 0; s < n; ++s) {
    const double* f = x.value().data() + static_cast<std::size_t>(s) * c * m;
    simd::gemm(Trans::no, Trans::yes, c, c, m, f, m, f, m, 0.0,
               out.data() + static_cast<std::size_t>(s) * c * c, c);
  }
  return make_result(std::move(out), {x}, [n, c, m](Node& self) {
    Node* px = parent(self, 0);
    auto& g = px->ensure_grad();
    std::vector<double> sym(static_cast<std::size_t>(c) * c);
    for (int s = 0; s < n; ++s) {
      const double* dg = self.grad.data() + static_cast<std::size_t>(s) * c * c;
      for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) sym[i * c + j] = dg[i * c + j] + dg[j * c + i];
      const std::size_t off = static_cast<std::size_t>(s) * c * m;
      simd::gemm(Trans::no, Trans::no, c, m, c, sym.data(), c, px->value.data() + off, m, 1.0,
                 g.data() + off, m);
    }
  });
}

Var global_avg_pool(const Var& x) {
  require_rank(x, 4, "global_avg_pool");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (plane == 0) throw ShapeError("global_avg_pool: empty map");
  const double inv = 1.0 / static_cast<double>(plane);
  Tensor out(Shape{n, c});
  for (std::size_t q = 0; q < out.size(); ++q) {
    out[q] = simd::active().sum(x.value().data() + q * plane, plane) * inv;
  }
  return make_result(std::move(out), {x}, [plane, inv](Node& self) {
    auto& g = parent(self, 0)->ensure_grad();
    for (std::size_t q = 0; q < self.grad.size(); ++q) {
      const double v = self.grad[q] * inv;
      for (std::size_t i = 0; i < plane; ++i) g[q * plane + i] += v;
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require_rank(x, 2, "linear input");
  require_rank(w, 2, "linear weight");
  const int n = x.dim(0), d = x.dim(1), o = w.dim(0);
  if (w.dim(1) != d) {
    throw ShapeError("linear: weight " + shape_string(w.shape()) + " vs input " + shape_string(x.shape()));
  }
  if (b.defined() && (b.shape().size() != 1 || b.dim(0) != o)) throw ShapeError("linear: bias shape");
  Tensor out(Shape{n, o});
  simd::gemm(Trans::no, Trans::yes, n, o, d, x.value().data(), d, w.value().data(), d, 0.0,
             out.data(), o);
  if (b.defined()) {
    for (int s = 0; s < n; ++s)
      for (int j = 0; j < o; ++j) out[static_cast<std::size_t>(s) * o + j] += b.value()[j];
  }
  return make_result(std::move(out), {x, w, b}, [n, d, o](Node& self) {
    Node* px = parent(self, 0);
    Node* pw = parent(self, 1);
    Node* pb = parent(self, 2);
    if (wants(px)) {
      simd::gemm(Trans::no, Trans::no, n, d, o, self.grad.data(), o, pw->value.data(), d, 1.0,
                 px->ensure_grad().data(), d);
    }
    if (wants(pw)) {
      simd::gemm(Trans::yes, Trans::no, o, d, n, self.grad.data(), o, px->value.data(), d, 1.0,
                 pw->ensure_grad().data(), d);
    }
    if (wants(pb)) {
      auto& g = pb->ensure_grad();
      for (int s = 0; s < n; ++s)
        for (int j = 0; j < o; ++j) g[j] += self.grad[static_cast<std::size_t>(s) * o + j];
    }
  });
}

Var softmax_rows(const Var& x) {
  require_rank(x, 2, "softmax_rows");
  const int n = x.dim(0), d = x.dim(1);
  if (d == 0) throw ShapeError("softmax_rows: zero width");
  Tensor out(x.shape());
  for (int s = 0; s < n; ++s) {
    const double* z = x.value().data() + static_cast<std::size_t>(s) * d;
    double* y = out.data() + static_cast<std::size_t>(s) * d;
    const double mx = *std::max_element(z, z + d);
    double total = 0.0;
    for (int j = 0; j < d; ++j) total += (y[j] = std::exp(z[j] - mx));
    for (int j = 0; j < d; ++j) y[j] /= total;
  }
  return make_result(std::move(out), {x}, [n, d](Node& self) {
    auto& g = parent(self, 0)->ensure_grad();
    for (int s = 0; s < n; ++s) {
      const std::size_t off = static_cast<std::size_t>(s) * d;
      const double* y = self.value.data() + off;
      const double* dy = self.grad.data() + off;
      double inner = 0.0;
      for (int j = 0; j < d; ++j) inner += dy[j] * y[j];
      for (int j = 0; j < d; ++j) g[off + j] += y[j] * (dy[j] - inner);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int n = parts[0].dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape().empty() || p.dim(0) != n) throw ShapeError("concat_cols: row count mismatch");
    widths.push_back(p.size() / static_cast<std::size_t>(n));
    total += widths.back();
  }
  Tensor out(Shape{n, static_cast<int>(total)});
  std::size_t off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (int s = 0; s < n; ++s) {
      std::copy_n(parts[i].value().data() + s * widths[i], widths[i], out.data() + s * total + off);
    }
    off += widths[i];
  }
  return make_result(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                     [widths, total, n](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t i = 0; i < widths.size(); ++i) {
                         Node* p = parent(self, i);
                         if (wants(p)) {
                           auto& g = p->ensure_grad();
                           for (int s = 0; s < n; ++s) {
                             simd::active().axpy(1.0, self.grad.data() + s * total + off,
                                                 g.data() + s * widths[i], widths[i]);
                           }
                         }
                         off += widths[i];
                       }
                     });
}

Var cross_entropy(const Var& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("cross_entropy: label count");
  if (n == 0) throw ContractError("cross_entropy: empty batch");
  for (int l : labels) {
    if (l < 0 || l >= k) {
      throw ContractError("cross_entropy: label " + std::to_string(l) + " outside [0," +
                          std::to_string(k) + ")");
    }
  }
  Tensor probs(logits.shape());
  double loss = 0.0;
  for (int s = 0; s < n; ++s) {
    const double* z = logits.value().data() + static_cast<std::size_t>(s) * k;
    double* p = probs.data() + static_cast<std::size_t>(s) * k;
    const double mx = *std::max_element(z, z + k);
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += (p[j] = std::exp(z[j] - mx));
    for (int j = 0; j < k; ++j) p[j] /= total;
    loss += (mx + std::log(total)) - z[labels[s]];
  }
  Tensor out(Shape{1});
  out[0] = loss / n;
  std::vector<int> lab(labels.begin(), labels.end());
  return make_result(std::move(out), {logits}, [probs = std::move(probs), lab, n, k](Node& self) {
    auto& g = parent(self, 0)->ensure_grad();
    const double s = self.grad[0] / n;
    for (int r = 0; r < n; ++r) {
      for (int j = 0; j < k; ++j) {
        const std::size_t q = static_cast<std::size_t>(r) * k + j;
        g[q] += s * (probs[q] - (j == lab[r] ? 1.0 : 0.0));
      }
    }
  });
}

}  // namespace vtreid::tensor
