#include "calico/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace calico {
namespace {

std::shared_ptr<TensorNode> new_node(Shape shape) {
  auto node = std::make_shared<TensorNode>();
  int64_t n = shape_numel(shape);
  node->shape = std::move(shape);
  node->data = std::make_shared<std::vector<double>>(n, 0.0);
  return node;
}

void attach(const std::shared_ptr<TensorNode>& out,
            std::vector<Tensor> parents,
            std::function<void(TensorNode&)> backward) {
  bool needs = false;
  for (const Tensor& p : parents) needs = needs || p.requires_grad();
  if (!needs) return;
  out->requires_grad = true;
  out->parents.reserve(parents.size());
  for (const Tensor& p : parents) out->parents.push_back(p.ptr());
  out->backward_fn = std::move(backward);
}

// b broadcast over a: b.shape must equal a.shape, be a suffix of it, or be
// a scalar. Returns the modulus used to fold a's flat index onto b.
int64_t broadcast_span(const Shape& a, const Shape& b, const char* op) {
  if (shape_numel(b) == 1) return 1;
  if (b.size() > a.size()) {
    throw DimensionError(msg(op, ": cannot broadcast ", shape_str(b), " onto ", shape_str(a)));
  }
  size_t off = a.size() - b.size();
  int64_t span = 1;
  for (size_t i = 0; i < b.size(); ++i) {
    if (a[off + i] != b[i]) {
      throw DimensionError(msg(op, ": shape mismatch ", shape_str(a), " vs ", shape_str(b)));
    }
    span *= b[i];
  }
  return span;
}

Tensor binary_broadcast(const Tensor& a, const Tensor& b, const char* name,
                        double (*fwd)(double, double),
                        void (*bwd)(double x, double y, double g, double& dx, double& dy)) {
  int64_t span = broadcast_span(a.shape(), b.shape(), name);
  auto out = new_node(a.shape());
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = *out->data;
  for (size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i], bv[i % span]);
  attach(out, {a, b}, [a, b, span, bwd](TensorNode& self) {
    const auto& g = self.grad;
    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<double>* da = a.requires_grad() ? &a.ptr()->grad_buf() : nullptr;
    std::vector<double>* db = b.requires_grad() ? &b.ptr()->grad_buf() : nullptr;
    for (size_t i = 0; i < av.size(); ++i) {
      double dx = 0, dy = 0;
      bwd(av[i], bv[i % span], g[i], dx, dy);
      if (da) (*da)[i] += dx;
      if (db) (*db)[i % span] += dy;
    }
  });
  return Tensor::adopt(out, name);
}

Tensor unary(const Tensor& x, const char* name, double (*fwd)(double),
             double (*dydx_from_xy)(double x, double y)) {
  auto out = new_node(x.shape());
  const auto& xv = x.data();
  auto& ov = *out->data;
  for (size_t i = 0; i < xv.size(); ++i) ov[i] = fwd(xv[i]);
  attach(out, {x}, [x, dydx_from_xy](TensorNode& self) {
    auto& dx = x.ptr()->grad_buf();
    const auto& xv = x.data();
    const auto& yv = *self.data;
    const auto& g = self.grad;
    for (size_t i = 0; i < xv.size(); ++i) dx[i] += g[i] * dydx_from_xy(xv[i], yv[i]);
  });
  return Tensor::adopt(out, name);
}

// Decomposes a shape into [outer, n, inner] around `axis`.
void axis_split(const Shape& s, int64_t axis, int64_t& outer, int64_t& n, int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= s[i];
  n = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

int64_t normalize_axis(const Tensor& t, int64_t axis, const char* op) {
  int64_t r = t.rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw DimensionError(msg(op, ": axis out of range for ", shape_str(t.shape())));
  }
  return axis;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_broadcast(a, b, "add",
      [](double x, double y) { return x + y; },
      [](double, double, double g, double& dx, double& dy) { dx = g; dy = g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_broadcast(a, b, "sub",
      [](double x, double y) { return x - y; },
      [](double, double, double g, double& dx, double& dy) { dx = g; dy = -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_broadcast(a, b, "mul",
      [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& dx, double& dy) { dx = g * y; dy = g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_broadcast(a, b, "div",
      [](double x, double y) { return x / y; },
      [](double x, double y, double g, double& dx, double& dy) {
        dx = g / y;
        dy = -g * x / (y * y);
      });
}

Tensor scale(const Tensor& a, double c) {
  auto out = new_node(a.shape());
  const auto& av = a.data();
  auto& ov = *out->data;
  for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * c;
  attach(out, {a}, [a, c](TensorNode& self) {
    auto& da = a.ptr()->grad_buf();
    for (size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i] * c;
  });
  return Tensor::adopt(out, "scale");
}

Tensor add_const(const Tensor& a, double c) {
  auto out = new_node(a.shape());
  const auto& av = a.data();
  auto& ov = *out->data;
  for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + c;
  attach(out, {a}, [a](TensorNode& self) {
    auto& da = a.ptr()->grad_buf();
    for (size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i];
  });
  return Tensor::adopt(out, "add_const");
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw DimensionError(msg("matmul: operands must be rank >= 2, got ",
                             shape_str(sa), " and ", shape_str(sb)));
  }
  int64_t m = sa[sa.size() - 2], k = sa[sa.size() - 1];
  int64_t k2 = sb[sb.size() - 2], n = sb[sb.size() - 1];
  if (k != k2) {
    throw DimensionError(msg("matmul: inner extents differ, ", shape_str(sa),
                             " vs ", shape_str(sb)));
  }
  size_t rank = std::max(sa.size(), sb.size());
  Shape batch(rank - 2, 1);
  Shape abatch(rank - 2, 1), bbatch(rank - 2, 1);
  for (size_t i = 0; i + 2 < sa.size() + 0u; ++i) {
    abatch[rank - 2 - (sa.size() - 2) + i] = sa[i];
  }
  for (size_t i = 0; i + 2 < sb.size() + 0u; ++i) {
    bbatch[rank - 2 - (sb.size() - 2) + i] = sb[i];
  }
  for (size_t i = 0; i < rank - 2; ++i) {
    if (abatch[i] == bbatch[i] || bbatch[i] == 1) {
      batch[i] = abatch[i];
    } else if (abatch[i] == 1) {
      batch[i] = bbatch[i];
    } else {
      throw DimensionError(msg("matmul: batch dims incompatible, ", shape_str(sa),
                               " vs ", shape_str(sb)));
    }
  }
  Shape oshape = batch;
  oshape.push_back(m);
  oshape.push_back(n);
  int64_t nbatch = 1;
  for (int64_t d : batch) nbatch *= d;

  // Flat batch offsets honoring broadcast (stride 0 on broadcast dims).
  auto offsets = [&](const Shape& dims, int64_t mat) {
    std::vector<int64_t> offs(nbatch, 0);
    for (int64_t ob = 0; ob < nbatch; ++ob) {
      int64_t rem = ob, off = 0, stride = mat;
      for (int64_t i = static_cast<int64_t>(batch.size()) - 1; i >= 0; --i) {
        int64_t idx = rem % batch[i];
        rem /= batch[i];
        if (dims[i] != 1) off += idx * stride;
        stride *= dims[i] == 1 ? 1 : dims[i];
      }
      offs[ob] = off;
    }
    return offs;
  };
  std::vector<int64_t> aoffs = offsets(abatch, m * k);
  std::vector<int64_t> boffs = offsets(bbatch, k * n);

  auto out = new_node(oshape);
  {
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = out->data->data();
    for (int64_t ob = 0; ob < nbatch; ++ob) {
      const double* Ab = A + aoffs[ob];
      const double* Bb = B + boffs[ob];
      double* Cb = C + ob * m * n;
      for (int64_t i = 0; i < m; ++i) {
        double* Ci = Cb + i * n;
        for (int64_t kk = 0; kk < k; ++kk) {
          double aik = Ab[i * k + kk];
          const double* Bk = Bb + kk * n;
          for (int64_t j = 0; j < n; ++j) Ci[j] += aik * Bk[j];
        }
      }
    }
  }
  attach(out, {a, b}, [a, b, aoffs, boffs, m, k, n, nbatch](TensorNode& self) {
    const double* G = self.grad.data();
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* dA = a.requires_grad() ? a.ptr()->grad_buf().data() : nullptr;
    double* dB = b.requires_grad() ? b.ptr()->grad_buf().data() : nullptr;
    for (int64_t ob = 0; ob < nbatch; ++ob) {
      const double* Gb = G + ob * m * n;
      const double* Ab = A + aoffs[ob];
      const double* Bb = B + boffs[ob];
      if (dA) {
        double* dAb = dA + aoffs[ob];
        for (int64_t i = 0; i < m; ++i) {
          for (int64_t kk = 0; kk < k; ++kk) {
            const double* Gi = Gb + i * n;
            const double* Bk = Bb + kk * n;
            double acc = 0;
            for (int64_t j = 0; j < n; ++j) acc += Gi[j] * Bk[j];
            dAb[i * k + kk] += acc;
          }
        }
      }
      if (dB) {
        double* dBb = dB + boffs[ob];
        for (int64_t kk = 0; kk < k; ++kk) {
          for (int64_t i = 0; i < m; ++i) {
            double aik = Ab[i * k + kk];
            const double* Gi = Gb + i * n;
            double* dBk = dBb + kk * n;
            for (int64_t j = 0; j < n; ++j) dBk[j] += aik * Gi[j];
          }
        }
      }
    }
  });
  return Tensor::adopt(out, "matmul");
}

Tensor transpose_last2(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.size() < 2) throw DimensionError("transpose_last2: rank must be >= 2");
  Shape oshape = s;
  std::swap(oshape[s.size() - 1], oshape[s.size() - 2]);
  int64_t rows = s[s.size() - 2], cols = s[s.size() - 1];
  int64_t nbatch = shape_numel(s) / (rows * cols);
  auto out = new_node(oshape);
  const double* X = a.data().data();
  double* Y = out->data->data();
  for (int64_t ob = 0; ob < nbatch; ++ob) {
    const double* Xb = X + ob * rows * cols;
    double* Yb = Y + ob * rows * cols;
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) Yb[j * rows + i] = Xb[i * cols + j];
  }
  attach(out, {a}, [a, rows, cols, nbatch](TensorNode& self) {
    double* dX = a.ptr()->grad_buf().data();
    const double* G = self.grad.data();
    for (int64_t ob = 0; ob < nbatch; ++ob) {
      const double* Gb = G + ob * rows * cols;
      double* dXb = dX + ob * rows * cols;
      for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) dXb[i * cols + j] += Gb[j * rows + i];
    }
  });
  return Tensor::adopt(out, "transpose_last2");
}

Tensor softmax(const Tensor& x, int64_t axis) {
  axis = normalize_axis(x, axis, "softmax");
  int64_t outer, n, inner;
  axis_split(x.shape(), axis, outer, n, inner);
  if (n == 0) throw DimensionError("softmax: empty axis");
  auto out = new_node(x.shape());
  const double* X = x.data().data();
  double* Y = out->data->data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const double* xr = X + o * n * inner + in;
      double* yr = Y + o * n * inner + in;
      double mx = xr[0];
      for (int64_t i = 1; i < n; ++i) mx = std::max(mx, xr[i * inner]);
      double z = 0;
      for (int64_t i = 0; i < n; ++i) {
        double e = std::exp(xr[i * inner] - mx);
        yr[i * inner] = e;
        z += e;
      }
      for (int64_t i = 0; i < n; ++i) yr[i * inner] /= z;
    }
  }
  attach(out, {x}, [x, outer, n, inner](TensorNode& self) {
    double* dX = x.ptr()->grad_buf().data();
    const double* Y = self.data->data();
    const double* G = self.grad.data();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in = 0; in < inner; ++in) {
        const double* yr = Y + o * n * inner + in;
        const double* gr = G + o * n * inner + in;
        double* dxr = dX + o * n * inner + in;
        double dot = 0;
        for (int64_t i = 0; i < n; ++i) dot += yr[i * inner] * gr[i * inner];
        for (int64_t i = 0; i < n; ++i)
          dxr[i * inner] += yr[i * inner] * (gr[i * inner] - dot);
      }
    }
  });
  return Tensor::adopt(out, "softmax");
}

Tensor log_softmax(const Tensor& x, int64_t axis) {
  axis = normalize_axis(x, axis, "log_softmax");
  int64_t outer, n, inner;
  axis_split(x.shape(), axis, outer, n, inner);
  if (n == 0) throw DimensionError("log_softmax: empty axis");
  auto out = new_node(x.shape());
  const double* X = x.data().data();
  double* Y = out->data->data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const double* xr = X + o * n * inner + in;
      double* yr = Y + o * n * inner + in;
      double mx = xr[0];
      for (int64_t i = 1; i < n; ++i) mx = std::max(mx, xr[i * inner]);
      double z = 0;
      for (int64_t i = 0; i < n; ++i) z += std::exp(xr[i * inner] - mx);
      double lz = std::log(z) + mx;
      for (int64_t i = 0; i < n; ++i) yr[i * inner] = xr[i * inner] - lz;
    }
  }
  attach(out, {x}, [x, outer, n, inner](TensorNode& self) {
    double* dX = x.ptr()->grad_buf().data();
    const double* Y = self.data->data();
    const double* G = self.grad.data();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in = 0; in < inner; ++in) {
        const double* yr = Y + o * n * inner + in;
        const double* gr = G + o * n * inner + in;
        double* dxr = dX + o * n * inner + in;
        double gsum = 0;
        for (int64_t i = 0; i < n; ++i) gsum += gr[i * inner];
        for (int64_t i = 0; i < n; ++i)
          dxr[i * inner] += gr[i * inner] - std::exp(yr[i * inner]) * gsum;
      }
    }
  });
  return Tensor::adopt(out, "log_softmax");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const Shape& s = x.shape();
  int64_t d = s.back();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError(msg("layer_norm: gain/bias extents ", gain.numel(), "/",
                             bias.numel(), " vs last axis ", d));
  }
  int64_t rows = shape_numel(s) / d;
  auto out = new_node(s);
  const double* X = x.data().data();
  const double* Gn = gain.data().data();
  const double* B = bias.data().data();
  double* Y = out->data->data();
  std::vector<double> inv_std(rows), means(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = X + r * d;
    double mu = 0;
    for (int64_t i = 0; i < d; ++i) mu += xr[i];
    mu /= d;
    double var = 0;
    for (int64_t i = 0; i < d; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= d;
    double is = 1.0 / std::sqrt(var + eps);
    means[r] = mu;
    inv_std[r] = is;
    double* yr = Y + r * d;
    for (int64_t i = 0; i < d; ++i) yr[i] = Gn[i] * (xr[i] - mu) * is + B[i];
  }
  attach(out, {x, gain, bias},
         [x, gain, bias, rows, d, means, inv_std](TensorNode& self) {
    const double* X = x.data().data();
    const double* Gn = gain.data().data();
    const double* G = self.grad.data();
    double* dX = x.requires_grad() ? x.ptr()->grad_buf().data() : nullptr;
    double* dGn = gain.requires_grad() ? gain.ptr()->grad_buf().data() : nullptr;
    double* dB = bias.requires_grad() ? bias.ptr()->grad_buf().data() : nullptr;
    for (int64_t r = 0; r < rows; ++r) {
      const double* xr = X + r * d;
      const double* gr = G + r * d;
      double mu = means[r], is = inv_std[r];
      if (dGn || dB) {
        for (int64_t i = 0; i < d; ++i) {
          double xhat = (xr[i] - mu) * is;
          if (dGn) dGn[i] += gr[i] * xhat;
          if (dB) dB[i] += gr[i];
        }
      }
      if (dX) {
        // dL/dx via normalized-row identity:
        // dx = is * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
        double mean_dxh = 0, mean_dxh_xh = 0;
        for (int64_t i = 0; i < d; ++i) {
          double xhat = (xr[i] - mu) * is;
          double dxh = gr[i] * Gn[i];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xhat;
        }
        mean_dxh /= d;
        mean_dxh_xh /= d;
        double* dxr = dX + r * d;
        for (int64_t i = 0; i < d; ++i) {
          double xhat = (xr[i] - mu) * is;
          double dxh = gr[i] * Gn[i];
          dxr[i] += is * (dxh - mean_dxh - xhat * mean_dxh_xh);
        }
      }
    }
  });
  return Tensor::adopt(out, "layer_norm");
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, "sigmoid",
      [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
  return unary(x, "softplus",
      [](double v) { return v > 30 ? v : std::log1p(std::exp(std::min(v, 30.0))); },
      [](double v, double) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

Tensor exp(const Tensor& x) {
  return unary(x, "exp", [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(x, "log", [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary(x, "gelu",
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        return cdf + v * pdf;
      });
}

Tensor sum(const Tensor& x) {
  auto out = new_node({1});
  double acc = 0;
  for (double v : x.data()) acc += v;
  (*out->data)[0] = acc;
  attach(out, {x}, [x](TensorNode& self) {
    double g = self.grad[0];
    auto& dx = x.ptr()->grad_buf();
    for (double& d : dx) d += g;
  });
  return Tensor::adopt(out, "sum");
}

Tensor mean(const Tensor& x) {
  int64_t n = x.numel();
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError(msg("reshape: ", shape_str(x.shape()), " -> ",
                             shape_str(shape), " changes element count"));
  }
  auto out = new_node(std::move(shape));
  *out->data = x.data();
  attach(out, {x}, [x](TensorNode& self) {
    auto& dx = x.ptr()->grad_buf();
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
  });
  return Tensor::adopt(out, "reshape");
}

Tensor slice_rows(const Tensor& x, int64_t start, int64_t count) {
  const Shape& s = x.shape();
  if (s.empty()) throw DimensionError("slice_rows: rank-0 input");
  if (start < 0 || count < 1 || start + count > s[0]) {
    throw DimensionError(msg("slice_rows: [", start, ",", start + count,
                             ") out of range for ", shape_str(s)));
  }
  Shape oshape = s;
  oshape[0] = count;
  int64_t stride = shape_numel(s) / s[0];
  auto out = new_node(oshape);
  std::memcpy(out->data->data(), x.data().data() + start * stride,
              sizeof(double) * count * stride);
  attach(out, {x}, [x, start, stride, count](TensorNode& self) {
    double* dx = x.ptr()->grad_buf().data();
    const double* g = self.grad.data();
    for (int64_t i = 0; i < count * stride; ++i) dx[start * stride + i] += g[i];
  });
  return Tensor::adopt(out, "slice_rows");
}

Tensor index0(const Tensor& x, int64_t i) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw DimensionError("index0: rank must be >= 2");
  Tensor sl = slice_rows(x, i, 1);
  Shape oshape(s.begin() + 1, s.end());
  return reshape(sl, oshape);
}

Tensor concat0(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat0: empty input");
  Shape oshape = parts[0].shape();
  int64_t stride = shape_numel(oshape) / oshape[0];
  int64_t total = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != oshape.size() ||
        !std::equal(s.begin() + 1, s.end(), oshape.begin() + 1)) {
      throw DimensionError(msg("concat0: trailing dims differ, ", shape_str(s),
                               " vs ", shape_str(oshape)));
    }
    total += s[0];
  }
  oshape[0] = total;
  auto out = new_node(oshape);
  double* dst = out->data->data();
  for (const Tensor& p : parts) {
    std::memcpy(dst, p.data().data(), sizeof(double) * p.numel());
    dst += p.numel();
  }
  attach(out, parts, [parts](TensorNode& self) {
    const double* g = self.grad.data();
    for (const Tensor& p : parts) {
      if (p.requires_grad()) {
        double* dp = p.ptr()->grad_buf().data();
        for (int64_t i = 0; i < p.numel(); ++i) dp[i] += g[i];
      }
      g += p.numel();
    }
  });
  return Tensor::adopt(out, "concat0");
}

Tensor stack0(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("stack0: empty input");
  Shape item = parts[0].shape();
  std::vector<Tensor> reshaped;
  reshaped.reserve(parts.size());
  Shape flat = item;
  flat.insert(flat.begin(), 1);
  for (const Tensor& p : parts) {
    if (p.shape() != item) {
      throw DimensionError(msg("stack0: shapes differ, ", shape_str(p.shape()),
                               " vs ", shape_str(item)));
    }
    reshaped.push_back(reshape(p, flat));
  }
  return concat0(reshaped);
}

Tensor add_rows(const Tensor& x, const Tensor& delta, int64_t start) {
  const Shape& sx = x.shape();
  const Shape& sd = delta.shape();
  if (sx.size() != 2 || sd.size() != 2 || sx[1] != sd[1]) {
    throw DimensionError(msg("add_rows: need 2-D operands with equal width, got ",
                             shape_str(sx), " and ", shape_str(sd)));
  }
  if (start < 0 || start + sd[0] > sx[0]) {
    throw DimensionError(msg("add_rows: rows [", start, ",", start + sd[0],
                             ") out of range for ", shape_str(sx)));
  }
  int64_t d = sx[1];
  auto out = new_node(sx);
  *out->data = x.data();
  double* Y = out->data->data();
  const double* Dl = delta.data().data();
  for (int64_t i = 0; i < sd[0] * d; ++i) Y[start * d + i] += Dl[i];
  attach(out, {x, delta}, [x, delta, start, d](TensorNode& self) {
    const double* g = self.grad.data();
    if (x.requires_grad()) {
      double* dx = x.ptr()->grad_buf().data();
      for (int64_t i = 0; i < x.numel(); ++i) dx[i] += g[i];
    }
    if (delta.requires_grad()) {
      double* dd = delta.ptr()->grad_buf().data();
      for (int64_t i = 0; i < delta.numel(); ++i) dd[i] += g[start * d + i];
    }
  });
  return Tensor::adopt(out, "add_rows");
}

Tensor gather_rows(const Tensor& table, const std::vector<int64_t>& ids) {
  const Shape& s = table.shape();
  if (s.size() != 2) throw DimensionError("gather_rows: table must be 2-D");
  int64_t d = s[1];
  for (int64_t id : ids) {
    if (id < 0 || id >= s[0]) {
      throw DimensionError(msg("gather_rows: id ", id, " out of range for ", shape_str(s)));
    }
  }
  auto out = new_node({static_cast<int64_t>(ids.size()), d});
  double* Y = out->data->data();
  const double* T = table.data().data();
  for (size_t i = 0; i < ids.size(); ++i)
    std::memcpy(Y + i * d, T + ids[i] * d, sizeof(double) * d);
  attach(out, {table}, [table, ids, d](TensorNode& self) {
    double* dt = table.ptr()->grad_buf().data();
    const double* g = self.grad.data();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int64_t j = 0; j < d; ++j) dt[ids[i] * d + j] += g[i * d + j];
  });
  return Tensor::adopt(out, "gather_rows");
}

Tensor take_per_row(const Tensor& x, const std::vector<int64_t>& ids) {
  const Shape& s = x.shape();
  if (s.size() != 2) throw DimensionError("take_per_row: input must be 2-D");
  if (static_cast<int64_t>(ids.size()) != s[0]) {
    throw DimensionError(msg("take_per_row: ", ids.size(), " ids vs ", s[0], " rows"));
  }
  for (int64_t id : ids) {
    if (id < 0 || id >= s[1]) {
      throw DimensionError(msg("take_per_row: column ", id, " out of range for ", shape_str(s)));
    }
  }
  auto out = new_node({s[0]});
  const double* X = x.data().data();
  double* Y = out->data->data();
  for (int64_t i = 0; i < s[0]; ++i) Y[i] = X[i * s[1] + ids[i]];
  attach(out, {x}, [x, ids, cols = s[1]](TensorNode& self) {
    double* dx = x.ptr()->grad_buf().data();
    for (size_t i = 0; i < ids.size(); ++i) dx[i * cols + ids[i]] += self.grad[i];
  });
  return Tensor::adopt(out, "take_per_row");
}

Tensor compose_rows(const std::vector<Tensor>& sources,
                    const std::vector<std::pair<int, int64_t>>& picks) {
  if (sources.empty()) throw AssemblyError("compose_rows: no sources");
  int64_t d = sources[0].shape().back();
  for (const Tensor& s : sources) {
    if (s.rank() != 2 || s.dim(1) != d) {
      throw DimensionError(msg("compose_rows: sources must be 2-D with width ", d,
                               ", got ", shape_str(s.shape())));
    }
  }
  for (const auto& [si, row] : picks) {
    if (si < 0 || si >= static_cast<int>(sources.size())) {
      throw AssemblyError(msg("compose_rows: source index ", si, " out of range"));
    }
    if (row < 0 || row >= sources[si].dim(0)) {
      throw AssemblyError(msg("compose_rows: row ", row, " out of range for source ", si));
    }
  }
  auto out = new_node({static_cast<int64_t>(picks.size()), d});
  double* Y = out->data->data();
  for (size_t i = 0; i < picks.size(); ++i) {
    const double* src = sources[picks[i].first].data().data() + picks[i].second * d;
    std::memcpy(Y + i * d, src, sizeof(double) * d);
  }
  attach(out, sources, [sources, picks, d](TensorNode& self) {
    const double* g = self.grad.data();
    for (size_t i = 0; i < picks.size(); ++i) {
      const Tensor& src = sources[picks[i].first];
      if (!src.requires_grad()) continue;
      double* ds = src.ptr()->grad_buf().data() + picks[i].second * d;
      for (int64_t j = 0; j < d; ++j) ds[j] += g[i * d + j];
    }
  });
  return Tensor::adopt(out, "compose_rows");
}

Tensor split_heads(const Tensor& x, int64_t heads) {
  const Shape& s = x.shape();
  if (s.size() != 2) throw DimensionError("split_heads: input must be 2-D");
  if (heads < 1 || s[1] % heads != 0) {
    throw ConfigError(msg("split_heads: width ", s[1], " not divisible by ", heads, " heads"));
  }
  int64_t rows = s[0], hd = s[1] / heads;
  auto out = new_node({heads, rows, hd});
  const double* X = x.data().data();
  double* Y = out->data->data();
  for (int64_t h = 0; h < heads; ++h)
    for (int64_t i = 0; i < rows; ++i)
      std::memcpy(Y + (h * rows + i) * hd, X + i * s[1] + h * hd, sizeof(double) * hd);
  attach(out, {x}, [x, heads, rows, hd](TensorNode& self) {
    double* dx = x.ptr()->grad_buf().data();
    const double* g = self.grad.data();
    int64_t w = heads * hd;
    for (int64_t h = 0; h < heads; ++h)
      for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < hd; ++j)
          dx[i * w + h * hd + j] += g[(h * rows + i) * hd + j];
  });
  return Tensor::adopt(out, "split_heads");
}

Tensor merge_heads(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.size() != 3) throw DimensionError("merge_heads: input must be 3-D");
  int64_t heads = s[0], rows = s[1], hd = s[2];
  auto out = new_node({rows, heads * hd});
  const double* X = x.data().data();
  double* Y = out->data->data();
  for (int64_t h = 0; h < heads; ++h)
    for (int64_t i = 0; i < rows; ++i)
      std::memcpy(Y + i * heads * hd + h * hd, X + (h * rows + i) * hd, sizeof(double) * hd);
  attach(out, {x}, [x, heads, rows, hd](TensorNode& self) {
    double* dx = x.ptr()->grad_buf().data();
    const double* g = self.grad.data();
    int64_t w = heads * hd;
    for (int64_t h = 0; h < heads; ++h)
      for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < hd; ++j)
          dx[(h * rows + i) * hd + j] += g[i * w + h * hd + j];
  });
  return Tensor::adopt(out, "merge_heads");
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add(matmul(x, w), b);
}

}  // namespace calico
