#include "tvsn/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "tvsn/autodiff/kernels.hpp"
#include "tvsn/core/error.hpp"

namespace tvsn::ad {

namespace {

float* scratch(std::size_t n) {
  thread_local FloatBuffer buf;
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorKind::Shape, std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

void require_same(const char* op, const Var& a, const Var& b) {
  if (!(a.shape() == b.shape())) shape_error(op, a.shape(), b.shape());
}

void require_rank(const char* op, const Var& x, int rank) {
  if (x.shape().rank() != rank) {
    fail(ErrorKind::Shape, std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + x.shape().str());
  }
}

Tensor scalar(float v) { return Tensor(Shape{1}, std::vector<float>{v}); }

void accumulate(Graph& g, const Var& v, const Tensor& delta, float scale = 1.0f) {
  if (!g.requires_grad(v)) return;
  Tensor& dst = g.grad_of(v);
  for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += scale * delta[i];
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", w, 4);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (ws[1] != xs[1] || ws[2] != ws[3]) shape_error("conv2d", xs, ws);
  if (stride < 1 || pad < 0) fail(ErrorKind::Parameter, "conv2d: stride must be >= 1 and pad >= 0");
  if (b.valid() && b.value().numel() != static_cast<std::size_t>(ws[0])) shape_error("conv2d", ws, b.shape());
  const auto geom = kernels::conv_geom(xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], stride, pad);
  if (geom.ho < 1 || geom.wo < 1) shape_error("conv2d", xs, ws);
  Tensor y(Shape{xs[0], ws[0], geom.ho, geom.wo});
  kernels::conv2d_forward(x.value().data(), w.value().data(), b.valid() ? b.value().data() : nullptr, geom, y.data(),
                          scratch(static_cast<std::size_t>(geom.patch()) * geom.out_pixels()));
  std::vector<Var> parents{x, w};
  if (b.valid()) parents.push_back(b);
  return x.graph().make(std::move(y), parents, [x, w, b, geom](Graph& g, const Tensor& dy) {
    float* dx = g.requires_grad(x) ? g.grad_of(x).data() : nullptr;
    float* dw = g.requires_grad(w) ? g.grad_of(w).data() : nullptr;
    float* db = (b.valid() && g.requires_grad(b)) ? g.grad_of(b).data() : nullptr;
    kernels::conv2d_backward(x.value().data(), w.value().data(), dy.data(), geom, dx, dw, db,
                             scratch(static_cast<std::size_t>(geom.patch()) * geom.out_pixels()));
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require_rank("conv_transpose2d", x, 4);
  require_rank("conv_transpose2d", w, 4);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (ws[0] != xs[1] || ws[2] != ws[3]) shape_error("conv_transpose2d", xs, ws);
  if (stride < 1 || pad < 0) fail(ErrorKind::Parameter, "conv_transpose2d: stride must be >= 1 and pad >= 0");
  const int k = ws[2];
  const int ho = (xs[2] - 1) * stride - 2 * pad + k;
  const int wo = (xs[3] - 1) * stride - 2 * pad + k;
  if (ho < 1 || wo < 1) shape_error("conv_transpose2d", xs, ws);
  if (b.valid() && b.value().numel() != static_cast<std::size_t>(ws[1])) {
    shape_error("conv_transpose2d", ws, b.shape());
  }
  // Adjoint forward conv maps (Cout_t, ho, wo) -> (Cin_t, H, W).
  auto geom = kernels::conv_geom(xs[0], ws[1], ho, wo, ws[0], k, stride, pad);
  if (geom.ho != xs[2] || geom.wo != xs[3]) shape_error("conv_transpose2d", xs, ws);
  Tensor y(Shape{xs[0], ws[1], ho, wo});
  kernels::conv_transpose2d_forward(x.value().data(), w.value().data(), b.valid() ? b.value().data() : nullptr, geom,
                                    y.data(), scratch(static_cast<std::size_t>(geom.patch()) * geom.out_pixels()));
  std::vector<Var> parents{x, w};
  if (b.valid()) parents.push_back(b);
  return x.graph().make(std::move(y), parents, [x, w, b, geom](Graph& g, const Tensor& dy) {
    float* dx = g.requires_grad(x) ? g.grad_of(x).data() : nullptr;
    float* dw = g.requires_grad(w) ? g.grad_of(w).data() : nullptr;
    float* db = (b.valid() && g.requires_grad(b)) ? g.grad_of(b).data() : nullptr;
    kernels::conv_transpose2d_backward(x.value().data(), w.value().data(), dy.data(), geom, dx, dw, db,
                                       scratch(static_cast<std::size_t>(geom.patch()) * geom.out_pixels()));
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require_rank("linear", x, 2);
  require_rank("linear", w, 2);
  const int n = x.shape()[0];
  const int in = x.shape()[1];
  const int out = w.shape()[0];
  if (w.shape()[1] != in) shape_error("linear", x.shape(), w.shape());
  if (b.valid() && b.value().numel() != static_cast<std::size_t>(out)) shape_error("linear", w.shape(), b.shape());
  Tensor y(Shape{n, out});
  {
    kernels::ConstMapMat<float> xm(x.value().data(), n, in);
    kernels::ConstMapMat<float> wm(w.value().data(), out, in);
    kernels::MapMat<float> ym(y.data(), n, out);
    ym.noalias() = xm * wm.transpose();
    if (b.valid()) {
      for (int i = 0; i < n; ++i)
        for (int o = 0; o < out; ++o) ym(i, o) += b.value()[static_cast<std::size_t>(o)];
    }
  }
  std::vector<Var> parents{x, w};
  if (b.valid()) parents.push_back(b);
  return x.graph().make(std::move(y), parents, [x, w, b, n, in, out](Graph& g, const Tensor& dy) {
    kernels::ConstMapMat<float> dym(dy.data(), n, out);
    if (g.requires_grad(x)) {
      kernels::MapMat<float> dx(g.grad_of(x).data(), n, in);
      dx.noalias() += dym * kernels::ConstMapMat<float>(w.value().data(), out, in);
    }
    if (g.requires_grad(w)) {
      kernels::MapMat<float> dw(g.grad_of(w).data(), out, in);
      dw.noalias() += dym.transpose() * kernels::ConstMapMat<float>(x.value().data(), n, in);
    }
    if (b.valid() && g.requires_grad(b)) {
      Tensor& db = g.grad_of(b);
      for (int i = 0; i < n; ++i)
        for (int o = 0; o < out; ++o) db[static_cast<std::size_t>(o)] += dym(i, o);
    }
  });
}

Var bilinear_sample(const Var& source, const Var& flow) {
  require_rank("bilinear_sample", source, 4);
  require_rank("bilinear_sample", flow, 4);
  const Shape& ss = source.shape();
  const Shape& fs = flow.shape();
  if (fs[1] != 2) {
    fail(ErrorKind::Shape, "bilinear_sample: flow must have 2 channels, got " + fs.str());
  }
  if (fs[0] != ss[0]) shape_error("bilinear_sample", ss, fs);
  const kernels::SampleGeom geom{ss[0], ss[1], ss[2], ss[3], fs[2], fs[3]};
  Tensor y(Shape{ss[0], ss[1], fs[2], fs[3]});
  kernels::bilinear_forward(source.value().data(), flow.value().data(), geom, y.data());
  return source.graph().make(std::move(y), {source, flow}, [source, flow, geom](Graph& g, const Tensor& dy) {
    float* ds = g.requires_grad(source) ? g.grad_of(source).data() : nullptr;
    float* df = g.requires_grad(flow) ? g.grad_of(flow).data() : nullptr;
    kernels::bilinear_backward(source.value().data(), flow.value().data(), dy.data(), geom, ds, df);
  });
}

Var pointwise(Pointwise kind, const Var& x) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    const float v = xv[i];
    switch (kind) {
      case Pointwise::Relu:
        y[i] = v > 0.0f ? v : 0.0f;
        break;
      case Pointwise::LeakyRelu:
        y[i] = v > 0.0f ? v : kLeakySlope * v;
        break;
      case Pointwise::Sigmoid:
        y[i] = 1.0f / (1.0f + std::exp(-v));
        break;
      case Pointwise::Tanh:
        y[i] = std::tanh(v);
        break;
    }
  }
  return x.graph().make(std::move(y), {x}, [x, kind](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x);
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      float d = 0.0f;
      switch (kind) {
        case Pointwise::Relu:
          d = xv[i] > 0.0f ? 1.0f : 0.0f;
          break;
        case Pointwise::LeakyRelu:
          d = xv[i] > 0.0f ? 1.0f : kLeakySlope;
          break;
        case Pointwise::Sigmoid: {
          const float sg = 1.0f / (1.0f + std::exp(-xv[i]));
          d = sg * (1.0f - sg);
          break;
        }
        case Pointwise::Tanh: {
          const float t = std::tanh(xv[i]);
          d = 1.0f - t * t;
          break;
        }
      }
      dx[i] += dy[i] * d;
    }
  });
}

Var instance_norm(const Var& x, const Var& gain, const Var& bias) {
  require_rank("instance_norm", x, 4);
  const Shape& xs = x.shape();
  const int n = xs[0];
  const int c = xs[1];
  const std::size_t plane = static_cast<std::size_t>(xs[2]) * xs[3];
  if (gain.value().numel() != static_cast<std::size_t>(c) || bias.value().numel() != static_cast<std::size_t>(c)) {
    shape_error("instance_norm", xs, gain.shape());
  }
  Tensor y(xs);
  auto xhat = std::make_shared<Tensor>(xs);
  auto stats = std::make_shared<FloatBuffer>(static_cast<std::size_t>(2 * n * c));
  kernels::instance_norm_forward(x.value().data(), gain.value().data(), bias.value().data(), n, c, plane, kNormEps,
                                 y.data(), xhat->data(), stats->data());
  return x.graph().make(std::move(y), {x, gain, bias}, [x, gain, bias, xhat, stats, n, c, plane](Graph& g, const Tensor& dy) {
    const bool need_x = g.requires_grad(x);
    float* dx = need_x ? g.grad_of(x).data() : nullptr;
    float* dg = g.requires_grad(gain) ? g.grad_of(gain).data() : nullptr;
    float* dbias = g.requires_grad(bias) ? g.grad_of(bias).data() : nullptr;
    const float* gv = gain.value().data();
    const float fp = static_cast<float>(plane);
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * plane;
        const float inv = (*stats)[2 * (s * c + ch)];
        const float sd = (*stats)[2 * (s * c + ch) + 1];
        float sum_dy = 0.0f;
        float sum_dy_xh = 0.0f;
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += dy[off + i];
          sum_dy_xh += dy[off + i] * (*xhat)[off + i];
        }
        if (dg != nullptr) dg[ch] += sum_dy_xh;
        if (dbias != nullptr) dbias[ch] += sum_dy;
        if (dx == nullptr) continue;
        // dxhat = gain * dy; xhat = (x - mean) * inv with inv = 1 / (sd + eps).
        // dx = inv * (dxhat - mean(dxhat)) - (x - mean) * inv^2 / (N sd) * sum(dxhat (x - mean))
        const float mean_dxh = gv[ch] * sum_dy / fp;
        // sum(dxhat * (x - mean)) = gain * sum(dy * xhat) / inv
        const float coupling = sd > 0.0f ? gv[ch] * sum_dy_xh * inv / (fp * sd) : 0.0f;
        for (std::size_t i = 0; i < plane; ++i) {
          const float centered = (*xhat)[off + i] / inv;
          dx[off + i] += inv * (gv[ch] * dy[off + i] - mean_dxh) - centered * coupling;
        }
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] + b.value()[i];
  return a.graph().make(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    accumulate(g, a, dy);
    accumulate(g, b, dy);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] - b.value()[i];
  return a.graph().make(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    accumulate(g, a, dy);
    accumulate(g, b, dy, -1.0f);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
  return a.graph().make(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    if (g.requires_grad(a)) {
      Tensor& da = g.grad_of(a);
      for (std::size_t i = 0; i < da.numel(); ++i) da[i] += dy[i] * b.value()[i];
    }
    if (g.requires_grad(b)) {
      Tensor& db = g.grad_of(b);
      for (std::size_t i = 0; i < db.numel(); ++i) db[i] += dy[i] * a.value()[i];
    }
  });
}

Var mul_mask(const Var& image, const Var& mask) {
  require_rank("mul_mask", image, 4);
  require_rank("mul_mask", mask, 4);
  const Shape& is = image.shape();
  const Shape& ms = mask.shape();
  if (ms[0] != is[0] || ms[1] != 1 || ms[2] != is[2] || ms[3] != is[3]) shape_error("mul_mask", is, ms);
  const int n = is[0];
  const int c = is[1];
  const std::size_t plane = static_cast<std::size_t>(is[2]) * is[3];
  Tensor y(is);
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        y[(static_cast<std::size_t>(s) * c + ch) * plane + i] =
            image.value()[(static_cast<std::size_t>(s) * c + ch) * plane + i] * mask.value()[s * plane + i];
      }
  return image.graph().make(std::move(y), {image, mask}, [image, mask, n, c, plane](Graph& g, const Tensor& dy) {
    const bool gi = g.requires_grad(image);
    const bool gm = g.requires_grad(mask);
    float* di = gi ? g.grad_of(image).data() : nullptr;
    float* dm = gm ? g.grad_of(mask).data() : nullptr;
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) {
          const std::size_t idx = (static_cast<std::size_t>(s) * c + ch) * plane + i;
          if (gi) di[idx] += dy[idx] * mask.value()[s * plane + i];
          if (gm) dm[s * plane + i] += dy[idx] * image.value()[idx];
        }
  });
}

Var affine(const Var& x, float scale, float shift) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = scale * x.value()[i] + shift;
  return x.graph().make(std::move(y), {x}, [x, scale](Graph& g, const Tensor& dy) { accumulate(g, x, dy, scale); });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorKind::Shape, "concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (s0.rank() < 2) fail(ErrorKind::Shape, "concat: inputs need rank >= 2, got " + s0.str());
  int total = 0;
  std::size_t inner = 1;
  for (int d = 2; d < s0.rank(); ++d) inner *= static_cast<std::size_t>(s0[d]);
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.rank() != s0.rank() || s[0] != s0[0]) shape_error("concat", s0, s);
    for (int d = 2; d < s.rank(); ++d) {
      if (s[d] != s0[d]) shape_error("concat", s0, s);
    }
    total += s[1];
  }
  std::vector<int> dims = s0.dims();
  dims[1] = total;
  Tensor y{Shape(dims)};
  const int n = s0[0];
  for (int s = 0; s < n; ++s) {
    std::size_t dst = static_cast<std::size_t>(s) * total * inner;
    for (const auto& p : parts) {
      const std::size_t chunk = static_cast<std::size_t>(p.shape()[1]) * inner;
      std::copy_n(p.value().data() + s * chunk, chunk, y.data() + dst);
      dst += chunk;
    }
  }
  return parts[0].graph().make(std::move(y), parts, [parts, n, total, inner](Graph& g, const Tensor& dy) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t chunk = static_cast<std::size_t>(p.shape()[1]) * inner;
      if (g.requires_grad(p)) {
        Tensor& dp = g.grad_of(p);
        for (int s = 0; s < n; ++s) {
          const float* src = dy.data() + static_cast<std::size_t>(s) * total * inner + offset;
          float* dst = dp.data() + s * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      offset += chunk;
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return x.graph().make(std::move(y), {x}, [x](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[i];
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (float v : x.value().values()) acc += v;
  return x.graph().make(scalar(static_cast<float>(acc)), {x}, [x](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[0];
  });
}

Var mean(const Var& x) {
  const auto n = static_cast<float>(x.value().numel());
  double acc = 0.0;
  for (float v : x.value().values()) acc += v;
  return x.graph().make(scalar(static_cast<float>(acc / n)), {x}, [x, n](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[0] / n;
  });
}

Var l1_loss(const Var& a, const Var& b) {
  require_same("l1_loss", a, b);
  const auto n = static_cast<double>(a.value().numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.value().numel(); ++i) acc += std::abs(a.value()[i] - b.value()[i]);
  return a.graph().make(scalar(static_cast<float>(acc / n)), {a, b}, [a, b, n](Graph& g, const Tensor& dy) {
    const float s = dy[0] / static_cast<float>(n);
    const bool ga = g.requires_grad(a);
    const bool gb = g.requires_grad(b);
    for (std::size_t i = 0; i < a.value().numel(); ++i) {
      const float d = a.value()[i] - b.value()[i];
      const float sg = d > 0.0f ? s : (d < 0.0f ? -s : 0.0f);
      if (ga) g.grad_of(a)[i] += sg;
      if (gb) g.grad_of(b)[i] -= sg;
    }
  });
}

Var feature_l2(const Var& a, const Var& b) {
  require_same("feature_l2", a, b);
  const auto n = static_cast<double>(a.value().numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.value().numel(); ++i) {
    const double d = static_cast<double>(a.value()[i]) - b.value()[i];
    acc += d * d;
  }
  return a.graph().make(scalar(static_cast<float>(acc / n)), {a, b}, [a, b, n](Graph& g, const Tensor& dy) {
    const float s = 2.0f * dy[0] / static_cast<float>(n);
    const bool ga = g.requires_grad(a);
    const bool gb = g.requires_grad(b);
    for (std::size_t i = 0; i < a.value().numel(); ++i) {
      const float d = s * (a.value()[i] - b.value()[i]);
      if (ga) g.grad_of(a)[i] += d;
      if (gb) g.grad_of(b)[i] -= d;
    }
  });
}

Var bce_with_logits(const Var& logits, const Var& labels) {
  require_same("bce_with_logits", logits, labels);
  const auto n = static_cast<double>(logits.value().numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.value().numel(); ++i) {
    const double z = logits.value()[i];
    const double y = labels.value()[i];
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return logits.graph().make(scalar(static_cast<float>(acc / n)), {logits}, [logits, labels, n](Graph& g, const Tensor& dy) {
    Tensor& dz = g.grad_of(logits);
    const float s = dy[0] / static_cast<float>(n);
    for (std::size_t i = 0; i < dz.numel(); ++i) {
      const float z = logits.value()[i];
      const float sig = 1.0f / (1.0f + std::exp(-z));
      dz[i] += s * (sig - labels.value()[i]);
    }
  });
}

Var tv_loss(const Var& image) {
  require_rank("tv_loss", image, 4);
  const Shape& s = image.shape();
  const int nc = s[0] * s[1];
  const int h = s[2];
  const int w = s[3];
  const double nh = static_cast<double>(nc) * h * (w - 1);
  const double nv = static_cast<double>(nc) * (h - 1) * w;
  const float* x = image.value().data();
  double acc_h = 0.0;
  double acc_v = 0.0;
  for (int p = 0; p < nc; ++p) {
    const float* plane = x + static_cast<std::size_t>(p) * h * w;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        if (xx + 1 < w) acc_h += std::abs(plane[y * w + xx + 1] - plane[y * w + xx]);
        if (y + 1 < h) acc_v += std::abs(plane[(y + 1) * w + xx] - plane[y * w + xx]);
      }
  }
  const double value = (nh > 0 ? acc_h / nh : 0.0) + (nv > 0 ? acc_v / nv : 0.0);
  return image.graph().make(scalar(static_cast<float>(value)), {image}, [image, nc, h, w, nh, nv](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(image);
    const float* x = image.value().data();
    const float sh = nh > 0 ? static_cast<float>(dy[0] / nh) : 0.0f;
    const float sv = nv > 0 ? static_cast<float>(dy[0] / nv) : 0.0f;
    for (int p = 0; p < nc; ++p) {
      const std::size_t off = static_cast<std::size_t>(p) * h * w;
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const std::size_t i = off + static_cast<std::size_t>(y) * w + xx;
          if (xx + 1 < w) {
            const float d = x[i + 1] - x[i];
            const float sg = d > 0.0f ? sh : (d < 0.0f ? -sh : 0.0f);
            dx[i + 1] += sg;
            dx[i] -= sg;
          }
          if (y + 1 < h) {
            const float d = x[i + w] - x[i];
            const float sg = d > 0.0f ? sv : (d < 0.0f ? -sv : 0.0f);
            dx[i + w] += sg;
            dx[i] -= sg;
          }
        }
    }
  });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels) {
  require_rank("softmax_cross_entropy", logits, 2);
  const int n = logits.shape()[0];
  const int k = logits.shape()[1];
  if (static_cast<int>(labels.size()) != n) {
    fail(ErrorKind::Shape, "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                               std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<FloatBuffer>(static_cast<std::size_t>(n) * k);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) fail(ErrorKind::Parameter, "softmax_cross_entropy: label out of range");
    const float* row = logits.value().data() + static_cast<std::size_t>(i) * k;
    const float mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    for (int j = 0; j < k; ++j) (*probs)[i * k + j] = static_cast<float>(std::exp(row[j] - mx) / z);
    acc += -(row[labels[i]] - mx - std::log(z));
  }
  return logits.graph().make(scalar(static_cast<float>(acc / n)), {logits}, [logits, labels, probs, n, k](Graph& g, const Tensor& dy) {
    Tensor& dz = g.grad_of(logits);
    const float s = dy[0] / static_cast<float>(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) {
        dz[static_cast<std::size_t>(i) * k + j] += s * ((*probs)[i * k + j] - (j == labels[i] ? 1.0f : 0.0f));
      }
  });
}

Var weighted_sum(const std::vector<std::pair<float, Var>>& terms) {
  if (terms.empty()) fail(ErrorKind::Shape, "weighted_sum: no terms");
  double acc = 0.0;
  std::vector<Var> parents;
  for (const auto& [w, v] : terms) {
    acc += static_cast<double>(w) * v.value().item();
    parents.push_back(v);
  }
  return terms[0].second.graph().make(scalar(static_cast<float>(acc)), parents, [terms](Graph& g, const Tensor& dy) {
    for (const auto& [w, v] : terms) {
      if (g.requires_grad(v)) g.grad_of(v)[0] += w * dy[0];
    }
  });
}

}  // namespace tvsn::ad
