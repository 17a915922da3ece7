#pragma once

// Raw numeric kernels shared by the float training graph and the 64-bit
// gradient-check shadow. All buffers are dense NCHW, row-major.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>

namespace tvsn::ad::kernels {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// Geometry of a forward convolution from (cin, h, w) to (cout, ho, wo).
struct ConvGeom {
  int batch = 1;
  int cin = 0;
  int h = 0;
  int w = 0;
  int cout = 0;
  int k = 1;
  int stride = 1;
  int pad = 0;
  int ho = 0;
  int wo = 0;

  int patch() const { return cin * k * k; }
  int out_pixels() const { return ho * wo; }
  std::size_t in_size() const { return static_cast<std::size_t>(cin) * h * w; }
  std::size_t out_size() const { return static_cast<std::size_t>(cout) * ho * wo; }
};

inline ConvGeom conv_geom(int batch, int cin, int h, int w, int cout, int k, int stride, int pad) {
  ConvGeom g{batch, cin, h, w, cout, k, stride, pad, 0, 0};
  g.ho = (h + 2 * pad - k) / stride + 1;
  g.wo = (w + 2 * pad - k) / stride + 1;
  return g;
}

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  const int p = g.out_pixels();
  for (int c = 0; c < g.cin; ++c) {
    for (int kh = 0; kh < g.k; ++kh) {
      for (int kw = 0; kw < g.k; ++kw) {
        T* row = col + static_cast<std::size_t>((c * g.k + kh) * g.k + kw) * p;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + kh;
          T* out = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(out, out + g.wo, T(0));
            continue;
          }
          const T* in = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kw;
            out[ox] = (ix >= 0 && ix < g.w) ? in[ix] : T(0);
          }
        }
      }
    }
  }
}

// Accumulates columns back into the image (adjoint of im2col).
template <typename T>
void col2im(const T* col, const ConvGeom& g, T* x) {
  const int p = g.out_pixels();
  for (int c = 0; c < g.cin; ++c) {
    for (int kh = 0; kh < g.k; ++kh) {
      for (int kw = 0; kw < g.k; ++kw) {
        const T* row = col + static_cast<std::size_t>((c * g.k + kh) * g.k + kw) * p;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + kh;
          if (iy < 0 || iy >= g.h) continue;
          T* out = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          const T* in = row + oy * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kw;
            if (ix >= 0 && ix < g.w) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

// y = conv(x, w) + b; w is (cout, cin, k, k), b may be null.
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, const ConvGeom& g, T* y, T* scratch) {
  ConstMapMat<T> wm(w, g.cout, g.patch());
  for (int n = 0; n < g.batch; ++n) {
    im2col(x + n * g.in_size(), g, scratch);
    ConstMapMat<T> col(scratch, g.patch(), g.out_pixels());
    MapMat<T> ym(y + n * g.out_size(), g.cout, g.out_pixels());
    ym.noalias() = wm * col;
    if (b != nullptr) {
      for (int o = 0; o < g.cout; ++o) ym.row(o).array() += b[o];
    }
  }
}

// Accumulates dx, dw, db (any may be null) from dy.
template <typename T>
void conv2d_backward(const T* x, const T* w, const T* dy, const ConvGeom& g, T* dx, T* dw, T* db, T* scratch) {
  ConstMapMat<T> wm(w, g.cout, g.patch());
  for (int n = 0; n < g.batch; ++n) {
    ConstMapMat<T> dym(dy + n * g.out_size(), g.cout, g.out_pixels());
    if (dw != nullptr) {
      im2col(x + n * g.in_size(), g, scratch);
      ConstMapMat<T> col(scratch, g.patch(), g.out_pixels());
      MapMat<T> dwm(dw, g.cout, g.patch());
      dwm.noalias() += dym * col.transpose();
    }
    if (db != nullptr) {
      for (int o = 0; o < g.cout; ++o) db[o] += dym.row(o).sum();
    }
    if (dx != nullptr) {
      MapMat<T> dcol(scratch, g.patch(), g.out_pixels());
      dcol.noalias() = wm.transpose() * dym;
      col2im(scratch, g, dx + n * g.in_size());
    }
  }
}

// Transposed convolution: x is (batch, cin_t, h, w), w is (cin_t, cout_t, k, k),
// y is (batch, cout_t, ho, wo). `g` describes the adjoint forward convolution
// from (cout_t, ho, wo) to (cin_t, h, w).
template <typename T>
void conv_transpose2d_forward(const T* x, const T* w, const T* b, const ConvGeom& g, T* y, T* scratch) {
  ConstMapMat<T> wm(w, g.cout, g.patch());
  const std::size_t ysz = g.in_size();
  std::fill(y, y + ysz * g.batch, T(0));
  for (int n = 0; n < g.batch; ++n) {
    ConstMapMat<T> xm(x + n * g.out_size(), g.cout, g.out_pixels());
    MapMat<T> col(scratch, g.patch(), g.out_pixels());
    col.noalias() = wm.transpose() * xm;
    T* yn = y + n * ysz;
    col2im(scratch, g, yn);
    if (b != nullptr) {
      const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
      for (int c = 0; c < g.cin; ++c)
        for (std::size_t i = 0; i < plane; ++i) yn[c * plane + i] += b[c];
    }
  }
}

template <typename T>
void conv_transpose2d_backward(const T* x, const T* w, const T* dy, const ConvGeom& g, T* dx, T* dw, T* db,
                               T* scratch) {
  ConstMapMat<T> wm(w, g.cout, g.patch());
  const std::size_t ysz = g.in_size();
  for (int n = 0; n < g.batch; ++n) {
    const T* dyn = dy + n * ysz;
    im2col(dyn, g, scratch);
    ConstMapMat<T> col(scratch, g.patch(), g.out_pixels());
    if (dx != nullptr) {
      MapMat<T> dxm(dx + n * g.out_size(), g.cout, g.out_pixels());
      dxm.noalias() += wm * col;
    }
    if (dw != nullptr) {
      ConstMapMat<T> xm(x + n * g.out_size(), g.cout, g.out_pixels());
      MapMat<T> dwm(dw, g.cout, g.patch());
      dwm.noalias() += xm * col.transpose();
    }
    if (db != nullptr) {
      const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
      for (int c = 0; c < g.cin; ++c)
        for (std::size_t i = 0; i < plane; ++i) db[c] += dyn[c * plane + i];
    }
  }
}

// Bilinear sampling: out(n,c,i,j) = sum over the 4 integer neighbours (h,w) of
// (fy,fx) of src(n,c,h,w) * max(0,1-|fy-h|) * max(0,1-|fx-w|), where
// fy = flow(n,0,i,j) and fx = flow(n,1,i,j). Out-of-range neighbours and
// non-finite coordinates contribute zero.
struct SampleGeom {
  int batch = 1;
  int channels = 0;
  int h = 0;
  int w = 0;
  int ho = 0;
  int wo = 0;
};

template <typename T>
void bilinear_forward(const T* src, const T* flow, const SampleGeom& g, T* out) {
  const std::size_t in_plane = static_cast<std::size_t>(g.h) * g.w;
  const std::size_t out_plane = static_cast<std::size_t>(g.ho) * g.wo;
  for (int n = 0; n < g.batch; ++n) {
    const T* fy_p = flow + (2 * n) * out_plane;
    const T* fx_p = fy_p + out_plane;
    const T* s = src + static_cast<std::size_t>(n) * g.channels * in_plane;
    T* o = out + static_cast<std::size_t>(n) * g.channels * out_plane;
    for (std::size_t q = 0; q < out_plane; ++q) {
      const T fy = fy_p[q];
      const T fx = fx_p[q];
      for (int c = 0; c < g.channels; ++c) o[c * out_plane + q] = T(0);
      if (!std::isfinite(fy) || !std::isfinite(fx)) continue;
      const T y0f = std::floor(fy);
      const T x0f = std::floor(fx);
      const T ay = fy - y0f;
      const T ax = fx - x0f;
      const long y0 = static_cast<long>(y0f);
      const long x0 = static_cast<long>(x0f);
      for (int dy = 0; dy < 2; ++dy) {
        const long hh = y0 + dy;
        if (hh < 0 || hh >= g.h) continue;
        const T wy = dy == 0 ? T(1) - ay : ay;
        for (int dx = 0; dx < 2; ++dx) {
          const long ww = x0 + dx;
          if (ww < 0 || ww >= g.w) continue;
          const T wgt = wy * (dx == 0 ? T(1) - ax : ax);
          const std::size_t idx = static_cast<std::size_t>(hh) * g.w + ww;
          for (int c = 0; c < g.channels; ++c) o[c * out_plane + q] += s[c * in_plane + idx] * wgt;
        }
      }
    }
  }
}

// Flow derivative uses the right-limit at integer coordinates: the weights of
// the floor/ceil neighbours move with slopes -1/+1.
template <typename T>
void bilinear_backward(const T* src, const T* flow, const T* dout, const SampleGeom& g, T* dsrc, T* dflow) {
  const std::size_t in_plane = static_cast<std::size_t>(g.h) * g.w;
  const std::size_t out_plane = static_cast<std::size_t>(g.ho) * g.wo;
  for (int n = 0; n < g.batch; ++n) {
    const T* fy_p = flow + (2 * n) * out_plane;
    const T* fx_p = fy_p + out_plane;
    const T* s = src + static_cast<std::size_t>(n) * g.channels * in_plane;
    const T* d = dout + static_cast<std::size_t>(n) * g.channels * out_plane;
    T* ds = dsrc != nullptr ? dsrc + static_cast<std::size_t>(n) * g.channels * in_plane : nullptr;
    T* dfy = dflow != nullptr ? dflow + (2 * n) * out_plane : nullptr;
    T* dfx = dflow != nullptr ? dfy + out_plane : nullptr;
    for (std::size_t q = 0; q < out_plane; ++q) {
      const T fy = fy_p[q];
      const T fx = fx_p[q];
      if (!std::isfinite(fy) || !std::isfinite(fx)) continue;
      const T y0f = std::floor(fy);
      const T x0f = std::floor(fx);
      const T ay = fy - y0f;
      const T ax = fx - x0f;
      const long y0 = static_cast<long>(y0f);
      const long x0 = static_cast<long>(x0f);
      T gy = T(0);
      T gx = T(0);
      for (int dy = 0; dy < 2; ++dy) {
        const long hh = y0 + dy;
        if (hh < 0 || hh >= g.h) continue;
        const T wy = dy == 0 ? T(1) - ay : ay;
        const T sy = dy == 0 ? T(-1) : T(1);
        for (int dx = 0; dx < 2; ++dx) {
          const long ww = x0 + dx;
          if (ww < 0 || ww >= g.w) continue;
          const T wx = dx == 0 ? T(1) - ax : ax;
          const T sx = dx == 0 ? T(-1) : T(1);
          const std::size_t idx = static_cast<std::size_t>(hh) * g.w + ww;
          for (int c = 0; c < g.channels; ++c) {
            const T go = d[c * out_plane + q];
            const T sv = s[c * in_plane + idx];
            if (ds != nullptr) ds[c * in_plane + idx] += go * wy * wx;
            gy += go * sv * sy * wx;
            gx += go * sv * wy * sx;
          }
        }
      }
      if (dfy != nullptr) {
        dfy[q] += gy;
        dfx[q] += gx;
      }
    }
  }
}

// Instance normalization over each (n, c) plane:
// y = gain[c] * (x - mean) / (std + eps) + bias[c], with the biased std.
template <typename T>
void instance_norm_forward(const T* x, const T* gain, const T* bias, int batch, int channels, std::size_t plane,
                           T eps, T* y, T* xhat, T* inv) {
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * plane;
      T mean = T(0);
      for (std::size_t i = 0; i < plane; ++i) mean += x[off + i];
      mean /= static_cast<T>(plane);
      T var = T(0);
      for (std::size_t i = 0; i < plane; ++i) {
        const T d = x[off + i] - mean;
        var += d * d;
      }
      var /= static_cast<T>(plane);
      const T sd = std::sqrt(var);
      const T iv = T(1) / (sd + eps);
      if (inv != nullptr) {
        inv[2 * (n * channels + c)] = iv;
        inv[2 * (n * channels + c) + 1] = sd;
      }
      for (std::size_t i = 0; i < plane; ++i) {
        const T xh = (x[off + i] - mean) * iv;
        if (xhat != nullptr) xhat[off + i] = xh;
        y[off + i] = gain[c] * xh + bias[c];
      }
    }
  }
}

}  // namespace tvsn::ad::kernels
