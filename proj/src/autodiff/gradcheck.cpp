#include "tvsn/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "tvsn/autodiff/kernels.hpp"
#include "tvsn/autodiff/ops.hpp"
#include "tvsn/core/error.hpp"

namespace tvsn::ad {

namespace {

using Vec = std::vector<double>;
using Inputs = std::vector<Vec>;

struct Case {
  std::vector<Tensor> inputs;
  std::vector<bool> differentiable;
  std::function<Var(const std::vector<Var>&)> build;
  std::function<Vec(const Inputs&)> shadow;
};

struct Entry {
  double tolerance;
  std::function<Case(std::mt19937_64&)> make;
};

Tensor uniform(Shape s, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(s));
  for (auto& v : t.values()) v = static_cast<float>(d(rng));
  return t;
}

// Values with magnitude in [lo, hi] and random sign.
Tensor away_from_zero(Shape s, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::bernoulli_distribution sign(0.5);
  Tensor t(std::move(s));
  for (auto& v : t.values()) v = static_cast<float>(sign(rng) ? d(rng) : -d(rng));
  return t;
}

Vec pointwise_shadow(Pointwise kind, const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (kind) {
      case Pointwise::Relu:
        y[i] = std::max(x[i], 0.0);
        break;
      case Pointwise::LeakyRelu:
        y[i] = x[i] > 0 ? x[i] : 0.2 * x[i];
        break;
      case Pointwise::Sigmoid:
        y[i] = 1.0 / (1.0 + std::exp(-x[i]));
        break;
      case Pointwise::Tanh:
        y[i] = std::tanh(x[i]);
        break;
    }
  }
  return y;
}

Entry pointwise_entry(Pointwise kind) {
  return {1e-4, [kind](std::mt19937_64& rng) {
            Case c;
            c.inputs = {away_from_zero(Shape{2, 3, 4, 4}, rng, 0.1, 2.0)};
            c.differentiable = {true};
            c.build = [kind](const std::vector<Var>& v) { return pointwise(kind, v[0]); };
            c.shadow = [kind](const Inputs& in) { return pointwise_shadow(kind, in[0]); };
            return c;
          }};
}

Entry conv_entry(int n, int cin, int h, int cout, int k, int stride, int pad) {
  return {1e-4, [=](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{n, cin, h, h}, rng, -1, 1), uniform(Shape{cout, cin, k, k}, rng, -0.5, 0.5),
                        uniform(Shape{cout}, rng, -0.5, 0.5)};
            c.differentiable = {true, true, true};
            c.build = [=](const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], stride, pad); };
            c.shadow = [=](const Inputs& in) {
              const auto g = kernels::conv_geom(n, cin, h, h, cout, k, stride, pad);
              Vec y(g.out_size() * n);
              Vec col(static_cast<std::size_t>(g.patch()) * g.out_pixels());
              kernels::conv2d_forward(in[0].data(), in[1].data(), in[2].data(), g, y.data(), col.data());
              return y;
            };
            return c;
          }};
}

Entry conv_transpose_entry(int n, int cin, int h, int cout, int k, int stride, int pad) {
  return {1e-4, [=](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{n, cin, h, h}, rng, -1, 1), uniform(Shape{cin, cout, k, k}, rng, -0.5, 0.5),
                        uniform(Shape{cout}, rng, -0.5, 0.5)};
            c.differentiable = {true, true, true};
            c.build = [=](const std::vector<Var>& v) { return conv_transpose2d(v[0], v[1], v[2], stride, pad); };
            c.shadow = [=](const Inputs& in) {
              const int ho = (h - 1) * stride - 2 * pad + k;
              const auto g = kernels::conv_geom(n, cout, ho, ho, cin, k, stride, pad);
              Vec y(g.in_size() * n);
              Vec col(static_cast<std::size_t>(g.patch()) * g.out_pixels());
              kernels::conv_transpose2d_forward(in[0].data(), in[1].data(), in[2].data(), g, y.data(), col.data());
              return y;
            };
            return c;
          }};
}

Entry bilinear_entry() {
  return {1e-3, [](std::mt19937_64& rng) {
            constexpr int kH = 5;
            constexpr int kW = 6;
            constexpr int kOut = 4;
            Case c;
            Tensor flow(Shape{2, 2, kOut, kOut});
            std::uniform_int_distribution<int> row(-1, kH - 1);
            std::uniform_int_distribution<int> col(-1, kW - 1);
            std::uniform_real_distribution<double> frac(0.1, 0.9);
            const std::size_t plane = kOut * kOut;
            for (int s = 0; s < 2; ++s)
              for (std::size_t q = 0; q < plane; ++q) {
                flow[(2 * s) * plane + q] = static_cast<float>(row(rng) + frac(rng));
                flow[(2 * s + 1) * plane + q] = static_cast<float>(col(rng) + frac(rng));
              }
            c.inputs = {uniform(Shape{2, 3, kH, kW}, rng, 0, 1), flow};
            c.differentiable = {true, true};
            c.build = [](const std::vector<Var>& v) { return bilinear_sample(v[0], v[1]); };
            c.shadow = [](const Inputs& in) {
              const kernels::SampleGeom g{2, 3, kH, kW, kOut, kOut};
              Vec y(static_cast<std::size_t>(2) * 3 * kOut * kOut);
              kernels::bilinear_forward(in[0].data(), in[1].data(), g, y.data());
              return y;
            };
            return c;
          }};
}

Entry instance_norm_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 3, 5, 5}, rng, -1, 1), uniform(Shape{3}, rng, 0.5, 1.5),
                        uniform(Shape{3}, rng, -0.5, 0.5)};
            c.differentiable = {true, true, true};
            c.build = [](const std::vector<Var>& v) { return instance_norm(v[0], v[1], v[2]); };
            c.shadow = [](const Inputs& in) {
              Vec y(in[0].size());
              kernels::instance_norm_forward<double>(in[0].data(), in[1].data(), in[2].data(), 2, 3, 25,
                                                     static_cast<double>(kNormEps), y.data(), nullptr, nullptr);
              return y;
            };
            return c;
          }};
}

Entry linear_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            constexpr int kN = 3;
            constexpr int kIn = 7;
            constexpr int kOut = 5;
            Case c;
            c.inputs = {uniform(Shape{kN, kIn}, rng, -1, 1), uniform(Shape{kOut, kIn}, rng, -0.5, 0.5),
                        uniform(Shape{kOut}, rng, -0.5, 0.5)};
            c.differentiable = {true, true, true};
            c.build = [](const std::vector<Var>& v) { return linear(v[0], v[1], v[2]); };
            c.shadow = [](const Inputs& in) {
              Vec y(kN * kOut);
              for (int i = 0; i < kN; ++i)
                for (int o = 0; o < kOut; ++o) {
                  double acc = in[2][o];
                  for (int j = 0; j < kIn; ++j) acc += in[0][i * kIn + j] * in[1][o * kIn + j];
                  y[i * kOut + o] = acc;
                }
              return y;
            };
            return c;
          }};
}

Entry binary_entry(std::function<Var(const Var&, const Var&)> op, std::function<double(double, double)> f) {
  return {1e-4, [op, f](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 3, 3}, rng, -1, 1), uniform(Shape{2, 3, 3}, rng, -1, 1)};
            c.differentiable = {true, true};
            c.build = [op](const std::vector<Var>& v) { return op(v[0], v[1]); };
            c.shadow = [f](const Inputs& in) {
              Vec y(in[0].size());
              for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(in[0][i], in[1][i]);
              return y;
            };
            return c;
          }};
}

Entry mul_mask_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 3, 4, 4}, rng, -1, 1), uniform(Shape{2, 1, 4, 4}, rng, 0, 1)};
            c.differentiable = {true, true};
            c.build = [](const std::vector<Var>& v) { return mul_mask(v[0], v[1]); };
            c.shadow = [](const Inputs& in) {
              Vec y(in[0].size());
              for (int s = 0; s < 2; ++s)
                for (int ch = 0; ch < 3; ++ch)
                  for (int i = 0; i < 16; ++i) y[(s * 3 + ch) * 16 + i] = in[0][(s * 3 + ch) * 16 + i] * in[1][s * 16 + i];
              return y;
            };
            return c;
          }};
}

Entry affine_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{3, 4}, rng, -1, 1)};
            c.differentiable = {true};
            c.build = [](const std::vector<Var>& v) { return affine(v[0], -1.5f, 0.25f); };
            c.shadow = [](const Inputs& in) {
              Vec y(in[0].size());
              for (std::size_t i = 0; i < y.size(); ++i) y[i] = -1.5 * in[0][i] + 0.25;
              return y;
            };
            return c;
          }};
}

Entry concat_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 1, 3, 3}, rng, -1, 1), uniform(Shape{2, 2, 3, 3}, rng, -1, 1)};
            c.differentiable = {true, true};
            c.build = [](const std::vector<Var>& v) { return concat({v[0], v[1]}); };
            c.shadow = [](const Inputs& in) {
              Vec y;
              for (int s = 0; s < 2; ++s) {
                y.insert(y.end(), in[0].begin() + s * 9, in[0].begin() + (s + 1) * 9);
                y.insert(y.end(), in[1].begin() + s * 18, in[1].begin() + (s + 1) * 18);
              }
              return y;
            };
            return c;
          }};
}

Entry reduce_entry(bool average) {
  return {1e-4, [average](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 3, 4}, rng, -1, 1)};
            c.differentiable = {true};
            c.build = [average](const std::vector<Var>& v) {
              return average ? mean(v[0]) : sum(reshape(v[0], Shape{6, 4}));
            };
            c.shadow = [average](const Inputs& in) {
              double acc = 0;
              for (double v : in[0]) acc += v;
              return Vec{average ? acc / static_cast<double>(in[0].size()) : acc};
            };
            return c;
          }};
}

Entry l1_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            Tensor a = uniform(Shape{2, 3, 4}, rng, -1, 1);
            Tensor delta = away_from_zero(Shape{2, 3, 4}, rng, 0.1, 1.0);
            Tensor b(a.shape());
            for (std::size_t i = 0; i < b.numel(); ++i) b[i] = a[i] + delta[i];
            c.inputs = {a, b};
            c.differentiable = {true, true};
            c.build = [](const std::vector<Var>& v) { return l1_loss(v[0], v[1]); };
            c.shadow = [](const Inputs& in) {
              double acc = 0;
              for (std::size_t i = 0; i < in[0].size(); ++i) acc += std::abs(in[0][i] - in[1][i]);
              return Vec{acc / static_cast<double>(in[0].size())};
            };
            return c;
          }};
}

Entry feature_l2_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 3, 4}, rng, -1, 1), uniform(Shape{2, 3, 4}, rng, -1, 1)};
            c.differentiable = {true, true};
            c.build = [](const std::vector<Var>& v) { return feature_l2(v[0], v[1]); };
            c.shadow = [](const Inputs& in) {
              double acc = 0;
              for (std::size_t i = 0; i < in[0].size(); ++i) acc += (in[0][i] - in[1][i]) * (in[0][i] - in[1][i]);
              return Vec{acc / static_cast<double>(in[0].size())};
            };
            return c;
          }};
}

Entry bce_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{2, 1, 3, 3}, rng, -4, 4), uniform(Shape{2, 1, 3, 3}, rng, 0, 1)};
            c.differentiable = {true, false};
            c.build = [](const std::vector<Var>& v) { return bce_with_logits(v[0], v[1]); };
            c.shadow = [](const Inputs& in) {
              double acc = 0;
              for (std::size_t i = 0; i < in[0].size(); ++i) {
                const double p = 1.0 / (1.0 + std::exp(-in[0][i]));
                acc -= in[1][i] * std::log(p) + (1 - in[1][i]) * std::log(1 - p);
              }
              return Vec{acc / static_cast<double>(in[0].size())};
            };
            return c;
          }};
}

Entry tv_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            constexpr int kC = 2;
            constexpr int kH = 4;
            constexpr int kW = 5;
            Case c;
            // Ramps plus small noise keep every neighbour difference at least 0.2 from zero.
            Tensor img = uniform(Shape{1, kC, kH, kW}, rng, -0.05, 0.05);
            std::uniform_real_distribution<double> slope(0.3, 0.6);
            std::bernoulli_distribution sign(0.5);
            for (int ch = 0; ch < kC; ++ch) {
              const double sy = sign(rng) ? slope(rng) : -slope(rng);
              const double sx = sign(rng) ? slope(rng) : -slope(rng);
              for (int y = 0; y < kH; ++y)
                for (int x = 0; x < kW; ++x) img[(ch * kH + y) * kW + x] += static_cast<float>(sy * y + sx * x);
            }
            c.inputs = {img};
            c.differentiable = {true};
            c.build = [](const std::vector<Var>& v) { return tv_loss(v[0]); };
            c.shadow = [](const Inputs& in) {
              double h = 0;
              double v = 0;
              for (int ch = 0; ch < kC; ++ch)
                for (int y = 0; y < kH; ++y)
                  for (int x = 0; x < kW; ++x) {
                    const double p = in[0][(ch * kH + y) * kW + x];
                    if (x + 1 < kW) h += std::abs(in[0][(ch * kH + y) * kW + x + 1] - p);
                    if (y + 1 < kH) v += std::abs(in[0][(ch * kH + y + 1) * kW + x] - p);
                  }
              return Vec{h / (kC * kH * (kW - 1)) + v / (kC * (kH - 1) * kW)};
            };
            return c;
          }};
}

Entry softmax_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            constexpr int kN = 3;
            constexpr int kK = 5;
            std::uniform_int_distribution<int> label(0, kK - 1);
            std::vector<int> labels(kN);
            for (auto& l : labels) l = label(rng);
            Case c;
            c.inputs = {uniform(Shape{kN, kK}, rng, -2, 2)};
            c.differentiable = {true};
            c.build = [labels](const std::vector<Var>& v) { return softmax_cross_entropy(v[0], labels); };
            c.shadow = [labels](const Inputs& in) {
              double acc = 0;
              for (int i = 0; i < kN; ++i) {
                double z = 0;
                for (int j = 0; j < kK; ++j) z += std::exp(in[0][i * kK + j]);
                acc += std::log(z) - in[0][i * kK + labels[i]];
              }
              return Vec{acc / kN};
            };
            return c;
          }};
}

Entry weighted_sum_entry() {
  return {1e-4, [](std::mt19937_64& rng) {
            Case c;
            c.inputs = {uniform(Shape{1}, rng, -1, 1), uniform(Shape{1}, rng, -1, 1), uniform(Shape{1}, rng, -1, 1)};
            c.differentiable = {true, true, true};
            c.build = [](const std::vector<Var>& v) { return weighted_sum({{1.0f, v[0]}, {100.0f, v[1]}, {1e-3f, v[2]}}); };
            c.shadow = [](const Inputs& in) { return Vec{in[0][0] + 100.0 * in[1][0] + 1e-3 * in[2][0]}; };
            return c;
          }};
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> r = [] {
    std::map<std::string, Entry> m;
    m.emplace("conv2d", conv_entry(2, 3, 6, 4, 3, 1, 1));
    m.emplace("conv2d_stride2", conv_entry(1, 2, 8, 3, 4, 2, 1));
    m.emplace("conv_transpose2d", conv_transpose_entry(2, 3, 3, 2, 4, 2, 1));
    m.emplace("conv_transpose2d_stride1", conv_transpose_entry(1, 2, 4, 3, 3, 1, 1));
    m.emplace("linear", linear_entry());
    m.emplace("bilinear_sample", bilinear_entry());
    m.emplace("relu", pointwise_entry(Pointwise::Relu));
    m.emplace("leaky_relu", pointwise_entry(Pointwise::LeakyRelu));
    m.emplace("sigmoid", pointwise_entry(Pointwise::Sigmoid));
    m.emplace("tanh", pointwise_entry(Pointwise::Tanh));
    m.emplace("instance_norm", instance_norm_entry());
    m.emplace("add", binary_entry(add, [](double a, double b) { return a + b; }));
    m.emplace("sub", binary_entry(sub, [](double a, double b) { return a - b; }));
    m.emplace("mul", binary_entry(mul, [](double a, double b) { return a * b; }));
    m.emplace("mul_mask", mul_mask_entry());
    m.emplace("affine", affine_entry());
    m.emplace("concat", concat_entry());
    m.emplace("sum_reshape", reduce_entry(false));
    m.emplace("mean", reduce_entry(true));
    m.emplace("l1_loss", l1_entry());
    m.emplace("feature_l2", feature_l2_entry());
    m.emplace("bce_with_logits", bce_entry());
    m.emplace("tv_loss", tv_entry());
    m.emplace("softmax_cross_entropy", softmax_entry());
    m.emplace("weighted_sum", weighted_sum_entry());
    return m;
  }();
  return r;
}

double project(const Vec& y, const Vec& r) {
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * r[i];
  return acc;
}

}  // namespace

std::vector<std::string> gradcheck_ops() {
  std::vector<std::string> names;
  for (const auto& [name, entry] : registry()) names.push_back(name);
  return names;
}

GradCheckResult grad_check(const std::string& op, std::uint64_t seed, double eps) {
  const auto it = registry().find(op);
  if (it == registry().end()) {
    std::string known;
    for (const auto& name : gradcheck_ops()) known += (known.empty() ? "" : ", ") + name;
    fail(ErrorKind::Lookup, "unknown gradcheck op '" + op + "'; registered: " + known);
  }
  if (!(eps > 0.0)) fail(ErrorKind::Parameter, "gradcheck eps must be positive");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + std::hash<std::string>{}(op) % 1000003);
  Case c = it->second.make(rng);

  Graph graph;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    vars.push_back(c.differentiable[i] ? graph.variable(c.inputs[i]) : graph.constant(c.inputs[i]));
  }
  const Var out = c.build(vars);
  Tensor r = uniform(out.shape(), rng, -1, 1);
  graph.backward(out, r);
  const Vec rd(r.values().begin(), r.values().end());

  Inputs base;
  for (const auto& t : c.inputs) base.emplace_back(t.values().begin(), t.values().end());

  GradCheckResult result{op, 0.0, it->second.tolerance, 0, true};
  constexpr std::size_t kMaxCoords = 48;
  // Below this magnitude the float32 analytic gradient is at rounding level.
  constexpr double kRelFloor = 1e-2;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    if (!c.differentiable[i]) continue;
    const Tensor& analytic = vars[i].grad();
    std::vector<std::size_t> coords(base[i].size());
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = k;
    if (coords.size() > kMaxCoords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(kMaxCoords);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t k : coords) {
      Inputs plus = base;
      Inputs minus = base;
      plus[i][k] += eps;
      minus[i][k] -= eps;
      const double numeric = (project(c.shadow(plus), rd) - project(c.shadow(minus), rd)) / (2 * eps);
      const double a = analytic.empty() ? 0.0 : analytic[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kRelFloor});
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.coordinates;
    }
  }
  result.passed = result.max_rel_error < result.tolerance;
  return result;
}

}  // namespace tvsn::ad
