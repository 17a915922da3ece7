#include "tvsn/model/networks.hpp"

#include <cmath>
#include <string>

#include "tvsn/autodiff/ops.hpp"
#include "tvsn/core/error.hpp"

namespace tvsn::model {

namespace {

using ad::Shape;
using ad::Tensor;

std::string block(const char* prefix, const char* kind, std::size_t i) {
  return std::string(prefix) + kind + std::to_string(i + 1);
}

void add_conv(ParameterStore& s, const std::string& name, int cout, int cin, int k, std::mt19937_64& rng,
              double gain = std::sqrt(2.0)) {
  const double fan_in = static_cast<double>(cin) * k * k;
  s.add(name + ".w", Tensor::normal(Shape{cout, cin, k, k}, rng, static_cast<float>(gain / std::sqrt(fan_in))));
  s.add(name + ".b", Tensor(Shape{cout}));
}

void add_conv_t(ParameterStore& s, const std::string& name, int cin, int cout, int k, std::mt19937_64& rng) {
  // Each output pixel of a stride-2, k=4 transposed conv sees cin * (k/2)^2 taps.
  const double fan_in = static_cast<double>(cin) * k * k / 4.0;
  s.add(name + ".w", Tensor::normal(Shape{cin, cout, k, k}, rng, static_cast<float>(std::sqrt(2.0 / fan_in))));
  s.add(name + ".b", Tensor(Shape{cout}));
}

void add_norm(ParameterStore& s, const std::string& name, int c) {
  s.add(name + ".norm_gain", Tensor(Shape{c}, 1.0f));
  s.add(name + ".norm_bias", Tensor(Shape{c}));
}

void add_linear(ParameterStore& s, const std::string& name, int out, int in, std::mt19937_64& rng,
                double gain = std::sqrt(2.0)) {
  s.add(name + ".w", Tensor::normal(Shape{out, in}, rng, static_cast<float>(gain / std::sqrt(in))));
  s.add(name + ".b", Tensor(Shape{out}));
}

struct Ctx {
  Graph& g;
  ParameterStore& s;
  bool track;

  Var p(const std::string& name) const { return g.param(s.get(name), track); }
};

Var conv(const Ctx& c, const std::string& name, const Var& x, int stride, int pad) {
  return ad::conv2d(x, c.p(name + ".w"), c.p(name + ".b"), stride, pad);
}

Var conv_t(const Ctx& c, const std::string& name, const Var& x) {
  return ad::conv_transpose2d(x, c.p(name + ".w"), c.p(name + ".b"), 2, 1);
}

Var norm(const Ctx& c, const std::string& name, const Var& x) {
  return ad::instance_norm(x, c.p(name + ".norm_gain"), c.p(name + ".norm_bias"));
}

Var linear(const Ctx& c, const std::string& name, const Var& x) {
  return ad::linear(x, c.p(name + ".w"), c.p(name + ".b"));
}

// Encoder blocks shared by DOAFN, the hourglass and the baseline.
void init_encoder(ParameterStore& s, const char* prefix, const ArchDescriptor& a, std::mt19937_64& rng) {
  int cin = a.channels;
  for (std::size_t i = 0; i < a.enc_widths.size(); ++i) {
    add_conv(s, block(prefix, "enc", i), a.enc_widths[i], cin, 4, rng);
    add_norm(s, block(prefix, "enc", i), a.enc_widths[i]);
    cin = a.enc_widths[i];
  }
  add_linear(s, std::string(prefix) + "fc_enc", a.bottleneck, a.decoder_seed_size(), rng);
}

std::vector<Var> run_encoder(const Ctx& c, const char* prefix, const ArchDescriptor& a, const Var& x) {
  std::vector<Var> outs;
  Var h = x;
  for (std::size_t i = 0; i < a.enc_widths.size(); ++i) {
    const std::string name = block(prefix, "enc", i);
    h = ad::leaky_relu(norm(c, name, conv(c, name, h, 2, 1)));
    outs.push_back(h);
  }
  return outs;
}

Var encode_vector(const Ctx& c, const char* prefix, const ArchDescriptor& a, const Var& last) {
  const int n = last.shape()[0];
  return ad::leaky_relu(linear(c, std::string(prefix) + "fc_enc", ad::reshape(last, Shape{n, a.decoder_seed_size()})));
}

// fc -> (N, C, b, b) seed followed by transposed blocks; `skips[i]` (if valid)
// is concatenated to the output of decoder block i.
void init_decoder(ParameterStore& s, const char* prefix, const ArchDescriptor& a, int fc_in,
                  const std::vector<int>& skip_channels, std::mt19937_64& rng) {
  add_linear(s, std::string(prefix) + "fc_dec", a.decoder_seed_size(), fc_in, rng);
  int cin = a.enc_widths.back();
  for (std::size_t i = 0; i < a.dec_widths.size(); ++i) {
    add_conv_t(s, block(prefix, "dec", i), cin, a.dec_widths[i], 4, rng);
    add_norm(s, block(prefix, "dec", i), a.dec_widths[i]);
    cin = a.dec_widths[i] + (i < skip_channels.size() ? skip_channels[i] : 0);
  }
}

Var run_decoder(const Ctx& c, const char* prefix, const ArchDescriptor& a, const Var& code,
                const std::vector<Var>& skips) {
  const int n = code.shape()[0];
  const int b = a.base_size();
  Var h = ad::relu(linear(c, std::string(prefix) + "fc_dec", code));
  h = ad::reshape(h, Shape{n, a.enc_widths.back(), b, b});
  for (std::size_t i = 0; i < a.dec_widths.size(); ++i) {
    const std::string name = block(prefix, "dec", i);
    h = ad::relu(norm(c, name, conv_t(c, name, h)));
    if (i < skips.size() && skips[i].valid()) h = ad::concat({h, skips[i]});
  }
  return h;
}

void require_image(const char* who, const ArchDescriptor& a, const Var& x) {
  const Shape& s = x.shape();
  if (s.rank() != 4 || s[1] != a.channels || s[2] != a.size || s[3] != a.size) {
    fail(ErrorKind::Shape, std::string(who) + ": expected (N," + std::to_string(a.channels) + "," +
                               std::to_string(a.size) + "," + std::to_string(a.size) + ") input, got " + s.str());
  }
}

void require_encoding(const char* who, const ArchDescriptor& a, const Var& t, int n) {
  const Shape& s = t.shape();
  if (s.rank() != 2 || s[0] != n || s[1] != a.encoding_dim) {
    fail(ErrorKind::Shape, std::string(who) + ": expected (" + std::to_string(n) + "," +
                               std::to_string(a.encoding_dim) + ") encoding, got " + s.str());
  }
}

Var embed_encoding(const Ctx& c, const char* prefix, const Var& t) {
  return ad::relu(linear(c, std::string(prefix) + "embed", t));
}

}  // namespace

void init_doafn(ParameterStore& s, const ArchDescriptor& a, std::mt19937_64& rng) {
  init_encoder(s, kDoafn, a, rng);
  add_linear(s, std::string(kDoafn) + "embed", a.embed, a.encoding_dim, rng);
  init_decoder(s, kDoafn, a, a.bottleneck + a.embed, {}, rng);
  const int last = a.dec_widths.back();
  add_conv(s, std::string(kDoafn) + "flow_head", 2, last, 3, rng, 0.1);
  add_conv(s, std::string(kDoafn) + "vis_head", 1, last, 3, rng, 0.1);
  if (a.predict_background) add_conv(s, std::string(kDoafn) + "bg_head", 1, last, 3, rng, 0.1);
}

DoafnOutput doafn_forward(Graph& g, ParameterStore& s, const ArchDescriptor& a, const Var& source,
                          const Var& encoding, const Var& bg, bool track) {
  require_image("doafn", a, source);
  const int n = source.shape()[0];
  require_encoding("doafn", a, encoding, n);
  const Ctx c{g, s, track};
  const auto feats = run_encoder(c, kDoafn, a, source);
  DoafnOutput out;
  out.bottleneck = encode_vector(c, kDoafn, a, feats.back());
  const Var code = ad::concat({out.bottleneck, embed_encoding(c, kDoafn, encoding)});
  const Var h = run_decoder(c, kDoafn, a, code, {});

  out.flow_raw = ad::tanh(conv(c, std::string(kDoafn) + "flow_head", h, 1, 1));
  const float half = 0.5f * static_cast<float>(a.size - 1);
  out.flow = ad::affine(out.flow_raw, half, half);
  out.vis_logit = conv(c, std::string(kDoafn) + "vis_head", h, 1, 1);
  out.vis = ad::sigmoid(out.vis_logit);
  out.afn = ad::bilinear_sample(source, out.flow);

  Var mask = bg;
  if (a.predict_background) {
    out.bg_logit = conv(c, std::string(kDoafn) + "bg_head", h, 1, 1);
    if (!mask.valid()) mask = ad::sigmoid(out.bg_logit);
  }
  if (!mask.valid()) fail(ErrorKind::State, "doafn: no background mask given and no background head configured");
  const Shape& ms = mask.shape();
  if (ms.rank() != 4 || ms[0] != n || ms[1] != 1 || ms[2] != a.size || ms[3] != a.size) {
    fail(ErrorKind::Shape, "doafn: background mask has shape " + ms.str());
  }
  const Var keep = ad::mul(out.vis, ad::affine(mask, -1.0f, 1.0f));
  out.i_doafn = ad::add(ad::mul_mask(source, mask), ad::mul_mask(out.afn, keep));
  return out;
}

void init_completion(ParameterStore& s, const ArchDescriptor& a, std::mt19937_64& rng) {
  init_encoder(s, kCompletion, a, rng);
  // Skips: encoder block k feeds the decoder block producing the same scale;
  // the last decoder block (full resolution) gets the input image.
  std::vector<int> skips;
  for (std::size_t i = 0; i + 1 < a.enc_widths.size(); ++i) skips.push_back(a.enc_widths[a.enc_widths.size() - 2 - i]);
  skips.push_back(a.channels);
  init_decoder(s, kCompletion, a, 2 * a.bottleneck, skips, rng);
  const std::string out = std::string(kCompletion) + "out";
  const int feats = a.dec_widths.back();
  add_conv(s, out, a.channels, feats + a.channels, 3, rng, 0.1);
  // Start close to passing i_doafn through: sigmoid(8x - 4) maps 0 -> 0.02, 1 -> 0.98.
  Tensor& w = s.get(out + ".w").value;
  Tensor& b = s.get(out + ".b").value;
  for (int ch = 0; ch < a.channels; ++ch) {
    const std::size_t centre = ((static_cast<std::size_t>(ch) * (feats + a.channels) + feats + ch) * 3 + 1) * 3 + 1;
    w[centre] = 8.0f;
    b[static_cast<std::size_t>(ch)] = -4.0f;
  }
}

Var completion_forward(Graph& g, ParameterStore& s, const ArchDescriptor& a, const Var& i_doafn,
                       const Var& doafn_bottleneck, bool track) {
  require_image("completion", a, i_doafn);
  const int n = i_doafn.shape()[0];
  const Shape& bs = doafn_bottleneck.shape();
  if (bs.rank() != 2 || bs[0] != n || bs[1] != a.bottleneck) {
    fail(ErrorKind::Shape, "completion: bottleneck has shape " + bs.str());
  }
  const Ctx c{g, s, track};
  const auto feats = run_encoder(c, kCompletion, a, i_doafn);
  const Var code = ad::concat({encode_vector(c, kCompletion, a, feats.back()), doafn_bottleneck});
  std::vector<Var> skips;
  for (std::size_t i = 0; i + 1 < feats.size(); ++i) skips.push_back(feats[feats.size() - 2 - i]);
  skips.push_back(i_doafn);
  const Var h = run_decoder(c, kCompletion, a, code, skips);
  return ad::sigmoid(conv(c, std::string(kCompletion) + "out", h, 1, 1));
}

void init_discriminator(ParameterStore& s, const ArchDescriptor& a, std::mt19937_64& rng) {
  int cin = a.channels;
  for (std::size_t i = 0; i < a.disc_widths.size(); ++i) {
    add_conv(s, block(kDiscriminator, "conv", i), a.disc_widths[i], cin, 4, rng);
    if (i > 0) add_norm(s, block(kDiscriminator, "conv", i), a.disc_widths[i]);
    cin = a.disc_widths[i];
  }
  const int side = a.size >> a.disc_widths.size();
  add_linear(s, std::string(kDiscriminator) + "fc", 1, cin * side * side, rng, 1.0);
}

DiscriminatorOutput discriminator_forward(Graph& g, ParameterStore& s, const ArchDescriptor& a, const Var& image,
                                          bool track) {
  require_image("discriminator", a, image);
  const Ctx c{g, s, track};
  DiscriminatorOutput out;
  Var h = image;
  for (std::size_t i = 0; i < a.disc_widths.size(); ++i) {
    const std::string name = block(kDiscriminator, "conv", i);
    h = conv(c, name, h, 2, 1);
    if (i > 0) h = norm(c, name, h);
    h = ad::leaky_relu(h);
    if (i < 3) out.taps.push_back(h);
  }
  const int n = image.shape()[0];
  const int side = a.size >> a.disc_widths.size();
  out.logit = linear(c, std::string(kDiscriminator) + "fc", ad::reshape(h, Shape{n, a.disc_widths.back() * side * side}));
  return out;
}

void init_perceptual(ParameterStore& s, const ArchDescriptor& a, std::mt19937_64& rng) {
  int cin = a.channels;
  for (std::size_t i = 0; i < a.perc_widths.size(); ++i) {
    add_conv(s, block(kPerceptual, "conv", i), a.perc_widths[i], cin, 4, rng);
    cin = a.perc_widths[i];
  }
  const int side = a.size >> a.perc_widths.size();
  add_linear(s, std::string(kPerceptualHead) + "fc", a.perc_classes, cin * side * side, rng, 1.0);
}

std::vector<Var> perceptual_features(Graph& g, ParameterStore& s, const ArchDescriptor& a, const Var& image,
                                     bool track) {
  require_image("perceptual", a, image);
  const Ctx c{g, s, track};
  std::vector<Var> taps;
  Var h = image;
  for (std::size_t i = 0; i < a.perc_widths.size(); ++i) {
    h = ad::leaky_relu(conv(c, block(kPerceptual, "conv", i), h, 2, 1));
    taps.push_back(h);
  }
  return taps;
}

Var perceptual_logits(Graph& g, ParameterStore& s, const ArchDescriptor& a, const std::vector<Var>& features,
                      bool track) {
  const Ctx c{g, s, track};
  const Var& last = features.back();
  const int n = last.shape()[0];
  const int flat = static_cast<int>(last.value().numel()) / n;
  (void)a;
  return linear(c, std::string(kPerceptualHead) + "fc", ad::reshape(last, Shape{n, flat}));
}

void init_baseline(ParameterStore& s, const ArchDescriptor& a, std::mt19937_64& rng) {
  init_encoder(s, kBaseline, a, rng);
  add_linear(s, std::string(kBaseline) + "embed", a.embed, a.encoding_dim, rng);
  init_decoder(s, kBaseline, a, a.bottleneck + a.embed, {}, rng);
  add_conv(s, std::string(kBaseline) + "out", a.channels, a.dec_widths.back(), 3, rng, 1.0);
}

Var baseline_forward(Graph& g, ParameterStore& s, const ArchDescriptor& a, const Var& source, const Var& encoding,
                     bool track) {
  require_image("baseline", a, source);
  require_encoding("baseline", a, encoding, source.shape()[0]);
  const Ctx c{g, s, track};
  const auto feats = run_encoder(c, kBaseline, a, source);
  const Var code = ad::concat({encode_vector(c, kBaseline, a, feats.back()), embed_encoding(c, kBaseline, encoding)});
  const Var h = run_decoder(c, kBaseline, a, code, {});
  return ad::sigmoid(conv(c, std::string(kBaseline) + "out", h, 1, 1));
}

Var flatten_concat(const std::vector<Var>& taps) {
  std::vector<Var> flat;
  for (const auto& t : taps) {
    const int n = t.shape()[0];
    flat.push_back(ad::reshape(t, Shape{n, static_cast<int>(t.value().numel()) / n}));
  }
  return flat.size() == 1 ? flat[0] : ad::concat(flat);
}

}  // namespace tvsn::model
