#include "tvsn/autodiff/optimizer.hpp"

#include <cmath>

#include "tvsn/core/error.hpp"

namespace tvsn::ad {

Adam::Adam(ParameterStore& store, std::string prefix, AdamConfig config)
    : prefix_(std::move(prefix)), config_(config), params_(store.with_prefix(prefix_)) {
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) || !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    fail(ErrorKind::Parameter, "adam betas must lie in [0, 1)");
  }
  if (!(config_.schedule.initial > 0.0) || !(config_.schedule.after > 0.0)) {
    fail(ErrorKind::Parameter, "learning rates must be positive");
  }
  if (params_.empty()) fail(ErrorKind::Lookup, "no parameters with prefix '" + prefix_ + "'");
  for (const auto* p : params_) {
    m_.emplace_back(p->value.numel(), 0.0f);
    v_.emplace_back(p->value.numel(), 0.0f);
  }
}

void Adam::step() {
  const double lr = config_.schedule.at(step_);
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const auto alpha = static_cast<float>(lr * std::sqrt(c2) / c1);
  const auto eps = static_cast<float>(config_.eps * std::sqrt(c2));
  const auto fb1 = static_cast<float>(b1);
  const auto fb2 = static_cast<float>(b2);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (p.frozen) continue;
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      m[i] = fb1 * m[i] + (1.0f - fb1) * g[i];
      v[i] = fb2 * v[i] + (1.0f - fb2) * g[i] * g[i];
      w[i] -= alpha * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

void Adam::save(TensorFile& file, const std::string& tag) const {
  file.add(tag + ".step", {1}, {static_cast<float>(step_)});
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto n = static_cast<std::uint32_t>(m_[k].size());
    file.add(tag + ".m." + params_[k]->name, {n}, m_[k]);
    file.add(tag + ".v." + params_[k]->name, {n}, v_[k]);
  }
}

void Adam::load(const TensorFile& file, const std::string& tag) {
  step_ = std::lround(file.at(tag + ".step").data.at(0));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& m = file.at(tag + ".m." + params_[k]->name).data;
    const auto& v = file.at(tag + ".v." + params_[k]->name).data;
    if (m.size() != m_[k].size() || v.size() != v_[k].size()) {
      fail(ErrorKind::Format, "optimizer state size mismatch for " + params_[k]->name);
    }
    m_[k] = m;
    v_[k] = v;
  }
}

}  // namespace tvsn::ad
