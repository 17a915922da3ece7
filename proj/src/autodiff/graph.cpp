#include "tvsn/autodiff/graph.hpp"

#include <cassert>

#include "tvsn/core/error.hpp"

namespace tvsn::ad {

Graph& Var::graph() const {
  if (graph_ == nullptr) fail(ErrorKind::State, "use of an unbound variable");
  return *graph_;
}

const Tensor& Var::value() const { return graph().nodes_[static_cast<std::size_t>(id_)].value; }

const Tensor& Var::grad() const { return graph().nodes_[static_cast<std::size_t>(id_)].grad; }

Parameter& ParameterStore::add(const std::string& name, Tensor init, bool frozen) {
  if (contains(name)) fail(ErrorKind::Parameter, "duplicate parameter name: " + name);
  index_[name] = params_.size();
  Tensor grad(init.shape());
  params_.push_back({name, std::move(init), std::move(grad), frozen});
  return params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::Lookup, "unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::Lookup, "unknown parameter: " + name);
  return params_[it->second];
}

std::vector<Parameter*> ParameterStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p.name.starts_with(prefix)) out.push_back(&p);
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0f);
}

void ParameterStore::set_frozen(const std::string& prefix, bool frozen) {
  for (auto* p : with_prefix(prefix)) p->frozen = frozen;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

Var Graph::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, false, {}, nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::variable(Tensor value) {
  nodes_.push_back({std::move(value), {}, true, {}, nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::param(Parameter& p, bool track) {
  const bool live = track && !p.frozen;
  nodes_.push_back({p.value, {}, live, {}, live ? &p : nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::make(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  return make(std::move(value), std::vector<Var>(parents), std::move(fn));
}

Var Graph::make(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
#ifndef NDEBUG
  assert(value.all_finite() && "non-finite value produced by an autodiff op");
#endif
  bool needs = false;
  for (const auto& p : parents) {
    if (p.graph_ != this) fail(ErrorKind::State, "variable from a different graph");
    needs = needs || requires_grad(p);
  }
  nodes_.push_back({std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}, nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Graph::grad_of(const Var& v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.grad.empty() && n.value.numel() > 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(const Var& loss) {
  if (!loss.valid()) fail(ErrorKind::State, "backward called before any forward computation");
  if (loss.value().numel() != 1) {
    fail(ErrorKind::Shape, "backward without a seed needs a scalar loss, got " + loss.shape().str());
  }
  backward(loss, Tensor(loss.shape(), 1.0f));
}

void Graph::backward(const Var& output, const Tensor& seed) {
  if (!output.valid()) fail(ErrorKind::State, "backward called before any forward computation");
  if (output.graph_ != this) fail(ErrorKind::State, "backward on a variable from a different graph");
  if (consumed_) fail(ErrorKind::State, "backward already ran on this graph");
  if (!(seed.shape() == output.shape())) {
    fail(ErrorKind::Shape, "seed shape " + seed.shape().str() + " != output shape " + output.shape().str());
  }
  consumed_ = true;
  grad_of(output) = seed;
  for (int id = output.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      float* dst = n.param->grad.data();
      const float* src = n.grad.data();
      for (std::size_t i = 0; i < n.grad.numel(); ++i) dst[i] += src[i];
    }
  }
}

}  // namespace tvsn::ad
