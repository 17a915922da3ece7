#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tvsn/autodiff/tensor.hpp"

namespace tvsn::ad {

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while its graph lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const;
  int id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Gradient after Graph::backward; empty when the node did not need one.
  const Tensor& grad() const;

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

// Named parameters in insertion order. References stay valid as entries are
// added.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor init, bool frozen = false);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  std::vector<Parameter*> with_prefix(const std::string& prefix);

  void zero_grad();
  void set_frozen(const std::string& prefix, bool frozen);
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Define-by-run tape. Nodes are appended in evaluation order, so reverse
// creation order is a valid topological order for backward.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);  // leaf whose gradient is kept
  // Frozen parameters enter as constants. With `track` false the parameter is
  // also treated as constant for this graph.
  Var param(Parameter& p, bool track = true);

  // Op constructor: `fn` runs during backward when the result needs a gradient.
  Var make(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var make(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  bool requires_grad(const Var& v) const { return nodes_[static_cast<std::size_t>(v.id())].requires_grad; }
  // Gradient accumulator of `v`, zero-initialized on first use.
  Tensor& grad_of(const Var& v);

  void backward(const Var& loss);
  void backward(const Var& output, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace tvsn::ad
