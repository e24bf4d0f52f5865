#include "ntm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ntm/error.hpp"
#include "ntm/kernels.hpp"

namespace ntm::ad {

const Tensor& Var::value() const { return graph_->value(*this); }

Tensor& BackwardContext::input_grad(std::size_t i) {
  Tensor* slot = input_grads_[i];
  if (slot->empty() && !inputs_[i]->empty()) {
    *slot = Tensor(inputs_[i]->rows(), inputs_[i]->cols());
  }
  return *slot;
}

const Tensor& Gradients::operator[](Var leaf) const {
  const auto it = std::find(node_ids_.begin(), node_ids_.end(), leaf.id());
  if (it == node_ids_.end()) throw ContractError("gradient requested for a non-parameter node");
  return grads_[static_cast<std::size_t>(it - node_ids_.begin())];
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  parameters_.push_back(nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.graph() != this) throw ContractError("operands belong to different graphs");
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Graph::backward(Var loss) const {
  const Tensor& out = value(loss);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("backward requires a scalar loss, got " + out.shape_string());
  }
  std::vector<Tensor> grads(nodes_.size());
  grads[loss.id()] = Tensor::scalar(1.0);

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.backward || grads[id].empty()) continue;
    BackwardContext ctx;
    ctx.grad_ = &grads[id];
    ctx.output_ = &node.value;
    for (std::size_t input : node.inputs) {
      ctx.inputs_.push_back(&nodes_[input].value);
      ctx.input_grads_.push_back(nodes_[input].requires_grad ? &grads[input] : nullptr);
    }
    node.backward(ctx);
  }

  Gradients result;
  for (std::size_t id : parameters_) {
    const Tensor& v = nodes_[id].value;
    result.grads_.push_back(grads[id].empty() ? Tensor(v.rows(), v.cols())
                                              : std::move(grads[id]));
    result.node_ids_.push_back(id);
  }
  return result;
}

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shapes differ, " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

Tensor map(const Tensor& a, auto&& fn) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tensor out = kernels::matmul(a.value(), b.value());
  return a.graph().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
    if (ctx.needs_grad(0)) {
      accumulate(ctx.input_grad(0), kernels::matmul(ctx.grad(), ctx.input(1).transposed()));
    }
    if (ctx.needs_grad(1)) {
      accumulate(ctx.input_grad(1), kernels::matmul(ctx.input(0).transposed(), ctx.grad()));
    }
  });
}

Var transpose(Var a) {
  return a.graph().record(a.value().transposed(), {a}, [](BackwardContext& ctx) {
    accumulate(ctx.input_grad(0), ctx.grad().transposed());
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  accumulate(out, b.value());
  return a.graph().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
    for (std::size_t i = 0; i < 2; ++i)
      if (ctx.needs_grad(i)) accumulate(ctx.input_grad(i), ctx.grad());
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.graph().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
    if (ctx.needs_grad(0)) accumulate(ctx.input_grad(0), ctx.grad());
    if (ctx.needs_grad(1)) {
      Tensor& g = ctx.input_grad(1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= ctx.grad()[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    if (ctx.needs_grad(0)) {
      Tensor& ga = ctx.input_grad(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ctx.input(1)[i];
    }
    if (ctx.needs_grad(1)) {
      Tensor& gb = ctx.input_grad(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ctx.input(0)[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = map(a.value(), [factor](double v) { return v * factor; });
  return a.graph().record(std::move(out), {a}, [factor](BackwardContext& ctx) {
    Tensor& ga = ctx.input_grad(0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * ctx.grad()[i];
  });
}

Var add_scalar(Var a, double offset) {
  Tensor out = map(a.value(), [offset](double v) { return v + offset; });
  return a.graph().record(std::move(out), {a}, [](BackwardContext& ctx) {
    accumulate(ctx.input_grad(0), ctx.grad());
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("add_row: cannot broadcast " + rv.shape_string() + " over " +
                         av.shape_string());
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += rv[c];
  }
  return a.graph().record(std::move(out), {a, row}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    if (ctx.needs_grad(0)) accumulate(ctx.input_grad(0), g);
    if (ctx.needs_grad(1)) {
      Tensor& gr = ctx.input_grad(1);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    }
  });
}

Var activation(Var a, Activation kind) {
  const Tensor& x = a.value();
  Graph& graph = a.graph();
  switch (kind) {
    case Activation::identity:
      return graph.record(x, {a}, [](BackwardContext& ctx) {
        accumulate(ctx.input_grad(0), ctx.grad());
      });
    case Activation::sigmoid:
      return graph.record(map(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }), {a},
                          [](BackwardContext& ctx) {
                            Tensor& gx = ctx.input_grad(0);
                            const Tensor& y = ctx.output();
                            for (std::size_t i = 0; i < gx.size(); ++i)
                              gx[i] += ctx.grad()[i] * y[i] * (1.0 - y[i]);
                          });
    case Activation::relu:
      // Subgradient 0 at exactly 0.
      return graph.record(map(x, [](double v) { return v > 0.0 ? v : 0.0; }), {a},
                          [](BackwardContext& ctx) {
                            Tensor& gx = ctx.input_grad(0);
                            for (std::size_t i = 0; i < gx.size(); ++i)
                              if (ctx.input(0)[i] > 0.0) gx[i] += ctx.grad()[i];
                          });
    case Activation::exp:
      return graph.record(map(x, [](double v) { return std::exp(v); }), {a},
                          [](BackwardContext& ctx) {
                            Tensor& gx = ctx.input_grad(0);
                            for (std::size_t i = 0; i < gx.size(); ++i)
                              gx[i] += ctx.grad()[i] * ctx.output()[i];
                          });
    case Activation::log:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0) {
          throw DomainError("log of non-positive value " + std::to_string(x[i]) +
                            " at flat index " + std::to_string(i));
        }
      }
      return graph.record(map(x, [](double v) { return std::log(v); }), {a},
                          [](BackwardContext& ctx) {
                            Tensor& gx = ctx.input_grad(0);
                            for (std::size_t i = 0; i < gx.size(); ++i)
                              gx[i] += ctx.grad()[i] / ctx.input(0)[i];
                          });
    case Activation::softmax_rows:
      return graph.record(kernels::softmax_rows(x), {a}, [](BackwardContext& ctx) {
        const Tensor& y = ctx.output();
        const Tensor& g = ctx.grad();
        Tensor& gx = ctx.input_grad(0);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          const auto yr = y.row(r);
          const auto gr = g.row(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
          auto dst = gx.row(r);
          for (std::size_t c = 0; c < yr.size(); ++c) dst[c] += yr[c] * (gr[c] - dot);
        }
      });
  }
  throw ContractError("unknown activation");
}

Var clamp_min(Var a, double floor) {
  Tensor out = map(a.value(), [floor](double v) { return v < floor ? floor : v; });
  return a.graph().record(std::move(out), {a}, [floor](BackwardContext& ctx) {
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(ctx.input(0)[i] < floor)) gx[i] += ctx.grad()[i];
  });
}

Var normalize_rows(Var a, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("normalize_rows: epsilon must be positive");
  const Tensor& x = a.value();
  Tensor out = x;
  std::vector<double> norms(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double sq = 0.0;
    for (double v : x.row(r)) sq += v * v;
    norms[r] = std::sqrt(sq);
    if (norms[r] < epsilon) continue;
    for (double& v : out.row(r)) v /= norms[r];
  }
  return a.graph().record(std::move(out), {a},
                          [norms = std::move(norms), epsilon](BackwardContext& ctx) {
    const Tensor& y = ctx.output();
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      if (norms[r] < epsilon) continue;
      const auto yr = y.row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
      auto dst = gx.row(r);
      for (std::size_t c = 0; c < yr.size(); ++c) dst[c] += (gr[c] - yr[c] * dot) / norms[r];
    }
  });
}

Var normalize_cols(Var a, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("normalize_cols: epsilon must be positive");
  const Tensor& x = a.value();
  std::vector<double> norms(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) norms[c] += x(r, c) * x(r, c);
  for (double& n : norms) n = std::sqrt(n);
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (norms[c] >= epsilon) out(r, c) /= norms[c];
  return a.graph().record(std::move(out), {a},
                          [norms = std::move(norms), epsilon](BackwardContext& ctx) {
    const Tensor& y = ctx.output();
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    std::vector<double> dots(y.cols(), 0.0);
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t c = 0; c < y.cols(); ++c) dots[c] += g(r, c) * y(r, c);
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t c = 0; c < y.cols(); ++c)
        if (norms[c] >= epsilon) gx(r, c) += (g(r, c) - y(r, c) * dots[c]) / norms[c];
  });
}

Var reduce(Var a, Reduction op, Axis axis) {
  const Tensor& x = a.value();
  Tensor out;
  double divisor = 1.0;
  switch (axis) {
    case Axis::all: {
      double total = 0.0;
      for (double v : x.values()) total += v;
      out = Tensor::scalar(total);
      divisor = static_cast<double>(x.size());
      break;
    }
    case Axis::rows:
      out = Tensor(1, x.cols());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c);
      divisor = static_cast<double>(x.rows());
      break;
    case Axis::cols:
      out = Tensor(x.rows(), 1);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (double v : x.row(r)) out[r] += v;
      divisor = static_cast<double>(x.cols());
      break;
  }
  const double factor = op == Reduction::mean ? 1.0 / divisor : 1.0;
  if (factor != 1.0)
    for (double& v : out.values()) v *= factor;

  return a.graph().record(std::move(out), {a}, [axis, factor](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t r = 0; r < gx.rows(); ++r) {
      for (std::size_t c = 0; c < gx.cols(); ++c) {
        const double upstream = axis == Axis::all    ? g[0]
                                : axis == Axis::rows ? g[c]
                                                     : g[r];
        gx(r, c) += factor * upstream;
      }
    }
  });
}

double grad_check(const LossBuilder& builder, std::vector<Tensor> params, double step) {
  if (!(step > 0.0)) throw ContractError("grad_check: step must be positive");

  auto evaluate = [&](bool with_gradients, Gradients* grads) {
    Graph graph;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Tensor& p : params) leaves.push_back(graph.parameter(p));
    Var loss = builder(graph, leaves);
    if (with_gradients) *grads = graph.backward(loss);
    return loss.value().item();
  };

  Gradients analytic;
  evaluate(true, &analytic);

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double original = params[p][i];
      params[p][i] = original + step;
      const double up = evaluate(false, nullptr);
      params[p][i] = original - step;
      const double down = evaluate(false, nullptr);
      params[p][i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic.at(p)[i];
      const double denom = std::max({1.0, std::abs(exact), std::abs(numeric)});
      worst = std::max(worst, std::abs(exact - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace ntm::ad
