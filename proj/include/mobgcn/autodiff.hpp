#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/matrix.hpp"

namespace mobgcn::ad {

using NodeId = std::size_t;

/// Reverse-mode tape over dense matrices. Values are recorded eagerly;
/// backward() runs the pullbacks in reverse creation order, accumulating
/// additively over fan-out.
class Tape {
 public:
  NodeId constant(Matrix v) { return push(std::move(v), false); }

  NodeId parameter(Matrix v) {
    const NodeId id = push(std::move(v), true);
    params_.push_back(id);
    return id;
  }

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  const Matrix& grad(NodeId id) const { return nodes_[id].grad; }
  const std::vector<NodeId>& parameters() const { return params_; }

  NodeId matmul(NodeId a, NodeId b) {
    const NodeId out = push(mobgcn::matmul(value(a), value(b)), false);
    nodes_[out].pullback = [this, a, b, out]() {
      const Matrix& g = nodes_[out].grad;
      accumulate(a, mobgcn::matmul(g, mobgcn::transpose(nodes_[b].value)));
      accumulate(b, mobgcn::matmul(mobgcn::transpose(nodes_[a].value), g));
    };
    return out;
  }

  NodeId add(NodeId a, NodeId b) {
    const NodeId out = push(mobgcn::add(value(a), value(b)), false);
    nodes_[out].pullback = [this, a, b, out]() {
      accumulate(a, nodes_[out].grad);
      accumulate(b, nodes_[out].grad);
    };
    return out;
  }

  /// a: n x c, bias: 1 x c broadcast over rows.
  NodeId add_rowvec(NodeId a, NodeId bias) {
    const Matrix& av = value(a);
    const Matrix& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != av.cols())
      throw ShapeError("add_rowvec: bias must be 1 x cols(a)");
    Matrix v = av;
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) += bv(0, j);
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, bias, out]() {
      const Matrix& g = nodes_[out].grad;
      accumulate(a, g);
      Matrix gb(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      accumulate(bias, gb);
    };
    return out;
  }

  NodeId transpose(NodeId a) {
    const NodeId out = push(mobgcn::transpose(value(a)), false);
    nodes_[out].pullback = [this, a, out]() {
      accumulate(a, mobgcn::transpose(nodes_[out].grad));
    };
    return out;
  }

  NodeId relu(NodeId a) {
    Matrix v = value(a);
    for (double& x : v.raw()) x = x > 0 ? x : 0.0;
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, out]() {
      const Matrix& g = nodes_[out].grad;
      Matrix da(g.rows(), g.cols());
      const Matrix& x = nodes_[a].value;
      for (std::size_t i = 0; i < g.size(); ++i)
        da.raw()[i] = x.raw()[i] > 0 ? g.raw()[i] : 0.0;  // subgradient at 0 is 0
      accumulate(a, da);
    };
    return out;
  }

  NodeId row_softmax(NodeId a) {
    const Matrix& x = value(a);
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double mx = -1e300;
      for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
      double denom = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) {
        y(i, j) = std::exp(x(i, j) - mx);
        denom += y(i, j);
      }
      for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) /= denom;
    }
    const NodeId out = push(std::move(y), false);
    nodes_[out].pullback = [this, a, out]() {
      const Matrix& g = nodes_[out].grad;
      const Matrix& yv = nodes_[out].value;
      Matrix da(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * yv(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j) da(i, j) = yv(i, j) * (g(i, j) - dot);
      }
      accumulate(a, da);
    };
    return out;
  }

  NodeId row_l2_normalize(NodeId a, double eps = 1e-12) {
    const Matrix& x = value(a);
    Matrix y(x.rows(), x.cols());
    std::vector<double> norms(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j) * x(i, j);
      norms[i] = std::sqrt(s + eps);
      for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(i, j) / norms[i];
    }
    const NodeId out = push(std::move(y), false);
    nodes_[out].pullback = [this, a, out, norms]() {
      const Matrix& g = nodes_[out].grad;
      const Matrix& x = nodes_[a].value;
      Matrix da(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * x(i, j);
        const double r = norms[i];
        for (std::size_t j = 0; j < g.cols(); ++j)
          da(i, j) = g(i, j) / r - x(i, j) * dot / (r * r * r);
      }
      accumulate(a, da);
    };
    return out;
  }

  NodeId elementwise_mul(NodeId a, NodeId b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (!av.same_shape(bv)) throw ShapeError("elementwise_mul: shape mismatch");
    Matrix v = av;
    for (std::size_t i = 0; i < v.size(); ++i) v.raw()[i] *= bv.raw()[i];
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, b, out]() {
      const Matrix& g = nodes_[out].grad;
      Matrix da = g, db = g;
      for (std::size_t i = 0; i < g.size(); ++i) {
        da.raw()[i] *= nodes_[b].value.raw()[i];
        db.raw()[i] *= nodes_[a].value.raw()[i];
      }
      accumulate(a, da);
      accumulate(b, db);
    };
    return out;
  }

  /// Elementwise 1/sqrt(x + eps); used for guarded degree normalization.
  NodeId elementwise_rsqrt(NodeId a, double eps = 1e-12) {
    Matrix v = value(a);
    for (double& x : v.raw()) x = 1.0 / std::sqrt(x + eps);
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, out]() {
      const Matrix& g = nodes_[out].grad;
      const Matrix& y = nodes_[out].value;
      Matrix da(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i)
        da.raw()[i] = -0.5 * y.raw()[i] * y.raw()[i] * y.raw()[i] * g.raw()[i];
      accumulate(a, da);
    };
    return out;
  }

  NodeId sum(NodeId a) {
    double s = 0.0;
    for (double x : value(a).raw()) s += x;
    const NodeId out = push(Matrix(1, 1, s), false);
    nodes_[out].pullback = [this, a, out]() {
      const double g = nodes_[out].grad(0, 0);
      accumulate(a, Matrix(nodes_[a].value.rows(), nodes_[a].value.cols(), g));
    };
    return out;
  }

  NodeId mean(NodeId a) {
    const std::size_t n = value(a).size();
    double s = 0.0;
    for (double x : value(a).raw()) s += x;
    const NodeId out = push(Matrix(1, 1, s / static_cast<double>(n)), false);
    nodes_[out].pullback = [this, a, out, n]() {
      const double g = nodes_[out].grad(0, 0) / static_cast<double>(n);
      accumulate(a, Matrix(nodes_[a].value.rows(), nodes_[a].value.cols(), g));
    };
    return out;
  }

  NodeId log(NodeId a, double clamp = 1e-12) {
    Matrix v = value(a);
    for (double& x : v.raw()) x = std::log(x < clamp ? clamp : x);
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, out, clamp]() {
      const Matrix& g = nodes_[out].grad;
      const Matrix& x = nodes_[a].value;
      Matrix da(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i)
        da.raw()[i] = x.raw()[i] > clamp ? g.raw()[i] / x.raw()[i] : 0.0;
      accumulate(a, da);
    };
    return out;
  }

  NodeId scalar_mul(NodeId a, double s) {
    Matrix v = value(a);
    for (double& x : v.raw()) x *= s;
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, out, s]() {
      Matrix g = nodes_[out].grad;
      for (double& x : g.raw()) x *= s;
      accumulate(a, g);
    };
    return out;
  }

  NodeId concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty input");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    for (NodeId p : parts) {
      if (value(p).rows() != rows) throw ShapeError("concat_cols: row mismatch");
      cols += value(p).cols();
    }
    Matrix v(rows, cols);
    std::size_t off = 0;
    for (NodeId p : parts) {
      const Matrix& pv = value(p);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < pv.cols(); ++j) v(i, off + j) = pv(i, j);
      off += pv.cols();
    }
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, parts, out]() {
      const Matrix& g = nodes_[out].grad;
      std::size_t off = 0;
      for (NodeId p : parts) {
        const Matrix& pv = nodes_[p].value;
        Matrix gp(pv.rows(), pv.cols());
        for (std::size_t i = 0; i < pv.rows(); ++i)
          for (std::size_t j = 0; j < pv.cols(); ++j) gp(i, j) = g(i, off + j);
        accumulate(p, gp);
        off += pv.cols();
      }
    };
    return out;
  }

  NodeId gather_rows(NodeId a, std::vector<std::size_t> idx) {
    const Matrix& x = value(a);
    Matrix v(idx.size(), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= x.rows()) throw ShapeError("gather_rows: index out of range");
      for (std::size_t j = 0; j < x.cols(); ++j) v(i, j) = x(idx[i], j);
    }
    const NodeId out = push(std::move(v), false);
    nodes_[out].pullback = [this, a, out, idx = std::move(idx)]() {
      const Matrix& g = nodes_[out].grad;
      Matrix da(nodes_[a].value.rows(), nodes_[a].value.cols());
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) da(idx[i], j) += g(i, j);
      accumulate(a, da);
    };
    return out;
  }

  void backward(NodeId loss) {
    if (value(loss).rows() != 1 || value(loss).cols() != 1)
      throw ContractError("backward: loss must be a scalar");
    for (auto& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_[loss].grad(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;)
      if (nodes_[i].pullback) nodes_[i].pullback();
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> pullback;
    bool is_param = false;
  };

  NodeId push(Matrix v, bool is_param) {
    nodes_.push_back(Node{std::move(v), Matrix(), nullptr, is_param});
    return nodes_.size() - 1;
  }

  void accumulate(NodeId id, const Matrix& g) {
    Matrix& dst = nodes_[id].grad;
    if (!dst.same_shape(g)) throw ShapeError("accumulate: gradient shape mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst.raw()[i] += g.raw()[i];
  }

  std::vector<Node> nodes_;
  std::vector<NodeId> params_;
};

/// Runs reverse accumulation and returns the gradient of every registered
/// parameter, in registration order.
inline std::vector<Matrix> gradient(Tape& tape, NodeId loss) {
  tape.backward(loss);
  std::vector<Matrix> grads;
  grads.reserve(tape.parameters().size());
  for (NodeId p : tape.parameters()) grads.push_back(tape.grad(p));
  return grads;
}

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long t = 0;
};

inline void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                      AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: param/grad count mismatch");
  if (state.m.empty()) {
    for (const Matrix& p : params) {
      state.m.emplace_back(p.rows(), p.cols());
      state.v.emplace_back(p.rows(), p.cols());
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(grads[k])) throw ShapeError("adam_step: shape mismatch");
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k].raw()[i];
      double& m = state.m[k].raw()[i];
      double& v = state.v[k].raw()[i];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      params[k].raw()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace mobgcn::ad
