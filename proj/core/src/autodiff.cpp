#include "pcmc/autodiff.hpp"

#include <cmath>
#include <string>

#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

namespace pcmc::autodiff {

namespace {

enum OpCode : std::uint8_t {
  kConstant,
  kParameter,
  kAdd,
  kAddRowVector,
  kScale,
  kMatmul,
  kConcatCols,
  kGatherRows,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kTanh,
  kDropout,
  kClampMinZeroPlusConst,
  kOffDiagonalFromPairs,
  kRowNegSumDiagonal,
  kReplaceLastColumnOnes,
  kLinearSolve,
  kPick,
  kLog,
  kFloorAt,
  kDotConst,
  kMeanOf,
};

[[noreturn]] void shape_error(const std::string& op) {
  throw ValidationError("autodiff: shape mismatch in " + op);
}

// y += a * b, all row-major. Inner loop over columns of b for locality.
void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& y) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* ad = a.flat().data();
  const double* bd = b.flat().data();
  double* yd = y.flat().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd + p * m;
      double* yrow = yd + i * m;
      for (std::size_t j = 0; j < m; ++j) yrow[j] += av * brow[j];
    }
  }
}

// y += a * b^T: (n,k) x (m,k)^T -> (n,m).
void matmul_bt_accumulate(const Tensor& a, const Tensor& b, Tensor& y) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  const double* ad = a.flat().data();
  const double* bd = b.flat().data();
  double* yd = y.flat().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = ad + i * k;
    double* yrow = yd + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = bd + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      yrow[j] += s;
    }
  }
}

// y += a^T * b: (n,k)^T x (n,m) -> (k,m).
void matmul_at_accumulate(const Tensor& a, const Tensor& b, Tensor& y) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* ad = a.flat().data();
  const double* bd = b.flat().data();
  double* yd = y.flat().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = ad + i * k;
    const double* brow = bd + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* yrow = yd + p * m;
      for (std::size_t j = 0; j < m; ++j) yrow[j] += av * brow[j];
    }
  }
}

}  // namespace

Var Graph::push(Node node) {
  if (ran_backward_) {
    throw ValidationError("autodiff: graph is frozen after backward()");
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ValidationError("autodiff: invalid node handle");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Graph::constant(Tensor v) {
  Node n;
  n.op = kConstant;
  n.value = std::move(v);
  return push(std::move(n));
}

Var Graph::parameter(const Tensor& p) {
  Node n;
  n.op = kParameter;
  n.value = p;
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb)) shape_error("add");
  Node n;
  n.op = kAdd;
  n.inputs = {a.id, b.id};
  n.value = va;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += vb[i];
  return push(std::move(n));
}

Var Graph::add_row_vector(Var m, Var r) {
  const Tensor& vm = node(m).value;
  const Tensor& vr = node(r).value;
  if (vr.rows() != 1 || vr.cols() != vm.cols()) shape_error("add_row_vector");
  Node n;
  n.op = kAddRowVector;
  n.inputs = {m.id, r.id};
  n.value = vm;
  for (std::size_t i = 0; i < vm.rows(); ++i) {
    for (std::size_t j = 0; j < vm.cols(); ++j) n.value(i, j) += vr(0, j);
  }
  return push(std::move(n));
}

Var Graph::scale(Var a, double c) {
  Node n;
  n.op = kScale;
  n.inputs = {a.id};
  n.a = c;
  n.value = node(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= c;
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (va.cols() != vb.rows()) shape_error("matmul");
  Node n;
  n.op = kMatmul;
  n.inputs = {a.id, b.id};
  n.value = Tensor(va.rows(), vb.cols());
  matmul_accumulate(va, vb, n.value);
  return push(std::move(n));
}

Var Graph::concat_cols(std::span<const Var> xs) {
  if (xs.empty()) throw ValidationError("autodiff: concat_cols of nothing");
  const std::size_t rows = node(xs[0]).value.rows();
  std::size_t cols = 0;
  for (Var x : xs) {
    if (node(x).value.rows() != rows) shape_error("concat_cols");
    cols += node(x).value.cols();
  }
  Node n;
  n.op = kConcatCols;
  for (Var x : xs) n.inputs.push_back(x.id);
  n.value = Tensor(rows, cols);
  std::size_t off = 0;
  for (Var x : xs) {
    const Tensor& v = node(x).value;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) n.value(i, off + j) = v(i, j);
    }
    off += v.cols();
  }
  return push(std::move(n));
}

Var Graph::gather_rows(Var x, std::vector<std::size_t> idx) {
  const Tensor& vx = node(x).value;
  for (std::size_t i : idx) {
    if (i >= vx.rows()) {
      throw ValidationError("autodiff: gather_rows index " + std::to_string(i) +
                            " out of range (rows = " + std::to_string(vx.rows()) + ")");
    }
  }
  Node n;
  n.op = kGatherRows;
  n.inputs = {x.id};
  n.value = Tensor(idx.size(), vx.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < vx.cols(); ++j) n.value(i, j) = vx(idx[i], j);
  }
  n.indices = std::move(idx);
  return push(std::move(n));
}

Var Graph::relu(Var x) {
  Node n;
  n.op = kRelu;
  n.inputs = {x.id};
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    if (n.value[i] < 0.0) n.value[i] = 0.0;
  }
  return push(std::move(n));
}

Var Graph::leaky_relu(Var x, double slope) {
  Node n;
  n.op = kLeakyRelu;
  n.inputs = {x.id};
  n.a = slope;
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    if (n.value[i] < 0.0) n.value[i] *= slope;
  }
  return push(std::move(n));
}

Var Graph::sigmoid(Var x) {
  Node n;
  n.op = kSigmoid;
  n.inputs = {x.id};
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = 1.0 / (1.0 + std::exp(-n.value[i]));
  }
  return push(std::move(n));
}

Var Graph::tanh(Var x) {
  Node n;
  n.op = kTanh;
  n.inputs = {x.id};
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(n.value[i]);
  return push(std::move(n));
}

Var Graph::dropout(Var x, double p, bool train_mode) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ValidationError("autodiff: dropout probability must lie in [0, 1)");
  }
  if (!train_mode || p == 0.0) return x;
  Node n;
  n.op = kDropout;
  n.inputs = {x.id};
  n.a = p;
  n.value = node(x).value;
  n.mask.resize(n.value.size());
  const double keep_scale = 1.0 / (1.0 - p);
  const std::uint64_t draw = dropout_counter_++;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    const bool keep = rng::hash3_uniform(dropout_seed_, draw, i) >= p;
    n.mask[i] = keep ? 1 : 0;
    n.value[i] = keep ? n.value[i] * keep_scale : 0.0;
  }
  return push(std::move(n));
}

Var Graph::clamp_min_zero_plus_const(Var x, double eps) {
  if (!(eps > 0.0)) throw ValidationError("autodiff: clamp eps must be positive");
  Node n;
  n.op = kClampMinZeroPlusConst;
  n.inputs = {x.id};
  n.a = eps;
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = (n.value[i] > 0.0 ? n.value[i] : 0.0) + eps;
  }
  return push(std::move(n));
}

Var Graph::off_diagonal_from_pairs(Var rates, std::size_t n) {
  const Tensor& vr = node(rates).value;
  if (vr.cols() != 1 || vr.rows() != n * (n - 1)) shape_error("off_diagonal_from_pairs");
  Node nd;
  nd.op = kOffDiagonalFromPairs;
  nd.inputs = {rates.id};
  nd.value = Tensor(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) nd.value(i, j) = vr(k++, 0);
    }
  }
  return push(std::move(nd));
}

Var Graph::row_neg_sum_diagonal(Var x) {
  const Tensor& vx = node(x).value;
  if (vx.rows() != vx.cols()) shape_error("row_neg_sum_diagonal");
  Node n;
  n.op = kRowNegSumDiagonal;
  n.inputs = {x.id};
  n.value = vx;
  const std::size_t m = vx.rows();
  for (std::size_t i = 0; i < m; ++i) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) s += vx(i, j);
    }
    n.value(i, i) = static_cast<double>(-s);
  }
  return push(std::move(n));
}

Var Graph::replace_last_column_ones(Var x) {
  const Tensor& vx = node(x).value;
  if (vx.rows() != vx.cols() || vx.rows() == 0) shape_error("replace_last_column_ones");
  Node n;
  n.op = kReplaceLastColumnOnes;
  n.inputs = {x.id};
  n.value = vx;
  for (std::size_t i = 0; i < vx.rows(); ++i) n.value(i, vx.cols() - 1) = 1.0;
  return push(std::move(n));
}

Var Graph::linear_solve(Var a, Var b) {
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (va.rows() != va.cols() || vb.rows() != 1 || vb.cols() != va.rows()) {
    shape_error("linear_solve");
  }
  Node n;
  n.op = kLinearSolve;
  n.inputs = {a.id, b.id};
  n.lu = std::make_shared<linalg::LuDecomposition>(va);
  n.value = Tensor::row(n.lu->solve_transposed(vb.flat()));
  return push(std::move(n));
}

Var Graph::pick(Var x, std::size_t r, std::size_t c) {
  const Tensor& vx = node(x).value;
  if (r >= vx.rows() || c >= vx.cols()) shape_error("pick");
  Node n;
  n.op = kPick;
  n.inputs = {x.id};
  n.r = r;
  n.c = c;
  n.value = Tensor::scalar(vx(r, c));
  return push(std::move(n));
}

Var Graph::log(Var x) {
  Node n;
  n.op = kLog;
  n.inputs = {x.id};
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::log(n.value[i]);
  return push(std::move(n));
}

Var Graph::floor_at(Var x, double floor) {
  Node n;
  n.op = kFloorAt;
  n.inputs = {x.id};
  n.a = floor;
  n.value = node(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    if (n.value[i] < floor) {
      n.value[i] = floor;
      ++n.hits;
    }
  }
  return push(std::move(n));
}

Var Graph::dot_const(Var x, std::vector<double> weights) {
  const Tensor& vx = node(x).value;
  if (weights.size() != vx.size()) shape_error("dot_const");
  Node n;
  n.op = kDotConst;
  n.inputs = {x.id};
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * vx[i];
  n.value = Tensor::scalar(s);
  n.weights = std::move(weights);
  return push(std::move(n));
}

Var Graph::mean_of(std::span<const Var> scalars) {
  if (scalars.empty()) throw ValidationError("autodiff: mean_of nothing");
  Node n;
  n.op = kMeanOf;
  double s = 0.0;
  for (Var v : scalars) {
    if (node(v).value.size() != 1) shape_error("mean_of");
    n.inputs.push_back(v.id);
    s += node(v).value[0];
  }
  n.value = Tensor::scalar(s / static_cast<double>(scalars.size()));
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

double Graph::scalar_value(Var v) const {
  const Tensor& t = node(v).value;
  if (t.size() != 1) throw ValidationError("autodiff: not a scalar node");
  return t[0];
}

const Tensor& Graph::grad(Var v) const {
  node(v);  // validates the handle
  if (!ran_backward_) throw ValidationError("autodiff: backward() has not run");
  return grads_[static_cast<std::size_t>(v.id)];
}

std::size_t Graph::floor_hits(Var v) const { return node(v).hits; }

void Graph::backward(Var loss) {
  const Node& ln = node(loss);
  if (ln.value.size() != 1) throw ValidationError("autodiff: loss must be scalar");
  if (ran_backward_) throw ValidationError("autodiff: backward() already ran");
  ran_backward_ = true;

  grads_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    grads_[i] = Tensor(nodes_[i].value.rows(), nodes_[i].value.cols());
  }
  grads_[static_cast<std::size_t>(loss.id)][0] = 1.0;

  for (std::size_t ni = static_cast<std::size_t>(loss.id) + 1; ni-- > 0;) {
    const Node& n = nodes_[ni];
    const Tensor& g = grads_[ni];
    switch (n.op) {
      case kConstant:
      case kParameter:
        break;
      case kAdd: {
        Tensor& ga = grads_[n.inputs[0]];
        Tensor& gb = grads_[n.inputs[1]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case kAddRowVector: {
        Tensor& gm = grads_[n.inputs[0]];
        Tensor& gr = grads_[n.inputs[1]];
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) {
            gm(i, j) += g(i, j);
            gr(0, j) += g(i, j);
          }
        }
        break;
      }
      case kScale: {
        Tensor& ga = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.a * g[i];
        break;
      }
      case kMatmul: {
        const Tensor& va = nodes_[n.inputs[0]].value;
        const Tensor& vb = nodes_[n.inputs[1]].value;
        matmul_bt_accumulate(g, vb, grads_[n.inputs[0]]);
        matmul_at_accumulate(va, g, grads_[n.inputs[1]]);
        break;
      }
      case kConcatCols: {
        std::size_t off = 0;
        for (std::int32_t in : n.inputs) {
          Tensor& gi = grads_[in];
          for (std::size_t i = 0; i < gi.rows(); ++i) {
            for (std::size_t j = 0; j < gi.cols(); ++j) gi(i, j) += g(i, off + j);
          }
          off += gi.cols();
        }
        break;
      }
      case kGatherRows: {
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < n.indices.size(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) gx(n.indices[i], j) += g(i, j);
        }
        break;
      }
      case kRelu: {
        const Tensor& vx = nodes_[n.inputs[0]].value;
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (vx[i] > 0.0) gx[i] += g[i];
        }
        break;
      }
      case kLeakyRelu: {
        const Tensor& vx = nodes_[n.inputs[0]].value;
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] * (vx[i] > 0.0 ? 1.0 : n.a);
        }
        break;
      }
      case kSigmoid: {
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        }
        break;
      }
      case kTanh: {
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        }
        break;
      }
      case kDropout: {
        Tensor& gx = grads_[n.inputs[0]];
        const double keep_scale = 1.0 / (1.0 - n.a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (n.mask[i]) gx[i] += g[i] * keep_scale;
        }
        break;
      }
      case kClampMinZeroPlusConst: {
        const Tensor& vx = nodes_[n.inputs[0]].value;
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (vx[i] > 0.0) gx[i] += g[i];
        }
        break;
      }
      case kOffDiagonalFromPairs: {
        Tensor& gx = grads_[n.inputs[0]];
        const std::size_t m = g.rows();
        std::size_t k = 0;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            if (j != i) gx(k++, 0) += g(i, j);
          }
        }
        break;
      }
      case kRowNegSumDiagonal: {
        Tensor& gx = grads_[n.inputs[0]];
        const std::size_t m = g.rows();
        for (std::size_t i = 0; i < m; ++i) {
          const double gd = g(i, i);
          for (std::size_t j = 0; j < m; ++j) {
            if (j != i) gx(i, j) += g(i, j) - gd;
          }
        }
        break;
      }
      case kReplaceLastColumnOnes: {
        Tensor& gx = grads_[n.inputs[0]];
        const std::size_t m = g.rows();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j + 1 < m; ++j) gx(i, j) += g(i, j);
        }
        break;
      }
      case kLinearSolve: {
        const std::vector<double> lambda = n.lu->solve(g.flat());
        Tensor& ga = grads_[n.inputs[0]];
        Tensor& gb = grads_[n.inputs[1]];
        const std::size_t m = n.value.cols();
        for (std::size_t j = 0; j < m; ++j) gb(0, j) += lambda[j];
        for (std::size_t i = 0; i < m; ++i) {
          const double xi = n.value(0, i);
          if (xi == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) ga(i, j) -= xi * lambda[j];
        }
        break;
      }
      case kPick: {
        grads_[n.inputs[0]](n.r, n.c) += g[0];
        break;
      }
      case kLog: {
        const Tensor& vx = nodes_[n.inputs[0]].value;
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / vx[i];
        break;
      }
      case kFloorAt: {
        const Tensor& vx = nodes_[n.inputs[0]].value;
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (vx[i] > n.a) gx[i] += g[i];
        }
        break;
      }
      case kDotConst: {
        Tensor& gx = grads_[n.inputs[0]];
        for (std::size_t i = 0; i < n.weights.size(); ++i) gx[i] += g[0] * n.weights[i];
        break;
      }
      case kMeanOf: {
        const double share = g[0] / static_cast<double>(n.inputs.size());
        for (std::int32_t in : n.inputs) grads_[in][0] += share;
        break;
      }
      default:
        throw NumericError("autodiff: unknown op in backward");
    }
  }
}

}  // namespace pcmc::autodiff
