#ifndef PCMC_AUTODIFF_HPP
#define PCMC_AUTODIFF_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pcmc/linalg.hpp"
#include "pcmc/tensor.hpp"

namespace pcmc::autodiff {

// Handle to a node on a Graph's tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape with exactly the operator set PCMC-Net needs.
//
// Nodes reference strictly earlier nodes, so the tape is topologically
// ordered by construction and backward() is a single reverse sweep.
// One graph per training step; values are double precision throughout.
// No broadcasting: every shape alignment is an explicit operator.
class Graph {
 public:
  explicit Graph(std::uint64_t dropout_seed = 0) : dropout_seed_(dropout_seed) {}

  // Leaves.
  Var constant(Tensor v);
  Var parameter(const Tensor& p);

  // Elementwise and linear algebra.
  Var add(Var a, Var b);                      // same shape
  Var add_row_vector(Var m, Var r);           // (n,k) + (1,k), row-wise
  Var scale(Var a, double c);
  Var matmul(Var a, Var b);                   // (n,k) x (k,m)
  Var concat_cols(std::span<const Var> xs);   // equal row counts
  Var gather_rows(Var x, std::vector<std::size_t> idx);
  Var embedding_lookup(Var table, std::vector<std::size_t> idx) {
    return gather_rows(table, std::move(idx));
  }

  // Activations.
  Var relu(Var x);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  Var tanh(Var x);

  // Train-mode dropout zeroes entries with probability p and rescales the
  // survivors by 1/(1-p); the mask is recorded on the tape so backward
  // replays it. Eval mode is the identity (no node is emitted).
  Var dropout(Var x, double p, bool train_mode);

  // Rate-floor op: max(0, x) + eps, elementwise.
  Var clamp_min_zero_plus_const(Var x, double eps);

  // Scatters an (n*(n-1), 1) column of pair values into an (n,n) tensor with
  // zero diagonal. Pair k corresponds to the ordered pair enumeration
  // (i, j), i != j, in row-major order.
  Var off_diagonal_from_pairs(Var rates, std::size_t n);

  // Takes an (n,n) tensor of off-diagonal rates (diagonal ignored) and
  // completes the diagonal with the negated off-diagonal row sums.
  Var row_neg_sum_diagonal(Var x);

  // Replaces the last column of a square tensor with ones.
  Var replace_last_column_ones(Var x);

  // Differentiable solve of x A = b (row-vector convention); b is (1,n).
  // Backward: solve A lambda^T = g^T, then grad_b = lambda and
  // grad_A = -x^T (x) lambda (outer product).
  Var linear_solve(Var a, Var b);

  // Scalar plumbing.
  Var pick(Var x, std::size_t r, std::size_t c);
  Var log(Var x);
  Var floor_at(Var x, double floor);          // max(x, floor); hits counted
  Var dot_const(Var x, std::vector<double> weights);
  Var mean_of(std::span<const Var> scalars);

  const Tensor& value(Var v) const;
  double scalar_value(Var v) const;

  // Reverse sweep from a scalar loss. Unreached nodes keep zero gradients.
  void backward(Var loss);
  const Tensor& grad(Var v) const;

  // Number of entries raised to the floor by a floor_at node.
  std::size_t floor_hits(Var v) const;

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::uint8_t op;
    std::vector<std::int32_t> inputs;
    Tensor value;
    double a = 0.0;                          // slope / eps / scale / p / floor
    std::vector<std::size_t> indices;        // gather_rows
    std::vector<double> weights;             // dot_const
    std::vector<std::uint8_t> mask;          // dropout
    std::shared_ptr<linalg::LuDecomposition> lu;  // linear_solve
    std::size_t r = 0, c = 0;                // pick
    std::size_t hits = 0;                    // floor_at
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool ran_backward_ = false;
  std::uint64_t dropout_seed_ = 0;
  std::uint64_t dropout_counter_ = 0;
};

}  // namespace pcmc::autodiff

#endif
