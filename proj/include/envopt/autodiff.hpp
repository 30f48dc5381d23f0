// Minimal reverse-mode autodiff tape for dense matrices and small conv
// stacks. Define-by-run; creation order is the topological order.
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace envopt::ad {

using Var = int;

class Tape {
 public:
  Var leaf(std::vector<double> data, std::vector<int> shape);
  Var scalar(double v) { return leaf({v}, {1}); }

  Var matmul(Var a, Var b);                  // [m,k] x [k,n] -> [m,n]
  Var add(Var a, Var b);                     // same shape
  Var add_rowvec(Var a, Var bias);           // [m,n] + [n] broadcast over rows
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                     // elementwise
  Var scale(Var a, double s);
  Var tanh_(Var a);
  Var exp_(Var a);
  Var square(Var a);
  Var sum(Var a);                            // -> scalar
  Var mean(Var a);                           // -> scalar
  Var concat_cols(Var a, Var b);             // [m,p],[m,q] -> [m,p+q]
  Var sum_rows(Var a);                       // [m,n] -> [1,n]
  Var scatter_sum_rows(Var a, std::vector<int> dst, int out_rows);  // [e,n] -> [out_rows,n]
  Var pick(Var a, int index);                // flat index -> scalar
  Var log_softmax(Var a);                    // flat vector
  Var conv2d(Var x, Var w, Var b);           // [C,H,W], [O,C,kh,kw], [O] -> [O,H',W']
  Var reshape(Var a, std::vector<int> shape);

  void backward(Var root);  // root must be scalar; grads accumulate into leaves

  const std::vector<double>& val(Var v) const { return nodes_[v].val; }
  const std::vector<double>& grad(Var v) const { return nodes_[v].grad; }
  const std::vector<int>& shape(Var v) const { return nodes_[v].shape; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<double> val;
    std::vector<double> grad;
    std::vector<int> shape;
    std::function<void(Tape&)> back;  // may be empty (leaf)
  };

  Var push(std::vector<double> val, std::vector<int> shape, std::function<void(Tape&)> back);
  static int numel(const std::vector<int>& shape);

  std::vector<Node> nodes_;

  friend struct TapeAccess;

 public:
  // Mutable access used by backward closures.
  std::vector<double>& grad_mut(Var v) { return nodes_[v].grad; }
};

}  // namespace envopt::ad
