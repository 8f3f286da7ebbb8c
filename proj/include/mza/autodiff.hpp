#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mza/tensor.hpp"

namespace mza::ad {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode computation tape over dense matrices.
//
// Every op records its output value and a closure that maps the output
// gradient to input gradients. Parameters are bound by name to a
// ParameterSet that must outlive the tape.
class Tape {
 public:
  explicit Tape(const ParameterSet& params) : params_(&params) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to a named parameter; repeated calls return the same Var.
  Var param(const std::string& name);
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // x (rows x in) * w (in x out) + b (out).
  Var linear(Var x, Var w, Var b);
  Var elu(Var x);
  Var concat_cols(Var a, Var b);
  Var minmax_normalize(Var x);
  // Identity forward; multiplies the gradient by factor on the way back.
  Var scale_gradient(Var x, double factor);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double factor);
  Var sum(Var x);
  // sum_r weight[r] * -sum_j target[r, j] * log_softmax(logits[r])_j, as 1x1.
  Var softmax_cross_entropy(Var logits, const Tensor& targets,
                            std::span<const double> row_weights);

  // Gradient of a 1x1 loss with respect to every bound parameter. Entries
  // for parameters the loss does not reach are zero.
  ParameterSet backward(Var loss) const;

 private:
  using Grads = std::vector<Tensor>;
  using BackwardFn = std::function<void(const Tensor& grad_out, Grads&)>;

  struct Node {
    Tensor value;
    BackwardFn backward;
  };

  Var push(Tensor value, BackwardFn backward = {});
  static Tensor& grad_slot(Grads& grads, int id, const Tensor& like);

  const ParameterSet* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_ids_;
};

}  // namespace mza::ad
