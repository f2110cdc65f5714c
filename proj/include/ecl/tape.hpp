#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ecl/tensor.hpp"

namespace ecl {

/// Handle to a node on a Tape.
struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Record-and-replay reverse-mode differentiation over Tensor values.
///
/// Nodes are appended in forward order, so creation order is a topological
/// order: the backward sweep walks indices from the root down to zero and
/// visits each node exactly once. Gradients accumulate additively across
/// fan-out. A tape owns its nodes; distinct tapes are independent.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable leaf (a parameter or input whose gradient is wanted).
    Value leaf(Tensor v);
    /// Non-differentiable node (index matrices, priors, broadcast helpers).
    Value constant(Tensor v);

    const Tensor& value(Value v) const { return nodes_[check(v)].value; }
    const Tensor& grad(Value v) const { return nodes_[check(v)].grad; }

    // --- primitive set -----------------------------------------------------
    Value add(Value a, Value b);
    Value subtract(Value a, Value b);
    Value scale(Value a, double s);
    Value multiply(Value a, Value b);        // elementwise
    Value scale_by(Value a, Value s);        // s is a 1x1 node
    Value reciprocal(Value s);               // 1x1 node
    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value exp(Value a);
    Value log(Value a);                      // requires strictly positive input
    Value relu(Value a);                     // adjoint at exactly 0 is 0
    Value row_l2_normalize(Value a);         // requires nonzero rows
    Value frobenius_norm(Value a);           // 1x1
    Value sum(Value a);                      // 1x1
    Value mean_over_rows(Value a, std::span<const int> rows);  // 1 x cols
    Value dot_row(Value a, int i, Value b, int j);             // 1x1

    /// Backpropagate from a scalar (1x1) root. Gradients of all leaves are
    /// reset first; read them back with grad().
    void backward(Value root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> back;  // null for leaves/constants
    };

    int check(Value v) const;
    Value push(Tensor v);
    Tensor& grad_mut(Value v) { return nodes_[check(v)].grad; }

    std::deque<Node> nodes_;
};

/// check_gradient: compare the tape gradient of a scalar-valued function of
/// parameter tensors against central finite differences.
///
/// `fn` receives a fresh tape plus leaves holding the parameter values and
/// must return the scalar root. Returns the max over all coordinates of
/// |analytic - central| / max(1, |central|) with central difference
/// (f(p + eps*e_i) - f(p - eps*e_i)) / (2 eps).
using TapeFn = std::function<Value(Tape&, const std::vector<Value>&)>;
double check_gradient(const TapeFn& fn, const std::vector<Tensor>& params,
                      double eps);

}  // namespace ecl
