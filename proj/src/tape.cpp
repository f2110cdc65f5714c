#include "ecl/tape.hpp"

#include <cmath>
#include <string>

#include "ecl/errors.hpp"
#include "ecl/kernels.hpp"

namespace ecl {

int Tape::check(Value v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw ShapeError("invalid tape value handle");
    return v.id;
}

Value Tape::push(Tensor v) {
    Node n;
    n.grad = Tensor(v.rows(), v.cols());
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::leaf(Tensor v) { return push(std::move(v)); }
Value Tape::constant(Tensor v) { return push(std::move(v)); }

Value Tape::add(Value a, Value b) {
    Value out = push(t_add(value(a), value(b)));
    nodes_[out.id].back = [a, b, out](Tape& t) {
        const Tensor& g = t.grad(out);
        t_axpy(t.grad_mut(a), 1.0, g);
        t_axpy(t.grad_mut(b), 1.0, g);
    };
    return out;
}

Value Tape::subtract(Value a, Value b) {
    Value out = push(t_sub(value(a), value(b)));
    nodes_[out.id].back = [a, b, out](Tape& t) {
        const Tensor& g = t.grad(out);
        t_axpy(t.grad_mut(a), 1.0, g);
        t_axpy(t.grad_mut(b), -1.0, g);
    };
    return out;
}

Value Tape::scale(Value a, double s) {
    Value out = push(t_scale(value(a), s));
    nodes_[out.id].back = [a, s, out](Tape& t) {
        t_axpy(t.grad_mut(a), s, t.grad(out));
    };
    return out;
}

Value Tape::multiply(Value a, Value b) {
    Value out = push(t_mul(value(a), value(b)));
    nodes_[out.id].back = [a, b, out](Tape& t) {
        const Tensor& g = t.grad(out);
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        Tensor& ga = t.grad_mut(a);
        Tensor& gb = t.grad_mut(b);
        for (std::size_t k = 0; k < g.size(); ++k) {
            ga.data()[k] += g.data()[k] * vb.data()[k];
            gb.data()[k] += g.data()[k] * va.data()[k];
        }
    };
    return out;
}

Value Tape::scale_by(Value a, Value s) {
    if (value(s).rows() != 1 || value(s).cols() != 1)
        throw ShapeError("scale_by: scalar operand must be 1x1, got " +
                         value(s).shape_str());
    const double sv = value(s).at(0, 0);
    Value out = push(t_scale(value(a), sv));
    nodes_[out.id].back = [a, s, sv, out](Tape& t) {
        const Tensor& g = t.grad(out);
        t_axpy(t.grad_mut(a), sv, g);
        t.grad_mut(s).at(0, 0) +=
            kernels::dot(g.data(), t.value(a).data(), g.size());
    };
    return out;
}

Value Tape::reciprocal(Value s) {
    const Tensor& vs = value(s);
    if (vs.rows() != 1 || vs.cols() != 1)
        throw ShapeError("reciprocal: operand must be 1x1, got " + vs.shape_str());
    const double x = vs.at(0, 0);
    if (x == 0.0) throw DomainError("reciprocal of zero");
    Tensor r(1, 1);
    r.at(0, 0) = 1.0 / x;
    Value out = push(std::move(r));
    nodes_[out.id].back = [s, x, out](Tape& t) {
        t.grad_mut(s).at(0, 0) += -t.grad(out).at(0, 0) / (x * x);
    };
    return out;
}

Value Tape::matmul(Value a, Value b) {
    Value out = push(t_matmul(value(a), value(b)));
    nodes_[out.id].back = [a, b, out](Tape& t) {
        const Tensor& g = t.grad(out);
        t_addmul_nt(t.grad_mut(a), g, t.value(b));  // dA += G * B^T
        t_addmul_tn(t.grad_mut(b), t.value(a), g);  // dB += A^T * G
    };
    return out;
}

Value Tape::transpose(Value a) {
    Value out = push(t_transpose(value(a)));
    nodes_[out.id].back = [a, out](Tape& t) {
        const Tensor& g = t.grad(out);
        Tensor& ga = t.grad_mut(a);
        for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < g.cols(); ++c) ga.at(c, r) += g.at(r, c);
    };
    return out;
}

Value Tape::exp(Value a) {
    const Tensor& va = value(a);
    Tensor v(va.rows(), va.cols());
    for (std::size_t k = 0; k < va.size(); ++k) v.data()[k] = std::exp(va.data()[k]);
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, out](Tape& t) {
        const Tensor& g = t.grad(out);
        const Tensor& y = t.value(out);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t k = 0; k < g.size(); ++k)
            ga.data()[k] += g.data()[k] * y.data()[k];
    };
    return out;
}

Value Tape::log(Value a) {
    const Tensor& va = value(a);
    Tensor v(va.rows(), va.cols());
    for (int r = 0; r < va.rows(); ++r)
        for (int c = 0; c < va.cols(); ++c) {
            const double x = va.at(r, c);
            if (!(x > 0.0))
                throw DomainError("log: non-positive entry at row " +
                                  std::to_string(r) + ", col " + std::to_string(c));
            v.at(r, c) = std::log(x);
        }
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, out](Tape& t) {
        const Tensor& g = t.grad(out);
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t k = 0; k < g.size(); ++k)
            ga.data()[k] += g.data()[k] / x.data()[k];
    };
    return out;
}

Value Tape::relu(Value a) {
    const Tensor& va = value(a);
    Tensor v(va.rows(), va.cols());
    for (std::size_t k = 0; k < va.size(); ++k)
        v.data()[k] = va.data()[k] > 0.0 ? va.data()[k] : 0.0;
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, out](Tape& t) {
        const Tensor& g = t.grad(out);
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad_mut(a);
        // subgradient 0 at exactly 0
        for (std::size_t k = 0; k < g.size(); ++k)
            if (x.data()[k] > 0.0) ga.data()[k] += g.data()[k];
    };
    return out;
}

Value Tape::row_l2_normalize(Value a) {
    const Tensor& va = value(a);
    Tensor v(va.rows(), va.cols());
    std::vector<double> norms(static_cast<std::size_t>(va.rows()));
    for (int r = 0; r < va.rows(); ++r) {
        const double n = std::sqrt(
            kernels::sqnorm(va.row_ptr(r), static_cast<std::size_t>(va.cols())));
        if (!(n > 0.0))
            throw DomainError("row_l2_normalize: zero row " + std::to_string(r));
        norms[static_cast<std::size_t>(r)] = n;
        kernels::scale(v.row_ptr(r), va.row_ptr(r), 1.0 / n,
                       static_cast<std::size_t>(va.cols()));
    }
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, out, norms](Tape& t) {
        // d/dx_r = (g_r - y_r * <g_r, y_r>) / ||x_r||
        const Tensor& g = t.grad(out);
        const Tensor& y = t.value(out);
        Tensor& ga = t.grad_mut(a);
        const std::size_t c = static_cast<std::size_t>(g.cols());
        for (int r = 0; r < g.rows(); ++r) {
            const double gy = kernels::dot(g.row_ptr(r), y.row_ptr(r), c);
            const double inv = 1.0 / norms[static_cast<std::size_t>(r)];
            for (std::size_t k = 0; k < c; ++k)
                ga.row_ptr(r)[k] +=
                    (g.row_ptr(r)[k] - y.row_ptr(r)[k] * gy) * inv;
        }
    };
    return out;
}

Value Tape::frobenius_norm(Value a) {
    const double n = t_frobenius(value(a));
    Tensor v(1, 1);
    v.at(0, 0) = n;
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, n, out](Tape& t) {
        if (n == 0.0) return;  // subgradient 0 at the origin
        const double g = t.grad(out).at(0, 0);
        t_axpy(t.grad_mut(a), g / n, t.value(a));
    };
    return out;
}

Value Tape::sum(Value a) {
    Tensor v(1, 1);
    v.at(0, 0) = t_sum(value(a));
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, out](Tape& t) {
        const double g = t.grad(out).at(0, 0);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t k = 0; k < ga.size(); ++k) ga.data()[k] += g;
    };
    return out;
}

Value Tape::mean_over_rows(Value a, std::span<const int> rows) {
    if (rows.empty()) throw ShapeError("mean_over_rows: empty index set");
    const Tensor& va = value(a);
    Tensor v(1, va.cols());
    for (int r : rows) {
        if (r < 0 || r >= va.rows())
            throw ShapeError("mean_over_rows: row " + std::to_string(r) +
                             " out of range for " + va.shape_str());
        kernels::axpy(v.data(), 1.0, va.row_ptr(r),
                      static_cast<std::size_t>(va.cols()));
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    kernels::scale(v.data(), v.data(), inv, v.size());
    std::vector<int> idx(rows.begin(), rows.end());
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, out, idx, inv](Tape& t) {
        const Tensor& g = t.grad(out);
        Tensor& ga = t.grad_mut(a);
        for (int r : idx)
            kernels::axpy(ga.row_ptr(r), inv, g.data(),
                          static_cast<std::size_t>(g.cols()));
    };
    return out;
}

Value Tape::dot_row(Value a, int i, Value b, int j) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.cols() != vb.cols())
        throw ShapeError("dot_row: shape mismatch " + va.shape_str() + " vs " +
                         vb.shape_str());
    if (i < 0 || i >= va.rows() || j < 0 || j >= vb.rows())
        throw ShapeError("dot_row: row index out of range");
    Tensor v(1, 1);
    v.at(0, 0) = kernels::dot(va.row_ptr(i), vb.row_ptr(j),
                              static_cast<std::size_t>(va.cols()));
    Value out = push(std::move(v));
    nodes_[out.id].back = [a, i, b, j, out](Tape& t) {
        const double g = t.grad(out).at(0, 0);
        const std::size_t c = static_cast<std::size_t>(t.value(a).cols());
        kernels::axpy(t.grad_mut(a).row_ptr(i), g, t.value(b).row_ptr(j), c);
        kernels::axpy(t.grad_mut(b).row_ptr(j), g, t.value(a).row_ptr(i), c);
    };
    return out;
}

void Tape::backward(Value root) {
    const int r = check(root);
    const Tensor& rv = nodes_[r].value;
    if (rv.rows() != 1 || rv.cols() != 1)
        throw ShapeError("backward: root must be scalar (1x1), got " +
                         rv.shape_str());
    for (auto& n : nodes_) {
        Tensor z(n.grad.rows(), n.grad.cols());
        n.grad = std::move(z);
    }
    nodes_[r].grad.at(0, 0) = 1.0;
    for (int i = r; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
}

double check_gradient(const TapeFn& fn, const std::vector<Tensor>& params,
                      double eps) {
    if (!(eps > 0.0)) throw ConfigError("check_gradient: eps must be > 0");

    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p));
    Value root = fn(tape, leaves);
    tape.backward(root);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Value l : leaves) analytic.push_back(tape.grad(l));

    auto eval = [&](const std::vector<Tensor>& p, std::size_t pi, int r,
                    int c) -> double {
        Tape t;
        std::vector<Value> ls;
        ls.reserve(p.size());
        for (const auto& q : p) ls.push_back(t.leaf(q));
        const double v = t.value(fn(t, ls)).at(0, 0);
        if (!std::isfinite(v))
            throw NumericError("check_gradient: non-finite value at param " +
                               std::to_string(pi) + " coordinate (" +
                               std::to_string(r) + "," + std::to_string(c) + ")");
        return v;
    };

    double max_rel = 0.0;
    std::vector<Tensor> probe = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (int r = 0; r < params[pi].rows(); ++r) {
            for (int c = 0; c < params[pi].cols(); ++c) {
                const double orig = probe[pi].at(r, c);
                probe[pi].at(r, c) = orig + eps;
                const double fp = eval(probe, pi, r, c);
                probe[pi].at(r, c) = orig - eps;
                const double fm = eval(probe, pi, r, c);
                probe[pi].at(r, c) = orig;
                const double central = (fp - fm) / (2.0 * eps);
                const double rel = std::abs(analytic[pi].at(r, c) - central) /
                                   std::max(1.0, std::abs(central));
                if (rel > max_rel) max_rel = rel;
            }
        }
    }
    return max_rel;
}

}  // namespace ecl
