#include "ecl/tensor.hpp"

#include <cmath>
#include <cstring>

#include "ecl/errors.hpp"
#include "ecl/kernels.hpp"

namespace ecl {

Tensor::Tensor(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Tensor Tensor::zeros(int rows, int cols) { return Tensor(rows, cols); }

Tensor Tensor::ones(int rows, int cols) {
    Tensor t(rows, cols);
    for (auto& v : t.data_) v = 1.0;
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::from_data(int rows, int cols, std::vector<double> data) {
    if (data.size() != static_cast<std::size_t>(rows) * cols)
        throw ShapeError("from_data: " + std::to_string(data.size()) +
                         " values for shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    t.data_ = std::move(data);
    if (!t.all_finite()) throw DomainError("from_data: non-finite entry");
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(r) * c);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c)
            throw ShapeError("from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return from_data(r, c, std::move(data));
}

std::string Tensor::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
}

Tensor t_add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.rows(), a.cols());
    kernels::add(out.data(), a.data(), b.data(), a.size());
    return out;
}

Tensor t_sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "subtract");
    Tensor out(a.rows(), a.cols());
    kernels::sub(out.data(), a.data(), b.data(), a.size());
    return out;
}

Tensor t_mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "multiply");
    Tensor out(a.rows(), a.cols());
    kernels::mul(out.data(), a.data(), b.data(), a.size());
    return out;
}

Tensor t_scale(const Tensor& a, double s) {
    Tensor out(a.rows(), a.cols());
    kernels::scale(out.data(), a.data(), s, a.size());
    return out;
}

Tensor t_matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    Tensor out(a.rows(), b.cols());
    kernels::matmul_acc(out.data(), a.data(), b.data(), a.rows(), a.cols(),
                        b.cols());
    return out;
}

Tensor t_transpose(const Tensor& a) {
    Tensor out(a.cols(), a.rows());
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
    return out;
}

double t_frobenius(const Tensor& a) {
    return std::sqrt(kernels::sqnorm(a.data(), a.size()));
}

double t_sum(const Tensor& a) { return kernels::sum(a.data(), a.size()); }

void t_addmul_nt(Tensor& out, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows())
        throw ShapeError("addmul_nt: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.rows(); ++j)
            out.at(i, j) += kernels::dot(a.row_ptr(i), b.row_ptr(j),
                                         static_cast<std::size_t>(a.cols()));
}

void t_addmul_tn(Tensor& out, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols())
        throw ShapeError("addmul_tn: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    for (int k = 0; k < a.rows(); ++k)
        for (int i = 0; i < a.cols(); ++i)
            kernels::axpy(out.row_ptr(i), a.at(k, i), b.row_ptr(k),
                          static_cast<std::size_t>(b.cols()));
}

void t_axpy(Tensor& y, double alpha, const Tensor& x) {
    require_same_shape(y, x, "axpy");
    kernels::axpy(y.data(), alpha, x.data(), y.size());
}

}  // namespace ecl
