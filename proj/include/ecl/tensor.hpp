#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ecl {

/// Dense row-major 2-D array of doubles; the carrier for every quantity in
/// the engine. Construction from external data validates finiteness.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols);  // zero-filled

    static Tensor zeros(int rows, int cols);
    static Tensor ones(int rows, int cols);
    static Tensor identity(int n);
    static Tensor from_data(int rows, int cols, std::vector<double> data);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> span() const { return {data_.data(), data_.size()}; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;
    bool all_finite() const;

    bool operator==(const Tensor& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Shape-checked value helpers used by the tape and by plain evaluation code.
Tensor t_add(const Tensor& a, const Tensor& b);
Tensor t_sub(const Tensor& a, const Tensor& b);
Tensor t_mul(const Tensor& a, const Tensor& b);
Tensor t_scale(const Tensor& a, double s);
Tensor t_matmul(const Tensor& a, const Tensor& b);
Tensor t_transpose(const Tensor& a);
double t_frobenius(const Tensor& a);
double t_sum(const Tensor& a);

// out += a * b^T and out += a^T * b, the two shapes backward passes need.
void t_addmul_nt(Tensor& out, const Tensor& a, const Tensor& b);
void t_addmul_tn(Tensor& out, const Tensor& a, const Tensor& b);
void t_axpy(Tensor& y, double alpha, const Tensor& x);

// Throws ShapeError with both shapes in the message.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace ecl
