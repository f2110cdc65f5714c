#include "ecl/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ecl/errors.hpp"
#include "ecl/kernels.hpp"

namespace ecl {

namespace {

std::vector<std::vector<int>> rows_by_class(const std::vector<int>& labels,
                                            int num_classes, bool required) {
    std::vector<std::vector<int>> by(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes)
            throw ShapeError("metrics: label " + std::to_string(y) +
                             " out of range");
        by[static_cast<std::size_t>(y)].push_back(static_cast<int>(i));
    }
    if (required)
        for (int c = 0; c < num_classes; ++c)
            if (by[static_cast<std::size_t>(c)].empty())
                throw UnavailableError("metrics: class " + std::to_string(c) +
                                       " has no samples");
    return by;
}

double row_distance(const Tensor& t, int i, int j) {
    double sq = 0.0;
    for (int c = 0; c < t.cols(); ++c) {
        const double d = t.at(i, c) - t.at(j, c);
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace

double fc_metric(const Tensor& features, const std::vector<int>& labels,
                 int num_classes) {
    auto by = rows_by_class(labels, num_classes, true);
    double acc = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        const auto& rows = by[static_cast<std::size_t>(c)];
        double s = 0.0;
        for (int i : rows)
            for (int j : rows) s += row_distance(features, i, j);
        acc += s / (static_cast<double>(rows.size()) * rows.size());
    }
    return acc / num_classes;
}

Tensor class_means(const Tensor& features, const std::vector<int>& labels,
                   int num_classes) {
    auto by = rows_by_class(labels, num_classes, true);
    Tensor means(num_classes, features.cols());
    for (int c = 0; c < num_classes; ++c) {
        const auto& rows = by[static_cast<std::size_t>(c)];
        for (int r : rows)
            kernels::axpy(means.row_ptr(c), 1.0, features.row_ptr(r),
                          static_cast<std::size_t>(features.cols()));
        kernels::scale(means.row_ptr(c), means.row_ptr(c),
                       1.0 / static_cast<double>(rows.size()),
                       static_cast<std::size_t>(features.cols()));
    }
    return means;
}

double ms_metric(const Tensor& features, const std::vector<int>& labels,
                 int num_classes) {
    if (num_classes < 2) throw ShapeError("ms: needs at least 2 classes");
    const Tensor means = class_means(features, labels, num_classes);
    double acc = 0.0;
    for (int c = 0; c < num_classes; ++c)
        for (int d = 0; d < num_classes; ++d)
            if (c != d) acc += row_distance(means, c, d);
    return acc / (static_cast<double>(num_classes) * (num_classes - 1));
}

double sd_metric(const Tensor& w, const Tensor& features,
                 const std::vector<int>& labels, int num_classes) {
    const Tensor means = class_means(features, labels, num_classes);
    if (w.rows() != num_classes || w.cols() != features.cols())
        throw ShapeError("sd: W " + w.shape_str() + " does not match features " +
                         features.shape_str());
    Tensor global(1, means.cols());
    for (int c = 0; c < num_classes; ++c)
        kernels::axpy(global.data(), 1.0 / num_classes, means.row_ptr(c),
                      static_cast<std::size_t>(means.cols()));
    // M columns are mu_c - mu_dot; laid out here as rows of the C x F matrix
    // that plays the role of W (so the Frobenius difference is unchanged).
    Tensor centered(num_classes, means.cols());
    for (int c = 0; c < num_classes; ++c)
        kernels::sub(centered.row_ptr(c), means.row_ptr(c), global.data(),
                     static_cast<std::size_t>(means.cols()));
    const double nw = t_frobenius(w);
    const double nm = t_frobenius(centered);
    if (!(nw > 0.0)) throw DomainError("sd: zero-norm W");
    if (!(nm > 0.0)) throw DomainError("sd: all class means coincide");
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double d = w.data()[k] / nw - centered.data()[k] / nm;
        sq += d * d;
    }
    return std::sqrt(sq);
}

Tensor mean_cosines(const Tensor& means) {
    const int c = means.rows();
    Tensor cos(c, c);
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            const double ni = std::sqrt(kernels::sqnorm(
                means.row_ptr(i), static_cast<std::size_t>(means.cols())));
            const double nj = std::sqrt(kernels::sqnorm(
                means.row_ptr(j), static_cast<std::size_t>(means.cols())));
            if (ni < 1e-300 || nj < 1e-300) {
                cos.at(i, j) = 0.0;
            } else {
                cos.at(i, j) = kernels::dot(means.row_ptr(i), means.row_ptr(j),
                                            static_cast<std::size_t>(means.cols())) /
                               (ni * nj);
            }
        }
    }
    return cos;
}

namespace {

// Leading eigenpair of a symmetric matrix by power iteration from the
// normalized all-ones vector.
struct EigPair {
    std::vector<double> v;
    double lambda = 0.0;
};

EigPair power_iteration(const std::vector<double>& m, int d) {
    constexpr double kTol = 1e-10;
    constexpr int kMaxIter = 1000;
    // The all-ones start can be exactly orthogonal to the leading eigenspace
    // (a regular simplex is), so fall back to basis vectors deterministically.
    for (int attempt = 0; attempt <= d; ++attempt) {
        std::vector<double> v(static_cast<std::size_t>(d), 0.0);
        if (attempt == 0) {
            v.assign(static_cast<std::size_t>(d),
                     1.0 / std::sqrt(static_cast<double>(d)));
        } else {
            v[static_cast<std::size_t>(attempt - 1)] = 1.0;
        }
        std::vector<double> next(static_cast<std::size_t>(d));
        bool dead = false;
        for (int it = 0; it < kMaxIter; ++it) {
            for (int i = 0; i < d; ++i)
                next[static_cast<std::size_t>(i)] = kernels::dot(
                    m.data() + static_cast<std::size_t>(i) * d, v.data(),
                    static_cast<std::size_t>(d));
            const double nrm =
                std::sqrt(kernels::sqnorm(next.data(), next.size()));
            if (nrm == 0.0) {
                dead = true;
                break;
            }
            for (auto& x : next) x /= nrm;
            double diff = 0.0;
            for (int i = 0; i < d; ++i)
                diff += std::abs(next[static_cast<std::size_t>(i)] -
                                 v[static_cast<std::size_t>(i)]);
            v = next;
            if (diff < kTol) break;
        }
        if (dead) continue;
        // Rayleigh quotient; sign fix on the first nonzero loading.
        std::vector<double> mv(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            mv[static_cast<std::size_t>(i)] = kernels::dot(
                m.data() + static_cast<std::size_t>(i) * d, v.data(),
                static_cast<std::size_t>(d));
        const double lambda = kernels::dot(v.data(), mv.data(), v.size());
        if (lambda <= 0.0 && attempt < d) continue;
        for (double x : v) {
            if (std::abs(x) > 1e-12) {
                if (x < 0.0)
                    for (auto& y : v) y = -y;
                break;
            }
        }
        return {std::move(v), lambda};
    }
    return {std::vector<double>(static_cast<std::size_t>(d), 0.0), 0.0};
}

}  // namespace

Pca2 pca2(const Tensor& features) {
    const int n = features.rows();
    const int d = features.cols();
    if (n < 2 || d < 2) throw ShapeError("pca2: needs n >= 2 and dim >= 2");

    Tensor x(n, d);
    for (int r = 0; r < n; ++r) {
        const double nrm = std::sqrt(kernels::sqnorm(
            features.row_ptr(r), static_cast<std::size_t>(d)));
        if (!(nrm > 0.0))
            throw DomainError("pca2: zero feature row " + std::to_string(r));
        kernels::scale(x.row_ptr(r), features.row_ptr(r), 1.0 / nrm,
                       static_cast<std::size_t>(d));
    }
    Tensor mean(1, d);
    for (int r = 0; r < n; ++r)
        kernels::axpy(mean.data(), 1.0 / n, x.row_ptr(r),
                      static_cast<std::size_t>(d));
    for (int r = 0; r < n; ++r)
        kernels::sub(x.row_ptr(r), x.row_ptr(r), mean.data(),
                     static_cast<std::size_t>(d));

    // covariance (1/n) X^T X
    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < d; ++i)
            kernels::axpy(cov.data() + static_cast<std::size_t>(i) * d,
                          x.at(r, i) / n, x.row_ptr(r),
                          static_cast<std::size_t>(d));
    double total = 0.0;
    for (int i = 0; i < d; ++i) total += cov[static_cast<std::size_t>(i) * d + i];

    EigPair e1 = power_iteration(cov, d);
    if (!(e1.lambda > 1e-12 * std::max(1.0, total)))
        throw DegenerateError("pca2: covariance has no usable leading direction");
    // deflate and repeat
    std::vector<double> cov2 = cov;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            cov2[static_cast<std::size_t>(i) * d + j] -=
                e1.lambda * e1.v[static_cast<std::size_t>(i)] *
                e1.v[static_cast<std::size_t>(j)];
    EigPair e2 = power_iteration(cov2, d);
    if (!(e2.lambda > 1e-12 * e1.lambda))
        throw DegenerateError(
            "pca2: fewer than 2 nonzero covariance eigenvalues");

    Pca2 out;
    out.eig1 = e1.lambda;
    out.eig2 = e2.lambda;
    out.total_variance = total;
    out.coords = Tensor(n, 2);
    for (int r = 0; r < n; ++r) {
        out.coords.at(r, 0) = kernels::dot(x.row_ptr(r), e1.v.data(),
                                           static_cast<std::size_t>(d));
        out.coords.at(r, 1) = kernels::dot(x.row_ptr(r), e2.v.data(),
                                           static_cast<std::size_t>(d));
    }
    return out;
}

GeometrySnapshot geometry_snapshot(const Tensor& z_features,
                                   const Tensor& f_features, const Tensor& w,
                                   const std::vector<int>& labels,
                                   int num_classes) {
    GeometrySnapshot s;
    s.fc = fc_metric(z_features, labels, num_classes);
    s.ms = ms_metric(z_features, labels, num_classes);
    s.sd = sd_metric(w, f_features, labels, num_classes);
    s.class_means = class_means(z_features, labels, num_classes);
    s.global_mean = Tensor(1, s.class_means.cols());
    for (int c = 0; c < num_classes; ++c)
        kernels::axpy(s.global_mean.data(), 1.0 / num_classes,
                      s.class_means.row_ptr(c),
                      static_cast<std::size_t>(s.class_means.cols()));
    s.mean_cosines = mean_cosines(s.class_means);
    s.pca_coords = pca2(z_features).coords;
    return s;
}

}  // namespace ecl
