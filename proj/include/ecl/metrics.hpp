#pragma once

#include <vector>

#include "ecl/tensor.hpp"

namespace ecl {

/// Intra-class feature collapse: mean over classes of the average pairwise
/// distance within the class, over all ordered pairs including i=j.
double fc_metric(const Tensor& features, const std::vector<int>& labels,
                 int num_classes);

/// Inter-class mean spacing: average distance between distinct class means
/// over ordered pairs.
double ms_metric(const Tensor& features, const std::vector<int>& labels,
                 int num_classes);

/// Self-duality: || W^T/||W||_F - M/||M||_F ||_F (not squared) with M the
/// centered class-mean matrix (columns mu_c - mu_dot, mu_dot the average of
/// the class means).
double sd_metric(const Tensor& w, const Tensor& features,
                 const std::vector<int>& labels, int num_classes);

/// Per-class means, one row per class. Throws UnavailableError naming the
/// first missing class.
Tensor class_means(const Tensor& features, const std::vector<int>& labels,
                   int num_classes);

/// C x C pairwise cosines of the class-mean vectors.
Tensor mean_cosines(const Tensor& means);

struct Pca2 {
    Tensor coords;           // n x 2
    double eig1 = 0.0;       // top two covariance eigenvalues
    double eig2 = 0.0;
    double total_variance = 0.0;
    double explained_fraction() const {
        return total_variance > 0.0 ? (eig1 + eig2) / total_variance : 0.0;
    }
};

/// Rows are l2-normalized, centered, and projected onto the top two
/// principal directions (power iteration with deflation, tolerance 1e-10,
/// max 1000 iterations). Direction sign: first nonzero loading positive;
/// columns ordered by descending explained variance.
Pca2 pca2(const Tensor& features);

/// One evaluation pass worth of geometry.
struct GeometrySnapshot {
    double fc = 0.0;
    double ms = 0.0;
    double sd = 0.0;
    Tensor class_means;   // C x dim
    Tensor global_mean;   // 1 x dim
    Tensor mean_cosines;  // C x C
    Tensor pca_coords;    // n x 2
};

/// fc/ms/cosines/pca on `z_features`, sd on `f_features` against `w`.
GeometrySnapshot geometry_snapshot(const Tensor& z_features,
                                   const Tensor& f_features, const Tensor& w,
                                   const std::vector<int>& labels,
                                   int num_classes);

}  // namespace ecl
