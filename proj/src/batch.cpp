#include "ecl/batch.hpp"

#include <cmath>
#include <string>

#include "ecl/errors.hpp"
#include "ecl/kernels.hpp"

namespace ecl {

BatchIndex BatchIndex::build(const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1) throw ShapeError("batch: num_classes must be >= 1");
    BatchIndex idx;
    idx.labels = labels;
    idx.num_classes = num_classes;
    idx.class_rows.assign(static_cast<std::size_t>(num_classes), {});
    const int n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= num_classes)
            throw ShapeError("batch: label " + std::to_string(y) +
                             " out of range at row " + std::to_string(i));
        idx.class_rows[static_cast<std::size_t>(y)].push_back(i);
    }
    idx.positives.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        for (int j : idx.class_rows[static_cast<std::size_t>(y)])
            if (j != i) idx.positives[static_cast<std::size_t>(i)].push_back(j);
    }
    return idx;
}

ContrastBatch ContrastBatch::make(Tensor z, std::vector<int> labels,
                                  int num_classes) {
    if (z.rows() == 0) throw ShapeError("contrast batch: empty batch");
    if (static_cast<int>(labels.size()) != z.rows())
        throw ShapeError("contrast batch: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(z.rows()) + " rows");
    for (int r = 0; r < z.rows(); ++r) {
        const double n = std::sqrt(
            kernels::sqnorm(z.row_ptr(r), static_cast<std::size_t>(z.cols())));
        if (std::abs(n - 1.0) > 1e-9)
            throw DomainError("contrast batch: row " + std::to_string(r) +
                              " has l2 norm " + std::to_string(n));
    }
    ContrastBatch b;
    b.index = BatchIndex::build(labels, num_classes);
    b.z = std::move(z);
    for (int i = 0; i < b.z.rows(); ++i)
        if (b.index.positives[static_cast<std::size_t>(i)].empty())
            throw ShapeError("contrast batch: anchor " + std::to_string(i) +
                             " has no positives");
    return b;
}

std::string to_string(ProtoSource s) {
    switch (s) {
        case ProtoSource::linear_transform: return "linear-transform";
        case ProtoSource::nonlinear_mlp: return "nonlinear-mlp";
        case ProtoSource::class_means: return "class-means";
    }
    return "?";
}

ProtoSource proto_source_from_string(const std::string& s) {
    if (s == "linear-transform") return ProtoSource::linear_transform;
    if (s == "nonlinear-mlp") return ProtoSource::nonlinear_mlp;
    if (s == "class-means") return ProtoSource::class_means;
    throw ConfigError("unknown prototype source: " + s);
}

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw ConfigError("loss config: tau must be > 0");
    if (lambda_bc_ecl < 0.0 || lambda_cc_ge < 0.0 || lambda_lc < 0.0)
        throw ConfigError("loss config: negative lambda");
    if (!priors.empty()) {
        double s = 0.0;
        for (double h : priors) {
            if (!(h > 0.0)) throw ConfigError("loss config: prior h_c <= 0");
            s += h;
        }
        if (std::abs(s - 1.0) > 1e-9)
            throw ConfigError("loss config: priors sum to " + std::to_string(s));
    }
}

}  // namespace ecl
