#pragma once

#include <string>
#include <vector>

#include "ecl/tensor.hpp"

namespace ecl {

/// Index structure of a contrastive mini-batch: per-class row sets B_c and
/// per-anchor positive sets P(i) (same label, anchor excluded). Labels are
/// 0-based. class_rows partitions {0..n-1}; classes absent from the batch
/// simply have empty row sets.
struct BatchIndex {
    std::vector<int> labels;
    int num_classes = 0;
    std::vector<std::vector<int>> class_rows;  // B_c
    std::vector<std::vector<int>> positives;   // P(i)

    static BatchIndex build(const std::vector<int>& labels, int num_classes);
};

/// Unit-normalized representations of the 2B augmented views plus the index
/// structure over them.
struct ContrastBatch {
    Tensor z;  // n x F, unit l2 rows
    BatchIndex index;

    int size() const { return z.rows(); }

    /// Validates: unit rows within 1e-9, labels in range, every anchor has
    /// at least one positive.
    static ContrastBatch make(Tensor z, std::vector<int> labels,
                              int num_classes);
};

enum class ProtoSource { linear_transform, nonlinear_mlp, class_means };

std::string to_string(ProtoSource s);
ProtoSource proto_source_from_string(const std::string& s);

/// Per-class prototype vectors, one column each. `p` holds the raw (not
/// column-normalized) matrix: the contrastive losses normalize columns
/// before use, the alignment loss consumes it raw.
struct PrototypeSet {
    Tensor p;  // F x C
    ProtoSource source = ProtoSource::linear_transform;
};

/// Loss weights and the shared contrastive temperature.
struct LossConfig {
    double tau = 0.05;
    double lambda_bc_ecl = 0.5;
    double lambda_cc_ge = 3.0;
    double lambda_lc = 0.5;
    std::vector<double> priors;  // per-class, strictly positive, sums to 1
    ProtoSource proto_source = ProtoSource::linear_transform;
    // Main-text reading of the own-class denominator set (anchor included);
    // default is the proof convention (anchor excluded).
    bool own_class_includes_anchor = false;
    // Literal batch-frequency priors with a 1/(|B|*C) floor instead of
    // dataset-level priors.
    bool batch_priors = false;

    void validate() const;
};

}  // namespace ecl
