#pragma once

#include <string>
#include <vector>

#include "ecl/tensor.hpp"
#include "ecl/trainer.hpp"

namespace ecl {

/// history.csv: `epoch,fc,ms,sd,acc_overall,acc_c1..acc_cC,` then the loss
/// components, total and lr. One row per evaluation epoch.
void write_history_csv(const std::string& path, const TrainHistory& history,
                       int num_classes);

/// `id,label,pc1,pc2`
void write_pca_csv(const std::string& path, const Tensor& coords,
                   const std::vector<int>& labels);

/// `id,label,dim1..dimd`
void write_embeddings_csv(const std::string& path, const Tensor& features,
                          const std::vector<int>& labels);

struct EmbeddingsFile {
    Tensor features;
    std::vector<int> labels;
    int num_classes = 0;
};

/// Parses the embeddings schema; errors name the first offending line.
EmbeddingsFile read_embeddings_csv(const std::string& path);

/// Single-row metrics file: `fc,ms[,sd]`.
void write_metrics_csv(const std::string& path, double fc, double ms,
                       const double* sd);

std::string format_double(double v);  // shortest round-trip-safe form

}  // namespace ecl
