#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecl/rng.hpp"
#include "ecl/tensor.hpp"

namespace ecl {

enum class CenterMode { simplex, random_units };

/// Recipe for a synthetic long-tailed Gaussian-blob problem. Class centers
/// are regular-simplex vertices scaled by center_scale, or random unit
/// vectors with a minimum pairwise distance enforced; per-class train counts
/// follow n_c = round(n_max * rho^(-(c-1)/(C-1))), clamped to 1.
struct SyntheticSpec {
    int num_classes = 4;
    int input_dim = 8;
    int n_max = 120;
    double rho = 50.0;          // imbalance factor N_max / N_min
    CenterMode center_mode = CenterMode::simplex;
    double center_scale = 1.0;
    double min_center_dist = 0.8;  // for random centers, in center_scale units
    double sigma_class = 0.35;  // within-class std
    double sigma_aug = 0.08;    // augmentation noise std
    double jitter_lo = 0.9;     // multiplicative scale jitter range
    double jitter_hi = 1.1;
    int n_test_per_class = 50;
    std::uint64_t seed = 42;

    void validate() const;
};

struct Dataset {
    Tensor inputs;            // N x D
    std::vector<int> labels;  // 0-based
    int num_classes = 0;
    std::string split;        // "train" or "test"
    std::vector<int> class_counts;
    std::vector<double> priors;  // counts normalized

    int size() const { return inputs.rows(); }
};

/// Exponential long-tail profile counts for the train split.
std::vector<int> longtail_counts(int num_classes, int n_max, double rho);

/// Regular simplex vertices (unit vectors, pairwise cosine -1/(C-1)) scaled
/// by `scale`, embedded in `dim` dimensions. Needs dim >= C.
Tensor simplex_centers(int num_classes, int dim, double scale);

/// Random unit-vector centers scaled by `scale` with pairwise distance at
/// least `min_dist * scale`, rejection-sampled from `rng`.
Tensor random_centers(int num_classes, int dim, double scale, double min_dist,
                      Rng& rng);

std::string to_string(CenterMode m);
CenterMode center_mode_from_string(const std::string& s);

/// Long-tailed train split plus a balanced test split, both deterministic
/// from spec.seed.
std::pair<Dataset, Dataset> make_longtailed(const SyntheticSpec& spec);

/// One augmented copy: s * (x + eps), eps ~ N(0, sigma_aug^2 I), s uniform
/// in the jitter range, fresh draws per call. The view index only routes the
/// result (1 -> classifier branch, 2/3 -> contrastive branch).
Tensor augment(const Tensor& x, int view, const SyntheticSpec& spec, Rng& rng);

/// One epoch of mini-batch index sets: a fresh uniform shuffle partitioned
/// into ceil(N/B) batches, the last possibly short.
std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& rng);
std::vector<std::vector<int>> make_batches(int n, int batch_size,
                                           std::uint64_t seed);

// CSV export/import: header `label,x1,...,xD`.
void save_dataset_csv(const std::string& path, const Dataset& ds);
Dataset load_dataset_csv(const std::string& path, const std::string& split);
void save_priors_csv(const std::string& path, const Dataset& ds);

}  // namespace ecl
