#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ecl/batch.hpp"
#include "ecl/data.hpp"
#include "ecl/metrics.hpp"
#include "ecl/model.hpp"

namespace ecl {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::vector<int> milestones;  // empty -> {80%, 90%} of epochs
    double lr_factor = 0.1;
    int eval_every = 10;
    std::uint64_t seed = 1;
    LossConfig loss;
    NetConfig net;
    // Generation recipe; augmentation noise/jitter come from here even when
    // training from a CSV path.
    SyntheticSpec data;
    std::string data_path;  // nonempty -> load train/test CSVs from this dir
    // Ablation mask, Table-IV style; disabling a loss is implemented as
    // forcing its lambda to zero, so the two switches are bit-identical.
    std::array<bool, 3> mask = {true, true, true};  // {bc_ecl, cc_ge, lc}
    bool compensated_inference = false;  // add log h to logits at argmax
    // Metric feature spaces: the normalized projector outputs z by default
    // (the sphere the contrastive geometry lives on); extractor features f
    // as the alternative.
    bool sd_on_extractor_features = false;
    bool fc_ms_on_extractor_features = false;

    void validate() const;
    std::vector<int> effective_milestones() const;
};

struct EpochRecord {
    int epoch = 0;
    double l_bc_ecl = 0.0;
    double l_cc_ge = 0.0;
    double l_lc = 0.0;
    double l_total = 0.0;
    double lr = 0.0;
    double acc_overall = 0.0;
    std::vector<double> acc_per_class;
    GeometrySnapshot geometry;
};

struct TrainHistory {
    std::vector<EpochRecord> records;
};

struct TrainResult {
    ModelParams params;
    TrainHistory history;
    double wall_seconds = 0.0;
    double mean_epoch_ms = 0.0;
};

/// v <- momentum*v + (grad + weight_decay*param); param <- param - lr*v.
void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
              double momentum, double weight_decay);

/// lr = base * factor^(number of milestones <= epoch), epochs 1-based.
double lr_schedule(int epoch, double base_lr, const std::vector<int>& milestones,
                   double factor);

struct Evaluation {
    double acc_overall = 0.0;
    std::vector<double> acc_per_class;
    GeometrySnapshot geometry;
    Tensor z;  // projector outputs on the test set (unit rows)
    Tensor f;  // extractor features on the test set
};

/// Inference uses only the extractor and the linear classifier; argmax on
/// raw logits unless compensated with log-priors.
Evaluation evaluate(const ModelParams& params, const Dataset& test,
                    const std::vector<double>& priors,
                    bool compensated_inference = false,
                    bool sd_on_extractor_features = false,
                    bool fc_ms_on_extractor_features = false);

TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& test_set);

}  // namespace ecl
