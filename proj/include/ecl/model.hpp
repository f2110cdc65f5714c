#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecl/batch.hpp"
#include "ecl/tape.hpp"

namespace ecl {

struct NetConfig {
    int input_dim = 8;                    // D
    int feature_dim = 8;                  // F
    int hidden_dim = 32;                  // H, projector (and prototype MLP)
    int num_classes = 4;                  // C
    std::vector<int> extractor_widths = {32};
    std::uint64_t init_seed = 7;

    void validate() const;
};

/// All trainable tensors. Linear layer weights are stored out x in; biases
/// are 1 x out rows. The prototype transform T is bias-free; the nonlinear
/// prototype MLP keeps its own pair of bias-free layers.
struct ModelParams {
    NetConfig net;
    std::vector<Tensor> extractor_w;
    std::vector<Tensor> extractor_b;
    Tensor proj_w1;   // H x F
    Tensor proj_w2;   // F x H
    Tensor clf_w;     // C x F
    Tensor clf_b;     // 1 x C
    Tensor proto_t;   // F x F, identity at init
    Tensor proto_w1;  // H x F
    Tensor proto_w2;  // F x H

    bool all_finite() const;
};

/// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] init; T starts at identity.
/// Deterministic: same seed and config give bit-identical params.
ModelParams init_params(const NetConfig& cfg);

/// Leaf handles for one tape pass, in the fixed parameter order the trainer
/// uses for gradients and updates.
struct ParamLeaves {
    std::vector<Value> extractor_w;
    std::vector<Value> extractor_b;
    Value proj_w1, proj_w2, clf_w, clf_b, proto_t, proto_w1, proto_w2;
};

ParamLeaves make_leaves(Tape& t, const ModelParams& p);

// Forward passes over the tape. `x` is an n x D node.
Value extract(Tape& t, const ParamLeaves& pl, Value x);                // n x F
Value project(Tape& t, const ParamLeaves& pl, Value f);               // n x F, unit rows
Value classify(Tape& t, const ParamLeaves& pl, Value f);               // n x C

/// Prototype matrix node (F x C, raw). class_means reads per-class means of
/// the provided representation node and needs every class present there.
Value prototypes(Tape& t, const ParamLeaves& pl, ProtoSource source,
                 Value z_for_means = {}, const BatchIndex* idx = nullptr);

// Plain (tape-free) forward for inference-time use.
Tensor extract_eval(const ModelParams& p, const Tensor& x);
Tensor project_eval(const ModelParams& p, const Tensor& f);
Tensor classify_eval(const ModelParams& p, const Tensor& f);

// Checkpoint container: JSON with the net config, epoch and every tensor;
// round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ModelParams& p, int epoch);
ModelParams load_checkpoint(const std::string& path, int* epoch_out = nullptr);

}  // namespace ecl
