#pragma once

#include <vector>

#include "ecl/batch.hpp"
#include "ecl/tape.hpp"

namespace ecl {

// Tape-level loss builders. `z` must hold unit rows, `protos` the raw F x C
// prototype matrix (columns are l2-normalized internally before the
// contrastive dot products). All return a 1x1 node.
namespace tapeops {

Value bc_ecl_loss(Tape& t, Value z, const BatchIndex& idx, Value protos,
                  double tau, bool own_class_includes_anchor = false);
Value bcl_loss(Tape& t, Value z, const BatchIndex& idx, Value protos,
               double tau, bool own_class_includes_anchor = false);
Value cc_ge_loss(Tape& t, Value w, Value protos);
Value lc_loss(Tape& t, Value logits, const std::vector<int>& labels,
              const std::vector<double>& priors);
Value total_loss(Tape& t, Value l_bc_ecl, Value l_cc_ge, Value l_lc,
                 double lambda_bc_ecl, double lambda_cc_ge, double lambda_lc);

}  // namespace tapeops

// Value-level entry points (each builds a private tape).
double bc_ecl_loss(const ContrastBatch& batch, const PrototypeSet& protos,
                   double tau, bool own_class_includes_anchor = false);
double bcl_loss(const ContrastBatch& batch, const PrototypeSet& protos,
                double tau, bool own_class_includes_anchor = false);
double cc_ge_loss(const Tensor& w, const PrototypeSet& protos);
double lc_loss(const Tensor& logits, const std::vector<int>& labels,
               const std::vector<double>& priors);

// Lower bounds at tau = 1 (plain scalars, no tape). A batch class that is
// empty contributes only its prototype similarity, at full weight in the
// per-class exponent, so the bound holds for every valid batch.
double bc_ecl_bound(const ContrastBatch& batch, const PrototypeSet& protos);
double bcl_bound(const ContrastBatch& batch, const PrototypeSet& protos);

// Batch-frequency priors with a 1/(n*C) floor for absent classes.
std::vector<double> batch_frequency_priors(const std::vector<int>& labels,
                                           int num_classes);

}  // namespace ecl
