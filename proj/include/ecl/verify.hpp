#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecl/batch.hpp"
#include "ecl/rng.hpp"

namespace ecl {

/// Random unit-row batch with two-views-per-source structure (every anchor
/// has a twin, so P(i) is never empty) plus random unit prototype columns.
/// Classes may be absent from small batches; prototypes stand in for them.
struct RandomBatch {
    ContrastBatch batch;
    PrototypeSet protos;
};

RandomBatch random_unit_batch(Rng& rng, int num_classes, int feature_dim,
                              int pairs);

/// Within-class-collapsed batch with symmetric cross-class relations: class
/// views are copies of simplex vertices (random rotation), prototypes are
/// the vertices tilted by a common angle toward a shared orthogonal
/// direction. Class averages of identical vectors are idempotent and every
/// class plays a symmetric role, so bc_ecl_loss is exactly invariant under
/// duplicating a view while the bcl prototype weight 1/(|B_c|+1) still
/// shifts.
struct CollapsedBatch {
    ContrastBatch batch;
    PrototypeSet protos;
    double tau = 1.0;
};

CollapsedBatch collapsed_symmetric_batch(Rng& rng, int num_classes,
                                         int feature_dim);

struct SuiteReport {
    std::string name;
    int instances = 0;
    int violations = 0;
    double max_violation = 0.0;  // suite-specific worst value
    std::string failing_instance_json;  // serialized replay data, if any
    bool passed() const { return violations == 0; }
};

/// Theorem-1 / Eq.-3 bound property over random batches at tau = 1.
SuiteReport run_bounds_suite(int instances, std::uint64_t seed);

/// Reverse-mode vs central finite differences (eps = 1e-5) for every loss,
/// including the total loss through the full model. max_violation is the
/// worst relative error; the pass threshold is 1e-6.
SuiteReport run_gradients_suite(int instances_per_loss, std::uint64_t seed);

/// Exact closed-form values (full collapse, antipodes, uniform softmax...).
SuiteReport run_trivials_suite();

/// JSON dump of a batch + prototypes for replay.
std::string serialize_instance(const ContrastBatch& batch,
                               const PrototypeSet& protos, double tau);

}  // namespace ecl
