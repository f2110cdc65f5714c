#pragma once

#include <string>
#include <vector>

#include "ecl/trainer.hpp"

namespace ecl {

/// Aggregated run configuration: one JSON file, dotted-key overrides,
/// unknown keys rejected, resolved form echoed into the output directory.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    TrainConfig trainer;

    /// Fully-resolved JSON (all defaults filled in).
    std::string resolved_json() const;
};

/// Built-in defaults (documented in the README).
RunConfig default_run_config();

/// Load from a JSON file; empty path gives the defaults. Every key must be
/// known; errors carry the offending key path.
RunConfig load_run_config(const std::string& path);

/// Apply one `key=value` override with a dotted path, e.g.
/// `loss.lambda_cc_ge=0`. The value is parsed as JSON when possible.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Derive section seeds from the master seed (data stream and train stream
/// are distinct).
void derive_seeds(RunConfig& cfg);

}  // namespace ecl
