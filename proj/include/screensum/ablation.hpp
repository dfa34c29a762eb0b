#pragma once

#include "screensum/eval.hpp"
#include "screensum/lgat.hpp"

namespace screensum {

struct AblationResult {
  Variant variant = Variant::full;
  EvalReport report;        // mean over the held-out pairs
  TrainResult training;
  long steps = 0;
};

// Trains the requested variant and evaluates greedy summaries on held-out
// pairs. With two or more pairs the last one is held out; a single pair is
// both trained on and evaluated (overfit check).
AblationResult run_ablation(const std::vector<TrainPair>& corpus,
                            Variant variant, const LgatConfig& config);

std::string ablation_to_json(const AblationResult& result);

}  // namespace screensum
