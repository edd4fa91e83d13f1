#pragma once

#include "rewind/types.hpp"

namespace rewind {

/// Inter-chunk discrepancy score. `valid` is false while no prior plan
/// exists (episode start or right after a recovery reset); invalid scores
/// never trip the threshold.
struct TideScore {
    double value = 0.0;
    bool valid = false;
};

/// Mean squared discrepancy between the aggregated plan and the fresh
/// chunk's first overlap steps, averaged over the plan's covered cells.
/// Throws DimensionError on batch/dims mismatch or when the chunk is
/// shorter than the plan.
TideScore compute_tide(const AggregatedPlan& plan, const ActionChunk& fresh);

/// Strict threshold test: true iff the score is valid and exceeds q_hat.
inline bool is_failing(const TideScore& score, double q_hat) {
    return score.valid && score.value > q_hat;
}

} // namespace rewind
