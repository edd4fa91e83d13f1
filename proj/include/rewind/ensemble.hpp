#pragma once

#include "rewind/config.hpp"
#include "rewind/types.hpp"

namespace rewind {

/// Result of feeding one fresh chunk to the ensembler: the command to execute
/// now (one row per batch lane) and the pre-update aggregated plan over the
/// fresh chunk's first `overlap` steps.
struct EnsembleStep {
    Matrix executed;     // batch x dims
    AggregatedPlan plan; // aggregate of prior chunks only
};

/// Temporal ensembler fusing overlapping chunk predictions. The command for
/// each step is the weight-normalized combination of every pending chunk
/// prediction targeting it, with weight exp(-m * age) so the newest chunk
/// dominates. One instance per control loop; re-infer and push every step.
class Ensembler {
public:
    Ensembler(int batch, int chunk_horizon, int dims, double m, int overlap);

    /// Incorporate the chunk predicted at the current step. The returned
    /// plan reflects only previously pushed chunks; its cells are invalid
    /// (zero weight) right after construction or reset().
    EnsembleStep push_chunk(const ActionChunk& chunk);

    /// Drop all pending predictions. The clock keeps running; the next
    /// push_chunk returns an all-invalid plan.
    void reset();

    long current_time() const { return time_; }
    int batch() const { return batch_; }
    int dims() const { return dims_; }
    int chunk_horizon() const { return chunk_horizon_; }
    int overlap() const { return overlap_; }

private:
    struct Cell {
        Matrix weighted_sum; // batch x dims
        double weight_sum = 0.0;
    };

    Cell& cell(int offset) { return ring_[(head_ + offset) % ring_.size()]; }

    int batch_;
    int chunk_horizon_;
    int dims_;
    int overlap_;
    double decay_; // exp(-m), applied to all pending weights each step
    long time_ = 0;
    size_t head_ = 0;
    std::vector<Cell> ring_; // ring_[head_+k] pends for time current_time + k
};

} // namespace rewind
