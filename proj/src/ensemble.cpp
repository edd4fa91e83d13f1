#include "rewind/ensemble.hpp"

#include <cmath>

namespace rewind {

Ensembler::Ensembler(int batch, int chunk_horizon, int dims, double m, int overlap)
    : batch_(batch), chunk_horizon_(chunk_horizon), dims_(dims), overlap_(overlap),
      decay_(std::exp(-m)) {
    if (batch < 1 || chunk_horizon < 1 || dims < 1)
        throw DimensionError("ensembler dimensions must all be >= 1");
    if (overlap < 1 || overlap > chunk_horizon)
        throw ConfigError("ensembler overlap must lie in [1, chunk_horizon]");
    if (!(m > 0.0))
        throw ConfigError("ensembler coefficient m must be > 0");
    ring_.resize(chunk_horizon_);
    for (Cell& c : ring_)
        c.weighted_sum = Matrix::Zero(batch_, dims_);
}

EnsembleStep Ensembler::push_chunk(const ActionChunk& chunk) {
    if (chunk.batch() != batch_ || chunk.horizon() != chunk_horizon_ || chunk.dims() != dims_)
        throw DimensionError("chunk shape (" + std::to_string(chunk.batch()) + "," +
                             std::to_string(chunk.horizon()) + "," + std::to_string(chunk.dims()) +
                             ") does not match ensembler configuration");

    EnsembleStep out;

    // Snapshot the prior aggregate over the fresh chunk's first `overlap_`
    // steps before it is mixed in; this is the plan the new chunk is
    // compared against.
    out.plan.values = ActionChunk(batch_, overlap_, dims_);
    out.plan.weights = Vector::Zero(overlap_);
    out.plan.anchor_time = time_;
    for (int tau = 0; tau < overlap_; ++tau) {
        const Cell& c = cell(tau);
        out.plan.weights(tau) = c.weight_sum;
        if (c.weight_sum > 0.0) {
            for (int b = 0; b < batch_; ++b)
                for (int d = 0; d < dims_; ++d)
                    out.plan.values.at(b, tau, d) = c.weighted_sum(b, d) / c.weight_sum;
        }
    }

    // Age every pending prediction by one step, then add the fresh chunk at
    // weight 1. Normalized combinations depend only on weight ratios, so the
    // uniform rescaling keeps magnitudes bounded without changing results.
    for (Cell& c : ring_) {
        if (c.weight_sum > 0.0) {
            c.weighted_sum *= decay_;
            c.weight_sum *= decay_;
        }
    }
    for (int tau = 0; tau < chunk_horizon_; ++tau) {
        Cell& c = cell(tau);
        for (int b = 0; b < batch_; ++b)
            for (int d = 0; d < dims_; ++d)
                c.weighted_sum(b, d) += chunk.at(b, tau, d);
        c.weight_sum += 1.0;
    }

    // The fresh chunk always covers the current step, so the weight is >= 1.
    const Cell& now = cell(0);
    out.executed = now.weighted_sum / now.weight_sum;

    // Retire the executed step and open a fresh cell at the horizon tail.
    Cell& retired = ring_[head_];
    retired.weighted_sum.setZero();
    retired.weight_sum = 0.0;
    head_ = (head_ + 1) % ring_.size();
    ++time_;

    return out;
}

void Ensembler::reset() {
    for (Cell& c : ring_) {
        c.weighted_sum.setZero();
        c.weight_sum = 0.0;
    }
}

} // namespace rewind
