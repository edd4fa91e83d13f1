#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rewind/errors.hpp"

namespace rewind {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Policy-encoder latent of length d.
using FeatureVector = Eigen::VectorXd;

// L observation-conditioned tokens, one per row, each of length d.
using TokenSequence = Eigen::MatrixXd;

/// Fresh multi-step action prediction of shape (batch, horizon, dims).
/// Dense row-major storage indexed [b][t][d].
class ActionChunk {
public:
    ActionChunk() = default;

    ActionChunk(int batch, int horizon, int dims)
        : batch_(batch), horizon_(horizon), dims_(dims),
          values_(static_cast<size_t>(batch) * horizon * dims, 0.0) {
        if (batch < 1 || horizon < 1 || dims < 1)
            throw DimensionError("ActionChunk dimensions must all be >= 1");
    }

    int batch() const { return batch_; }
    int horizon() const { return horizon_; }
    int dims() const { return dims_; }
    bool empty() const { return values_.empty(); }

    double& at(int b, int t, int d) { return values_[index(b, t, d)]; }
    double at(int b, int t, int d) const { return values_[index(b, t, d)]; }

    /// View of one batch lane as a horizon x dims matrix.
    Eigen::Map<const RowMajorMatrix> lane(int b) const {
        return {values_.data() + static_cast<size_t>(b) * horizon_ * dims_, horizon_, dims_};
    }
    Eigen::Map<RowMajorMatrix> lane(int b) {
        return {values_.data() + static_cast<size_t>(b) * horizon_ * dims_, horizon_, dims_};
    }

    const std::vector<double>& raw() const { return values_; }
    std::vector<double>& raw() { return values_; }

    bool same_shape(const ActionChunk& o) const {
        return batch_ == o.batch_ && horizon_ == o.horizon_ && dims_ == o.dims_;
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    size_t index(int b, int t, int d) const {
        return (static_cast<size_t>(b) * horizon_ + t) * dims_ + d;
    }

    int batch_ = 0;
    int horizon_ = 0;
    int dims_ = 0;
    std::vector<double> values_;
};

/// Weighted aggregate of previously issued chunks over the next `overlap()`
/// steps, aligned so that cell tau predicts absolute time anchor_time + tau.
/// A cell with zero accumulated weight has never been covered by any chunk
/// and is excluded from discrepancy scoring.
struct AggregatedPlan {
    ActionChunk values;   // batch x overlap x dims
    Vector weights;       // accumulated ensemble weight per time cell, >= 0
    long anchor_time = 0;

    int overlap() const { return values.horizon(); }
    bool cell_valid(int tau) const { return weights(tau) > 0.0; }

    int valid_cells() const {
        int n = 0;
        for (int tau = 0; tau < weights.size(); ++tau)
            if (weights(tau) > 0.0) ++n;
        return n;
    }
};

/// One frame of a recorded rollout: the observation, the latent feature,
/// the executed command and the chunk predicted at that frame.
struct StepRecord {
    long t = 0;
    Vector state;
    FeatureVector feature;
    Vector action;
    ActionChunk chunk;
};

enum class Outcome { success, failure };

inline std::string to_string(Outcome o) {
    return o == Outcome::success ? "success" : "failure";
}

/// Serialized rollout with its post-hoc label. failure_onset marks the first
/// visibly failing frame and is present exactly when outcome is failure.
struct EpisodeRecord {
    std::string id;
    std::vector<StepRecord> steps;
    Outcome outcome = Outcome::success;
    std::optional<long> failure_onset;

    long length() const { return static_cast<long>(steps.size()); }

    int state_dim() const { return steps.empty() ? 0 : static_cast<int>(steps.front().state.size()); }
    int feature_dim() const { return steps.empty() ? 0 : static_cast<int>(steps.front().feature.size()); }
    int action_dim() const { return steps.empty() ? 0 : static_cast<int>(steps.front().action.size()); }
    int chunk_horizon() const { return steps.empty() ? 0 : steps.front().chunk.horizon(); }
    int chunk_batch() const { return steps.empty() ? 0 : steps.front().chunk.batch(); }

    /// Check every structural invariant; throws SchemaError on violation.
    void validate() const;
};

/// Per-episode slot timestamps naming the frames judged safe to recover to.
struct CheckpointAnnotation {
    std::string episode_id;
    std::vector<long> slot_timestamps;
};

} // namespace rewind
