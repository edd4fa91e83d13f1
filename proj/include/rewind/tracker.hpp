#pragma once

#include <optional>
#include <vector>

#include "rewind/checkpoint_db.hpp"
#include "rewind/config.hpp"
#include "rewind/ensemble.hpp"
#include "rewind/types.hpp"

namespace rewind {

/// Cosine similarity of `f` against every template, as the single
/// matrix-vector product stacked_unit * (f / ||f||). Throws DataError on a
/// zero-norm feature (undefined direction).
Vector cosine_similarities(const FeatureVector& f, const CheckpointDatabase& db);

/// Per-slot bookkeeping: running-max similarity, the time and action
/// snapshot of that maximum, and the peaked flag.
struct SlotState {
    double s_max; // -inf until the first update
    long t_star = -1;
    Vector snapshot_action;
    bool peaked = false;
};

/// Online tracker over the checkpoint library. Owns the clock of the
/// monitoring loop; update() once per control step.
class TrackerState {
public:
    TrackerState(const CheckpointDatabase& db, const GuardConfig& cfg);

    /// Per slot: a strictly higher similarity refreshes the maximum and
    /// snapshots the executed action; then the peaked flag is recomputed as
    /// (t - t_star > peak_gap). Advances the clock.
    void update(const Vector& sims, const Vector& executed_action);

    /// The peaked slot whose maximum is most recent; ties break to the
    /// larger slot index. Returns 0-based index, or nullopt if none peaked.
    std::optional<int> latest_peaked_slot() const;

    /// Fetch the recovery action of the latest peaked slot and clear the
    /// ensembler's pending predictions. Slot data is left untouched so
    /// repeated failures keep a consistent respawn target.
    /// Throws ProtocolError when no slot has peaked.
    Vector recover(Ensembler& ensembler) const;

    /// Un-peak every peaked slot whose maximum is more recent than
    /// newer_slot's but whose live similarity has dropped below its own
    /// maximum minus the rollback margin; their maxima restart from the
    /// live value. Stale peaks would otherwise shadow newer_slot after the
    /// scene rolls back to it.
    void rollback_clear(int newer_slot);

    /// Apply rollback_clear from every slot whose live similarity sits
    /// within the margin of its own maximum. Call after update().
    void auto_rollback_scan();

    const std::vector<SlotState>& slots() const { return slots_; }
    const CheckpointDatabase& database() const { return *db_; }
    long time() const { return time_; }
    int num_slots() const { return static_cast<int>(slots_.size()); }
    const Vector& last_similarities() const { return last_sims_; }

private:
    const CheckpointDatabase* db_;
    long peak_gap_;
    double rollback_margin_;
    std::vector<SlotState> slots_;
    long time_ = 0;
    long last_update_time_ = -1;
    Vector last_sims_;
    Vector last_action_;
};

} // namespace rewind
