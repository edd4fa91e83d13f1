#include "rewind/tracker.hpp"

#include <limits>

namespace rewind {

Vector cosine_similarities(const FeatureVector& f, const CheckpointDatabase& db) {
    if (f.size() != db.feature_dim)
        throw DimensionError("cosine_similarities: feature length " + std::to_string(f.size()) +
                             " != database dim " + std::to_string(db.feature_dim));
    const double norm = f.norm();
    if (norm == 0.0)
        throw DataError("cosine_similarities: zero-norm feature has no direction");
    return db.stacked_unit * (f / norm);
}

TrackerState::TrackerState(const CheckpointDatabase& db, const GuardConfig& cfg)
    : db_(&db), peak_gap_(cfg.peak_gap), rollback_margin_(cfg.rollback_margin) {
    cfg.validate();
    slots_.resize(db.num_slots());
    for (SlotState& s : slots_)
        s.s_max = -std::numeric_limits<double>::infinity();
}

void TrackerState::update(const Vector& sims, const Vector& executed_action) {
    if (sims.size() != num_slots())
        throw DimensionError("tracker update: got " + std::to_string(sims.size()) +
                             " similarities for " + std::to_string(num_slots()) + " slots");
    for (int k = 0; k < num_slots(); ++k) {
        SlotState& s = slots_[k];
        if (sims(k) > s.s_max) {
            s.s_max = sims(k);
            s.t_star = time_;
            s.snapshot_action = executed_action;
            s.peaked = false;
        }
        s.peaked = s.t_star >= 0 && (time_ - s.t_star) > peak_gap_;
    }
    last_sims_ = sims;
    last_action_ = executed_action;
    last_update_time_ = time_;
    ++time_;
}

std::optional<int> TrackerState::latest_peaked_slot() const {
    std::optional<int> best;
    for (int k = 0; k < num_slots(); ++k) {
        if (!slots_[k].peaked)
            continue;
        if (!best || slots_[k].t_star >= slots_[*best].t_star)
            best = k; // >= keeps the larger index on equal t_star
    }
    return best;
}

Vector TrackerState::recover(Ensembler& ensembler) const {
    const std::optional<int> k_star = latest_peaked_slot();
    if (!k_star)
        throw ProtocolError("recover called with no peaked slot");
    ensembler.reset();
    return slots_[*k_star].snapshot_action;
}

void TrackerState::rollback_clear(int newer_slot) {
    if (newer_slot < 0 || newer_slot >= num_slots())
        throw DimensionError("rollback_clear: slot index out of range");
    if (last_update_time_ < 0)
        return;
    const long reference = slots_[newer_slot].t_star;
    for (int p = 0; p < num_slots(); ++p) {
        if (p == newer_slot)
            continue;
        SlotState& s = slots_[p];
        if (!s.peaked || s.t_star <= reference)
            continue;
        if (last_sims_(p) < s.s_max - rollback_margin_) {
            s.peaked = false;
            s.s_max = last_sims_(p);
            s.t_star = last_update_time_;
            s.snapshot_action = last_action_;
        }
    }
}

void TrackerState::auto_rollback_scan() {
    if (last_update_time_ < 0)
        return;
    for (int k = 0; k < num_slots(); ++k) {
        const SlotState& s = slots_[k];
        if (s.t_star >= 0 && last_sims_(k) >= s.s_max - rollback_margin_)
            rollback_clear(k);
    }
}

} // namespace rewind
