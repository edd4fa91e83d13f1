#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rewind/checkpoint_db.hpp"
#include "rewind/config.hpp"
#include "rewind/conformal.hpp"
#include "rewind/ensemble.hpp"
#include "rewind/tide.hpp"
#include "rewind/tracker.hpp"

namespace rewind {

/// One monitoring row per control step; column order matches the CSV.
struct TelemetryRow {
    long t = 0;
    double tide = 0.0;
    bool valid = false;
    double q_hat = 0.0;
    bool flagged = false;
    Vector sims;               // s[1..K]
    std::vector<bool> peaked;  // peaked[1..K]
    bool recovered = false;
    int k_star = -1; // 1-based slot of the recovery target, -1 when none
};

std::string telemetry_header(int num_slots);
std::string telemetry_line(const TelemetryRow& row);
void write_telemetry_csv(const std::vector<TelemetryRow>& rows, int num_slots,
                         const std::string& path);

/// Online failure-detection and recovery postprocessor. Each control step
/// either runs the full inference path (ensemble the fresh chunk, score the
/// discrepancy, track slot similarities, decide on recovery) or, while a
/// recovery command is being held, the tracking-only path.
///
/// The monitoring side is read-only with respect to action computation:
/// with no flag fired, executed commands are identical to a bare ensembler
/// fed the same chunks.
class OnlineGuard {
public:
    /// With recovery_enabled = false the guard only observes: flags are
    /// logged but never acted on and the ensembler is never reset.
    OnlineGuard(const CheckpointDatabase& db, const Threshold& threshold,
                const GuardConfig& cfg, int batch, int action_dims,
                bool recovery_enabled = true);

    struct StepResult {
        Matrix executed;    // batch x dims; recovery action broadcast on recovery
        TelemetryRow row;
        bool recovered = false;
        Vector recovery_action; // set when recovered
    };

    /// Full step: push the chunk, score it, update slots, flag and recover.
    StepResult on_inference(const ActionChunk& fresh, const FeatureVector& feature);

    /// Tracking-only step used while a recovery command is held: no chunk is
    /// ensembled and no flag can fire, but slot bookkeeping stays live.
    TelemetryRow on_hold_step(const FeatureVector& feature, const Vector& executed_action);

    const TrackerState& tracker() const { return tracker_; }
    Ensembler& ensembler() { return ensembler_; }
    double q_hat() const { return threshold_.q_hat; }
    long flags_suppressed_for() const { return suppress_remaining_; }

private:
    TelemetryRow make_row(const TideScore& score) const;

    GuardConfig cfg_;
    Threshold threshold_;
    Ensembler ensembler_;
    TrackerState tracker_;
    bool recovery_enabled_;
    long suppress_remaining_ = 0; // post-recovery flag cooldown
};

} // namespace rewind
