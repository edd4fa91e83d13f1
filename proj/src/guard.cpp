#include "rewind/guard.hpp"

#include <cstdio>
#include <fstream>

namespace rewind {

std::string telemetry_header(int num_slots) {
    std::string h = "t,tide,valid,q_hat,flagged";
    for (int k = 1; k <= num_slots; ++k) h += ",s" + std::to_string(k);
    for (int k = 1; k <= num_slots; ++k) h += ",peaked" + std::to_string(k);
    h += ",recovered,k_star";
    return h;
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

std::string telemetry_line(const TelemetryRow& row) {
    std::string line = std::to_string(row.t) + "," + fmt(row.tide) + "," +
                       (row.valid ? "1" : "0") + "," + fmt(row.q_hat) + "," +
                       (row.flagged ? "1" : "0");
    for (Eigen::Index k = 0; k < row.sims.size(); ++k) line += "," + fmt(row.sims(k));
    for (bool p : row.peaked) line += p ? ",1" : ",0";
    line += std::string(",") + (row.recovered ? "1" : "0") + "," + std::to_string(row.k_star);
    return line;
}

void write_telemetry_csv(const std::vector<TelemetryRow>& rows, int num_slots,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << telemetry_header(num_slots) << '\n';
    for (const TelemetryRow& row : rows)
        out << telemetry_line(row) << '\n';
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

OnlineGuard::OnlineGuard(const CheckpointDatabase& db, const Threshold& threshold,
                         const GuardConfig& cfg, int batch, int action_dims,
                         bool recovery_enabled)
    : cfg_(cfg), threshold_(threshold),
      ensembler_(batch, cfg.chunk_horizon, action_dims, cfg.ensemble_m, cfg.overlap),
      tracker_(db, cfg), recovery_enabled_(recovery_enabled) {
    cfg_.validate();
}

TelemetryRow OnlineGuard::make_row(const TideScore& score) const {
    TelemetryRow row;
    row.tide = score.value;
    row.valid = score.valid;
    row.q_hat = threshold_.q_hat;
    row.sims = tracker_.last_similarities();
    row.peaked.reserve(tracker_.num_slots());
    for (const SlotState& s : tracker_.slots()) row.peaked.push_back(s.peaked);
    return row;
}

OnlineGuard::StepResult OnlineGuard::on_inference(const ActionChunk& fresh,
                                                  const FeatureVector& feature) {
    StepResult result;
    // The tracker clock ticks on every loop step (hold steps included) and
    // is the step index reported in telemetry.
    const long t = tracker_.time();

    const EnsembleStep step = ensembler_.push_chunk(fresh);
    const TideScore score = compute_tide(step.plan, fresh);
    result.executed = step.executed;

    const Vector sims = cosine_similarities(feature, tracker_.database());
    // The snapshot records what was actually commanded this step, i.e. the
    // ensembled action of batch lane 0.
    tracker_.update(sims, step.executed.row(0).transpose());
    tracker_.auto_rollback_scan();

    result.row = make_row(score);
    result.row.t = t;
    result.row.flagged = is_failing(score, threshold_.q_hat);

    const bool suppressed = suppress_remaining_ > 0;
    if (suppress_remaining_ > 0)
        --suppress_remaining_;

    if (result.row.flagged && !suppressed && recovery_enabled_) {
        const std::optional<int> k_star = tracker_.latest_peaked_slot();
        if (k_star) {
            result.recovery_action = tracker_.recover(ensembler_);
            result.recovered = true;
            result.row.recovered = true;
            result.row.k_star = *k_star + 1;
            for (int b = 0; b < result.executed.rows(); ++b)
                result.executed.row(b) = result.recovery_action.transpose();
            suppress_remaining_ = cfg_.flag_cooldown;
        }
    }
    return result;
}

TelemetryRow OnlineGuard::on_hold_step(const FeatureVector& feature,
                                       const Vector& executed_action) {
    const long t = tracker_.time();
    const Vector sims = cosine_similarities(feature, tracker_.database());
    tracker_.update(sims, executed_action);
    tracker_.auto_rollback_scan();

    TelemetryRow row = make_row(TideScore{});
    row.t = t;
    return row;
}

} // namespace rewind
