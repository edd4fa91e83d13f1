#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rewind/baselines.hpp"
#include "rewind/config.hpp"
#include "rewind/conformal.hpp"
#include "rewind/types.hpp"

namespace rewind::eval {

inline constexpr int kDefaultClusterCount = 64;
inline constexpr long kDefaultClusterFitCap = 20000;

/// Replay a recorded episode's chunk stream and return its per-frame
/// discrepancy track (invalid warm-up frames masked out).
EpisodeScores tide_episode_scores(const EpisodeRecord& ep, const GuardConfig& cfg);

/// Features of the trimmed window [trim, len - trim) of each episode,
/// row-stacked in input order.
Matrix stacked_window_features(const std::vector<EpisodeRecord>& episodes,
                               const GuardConfig& cfg);

/// Deterministic stride subsample down to at most max_rows rows.
Matrix subsample_rows(const Matrix& m, long max_rows);

struct DetectorReport {
    std::string detector;
    std::string scenario;
    double q_hat = 0.0;
    DetectionMetrics metrics;
};

/// Fit every requested detector on the calibration episodes, set each
/// threshold through the shared conformal path at cfg.alpha, score the
/// evaluation episodes and compute episode-level detection metrics.
/// Detector names: "tide", "mahalanobis", "clustering".
std::vector<DetectorReport> evaluate_detectors(const std::vector<EpisodeRecord>& calibration,
                                               const std::vector<EpisodeRecord>& evaluation,
                                               const std::vector<std::string>& detectors,
                                               const GuardConfig& cfg,
                                               const std::string& scenario_name,
                                               uint64_t kmeans_seed,
                                               int cluster_count = kDefaultClusterCount,
                                               long cluster_fit_cap = kDefaultClusterFitCap);

void write_report_csv(const std::vector<DetectorReport>& reports, const std::string& path);

} // namespace rewind::eval
