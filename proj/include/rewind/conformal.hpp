#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rewind/config.hpp"
#include "rewind/types.hpp"

namespace rewind {

/// Per-frame discrepancy scores harvested from successful rollouts, with
/// (episode, frame) provenance kept alongside for traceability.
struct CalibrationCorpus {
    std::vector<double> scores;
    std::vector<std::pair<std::string, long>> source;

    long size() const { return static_cast<long>(scores.size()); }
    std::string digest() const;
};

/// Calibrated decision threshold. q_hat is an order statistic of the corpus,
/// or +infinity when the corpus is too small for the requested coverage.
struct Threshold {
    double q_hat = 0.0;
    double alpha = 0.0;
    long n = 0;
    std::string corpus_digest;
};

/// Replay each successful episode through a fresh ensembler and record the
/// discrepancy of every frame inside the trimmed window [trim, len - trim).
/// Episodes shorter than 2*trim + 1 are skipped with a warning; a failure
/// episode raises ProtocolError, an all-skipped input raises DataError.
CalibrationCorpus collect_scores(const std::vector<EpisodeRecord>& episodes,
                                 const GuardConfig& cfg);

/// Split-conformal threshold: the k-th smallest score with
/// k = ceil((n + 1) * (1 - alpha)), or +infinity when k > n.
Threshold cp_threshold(const CalibrationCorpus& corpus, double alpha);

void save_threshold(const Threshold& t, const std::string& path);
Threshold load_threshold(const std::string& path);

} // namespace rewind
