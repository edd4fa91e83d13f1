#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rewind/checkpoint_db.hpp"
#include "rewind/config.hpp"
#include "rewind/types.hpp"

namespace rewind {

/// Single Gaussian over PCA-projected calibration features; scores queries
/// by Mahalanobis distance. The covariance carries a diagonal floor of
/// 1e-6 * trace / d_pca so near-singular fits stay invertible.
struct GaussianModel {
    PcaModel pca;
    Vector mean;       // d_pca
    Matrix covariance; // d_pca x d_pca, regularized
    Eigen::LLT<Matrix> chol;

    void finalize(); // factor the covariance; called by fit_mahalanobis
};

GaussianModel fit_mahalanobis(const Matrix& features, double variance_fraction);
double score_mahalanobis(const GaussianModel& m, const FeatureVector& f);

/// K-means centroids over PCA-projected calibration features; scores
/// queries by the minimum Euclidean distance to any centroid.
struct CentroidModel {
    PcaModel pca;
    Matrix centroids; // C x d_pca
};

/// Deterministic k-means (k-means++ seeding from `seed`, Lloyd iterations
/// until the largest centroid shift is below 1e-6 or 300 rounds). When
/// fewer points than requested clusters are given, C is reduced with a
/// warning.
CentroidModel fit_clusters(const Matrix& features, int num_clusters, double variance_fraction,
                           uint64_t seed);
double score_clusters(const CentroidModel& m, const FeatureVector& f);

/// Per-frame score track of one episode as seen by a detector. `valid[i]`
/// masks warm-up frames that can never flag.
struct EpisodeScores {
    std::string episode_id;
    std::vector<double> scores;
    std::vector<bool> valid;
    bool failure = false;
    std::optional<long> failure_onset;
};

struct DetectionMetrics {
    double tpr = 0.0;
    double tnr = 0.0;
    double balanced_accuracy = 0.0;
    long n_failures = 0;
    long n_successes = 0;
    long n_episodes = 0;
};

/// Episode-level detection: a failure counts as detected when any valid
/// post-onset frame inside the trimmed window exceeds q_hat; a success
/// counts as a true negative when no valid frame does. A class with zero
/// episodes yields NaN for its rate and is excluded from the average.
DetectionMetrics detector_eval(const std::vector<EpisodeScores>& episodes, double q_hat,
                               long trim_delta);

} // namespace rewind
