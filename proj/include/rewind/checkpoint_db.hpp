#pragma once

#include <string>
#include <vector>

#include "rewind/config.hpp"
#include "rewind/types.hpp"

namespace rewind {

/// Mean-pool a token sequence (one token per row) to a single feature.
FeatureVector pool_features(const TokenSequence& tokens);

/// Centered PCA truncated to the smallest dimension retaining at least the
/// requested variance fraction. Rows of `components` are orthonormal.
struct PcaModel {
    Vector mean;                // d
    Matrix components;          // d_pca x d
    Vector explained_variance;  // d_pca eigenvalues, descending
    bool zero_variance = false; // input cloud was a single repeated point

    int dim() const { return static_cast<int>(mean.size()); }
    int reduced_dim() const { return static_cast<int>(components.rows()); }

    Vector project(const Vector& x) const { return components * (x - mean); }

    /// Project row-stacked points: (E x d) -> (E x d_pca).
    Matrix project_rows(const Matrix& points) const {
        return (points.rowwise() - mean.transpose()) * components.transpose();
    }
};

/// Fit PCA on E >= 2 row-stacked points retaining fraction r of variance.
PcaModel fit_pca(const Matrix& points, double r);

/// Rule-of-thumb isotropic bandwidth h = mean(sigma_j) * E^(-1/(d+4)) over
/// the projected points. Returns 0 when the cloud is degenerate; callers
/// must handle that explicitly.
double silverman_bandwidth(const Matrix& projected,
                           StdConvention convention = StdConvention::sample);

/// Log of the isotropic-Gaussian KDE at `query`, computed with log-sum-exp.
double kde_log_density(const Matrix& points, double h, const Vector& query);

/// Index of the most representative row of `slot_features` (E x d): the one
/// with the highest KDE log-density after per-slot PCA. Ties break to the
/// lowest index; a single row or a degenerate cloud returns 0.
int select_template(const Matrix& slot_features, double r,
                    StdConvention convention = StdConvention::sample);

/// One recovery target: the original-space feature of the winning episode
/// at this slot, its unit-normalized copy used for cosine matching, and the
/// command recorded at the source frame.
struct CheckpointTemplate {
    int slot = 0; // 1-based slot number
    FeatureVector feature;
    FeatureVector unit_feature;
    std::string source_episode;
    long source_timestep = 0;
    Vector recovery_action;
};

struct CheckpointDatabase {
    std::vector<CheckpointTemplate> templates; // ordered by slot
    int feature_dim = 0;
    Matrix stacked_unit; // K x d row-stacked unit features

    int num_slots() const { return static_cast<int>(templates.size()); }

    /// Rebuild unit features and the stacked matrix from raw features.
    void refresh_derived();
};

/// Gather the annotated frame of every episode per slot, pick the KDE mode
/// via select_template, and assemble the template library. Every episode
/// must carry exactly one annotation with cfg.num_slots timestamps.
CheckpointDatabase build_database(const std::vector<EpisodeRecord>& episodes,
                                  const std::vector<CheckpointAnnotation>& annotations,
                                  const GuardConfig& cfg);

void save_database(const CheckpointDatabase& db, const std::string& path);
CheckpointDatabase load_database(const std::string& path);

} // namespace rewind
