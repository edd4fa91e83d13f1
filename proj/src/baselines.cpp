#include "rewind/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rewind/util.hpp"

namespace rewind {

void GaussianModel::finalize() {
    chol.compute(covariance);
    if (chol.info() != Eigen::Success)
        throw DataError("mahalanobis: covariance is not positive definite after regularization");
}

GaussianModel fit_mahalanobis(const Matrix& features, double variance_fraction) {
    GaussianModel m;
    m.pca = fit_pca(features, variance_fraction);
    const Matrix projected = m.pca.project_rows(features);
    const Eigen::Index n = projected.rows();
    const Eigen::Index d = projected.cols();
    if (n < d + 1)
        throw DataError("fit_mahalanobis: need at least d_pca + 1 = " + std::to_string(d + 1) +
                        " points, got " + std::to_string(n));

    m.mean = projected.colwise().mean().transpose();
    const Matrix centered = projected.rowwise() - m.mean.transpose();
    m.covariance = (centered.adjoint() * centered) / static_cast<double>(n - 1);

    const double floor = 1e-6 * m.covariance.trace() / static_cast<double>(d);
    m.covariance += Matrix::Identity(d, d) * std::max(floor, 1e-300);
    m.finalize();
    return m;
}

double score_mahalanobis(const GaussianModel& m, const FeatureVector& f) {
    const Vector centered = m.pca.project(f) - m.mean;
    return std::sqrt(centered.dot(m.chol.solve(centered)));
}

namespace {

// Weighted index draw via the cumulative sum; avoids the
// implementation-defined behaviour of std::discrete_distribution.
Eigen::Index weighted_pick(const Vector& weights, double total, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, total);
    const double u = uni(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights(i);
        if (u < acc)
            return i;
    }
    return weights.size() - 1;
}

Matrix kmeans_pp_init(const Matrix& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    Matrix centroids(k, points.cols());

    std::uniform_int_distribution<Eigen::Index> uni(0, n - 1);
    centroids.row(0) = points.row(uni(rng));

    Vector min_sq_dist(n);
    for (Eigen::Index i = 0; i < n; ++i)
        min_sq_dist(i) = (points.row(i) - centroids.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
        const double total = min_sq_dist.sum();
        Eigen::Index pick;
        if (total > 0.0) {
            pick = weighted_pick(min_sq_dist, total, rng);
        } else {
            pick = uni(rng); // all remaining mass at chosen points (duplicates)
        }
        centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            min_sq_dist(i) =
                std::min(min_sq_dist(i), (points.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

} // namespace

CentroidModel fit_clusters(const Matrix& features, int num_clusters, double variance_fraction,
                           uint64_t seed) {
    if (num_clusters < 1)
        throw ConfigError("fit_clusters: need at least one cluster");
    CentroidModel m;
    m.pca = fit_pca(features, variance_fraction);
    const Matrix points = m.pca.project_rows(features);
    const Eigen::Index n = points.rows();

    int k = num_clusters;
    if (n < k) {
        log_warn("fit_clusters: only " + std::to_string(n) + " points for " +
                 std::to_string(num_clusters) + " clusters; reducing to " + std::to_string(n));
        k = static_cast<int>(n);
    }

    std::mt19937_64 rng(seed);
    Matrix centroids = kmeans_pp_init(points, k, rng);

    std::vector<int> assignment(n, 0);
    constexpr int kMaxIterations = 300;
    constexpr double kShiftTolerance = 1e-6;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (points.row(i) - centroids.row(c)).squaredNorm();
                if (d < best) {
                    best = d;
                    assignment[i] = c;
                }
            }
        }

        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<long> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assignment[i]) += points.row(i);
            ++counts[assignment[i]];
        }

        double max_shift = 0.0;
        for (int c = 0; c < k; ++c) {
            Vector updated;
            if (counts[c] > 0) {
                updated = sums.row(c).transpose() / static_cast<double>(counts[c]);
            } else {
                // Re-seat an empty cluster on the point farthest from its
                // current centroid; deterministic and keeps k clusters live.
                Eigen::Index farthest = 0;
                double worst = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d =
                        (points.row(i) - centroids.row(assignment[i])).squaredNorm();
                    if (d > worst) {
                        worst = d;
                        farthest = i;
                    }
                }
                updated = points.row(farthest).transpose();
            }
            max_shift = std::max(max_shift, (updated.transpose() - centroids.row(c)).norm());
            centroids.row(c) = updated.transpose();
        }
        if (max_shift < kShiftTolerance)
            break;
    }

    m.centroids = std::move(centroids);
    return m;
}

double score_clusters(const CentroidModel& m, const FeatureVector& f) {
    const Vector p = m.pca.project(f);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < m.centroids.rows(); ++c)
        best = std::min(best, (p.transpose() - m.centroids.row(c)).norm());
    return best;
}

DetectionMetrics detector_eval(const std::vector<EpisodeScores>& episodes, double q_hat,
                               long trim_delta) {
    DetectionMetrics out;
    long detected_failures = 0;
    long clean_successes = 0;

    for (const EpisodeScores& ep : episodes) {
        if (ep.scores.size() != ep.valid.size())
            throw DimensionError("detector_eval: scores/valid length mismatch in '" +
                                 ep.episode_id + "'");
        if (ep.failure && !ep.failure_onset)
            throw SchemaError("detector_eval: failure episode '" + ep.episode_id +
                              "' has no onset");
        const long len = static_cast<long>(ep.scores.size());
        const long begin = std::max(trim_delta, ep.failure ? *ep.failure_onset : trim_delta);
        const long end = len - trim_delta;

        bool flagged = false;
        // Success episodes are judged on their whole trimmed window; failure
        // episodes only on post-onset frames.
        const long from = ep.failure ? begin : trim_delta;
        for (long i = std::max<long>(from, 0); i < end; ++i) {
            if (ep.valid[i] && ep.scores[i] > q_hat) {
                flagged = true;
                break;
            }
        }

        if (ep.failure) {
            ++out.n_failures;
            if (flagged) ++detected_failures;
        } else {
            ++out.n_successes;
            if (!flagged) ++clean_successes;
        }
    }

    out.n_episodes = out.n_failures + out.n_successes;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.tpr = out.n_failures > 0
                  ? static_cast<double>(detected_failures) / static_cast<double>(out.n_failures)
                  : nan;
    out.tnr = out.n_successes > 0
                  ? static_cast<double>(clean_successes) / static_cast<double>(out.n_successes)
                  : nan;
    if (std::isnan(out.tpr) && std::isnan(out.tnr))
        out.balanced_accuracy = nan;
    else if (std::isnan(out.tpr))
        out.balanced_accuracy = out.tnr;
    else if (std::isnan(out.tnr))
        out.balanced_accuracy = out.tpr;
    else
        out.balanced_accuracy = 0.5 * (out.tpr + out.tnr);
    return out;
}

} // namespace rewind
