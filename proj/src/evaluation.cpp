#include "rewind/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "rewind/ensemble.hpp"
#include "rewind/tide.hpp"

namespace rewind::eval {

EpisodeScores tide_episode_scores(const EpisodeRecord& ep, const GuardConfig& cfg) {
    EpisodeScores out;
    out.episode_id = ep.id;
    out.failure = ep.outcome == Outcome::failure;
    out.failure_onset = ep.failure_onset;
    if (ep.steps.empty())
        return out;

    Ensembler ens(ep.chunk_batch(), cfg.chunk_horizon, ep.action_dim(), cfg.ensemble_m,
                  cfg.overlap);
    out.scores.reserve(ep.steps.size());
    out.valid.reserve(ep.steps.size());
    for (const StepRecord& s : ep.steps) {
        const EnsembleStep step = ens.push_chunk(s.chunk);
        const TideScore score = compute_tide(step.plan, s.chunk);
        out.scores.push_back(score.value);
        out.valid.push_back(score.valid);
    }
    return out;
}

Matrix stacked_window_features(const std::vector<EpisodeRecord>& episodes,
                               const GuardConfig& cfg) {
    if (episodes.empty())
        throw DataError("stacked_window_features: no episodes");
    const int d = episodes.front().feature_dim();
    long rows = 0;
    for (const EpisodeRecord& ep : episodes) {
        const long len = ep.length();
        rows += std::max<long>(0, len - 2 * cfg.trim_delta);
    }
    if (rows == 0)
        throw DataError("stacked_window_features: trimming removed every frame");

    Matrix out(rows, d);
    long r = 0;
    for (const EpisodeRecord& ep : episodes) {
        const long len = ep.length();
        for (long t = cfg.trim_delta; t < len - cfg.trim_delta; ++t)
            out.row(r++) = ep.steps[t].feature.transpose();
    }
    return out;
}

Matrix subsample_rows(const Matrix& m, long max_rows) {
    if (m.rows() <= max_rows)
        return m;
    const double stride = static_cast<double>(m.rows()) / static_cast<double>(max_rows);
    Matrix out(max_rows, m.cols());
    for (long i = 0; i < max_rows; ++i)
        out.row(i) = m.row(static_cast<long>(i * stride));
    return out;
}

namespace {

using FrameScorer = std::function<double(const FeatureVector&)>;

// Per-frame feature scores over the same trimmed calibration windows the
// discrepancy corpus uses, so all detectors share one thresholding path.
CalibrationCorpus feature_corpus(const std::vector<EpisodeRecord>& episodes,
                                 const GuardConfig& cfg, const FrameScorer& scorer) {
    CalibrationCorpus corpus;
    for (const EpisodeRecord& ep : episodes) {
        const long len = ep.length();
        for (long t = cfg.trim_delta; t < len - cfg.trim_delta; ++t) {
            corpus.scores.push_back(scorer(ep.steps[t].feature));
            corpus.source.emplace_back(ep.id, t);
        }
    }
    if (corpus.scores.empty())
        throw DataError("feature_corpus: trimming removed every frame");
    return corpus;
}

EpisodeScores feature_episode_scores(const EpisodeRecord& ep, const FrameScorer& scorer) {
    EpisodeScores out;
    out.episode_id = ep.id;
    out.failure = ep.outcome == Outcome::failure;
    out.failure_onset = ep.failure_onset;
    out.scores.reserve(ep.steps.size());
    for (const StepRecord& s : ep.steps)
        out.scores.push_back(scorer(s.feature));
    out.valid.assign(ep.steps.size(), true);
    return out;
}

} // namespace

std::vector<DetectorReport> evaluate_detectors(const std::vector<EpisodeRecord>& calibration,
                                               const std::vector<EpisodeRecord>& evaluation,
                                               const std::vector<std::string>& detectors,
                                               const GuardConfig& cfg,
                                               const std::string& scenario_name,
                                               uint64_t kmeans_seed, int cluster_count,
                                               long cluster_fit_cap) {
    cfg.validate();
    std::vector<DetectorReport> reports;
    reports.reserve(detectors.size());

    for (const std::string& name : detectors) {
        DetectorReport report;
        report.detector = name;
        report.scenario = scenario_name;

        std::vector<EpisodeScores> eval_scores;
        eval_scores.reserve(evaluation.size());

        if (name == "tide") {
            const CalibrationCorpus corpus = collect_scores(calibration, cfg);
            report.q_hat = cp_threshold(corpus, cfg.alpha).q_hat;
            for (const EpisodeRecord& ep : evaluation)
                eval_scores.push_back(tide_episode_scores(ep, cfg));
        } else if (name == "mahalanobis" || name == "clustering") {
            const Matrix features = stacked_window_features(calibration, cfg);
            FrameScorer scorer;
            GaussianModel gm;
            CentroidModel cm;
            if (name == "mahalanobis") {
                gm = fit_mahalanobis(features, cfg.variance_fraction);
                scorer = [&gm](const FeatureVector& f) { return score_mahalanobis(gm, f); };
            } else {
                cm = fit_clusters(subsample_rows(features, cluster_fit_cap), cluster_count,
                                  cfg.variance_fraction, kmeans_seed);
                scorer = [&cm](const FeatureVector& f) { return score_clusters(cm, f); };
            }
            const CalibrationCorpus corpus = feature_corpus(calibration, cfg, scorer);
            report.q_hat = cp_threshold(corpus, cfg.alpha).q_hat;
            for (const EpisodeRecord& ep : evaluation)
                eval_scores.push_back(feature_episode_scores(ep, scorer));
        } else {
            throw ConfigError("unknown detector '" + name +
                              "'; known: tide, mahalanobis, clustering");
        }

        report.metrics = detector_eval(eval_scores, report.q_hat, cfg.trim_delta);
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_report_csv(const std::vector<DetectorReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << "detector,scenario,tpr,tnr,balanced_accuracy,n_episodes\n";
    char buf[160];
    for (const DetectorReport& r : reports) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.6g,%.6g,%.6g,%ld\n", r.detector.c_str(),
                      r.scenario.c_str(), r.metrics.tpr, r.metrics.tnr,
                      r.metrics.balanced_accuracy, r.metrics.n_episodes);
        out << buf;
    }
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

} // namespace rewind::eval
