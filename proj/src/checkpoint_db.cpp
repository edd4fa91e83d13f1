#include "rewind/checkpoint_db.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "rewind/util.hpp"

namespace rewind {

using nlohmann::json;

FeatureVector pool_features(const TokenSequence& tokens) {
    if (tokens.rows() < 1)
        throw DataError("pool_features: empty token sequence");
    return tokens.colwise().mean().transpose();
}

PcaModel fit_pca(const Matrix& points, double r) {
    if (!(r > 0.0 && r <= 1.0))
        throw ConfigError("fit_pca: variance fraction must lie in (0,1]");
    const Eigen::Index rows = points.rows();
    const Eigen::Index cols = points.cols();
    if (rows < 2)
        throw DataError("fit_pca: need at least 2 points, got " + std::to_string(rows));

    PcaModel model;
    model.mean = points.colwise().mean().transpose();
    const Matrix centered = points.rowwise() - model.mean.transpose();
    const Matrix cov = (centered.adjoint() * centered) / static_cast<double>(rows - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success)
        throw DataError("fit_pca: eigendecomposition failed");

    // Eigen returns ascending order; flip to descending and clamp the tiny
    // negative eigenvalues the solver can produce on rank-deficient input.
    Vector values(cols);
    Matrix vectors(cols, cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        values(i) = std::max(solver.eigenvalues()(cols - 1 - i), 0.0);
        vectors.col(i) = solver.eigenvectors().col(cols - 1 - i);
    }

    const double total = values.sum();
    Eigen::Index keep = 1;
    if (total <= 0.0) {
        model.zero_variance = true;
    } else {
        double cumulative = 0.0;
        for (Eigen::Index i = 0; i < cols; ++i) {
            cumulative += values(i);
            if (cumulative / total >= r) {
                keep = i + 1;
                break;
            }
            keep = i + 1;
        }
    }

    model.components = Matrix(keep, cols);
    model.explained_variance = values.head(keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
        Vector v = vectors.col(i);
        // Fix the sign so refits of the same cloud are reproducible.
        Eigen::Index pivot;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v(pivot) < 0.0) v = -v;
        model.components.row(i) = v.transpose();
    }
    return model;
}

double silverman_bandwidth(const Matrix& projected, StdConvention convention) {
    const Eigen::Index n = projected.rows();
    const Eigen::Index d = projected.cols();
    if (n < 2)
        throw DataError("silverman_bandwidth: need at least 2 points");

    const double denom = convention == StdConvention::sample ? static_cast<double>(n - 1)
                                                             : static_cast<double>(n);
    const Matrix centered = projected.rowwise() - projected.colwise().mean();
    double sigma_bar = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
        sigma_bar += std::sqrt(centered.col(j).squaredNorm() / denom);
    sigma_bar /= static_cast<double>(d);

    if (sigma_bar == 0.0)
        return 0.0; // degenerate cloud; caller decides the fallback
    return sigma_bar * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
}

double kde_log_density(const Matrix& points, double h, const Vector& query) {
    if (!(h > 0.0))
        throw DataError("kde_log_density: bandwidth must be > 0");
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (n < 1)
        throw DataError("kde_log_density: empty point set");
    if (query.size() != d)
        throw DimensionError("kde_log_density: query dimension mismatch");

    // log p(q) = LSE_e( -||q - x_e||^2 / 2h^2 ) - log n - d/2 log(2 pi h^2)
    Vector exponents(n);
    const double inv2h2 = 1.0 / (2.0 * h * h);
    for (Eigen::Index e = 0; e < n; ++e)
        exponents(e) = -(query.transpose() - points.row(e)).squaredNorm() * inv2h2;

    const double m = exponents.maxCoeff();
    double acc = 0.0;
    for (Eigen::Index e = 0; e < n; ++e)
        acc += std::exp(exponents(e) - m);

    const double two_pi = 2.0 * M_PI;
    return m + std::log(acc) - std::log(static_cast<double>(n)) -
           0.5 * static_cast<double>(d) * std::log(two_pi * h * h);
}

int select_template(const Matrix& slot_features, double r, StdConvention convention) {
    const Eigen::Index n = slot_features.rows();
    if (n < 1)
        throw DataError("select_template: empty slot cloud");
    if (n == 1)
        return 0;

    const PcaModel pca = fit_pca(slot_features, r);
    if (pca.zero_variance)
        return 0; // every point coincides; any of them is the mode

    const Matrix projected = pca.project_rows(slot_features);
    const double h = silverman_bandwidth(projected, convention);
    if (h == 0.0)
        return 0;

    int best = 0;
    double best_density = -std::numeric_limits<double>::infinity();
    for (Eigen::Index e = 0; e < n; ++e) {
        const double density = kde_log_density(projected, h, projected.row(e).transpose());
        if (density > best_density) {
            best_density = density;
            best = static_cast<int>(e);
        }
    }
    return best;
}

void CheckpointDatabase::refresh_derived() {
    if (templates.empty())
        throw SchemaError("checkpoint database has no templates");
    feature_dim = static_cast<int>(templates.front().feature.size());
    stacked_unit = Matrix(templates.size(), feature_dim);
    for (size_t k = 0; k < templates.size(); ++k) {
        CheckpointTemplate& t = templates[k];
        if (t.feature.size() != feature_dim)
            throw SchemaError("template for slot " + std::to_string(t.slot) +
                              " has inconsistent feature length");
        const double norm = t.feature.norm();
        if (norm == 0.0)
            throw DataError("template for slot " + std::to_string(t.slot) +
                            " has a zero-norm feature");
        t.unit_feature = t.feature / norm;
        stacked_unit.row(k) = t.unit_feature.transpose();
    }
}

CheckpointDatabase build_database(const std::vector<EpisodeRecord>& episodes,
                                  const std::vector<CheckpointAnnotation>& annotations,
                                  const GuardConfig& cfg) {
    cfg.validate();
    if (episodes.empty())
        throw DataError("build_database: no episodes");

    std::map<std::string, const CheckpointAnnotation*> by_id;
    for (const CheckpointAnnotation& a : annotations) {
        if (!by_id.emplace(a.episode_id, &a).second)
            throw DataError("build_database: duplicate annotation for episode '" +
                            a.episode_id + "'");
    }

    const int d = episodes.front().feature_dim();
    const int K = cfg.num_slots;
    const int E = static_cast<int>(episodes.size());

    // slot_features[k] holds episode e's annotated feature in row e.
    std::vector<Matrix> slot_features(K, Matrix(E, d));
    std::vector<std::vector<long>> slot_times(K, std::vector<long>(E));
    std::vector<std::vector<Vector>> slot_actions(K, std::vector<Vector>(E));

    for (int e = 0; e < E; ++e) {
        const EpisodeRecord& ep = episodes[e];
        if (ep.feature_dim() != d)
            throw SchemaError("episode '" + ep.id + "' feature dim " +
                              std::to_string(ep.feature_dim()) + " != " + std::to_string(d));
        auto it = by_id.find(ep.id);
        if (it == by_id.end())
            throw DataError("build_database: episode '" + ep.id + "' has no annotation");
        const CheckpointAnnotation& a = *it->second;
        if (static_cast<int>(a.slot_timestamps.size()) != K)
            throw DataError("annotation for '" + ep.id + "' has " +
                            std::to_string(a.slot_timestamps.size()) + " slots, expected " +
                            std::to_string(K));
        for (int k = 0; k < K; ++k) {
            const long t = a.slot_timestamps[k];
            // Steps carry strictly increasing timestamps; locate by value.
            auto step = std::lower_bound(ep.steps.begin(), ep.steps.end(), t,
                                         [](const StepRecord& s, long v) { return s.t < v; });
            if (step == ep.steps.end() || step->t != t)
                throw DataError("annotation for '" + ep.id + "' references missing timestep " +
                                std::to_string(t));
            slot_features[k].row(e) = step->feature.transpose();
            slot_times[k][e] = t;
            slot_actions[k][e] = step->action;
        }
    }

    for (const CheckpointAnnotation& a : annotations)
        if (std::none_of(episodes.begin(), episodes.end(),
                         [&](const EpisodeRecord& ep) { return ep.id == a.episode_id; }))
            throw DataError("annotation references unknown episode '" + a.episode_id + "'");

    CheckpointDatabase db;
    db.templates.reserve(K);
    for (int k = 0; k < K; ++k) {
        const int winner = select_template(slot_features[k], cfg.variance_fraction,
                                           cfg.std_convention);
        CheckpointTemplate t;
        t.slot = k + 1;
        t.feature = slot_features[k].row(winner).transpose();
        t.source_episode = episodes[winner].id;
        t.source_timestep = slot_times[k][winner];
        t.recovery_action = slot_actions[k][winner];
        db.templates.push_back(std::move(t));
    }
    db.refresh_derived();
    return db;
}

void save_database(const CheckpointDatabase& db, const std::string& path) {
    json j;
    j["feature_dim"] = db.feature_dim;
    json templates = json::array();
    for (const CheckpointTemplate& t : db.templates) {
        json tj;
        tj["slot"] = t.slot;
        tj["feature"] = std::vector<double>(t.feature.data(), t.feature.data() + t.feature.size());
        tj["source_episode"] = t.source_episode;
        tj["source_timestep"] = t.source_timestep;
        tj["recovery_action"] = std::vector<double>(
            t.recovery_action.data(), t.recovery_action.data() + t.recovery_action.size());
        templates.push_back(std::move(tj));
    }
    j["templates"] = std::move(templates);
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

CheckpointDatabase load_database(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("feature_dim") || !j.contains("templates"))
        throw ParseError("'" + path + "': database file needs feature_dim and templates");
    if (!j["templates"].is_array() || j["templates"].empty())
        throw SchemaError("'" + path + "': database has no templates");

    CheckpointDatabase db;
    const int d = j["feature_dim"].get<int>();
    int expected_slot = 1;
    for (const json& tj : j["templates"]) {
        CheckpointTemplate t;
        if (!tj.contains("slot") || !tj.contains("feature") || !tj.contains("source_episode") ||
            !tj.contains("source_timestep") || !tj.contains("recovery_action"))
            throw ParseError("'" + path + "': template entry is missing fields");
        t.slot = tj["slot"].get<int>();
        if (t.slot != expected_slot)
            throw SchemaError("'" + path + "': slots must run 1..K in order");
        ++expected_slot;
        const auto feature = tj["feature"].get<std::vector<double>>();
        if (static_cast<int>(feature.size()) != d)
            throw SchemaError("'" + path + "': template feature length != feature_dim");
        t.feature = Eigen::Map<const Vector>(feature.data(), feature.size());
        t.source_episode = tj["source_episode"].get<std::string>();
        t.source_timestep = tj["source_timestep"].get<long>();
        const auto action = tj["recovery_action"].get<std::vector<double>>();
        t.recovery_action = Eigen::Map<const Vector>(action.data(), action.size());
        db.templates.push_back(std::move(t));
    }
    db.refresh_derived();
    return db;
}

} // namespace rewind
