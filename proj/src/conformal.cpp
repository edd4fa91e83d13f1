#include "rewind/conformal.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rewind/ensemble.hpp"
#include "rewind/tide.hpp"
#include "rewind/util.hpp"

namespace rewind {

using nlohmann::json;

std::string CalibrationCorpus::digest() const {
    return "fnv1a:" + hex64(fnv1a64(scores));
}

CalibrationCorpus collect_scores(const std::vector<EpisodeRecord>& episodes,
                                 const GuardConfig& cfg) {
    cfg.validate();
    if (episodes.empty())
        throw DataError("collect_scores: no episodes supplied");

    CalibrationCorpus corpus;
    long usable = 0;
    for (const EpisodeRecord& ep : episodes) {
        if (ep.outcome != Outcome::success)
            throw ProtocolError("calibration uses only successful episodes; '" + ep.id +
                                "' is labelled failure");
        const long len = ep.length();
        if (len <= 2 * cfg.trim_delta) {
            log_warn("calibration episode '" + ep.id + "' has " + std::to_string(len) +
                     " frames, too short for trim " + std::to_string(cfg.trim_delta) +
                     "; skipped");
            continue;
        }
        if (ep.chunk_horizon() != cfg.chunk_horizon)
            throw SchemaError("episode '" + ep.id + "' chunk horizon " +
                              std::to_string(ep.chunk_horizon()) +
                              " does not match configured " + std::to_string(cfg.chunk_horizon));
        ++usable;

        Ensembler ens(ep.chunk_batch(), cfg.chunk_horizon, ep.action_dim(), cfg.ensemble_m,
                      cfg.overlap);
        for (long t = 0; t < len; ++t) {
            const EnsembleStep step = ens.push_chunk(ep.steps[t].chunk);
            const TideScore score = compute_tide(step.plan, ep.steps[t].chunk);
            if (!score.valid)
                continue;
            if (t < cfg.trim_delta || t >= len - cfg.trim_delta)
                continue;
            corpus.scores.push_back(score.value);
            corpus.source.emplace_back(ep.id, t);
        }
    }

    if (usable == 0)
        throw DataError("collect_scores: every episode was too short for trim " +
                        std::to_string(cfg.trim_delta));
    if (corpus.scores.empty())
        throw DataError("collect_scores: no valid frames survived trimming");
    return corpus;
}

Threshold cp_threshold(const CalibrationCorpus& corpus, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("cp_threshold: alpha must lie in (0,1)");
    const long n = corpus.size();
    if (n < 1)
        throw DataError("cp_threshold: empty calibration corpus");

    Threshold t;
    t.alpha = alpha;
    t.n = n;
    t.corpus_digest = corpus.digest();

    const long k = static_cast<long>(std::ceil((static_cast<double>(n) + 1.0) * (1.0 - alpha)));
    if (k > n) {
        t.q_hat = std::numeric_limits<double>::infinity();
        log_warn("cp_threshold: rank " + std::to_string(k) + " exceeds corpus size " +
                 std::to_string(n) + "; threshold is +inf (need n >= " +
                 std::to_string(static_cast<long>(std::ceil((1.0 - alpha) / alpha))) +
                 " for alpha=" + std::to_string(alpha) + ")");
        return t;
    }

    std::vector<double> sorted = corpus.scores;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    t.q_hat = sorted[k - 1];
    return t;
}

void save_threshold(const Threshold& t, const std::string& path) {
    json j;
    j["q_hat"] = std::isinf(t.q_hat) ? json(nullptr) : json(t.q_hat);
    j["alpha"] = t.alpha;
    j["n"] = t.n;
    j["corpus_digest"] = t.corpus_digest;
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

Threshold load_threshold(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    Threshold t;
    if (!j.contains("q_hat") || !j.contains("alpha") || !j.contains("n"))
        throw ParseError("'" + path + "': threshold file needs q_hat, alpha, n");
    t.q_hat = j["q_hat"].is_null() ? std::numeric_limits<double>::infinity()
                                   : j["q_hat"].get<double>();
    t.alpha = j["alpha"].get<double>();
    t.n = j["n"].get<long>();
    t.corpus_digest = j.value("corpus_digest", std::string{});
    return t;
}

} // namespace rewind
