#include "rewind/episode_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "rewind/util.hpp"

namespace rewind {

using nlohmann::json;
namespace fs = std::filesystem;

void EpisodeRecord::validate() const {
    if (outcome == Outcome::failure && !failure_onset)
        throw SchemaError("episode '" + id + "': failure outcome requires failure_onset");
    if (outcome == Outcome::success && failure_onset)
        throw SchemaError("episode '" + id + "': success outcome forbids failure_onset");

    if (steps.empty()) {
        if (failure_onset)
            throw SchemaError("episode '" + id + "': failure_onset without steps");
        return;
    }

    if (steps.front().t != 0)
        throw SchemaError("episode '" + id + "': timesteps must start at 0");

    const int sdim = state_dim();
    const int fdim = feature_dim();
    const int adim = action_dim();
    const ActionChunk& c0 = steps.front().chunk;
    if (c0.empty())
        throw SchemaError("episode '" + id + "': step 0 has an empty chunk");
    if (c0.dims() != adim)
        throw SchemaError("episode '" + id + "': chunk dims differ from action length");

    for (size_t i = 0; i < steps.size(); ++i) {
        const StepRecord& s = steps[i];
        const std::string where = "episode '" + id + "' step " + std::to_string(i);
        if (i > 0 && s.t <= steps[i - 1].t)
            throw SchemaError(where + ": timesteps must be strictly increasing");
        if (s.state.size() != sdim)
            throw SchemaError(where + ": state length " + std::to_string(s.state.size()) +
                              " != " + std::to_string(sdim));
        if (s.feature.size() != fdim)
            throw SchemaError(where + ": feature length " + std::to_string(s.feature.size()) +
                              " != " + std::to_string(fdim));
        if (s.action.size() != adim)
            throw SchemaError(where + ": action length " + std::to_string(s.action.size()) +
                              " != " + std::to_string(adim));
        if (!s.chunk.same_shape(c0))
            throw SchemaError(where + ": chunk shape differs from step 0");
        if (!s.state.allFinite() || !s.feature.allFinite() || !s.action.allFinite() ||
            !s.chunk.all_finite())
            throw SchemaError(where + ": non-finite value");
    }

    if (failure_onset && (*failure_onset < 0 || *failure_onset > steps.back().t))
        throw SchemaError("episode '" + id + "': failure_onset out of range");
}

namespace {

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& arr, const std::string& field) {
    if (!arr.is_array())
        throw ParseError("field '" + field + "' must be an array");
    Vector v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number())
            throw ParseError("field '" + field + "' must contain numbers");
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

json chunk_to_json(const ActionChunk& c) {
    json batches = json::array();
    for (int b = 0; b < c.batch(); ++b) {
        json rows = json::array();
        for (int t = 0; t < c.horizon(); ++t) {
            json row = json::array();
            for (int d = 0; d < c.dims(); ++d) row.push_back(c.at(b, t, d));
            rows.push_back(std::move(row));
        }
        batches.push_back(std::move(rows));
    }
    return batches;
}

ActionChunk chunk_from_json(const json& arr, const std::string& field) {
    if (!arr.is_array() || arr.empty() || !arr[0].is_array() || arr[0].empty() ||
        !arr[0][0].is_array() || arr[0][0].empty())
        throw ParseError("field '" + field + "' must be a B x T' x D nested array");
    const int batch = static_cast<int>(arr.size());
    const int horizon = static_cast<int>(arr[0].size());
    const int dims = static_cast<int>(arr[0][0].size());
    ActionChunk c(batch, horizon, dims);
    for (int b = 0; b < batch; ++b) {
        if (!arr[b].is_array() || static_cast<int>(arr[b].size()) != horizon)
            throw ParseError("field '" + field + "': ragged horizon axis");
        for (int t = 0; t < horizon; ++t) {
            const json& row = arr[b][t];
            if (!row.is_array() || static_cast<int>(row.size()) != dims)
                throw ParseError("field '" + field + "': ragged action axis");
            for (int d = 0; d < dims; ++d) {
                if (!row[d].is_number())
                    throw ParseError("field '" + field + "' must contain numbers");
                c.at(b, t, d) = row[d].get<double>();
            }
        }
    }
    return c;
}

const json& require(const json& j, const char* key, const std::string& context) {
    auto it = j.find(key);
    if (it == j.end())
        throw ParseError(context + ": missing field '" + key + "'");
    return *it;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

} // namespace

EpisodeRecord load_episode(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object())
        throw ParseError("'" + path + "': episode file must be a JSON object");

    EpisodeRecord ep;
    const json& id = require(j, "id", path);
    if (!id.is_string())
        throw ParseError(path + ": field 'id' must be a string");
    ep.id = id.get<std::string>();

    const json& outcome = require(j, "outcome", path);
    if (outcome == "success")
        ep.outcome = Outcome::success;
    else if (outcome == "failure")
        ep.outcome = Outcome::failure;
    else
        throw ParseError(path + ": field 'outcome' must be \"success\" or \"failure\"");

    const json& onset = require(j, "failure_onset", path);
    if (!onset.is_null()) {
        if (!onset.is_number_integer())
            throw ParseError(path + ": field 'failure_onset' must be an integer or null");
        ep.failure_onset = onset.get<long>();
    }

    const json& steps = require(j, "steps", path);
    if (!steps.is_array())
        throw ParseError(path + ": field 'steps' must be an array");
    ep.steps.reserve(steps.size());
    for (size_t i = 0; i < steps.size(); ++i) {
        const json& sj = steps[i];
        const std::string ctx = path + " steps[" + std::to_string(i) + "]";
        if (!sj.is_object())
            throw ParseError(ctx + ": must be an object");
        StepRecord s;
        const json& t = require(sj, "t", ctx);
        if (!t.is_number_integer())
            throw ParseError(ctx + ": field 't' must be an integer");
        s.t = t.get<long>();
        s.state = vector_from_json(require(sj, "state", ctx), ctx + ".state");
        s.feature = vector_from_json(require(sj, "feature", ctx), ctx + ".feature");
        s.action = vector_from_json(require(sj, "action", ctx), ctx + ".action");
        s.chunk = chunk_from_json(require(sj, "chunk", ctx), ctx + ".chunk");
        ep.steps.push_back(std::move(s));
    }

    ep.validate();
    return ep;
}

void save_episode(const EpisodeRecord& ep, const std::string& path) {
    ep.validate();
    json j;
    j["id"] = ep.id;
    j["outcome"] = to_string(ep.outcome);
    j["failure_onset"] = ep.failure_onset ? json(*ep.failure_onset) : json(nullptr);
    json steps = json::array();
    for (const StepRecord& s : ep.steps) {
        json sj;
        sj["t"] = s.t;
        sj["state"] = vector_to_json(s.state);
        sj["feature"] = vector_to_json(s.feature);
        sj["action"] = vector_to_json(s.action);
        sj["chunk"] = chunk_to_json(s.chunk);
        steps.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps);
    write_json_file(j, path);
}

std::vector<CheckpointAnnotation> load_annotations(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_array())
        throw ParseError("'" + path + "': annotation file must be a JSON array");
    std::vector<CheckpointAnnotation> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string ctx = path + "[" + std::to_string(i) + "]";
        const json& aj = j[i];
        if (!aj.is_object())
            throw ParseError(ctx + ": must be an object");
        CheckpointAnnotation a;
        const json& id = require(aj, "episode_id", ctx);
        if (!id.is_string())
            throw ParseError(ctx + ": field 'episode_id' must be a string");
        a.episode_id = id.get<std::string>();
        const json& ts = require(aj, "slot_timestamps", ctx);
        if (!ts.is_array() || ts.empty())
            throw ParseError(ctx + ": field 'slot_timestamps' must be a non-empty array");
        for (const json& t : ts) {
            if (!t.is_number_integer())
                throw ParseError(ctx + ": slot_timestamps must be integers");
            a.slot_timestamps.push_back(t.get<long>());
        }
        for (size_t k = 1; k < a.slot_timestamps.size(); ++k)
            if (a.slot_timestamps[k] <= a.slot_timestamps[k - 1])
                throw SchemaError(ctx + ": slot_timestamps must be strictly increasing");
        out.push_back(std::move(a));
    }
    return out;
}

void save_annotations(const std::vector<CheckpointAnnotation>& annotations,
                      const std::string& path) {
    json j = json::array();
    for (const CheckpointAnnotation& a : annotations) {
        json aj;
        aj["episode_id"] = a.episode_id;
        aj["slot_timestamps"] = a.slot_timestamps;
        j.push_back(std::move(aj));
    }
    write_json_file(j, path);
}

std::vector<EpisodeRecord> load_episode_dir(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw IoError("'" + dir + "' is not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    std::vector<EpisodeRecord> out;
    out.reserve(paths.size());
    for (const std::string& p : paths)
        out.push_back(load_episode(p));
    return out;
}

} // namespace rewind
