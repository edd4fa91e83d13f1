#include "rewind/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rewind/checkpoint_db.hpp"
#include "rewind/util.hpp"

namespace rewind::harness {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Path

Path::Path(const Vector& start, const std::vector<Vector>& waypoints) {
    if (waypoints.empty())
        throw ConfigError("path needs at least one waypoint");
    vertices_.reserve(waypoints.size() + 1);
    vertices_.push_back(start);
    for (const Vector& w : waypoints) vertices_.push_back(w);

    cumulative_.resize(vertices_.size());
    cumulative_[0] = 0.0;
    for (size_t i = 1; i < vertices_.size(); ++i) {
        const double len = (vertices_[i] - vertices_[i - 1]).norm();
        if (len <= 0.0)
            throw ConfigError("consecutive path vertices must be distinct");
        cumulative_[i] = cumulative_[i - 1] + len;
    }
}

Vector Path::point_at(double arc) const {
    arc = std::clamp(arc, 0.0, total_length());
    // Locate the segment containing `arc`.
    size_t hi = 1;
    while (hi + 1 < cumulative_.size() && cumulative_[hi] < arc) ++hi;
    const double seg_len = cumulative_[hi] - cumulative_[hi - 1];
    const double frac = (arc - cumulative_[hi - 1]) / seg_len;
    return vertices_[hi - 1] + frac * (vertices_[hi] - vertices_[hi - 1]);
}

std::pair<double, double> Path::project(const Vector& state) const {
    double best_arc = 0.0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < vertices_.size(); ++i) {
        const Vector& a = vertices_[i - 1];
        const Vector seg = vertices_[i] - a;
        const double seg_sq = seg.squaredNorm();
        double t = (state - a).dot(seg) / seg_sq;
        t = std::clamp(t, 0.0, 1.0);
        const Vector candidate = a + t * seg;
        const double d_sq = (state - candidate).squaredNorm();
        if (d_sq < best_sq) { // strict: ties keep the earliest segment
            best_sq = d_sq;
            best_arc = cumulative_[i - 1] + t * std::sqrt(seg_sq);
        }
    }
    return {best_arc, std::sqrt(best_sq)};
}

void WaypointTask::validate() const {
    if (state_dim < 1)
        throw ConfigError("task state_dim must be >= 1");
    if (start.size() != state_dim)
        throw ConfigError("task start point has wrong dimension");
    if (waypoints.empty())
        throw ConfigError("task needs at least one waypoint");
    for (const Vector& w : waypoints)
        if (w.size() != state_dim)
            throw ConfigError("waypoint dimension mismatch");
    if ((waypoints.front() - start).norm() <= 0.0)
        throw ConfigError("first waypoint must differ from the start point");
    for (size_t i = 1; i < waypoints.size(); ++i)
        if ((waypoints[i] - waypoints[i - 1]).norm() <= 0.0)
            throw ConfigError("consecutive waypoints must be distinct");
    if (!(subgoal_radius > 0.0))
        throw ConfigError("subgoal_radius must be > 0");
}

// ---------------------------------------------------------------------------
// FeatureMap

FeatureMap::FeatureMap(int state_dim, int feature_dim, uint64_t seed, double gain,
                       int token_count) {
    if (state_dim < 1 || feature_dim < 1 || token_count < 1)
        throw ConfigError("feature map dimensions must all be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double scale = gain / std::sqrt(static_cast<double>(state_dim));
    weights_ = Matrix(feature_dim, state_dim);
    for (int i = 0; i < feature_dim; ++i)
        for (int j = 0; j < state_dim; ++j)
            weights_(i, j) = scale * normal(rng);

    bias_ = Vector(feature_dim);
    for (int i = 0; i < feature_dim; ++i)
        bias_(i) = 0.25 * gain * normal(rng);

    token_offsets_ = Matrix(token_count, feature_dim);
    for (int l = 0; l < token_count; ++l)
        for (int i = 0; i < feature_dim; ++i)
            token_offsets_(l, i) = 0.05 * normal(rng);
    token_offsets_.rowwise() -= token_offsets_.colwise().mean();
}

FeatureVector FeatureMap::pooled(const Vector& state) const {
    return (weights_ * state + bias_).array().tanh().matrix();
}

TokenSequence FeatureMap::tokens(const Vector& state) const {
    const FeatureVector f = pooled(state);
    TokenSequence t = token_offsets_;
    t.rowwise() += f.transpose();
    return t;
}

// ---------------------------------------------------------------------------
// ScriptedPolicy / PointMassEnv

ActionChunk ScriptedPolicy::infer(const Path& path, const Vector& state,
                                  std::mt19937_64* rng) const {
    const int dims = static_cast<int>(state.size());
    ActionChunk chunk(1, chunk_horizon, dims);

    const auto [arc, dist] = path.project(state);
    if (dist <= basin_radius) {
        const Vector offset = state - path.point_at(arc);
        double pull = pull_beta;
        for (int j = 0; j < chunk_horizon; ++j) {
            const Vector target = path.point_at(arc + arc_step * (j + 1)) + pull * offset;
            for (int d = 0; d < dims; ++d) chunk.at(0, j, d) = target(d);
            pull *= pull_beta;
        }
    } else {
        // Stranded off the competence basin: the plan degenerates to holding
        // the current pose, making no task progress.
        for (int j = 0; j < chunk_horizon; ++j)
            for (int d = 0; d < dims; ++d) chunk.at(0, j, d) = state(d);
    }

    if (rng && noise_sigma > 0.0) {
        std::normal_distribution<double> normal(0.0, noise_sigma);
        for (int j = 0; j < chunk_horizon; ++j)
            for (int d = 0; d < dims; ++d) chunk.at(0, j, d) += normal(*rng);
    }
    return chunk;
}

void PointMassEnv::step(const Vector& target) {
    const Vector delta = target - state;
    const double dist = delta.norm();
    if (dist <= max_step)
        state += delta;
    else
        state += delta * (max_step / dist);
}

// ---------------------------------------------------------------------------
// Disturbance

DisturbanceKind disturbance_kind_from_string(const std::string& s) {
    if (s == "state_jump") return DisturbanceKind::state_jump;
    if (s == "object_reset") return DisturbanceKind::object_reset;
    if (s == "policy_corruption") return DisturbanceKind::policy_corruption;
    throw ConfigError("unknown disturbance kind '" + s + "'");
}

std::string to_string(DisturbanceKind k) {
    switch (k) {
    case DisturbanceKind::state_jump: return "state_jump";
    case DisturbanceKind::object_reset: return "object_reset";
    case DisturbanceKind::policy_corruption: return "policy_corruption";
    }
    return "unknown";
}

void Disturbance::validate(int state_dim) const {
    if (!trigger_time && !trigger_progress)
        throw ConfigError("disturbance needs trigger_time or trigger_progress");
    if (trigger_progress && !(*trigger_progress >= 0.0 && *trigger_progress <= 1.0))
        throw ConfigError("trigger_progress must lie in [0,1]");
    if (offset.size() != 0 && offset.size() != state_dim)
        throw ConfigError("disturbance offset dimension mismatch");
    switch (kind) {
    case DisturbanceKind::state_jump:
        if (offset.size() == 0 && magnitude == 0.0)
            throw ConfigError("state_jump needs an offset or a magnitude");
        break;
    case DisturbanceKind::object_reset:
        if (!(path_fraction >= 0.0 && path_fraction <= 1.0))
            throw ConfigError("object_reset path_fraction must lie in [0,1]");
        break;
    case DisturbanceKind::policy_corruption:
        if (duration < 1)
            throw ConfigError("policy_corruption needs duration >= 1");
        break;
    }
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
    task.validate();
    guard.validate();
    if (guard.num_slots != task.num_slots())
        throw ConfigError("guard.num_slots must equal the waypoint count");
    if (guard.chunk_horizon != policy.chunk_horizon)
        throw ConfigError("guard.chunk_horizon must equal policy.chunk_horizon");
    if (!(policy.lipschitz_L > 0.0))
        throw ConfigError("policy lipschitz_L must be > 0");
    if (policy.noise_sigma < 0.0)
        throw ConfigError("policy noise_sigma must be >= 0");
    if (!(policy.arc_step > 0.0))
        throw ConfigError("policy arc_step must be > 0");
    if (!(policy.pull_beta >= 0.0 && policy.pull_beta < 1.0))
        throw ConfigError("policy pull_beta must lie in [0,1)");
    if (!(policy.basin_radius > 0.0))
        throw ConfigError("policy basin_radius must be > 0");
    if (feature_dim < 1 || token_count < 1)
        throw ConfigError("feature_dim and token_count must be >= 1");
    if (!(max_step > 0.0))
        throw ConfigError("max_step must be > 0");
    if (!(corridor_halfwidth > 0.0) || !(regression_threshold > 0.0))
        throw ConfigError("label thresholds must be > 0");
    if (step_budget < 1 || subgoal_budget < 1)
        throw ConfigError("budgets must be >= 1");
    for (const Disturbance& d : disturbances)
        d.validate(task.state_dim);
}

FeatureMap Scenario::make_feature_map() const {
    return {task.state_dim, feature_dim, feature_seed, feature_gain, token_count};
}

namespace {

json vec_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vec_from(const json& arr) {
    Vector v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

} // namespace

std::string Scenario::to_json_string() const {
    json j;
    j["name"] = name;
    j["task"] = {{"state_dim", task.state_dim},
                 {"start", vec_json(task.start)},
                 {"subgoal_radius", task.subgoal_radius}};
    json wps = json::array();
    for (const Vector& w : task.waypoints) wps.push_back(vec_json(w));
    j["task"]["waypoints"] = std::move(wps);

    j["policy"] = {{"lipschitz_L", policy.lipschitz_L}, {"noise_sigma", policy.noise_sigma},
                   {"chunk_horizon", policy.chunk_horizon}, {"arc_step", policy.arc_step},
                   {"pull_beta", policy.pull_beta}, {"basin_radius", policy.basin_radius}};

    j["guard"] = {{"alpha", guard.alpha},
                  {"trim_delta", guard.trim_delta},
                  {"peak_gap", guard.peak_gap},
                  {"variance_fraction", guard.variance_fraction},
                  {"num_slots", guard.num_slots},
                  {"ensemble_m", guard.ensemble_m},
                  {"chunk_horizon", guard.chunk_horizon},
                  {"overlap", guard.overlap},
                  {"settle_window", guard.settle_window},
                  {"respawn_tolerance", guard.respawn_tolerance},
                  {"flag_cooldown", guard.flag_cooldown},
                  {"rollback_margin", guard.rollback_margin},
                  {"std_convention",
                   guard.std_convention == StdConvention::sample ? "sample" : "population"}};

    j["feature"] = {{"dim", feature_dim}, {"seed", feature_seed},
                    {"gain", feature_gain}, {"token_count", token_count}};
    j["env"] = {{"max_step", max_step}};
    j["labels"] = {{"corridor_halfwidth", corridor_halfwidth},
                   {"regression_threshold", regression_threshold},
                   {"step_budget", step_budget},
                   {"subgoal_budget", subgoal_budget}};

    json ds = json::array();
    for (const Disturbance& d : disturbances) {
        json dj;
        dj["kind"] = to_string(d.kind);
        if (d.trigger_time) dj["trigger_time"] = *d.trigger_time;
        if (d.trigger_progress) dj["trigger_progress"] = *d.trigger_progress;
        dj["min_time"] = d.min_time;
        dj["magnitude"] = d.magnitude;
        if (d.offset.size() > 0) dj["offset"] = vec_json(d.offset);
        dj["path_fraction"] = d.path_fraction;
        dj["duration"] = d.duration;
        ds.push_back(std::move(dj));
    }
    j["disturbances"] = std::move(ds);
    return j.dump(2);
}

Scenario Scenario::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    try {
        Scenario sc;
        sc.name = j.value("name", std::string("scenario"));
        const json& tj = j.at("task");
        sc.task.state_dim = tj.at("state_dim").get<int>();
        sc.task.start = vec_from(tj.at("start"));
        sc.task.subgoal_radius = tj.at("subgoal_radius").get<double>();
        for (const json& w : tj.at("waypoints")) sc.task.waypoints.push_back(vec_from(w));

        const json& pj = j.at("policy");
        sc.policy.lipschitz_L = pj.at("lipschitz_L").get<double>();
        sc.policy.noise_sigma = pj.at("noise_sigma").get<double>();
        sc.policy.chunk_horizon = pj.at("chunk_horizon").get<int>();
        sc.policy.arc_step = pj.at("arc_step").get<double>();
        sc.policy.pull_beta = pj.at("pull_beta").get<double>();
        sc.policy.basin_radius = pj.at("basin_radius").get<double>();

        const json& gj = j.at("guard");
        sc.guard.alpha = gj.at("alpha").get<double>();
        sc.guard.trim_delta = gj.at("trim_delta").get<long>();
        sc.guard.peak_gap = gj.at("peak_gap").get<long>();
        sc.guard.variance_fraction = gj.at("variance_fraction").get<double>();
        sc.guard.num_slots = gj.at("num_slots").get<int>();
        sc.guard.ensemble_m = gj.at("ensemble_m").get<double>();
        sc.guard.chunk_horizon = gj.at("chunk_horizon").get<int>();
        sc.guard.overlap = gj.at("overlap").get<int>();
        sc.guard.settle_window = gj.value("settle_window", sc.guard.settle_window);
        sc.guard.respawn_tolerance = gj.value("respawn_tolerance", sc.guard.respawn_tolerance);
        sc.guard.flag_cooldown = gj.value("flag_cooldown", sc.guard.flag_cooldown);
        sc.guard.rollback_margin = gj.value("rollback_margin", sc.guard.rollback_margin);
        sc.guard.std_convention = gj.value("std_convention", std::string("sample")) == "population"
                                      ? StdConvention::population
                                      : StdConvention::sample;

        const json& fj = j.at("feature");
        sc.feature_dim = fj.at("dim").get<int>();
        sc.feature_seed = fj.at("seed").get<uint64_t>();
        sc.feature_gain = fj.at("gain").get<double>();
        sc.token_count = fj.at("token_count").get<int>();

        sc.max_step = j.at("env").at("max_step").get<double>();
        const json& lj = j.at("labels");
        sc.corridor_halfwidth = lj.at("corridor_halfwidth").get<double>();
        sc.regression_threshold = lj.at("regression_threshold").get<double>();
        sc.step_budget = lj.at("step_budget").get<long>();
        sc.subgoal_budget = lj.at("subgoal_budget").get<long>();

        for (const json& dj : j.value("disturbances", json::array())) {
            Disturbance d;
            d.kind = disturbance_kind_from_string(dj.at("kind").get<std::string>());
            if (dj.contains("trigger_time")) d.trigger_time = dj["trigger_time"].get<long>();
            if (dj.contains("trigger_progress"))
                d.trigger_progress = dj["trigger_progress"].get<double>();
            d.min_time = dj.value("min_time", 0L);
            d.magnitude = dj.value("magnitude", 0.0);
            if (dj.contains("offset")) d.offset = vec_from(dj["offset"]);
            d.path_fraction = dj.value("path_fraction", 0.0);
            d.duration = dj.value("duration", 0L);
            sc.disturbances.push_back(std::move(d));
        }

        sc.validate();
        return sc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

void Scenario::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << to_json_string() << '\n';
}

// ---------------------------------------------------------------------------
// Episode execution

namespace {

Vector jump_offset(const Disturbance& d, const Path& path, const Vector& state) {
    if (d.offset.size() > 0)
        return d.offset;
    // Fallback: magnitude along the left normal of the local path tangent.
    const auto [arc, dist] = path.project(state);
    (void)dist;
    const Vector ahead = path.point_at(arc + 1e-3);
    const Vector behind = path.point_at(std::max(arc - 1e-3, 0.0));
    Vector tangent = ahead - behind;
    const double n = tangent.norm();
    if (n == 0.0 || state.size() != 2) {
        Vector fallback = Vector::Zero(state.size());
        fallback(0) = d.magnitude;
        return fallback;
    }
    tangent /= n;
    Vector normal(2);
    normal << -tangent(1), tangent(0);
    return d.magnitude * normal;
}

} // namespace

RunResult run_episode(const Scenario& sc, uint64_t seed, GuardMode mode,
                      const GuardArtifacts* artifacts, const std::string& episode_id) {
    sc.validate();
    if (mode != GuardMode::off && (artifacts == nullptr || artifacts->db == nullptr))
        throw ConfigError("guarded run needs a checkpoint database and threshold");

    const Path path = sc.task.make_path();
    const FeatureMap fmap = sc.make_feature_map();
    const int dims = sc.task.state_dim;
    const int K = sc.task.num_slots();

    PointMassEnv env{sc.task.start, sc.max_step};
    std::mt19937_64 rng(seed);

    std::optional<Ensembler> bare;
    std::optional<OnlineGuard> guard;
    if (mode == GuardMode::off)
        bare.emplace(1, sc.guard.chunk_horizon, dims, sc.guard.ensemble_m, sc.guard.overlap);
    else
        guard.emplace(*artifacts->db, artifacts->threshold, sc.guard, 1, dims,
                      mode == GuardMode::on);

    RunResult result;
    result.episode.id = episode_id.empty() ? sc.name + "-" + std::to_string(seed) : episode_id;

    std::vector<bool> fired(sc.disturbances.size(), false);
    long corruption_remaining = 0;
    double corruption_magnitude = 0.0;

    long hold_remaining = 0;
    Vector hold_target;

    int next_wp = 0;
    long last_visit_t = 0;
    bool completed = false;
    bool breached = false;
    std::optional<long> onset;
    double progress_prev = path.project(env.state).first;

    for (long t = 0; t < sc.step_budget; ++t) {
        // Exogenous interventions act on the scene before the policy looks.
        const double progress_now = path.project(env.state).first;
        for (size_t i = 0; i < sc.disturbances.size(); ++i) {
            if (fired[i]) continue;
            const Disturbance& d = sc.disturbances[i];
            const bool due_time = d.trigger_time && t == *d.trigger_time;
            const bool due_progress = d.trigger_progress &&
                                      progress_now >= *d.trigger_progress * path.total_length() &&
                                      t >= d.min_time;
            if (!due_time && !due_progress) continue;
            fired[i] = true;
            switch (d.kind) {
            case DisturbanceKind::state_jump:
                env.state += jump_offset(d, path, env.state);
                break;
            case DisturbanceKind::object_reset:
                env.state = path.point_at(d.path_fraction * path.total_length());
                break;
            case DisturbanceKind::policy_corruption:
                corruption_remaining = d.duration;
                corruption_magnitude = d.magnitude;
                break;
            }
        }

        const Vector state = env.state;
        const auto [arc, dist_to_path] = path.project(state);

        // Visible-anomaly labelling: a sudden loss of path progress or an
        // excursion out of the task corridor marks the failure onset.
        if (!onset) {
            if (t > 0 && progress_prev - arc > sc.regression_threshold)
                onset = t;
            else if (dist_to_path > sc.corridor_halfwidth)
                onset = t;
        }
        progress_prev = arc;

        if (next_wp < K && (state - sc.task.waypoints[next_wp]).norm() <= sc.task.subgoal_radius) {
            ++next_wp;
            last_visit_t = t;
            if (next_wp == K)
                completed = true;
        }

        if (!completed && t - last_visit_t > sc.subgoal_budget) {
            breached = true;
            if (!onset)
                onset = t;
            break; // terminal: the pending subgoal is out of time
        }

        ActionChunk chunk;
        if (corruption_remaining > 0) {
            --corruption_remaining;
            chunk = ActionChunk(1, sc.policy.chunk_horizon, dims);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (int j = 0; j < sc.policy.chunk_horizon; ++j)
                for (int d = 0; d < dims; ++d)
                    chunk.at(0, j, d) = state(d) + corruption_magnitude * normal(rng);
        } else {
            chunk = sc.policy.infer(path, state, &rng);
        }
        const FeatureVector feature = pool_features(fmap.tokens(state));

        Vector action;
        if (mode == GuardMode::off) {
            action = bare->push_chunk(chunk).executed.row(0).transpose();
        } else if (hold_remaining > 0 &&
                   (state - hold_target).norm() > sc.guard.respawn_tolerance) {
            --hold_remaining;
            action = hold_target;
            result.telemetry.push_back(guard->on_hold_step(feature, action));
        } else {
            hold_remaining = 0;
            OnlineGuard::StepResult res = guard->on_inference(chunk, feature);
            action = res.executed.row(0).transpose();
            if (res.recovered) {
                hold_target = res.recovery_action;
                hold_remaining = sc.guard.settle_window;
                RecoveryEvent ev;
                ev.t = t;
                ev.slot = res.row.k_star;
                ev.t_star = guard->tracker().slots()[res.row.k_star - 1].t_star;
                ev.action = res.recovery_action;
                result.recoveries.push_back(std::move(ev));
            }
            result.telemetry.push_back(res.row);
        }

        StepRecord step;
        step.t = t;
        step.state = state;
        step.feature = feature;
        step.action = action;
        step.chunk = std::move(chunk);
        result.episode.steps.push_back(std::move(step));

        if (completed)
            break;
        env.step(action);
    }

    result.success = completed && !breached;
    result.episode.outcome = result.success ? Outcome::success : Outcome::failure;
    if (!result.success) {
        const long last_t = result.episode.steps.empty()
                                ? 0
                                : result.episode.steps.back().t;
        result.episode.failure_onset = std::min(onset.value_or(last_t), last_t);
    }
    result.episode.validate();
    return result;
}

CheckpointAnnotation scripted_annotations(const WaypointTask& task, const EpisodeRecord& ep) {
    CheckpointAnnotation out;
    out.episode_id = ep.id;
    long previous = -1;
    for (int k = 0; k < task.num_slots(); ++k) {
        std::optional<long> hit;
        for (const StepRecord& s : ep.steps) {
            if ((s.state - task.waypoints[k]).norm() <= task.subgoal_radius) {
                hit = s.t;
                break;
            }
        }
        if (!hit)
            throw DataError("episode '" + ep.id + "' never reaches waypoint " +
                            std::to_string(k + 1));
        if (*hit <= previous)
            throw DataError("episode '" + ep.id + "' reaches waypoint " + std::to_string(k + 1) +
                            " out of order");
        previous = *hit;
        out.slot_timestamps.push_back(*hit);
    }
    return out;
}

double sampled_on_path_lipschitz(const Scenario& sc, int n_samples, double delta, uint64_t seed) {
    const Path path = sc.task.make_path();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, path.total_length() - delta);

    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double u = uni(rng);
        const Vector a = path.point_at(u);
        const Vector b = path.point_at(u + delta);
        const double state_dist = (a - b).norm();
        if (state_dist == 0.0)
            continue;
        const ActionChunk ca = sc.policy.infer(path, a, nullptr);
        const ActionChunk cb = sc.policy.infer(path, b, nullptr);
        double cell_max = 0.0;
        for (int j = 0; j < ca.horizon(); ++j)
            for (int d = 0; d < ca.dims(); ++d)
                cell_max = std::max(cell_max, std::abs(ca.at(0, j, d) - cb.at(0, j, d)));
        worst = std::max(worst, cell_max / state_dist);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Presets

namespace scenarios {

namespace {
Vector v2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}
} // namespace

Scenario corner_nominal() {
    Scenario sc;
    sc.name = "corner_nominal";
    sc.task.state_dim = 2;
    sc.task.start = v2(0.05, 0.1);
    sc.task.waypoints = {v2(0.9, 0.1), v2(0.9, 0.9), v2(0.1, 0.9)};
    sc.task.subgoal_radius = 0.05;

    sc.policy.lipschitz_L = 2.0;
    sc.policy.noise_sigma = 0.004;
    sc.policy.chunk_horizon = 8;
    sc.policy.arc_step = 0.012;
    sc.policy.pull_beta = 0.5;
    sc.policy.basin_radius = 0.15;

    sc.guard.alpha = 1e-5;
    sc.guard.trim_delta = 10;
    sc.guard.peak_gap = 15;
    sc.guard.variance_fraction = 0.95;
    sc.guard.num_slots = 3;
    sc.guard.ensemble_m = 0.01;
    sc.guard.chunk_horizon = 8;
    sc.guard.overlap = 7;
    sc.guard.settle_window = 120;
    sc.guard.respawn_tolerance = 0.01;
    sc.guard.flag_cooldown = 10;
    sc.guard.rollback_margin = 0.02;

    sc.feature_dim = 64;
    sc.feature_seed = 0x5eedf00dULL;
    sc.feature_gain = 3.0;
    sc.token_count = 4;

    sc.max_step = 0.01;
    sc.corridor_halfwidth = 0.12;
    sc.regression_threshold = 0.1;
    sc.step_budget = 500;
    sc.subgoal_budget = 200;
    return sc;
}

Scenario corner_rollback() {
    Scenario sc = corner_nominal();
    sc.name = "corner_rollback";
    sc.subgoal_budget = 140; // re-walking the rolled-back stretch cannot meet this
    Disturbance d;
    d.kind = DisturbanceKind::object_reset;
    d.trigger_progress = 1.75 / 2.45;
    d.min_time = 50;
    d.path_fraction = 0.2; // back onto the first leg, well inside the corridor
    sc.disturbances.push_back(std::move(d));
    return sc;
}

Scenario corner_basin_exit() {
    Scenario sc = corner_nominal();
    sc.name = "corner_basin_exit";
    sc.subgoal_budget = 280;
    Disturbance d;
    d.kind = DisturbanceKind::state_jump;
    d.trigger_progress = 1.85 / 2.45;
    d.min_time = 50;
    d.offset = v2(-0.25, -0.35); // lands outside the policy's competence basin
    d.magnitude = d.offset.norm();
    sc.disturbances.push_back(std::move(d));
    return sc;
}

Scenario corner_double_rollback() {
    Scenario sc = corner_nominal();
    sc.name = "corner_double_rollback";
    sc.policy.noise_sigma = 0.0;
    sc.guard.peak_gap = 6;
    sc.guard.settle_window = 150;
    sc.step_budget = 1000;
    sc.subgoal_budget = 500;

    Disturbance d1;
    d1.kind = DisturbanceKind::state_jump;
    d1.trigger_progress = 1.85 / 2.45;
    d1.min_time = 50;
    d1.offset = v2(-0.25, -0.35);
    d1.magnitude = d1.offset.norm();
    sc.disturbances.push_back(std::move(d1));

    Disturbance d2;
    d2.kind = DisturbanceKind::object_reset;
    d2.trigger_progress = 2.05 / 2.45;
    d2.min_time = 50;
    d2.path_fraction = 0.78 / 2.45; // near the first waypoint's approach
    sc.disturbances.push_back(std::move(d2));
    return sc;
}

Scenario consistency_bound() {
    Scenario sc = corner_nominal();
    sc.name = "consistency_bound";
    sc.policy.noise_sigma = 0.0;
    sc.guard.alpha = 0.05;
    return sc;
}

Scenario by_name(const std::string& name) {
    if (name == "corner_nominal") return corner_nominal();
    if (name == "corner_rollback") return corner_rollback();
    if (name == "corner_basin_exit") return corner_basin_exit();
    if (name == "corner_double_rollback") return corner_double_rollback();
    if (name == "consistency_bound") return consistency_bound();
    throw ConfigError("unknown scenario preset '" + name + "'; known: corner_nominal, "
                      "corner_rollback, corner_basin_exit, corner_double_rollback, "
                      "consistency_bound");
}

std::vector<std::string> names() {
    return {"corner_nominal", "corner_rollback", "corner_basin_exit", "corner_double_rollback",
            "consistency_bound"};
}

} // namespace scenarios

} // namespace rewind::harness
