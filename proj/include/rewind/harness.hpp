#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rewind/config.hpp"
#include "rewind/guard.hpp"
#include "rewind/types.hpp"

namespace rewind::harness {

/// Arc-length parameterized polyline from a start point through the task
/// waypoints. All geometry queries clamp to [0, total_length].
class Path {
public:
    Path(const Vector& start, const std::vector<Vector>& waypoints);

    double total_length() const { return cumulative_.back(); }
    Vector point_at(double arc) const;

    /// Nearest point on the polyline: (arc position, Euclidean distance).
    std::pair<double, double> project(const Vector& state) const;

    /// Arc position of waypoint k (0-based).
    double waypoint_arc(int k) const { return cumulative_[k + 1]; }

private:
    std::vector<Vector> vertices_; // start, then waypoints
    std::vector<double> cumulative_;
};

struct WaypointTask {
    int state_dim = 2;
    Vector start;
    std::vector<Vector> waypoints;
    double subgoal_radius = 0.05;

    int num_slots() const { return static_cast<int>(waypoints.size()); }
    Path make_path() const { return {start, waypoints}; }
    void validate() const;
};

/// Fixed seeded random lift of the environment state into feature space:
/// tanh(W s + b). Nearby states map to high-cosine features; distinct
/// subgoals give discriminable templates.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int state_dim, int feature_dim, uint64_t seed, double gain, int token_count);

    FeatureVector pooled(const Vector& state) const;

    /// Pseudo-token sequence whose mean-pool equals pooled(state): the
    /// feature plus fixed zero-column-sum offsets.
    TokenSequence tokens(const Vector& state) const;

    int feature_dim() const { return static_cast<int>(weights_.rows()); }
    int token_count() const { return static_cast<int>(token_offsets_.rows()); }

private:
    Matrix weights_; // d x s
    Vector bias_;    // d
    Matrix token_offsets_; // L x d, columns sum to ~0
};

/// Deterministic stand-in for a trained action-chunked policy. Inside
/// `basin_radius` of the nominal path it emits targets marching `arc_step`
/// per step along the path plus a geometrically decaying pull back onto it;
/// beyond the basin its plan collapses to holding the current pose, the
/// desk-scale analogue of a policy stranded off its training manifold.
struct ScriptedPolicy {
    double lipschitz_L = 2.0;  // certified on-path sensitivity bound
    double noise_sigma = 0.0;  // per-cell Gaussian chunk noise
    int chunk_horizon = 8;
    double arc_step = 0.012;
    double pull_beta = 0.5;
    double basin_radius = 0.15;

    /// Chunk of shape (1, chunk_horizon, state_dim). Pass rng = nullptr for
    /// the noise-free mean prediction.
    ActionChunk infer(const Path& path, const Vector& state, std::mt19937_64* rng) const;
};

/// Point-mass kinematics: the state moves toward the commanded target with
/// displacement capped at max_step per tick.
struct PointMassEnv {
    Vector state;
    double max_step = 0.01;

    void step(const Vector& target);
};

enum class DisturbanceKind { state_jump, object_reset, policy_corruption };

DisturbanceKind disturbance_kind_from_string(const std::string& s);
std::string to_string(DisturbanceKind k);

/// A scripted adversarial intervention, fired at most once per episode at a
/// fixed step or when path progress first crosses a threshold.
struct Disturbance {
    DisturbanceKind kind = DisturbanceKind::state_jump;
    std::optional<long> trigger_time;
    std::optional<double> trigger_progress; // arc fraction of total length
    long min_time = 0;                      // extra gate for progress triggers
    double magnitude = 0.0;
    Vector offset;        // state_jump displacement; empty -> left normal * magnitude
    double path_fraction = 0.0; // object_reset: scene rolls back to this arc fraction
    long duration = 0;    // policy_corruption: steps of corrupted inference

    void validate(int state_dim) const;
};

/// Everything needed to reproduce a batch of episodes: task geometry,
/// policy, guard knobs, environment bounds, labelling thresholds and the
/// scripted disturbances.
struct Scenario {
    std::string name = "scenario";
    WaypointTask task;
    ScriptedPolicy policy;
    GuardConfig guard;

    int feature_dim = 64;
    uint64_t feature_seed = 0x5eedf00dULL;
    double feature_gain = 3.0;
    int token_count = 4;

    double max_step = 0.01;
    double corridor_halfwidth = 0.12;
    double regression_threshold = 0.1;
    long step_budget = 500;
    long subgoal_budget = 200;

    std::vector<Disturbance> disturbances;

    void validate() const;
    FeatureMap make_feature_map() const;

    std::string to_json_string() const;
    static Scenario from_json_string(const std::string& text);
    static Scenario load(const std::string& path);
    void save(const std::string& path) const;
};

enum class GuardMode {
    off,     // bare policy, no monitoring
    monitor, // monitoring attached, flags logged, recovery disabled
    on,      // full detection + recovery loop
};

struct GuardArtifacts {
    const CheckpointDatabase* db = nullptr;
    Threshold threshold;
};

struct RecoveryEvent {
    long t = 0;
    int slot = 0;    // 1-based
    long t_star = 0; // snapshot time of the chosen slot
    Vector action;
};

struct RunResult {
    EpisodeRecord episode;
    bool success = false;
    std::vector<TelemetryRow> telemetry; // empty in GuardMode::off
    std::vector<RecoveryEvent> recoveries;
};

/// Execute one full online episode: infer, ensemble, score, track, flag,
/// recover, step. Deterministic given (scenario, seed, mode, artifacts).
RunResult run_episode(const Scenario& sc, uint64_t seed, GuardMode mode,
                      const GuardArtifacts* artifacts = nullptr,
                      const std::string& episode_id = "");

/// Ground-truth slot annotation: slot k maps to the first frame whose state
/// lies within subgoal_radius of waypoint k. Throws DataError when a
/// waypoint was never reached or the frames are out of order.
CheckpointAnnotation scripted_annotations(const WaypointTask& task, const EpisodeRecord& ep);

/// Max observed chunk sensitivity max_cells |chunk(o) - chunk(o')|_inf over
/// ||o - o'|| for on-path state pairs `delta` apart; audits the policy's
/// certified Lipschitz bound.
double sampled_on_path_lipschitz(const Scenario& sc, int n_samples, double delta, uint64_t seed);

namespace scenarios {

/// Three-waypoint corner task (unit box), mild chunk noise; the base for
/// calibration and nominal evaluation sets.
Scenario corner_nominal();

/// corner_nominal plus an in-distribution scene rollback and a subgoal
/// budget the rolled-back bare policy cannot meet.
Scenario corner_rollback();

/// corner_nominal plus an off-basin state jump that strands the bare
/// policy; recovery respawns it.
Scenario corner_basin_exit();

/// Noise-free double-disturbance task exercising repeated recovery and
/// rollback clearing.
Scenario corner_double_rollback();

/// Noise-free configuration with certified L = 2 for consistency-bound
/// checks (nominal step size equals max_step = 0.01).
Scenario consistency_bound();

Scenario by_name(const std::string& name);
std::vector<std::string> names();

} // namespace scenarios

} // namespace rewind::harness
