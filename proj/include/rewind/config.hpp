#pragma once

#include <string>

#include "rewind/errors.hpp"

namespace rewind {

// Convention for the per-dimension standard deviation used by the
// KDE bandwidth rule.
enum class StdConvention {
    sample,     // divide by E-1
    population, // divide by E
};

// Shared knobs of the runtime guard. One instance configures calibration,
// database construction and the online loop alike.
struct GuardConfig {
    double alpha = 0.001;          // miscoverage rate of the calibrated threshold
    long trim_delta = 10;          // boundary frames trimmed per calibration episode
    long peak_gap = 15;            // steps without improvement before a slot peaks
    double variance_fraction = 0.95; // PCA retained-variance fraction r
    int num_slots = 1;             // checkpoint slots K
    double ensemble_m = 0.01;      // exponential ensembling coefficient
    int chunk_horizon = 8;         // chunk length T'
    int overlap = 7;               // plan/chunk overlap T (default T' - 1)

    // Recovery behaviour.
    long settle_window = 10;       // max steps the recovery command is held
    double respawn_tolerance = 0.02; // early exit: distance to the held target
    long flag_cooldown = 10;       // inference steps after a hold before flags can re-fire
    double rollback_margin = 0.02; // similarity margin of the rollback-clear rule

    StdConvention std_convention = StdConvention::sample;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ConfigError("alpha must lie in (0,1), got " + std::to_string(alpha));
        if (trim_delta < 0)
            throw ConfigError("trim_delta must be >= 0");
        if (peak_gap < 1)
            throw ConfigError("peak_gap must be >= 1");
        if (!(variance_fraction > 0.0 && variance_fraction <= 1.0))
            throw ConfigError("variance_fraction must lie in (0,1]");
        if (num_slots < 1)
            throw ConfigError("num_slots must be >= 1");
        if (!(ensemble_m > 0.0))
            throw ConfigError("ensemble_m must be > 0");
        if (chunk_horizon < 1)
            throw ConfigError("chunk_horizon must be >= 1");
        if (overlap < 1 || overlap > chunk_horizon)
            throw ConfigError("overlap must lie in [1, chunk_horizon]");
        if (settle_window < 0)
            throw ConfigError("settle_window must be >= 0");
        if (respawn_tolerance < 0.0)
            throw ConfigError("respawn_tolerance must be >= 0");
        if (flag_cooldown < 0)
            throw ConfigError("flag_cooldown must be >= 0");
        if (rollback_margin < 0.0)
            throw ConfigError("rollback_margin must be >= 0");
    }
};

} // namespace rewind
