#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

namespace rewind {

/// FNV-1a over arbitrary bytes; used for artifact digests.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::vector<double>& values) {
    return values.empty() ? fnv1a64(nullptr, 0)
                          : fnv1a64(values.data(), values.size() * sizeof(double));
}

inline std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// splitmix64 step; used to derive independent per-episode seeds from one
/// root seed without overlapping engine streams.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t root, uint64_t index) {
    uint64_t s = root ^ (0x9e3779b97f4a7c15ull * (index + 1));
    return splitmix64(s);
}

enum class LogLevel { quiet = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity from REWIND_GUARD_LOG (quiet|warn|info|debug), default warn.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("REWIND_GUARD_LOG");
        if (!env) return LogLevel::warn;
        if (std::strcmp(env, "quiet") == 0) return LogLevel::quiet;
        if (std::strcmp(env, "info") == 0) return LogLevel::info;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::warn)
        std::fprintf(stderr, "[rewind-guard] warning: %s\n", msg.c_str());
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info)
        std::fprintf(stderr, "[rewind-guard] %s\n", msg.c_str());
}

} // namespace rewind
