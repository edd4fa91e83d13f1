#pragma once

#include <string>
#include <vector>

#include "rewind/types.hpp"

namespace rewind {

/// Parse and fully validate an episode file (see README for the schema).
/// Throws ParseError for malformed JSON or missing/mistyped fields,
/// SchemaError for invariant violations, IoError for unreadable paths.
EpisodeRecord load_episode(const std::string& path);

/// Serialize a validated episode. Numeric fields survive a save/load
/// round trip bit-for-bit.
void save_episode(const EpisodeRecord& ep, const std::string& path);

/// Annotation file: JSON list of {episode_id, slot_timestamps[]}.
std::vector<CheckpointAnnotation> load_annotations(const std::string& path);
void save_annotations(const std::vector<CheckpointAnnotation>& annotations,
                      const std::string& path);

/// All *.json episode files under a directory, sorted by filename.
std::vector<EpisodeRecord> load_episode_dir(const std::string& dir);

} // namespace rewind
