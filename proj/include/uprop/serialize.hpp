#pragma once

// JSON Lines serialization of TaskRecords. One task per line, UTF-8, field
// names fixed by the trajectory file format. Serialization is canonical:
// serialize(deserialize(serialize(t))) is byte-identical to serialize(t).

#include <string>
#include <string_view>
#include <vector>

#include "uprop/model.hpp"

namespace uprop {

enum class ParseMode {
  kStrict,   // unknown fields rejected (default)
  kLenient,  // unknown fields ignored
};

// Emits one JSON object on a single line (no trailing newline). The task is
// validated first; invariant violations throw ValidationError.
std::string serialize_task(const TaskRecord& task);

// Parses one line. Malformed JSON throws ParseError with a byte offset;
// invariant violations throw ValidationError naming the field.
TaskRecord deserialize_task(std::string_view line,
                            ParseMode mode = ParseMode::kStrict);

// Whole-file helpers for the JSONL trajectory format. Blank lines are
// skipped; errors carry the 1-based line number.
std::vector<TaskRecord> read_trajectory_file(const std::string& path,
                                             ParseMode mode = ParseMode::kStrict);
void write_trajectory_file(const std::string& path,
                           const std::vector<TaskRecord>& tasks);

}  // namespace uprop
