#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace offload {

// One `for` loop of the analyzed program. reads/writes cover the loop's own
// body statements only; nested loops are separate entries.
struct LoopStatement {
    int id = 0;                       // document order, 0-based
    std::optional<int> parent;        // enclosing loop; absent at top level
    int depth = 0;
    std::int64_t trip_count = 1;      // iterations per single entry
    std::int64_t ops_per_iter = 0;    // arithmetic operations per iteration
    std::int64_t bytes_per_iter = 0;  // distinct memory bytes touched per iteration
    std::set<std::string> reads;
    std::set<std::string> writes;
    bool parallelizable = false;

    bool operator==(const LoopStatement&) const = default;
};

struct LoopProgram {
    std::vector<LoopStatement> loops;               // ordered by id
    std::map<std::string, std::int64_t> variables;  // name -> size in bytes
    std::string source_digest;                      // canonical content hash

    const LoopStatement& loop(int id) const;

    bool operator==(const LoopProgram&) const = default;
};

// Children of each loop, indexed by loop id; index size() holds top-level ids.
std::vector<std::vector<int>> child_index(const LoopProgram& program);

// Parses the restricted loop language (see docs/loop_language.md).
LoopProgram parse_source(const std::string& text);

// Parses the structured descriptor form (JSON mirroring LoopProgram fields).
LoopProgram parse_descriptor(const std::string& json_text);

// Dispatches on content: descriptor if the text starts with '{'.
LoopProgram parse_program_text(const std::string& text);

std::string to_descriptor_json(const LoopProgram& program);

// Ids of parallelizable loops in document order; defines gene positions.
std::vector<int> parallelizable_ids(const LoopProgram& program);

// ops_per_iter / max(bytes_per_iter, 1)
double arithmetic_intensity(const LoopStatement& loop);

// Product of trip_count along the path from the root ancestor to loop_id.
std::int64_t total_trip_count(const LoopProgram& program, int loop_id);

// Dynamic entries of a loop: total_trip_count of its parent chain (1 at top level).
std::int64_t entry_count(const LoopProgram& program, int loop_id);

// FNV-1a over the canonical structure, so that source and descriptor inputs
// describing the same program hash identically.
std::string compute_digest(const LoopProgram& program);

}  // namespace offload
