#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ecokit/matrix.hpp"
#include "ecokit/sparse.hpp"

namespace ecokit {

// One participation event: a user acting in a group at a point in time.
struct EventRecord {
    std::string user;
    std::string group;
    std::int64_t timestamp = 0;  // seconds since epoch, UTC
};

enum class EventFormat { csv, ndjson };
[[nodiscard]] EventFormat parse_event_format(const std::string& name);

struct CorpusConfig {
    std::size_t top_n = 10000;
    std::set<std::string> exclusion_list;
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;  // exclusive
    int week_anchor = 0;          // 0 = Monday .. 6 = Sunday, UTC midnight boundary
    // Exclusion applied before top-N truncation, so excluded groups free up
    // slots; flip for the alternative reading.
    bool exclude_before_truncation = true;
};

struct LoadResult {
    std::vector<EventRecord> events;
    std::size_t malformed = 0;
    std::size_t total_lines = 0;
};

// Parses an event file. Malformed lines (wrong field count, empty user/group,
// unparsable timestamp, embedded separator) are skipped and counted; more than
// 1% malformed aborts with a diagnostic.
[[nodiscard]] LoadResult load_events(const std::string& path, EventFormat format);

// Drops events outside [window_start, window_end).
[[nodiscard]] std::vector<EventRecord> window_filter(std::span<const EventRecord> events,
                                                     const CorpusConfig& config);

// Top-N groups by event count within the window, minus exclusions; returned in
// ranking order (count descending, ties lexicographic). Fewer than top_n
// available groups is a warning, not an error.
[[nodiscard]] std::vector<std::string> select_population(std::span<const EventRecord> events,
                                                         const CorpusConfig& config);

// Week arithmetic: weeks are anchored at `week_anchor` 00:00 UTC; week 0 is
// the week containing window_start.
[[nodiscard]] std::size_t week_index(std::int64_t timestamp, const CorpusConfig& config);
[[nodiscard]] std::size_t week_count(const CorpusConfig& config);

struct GroupPanel {
    std::vector<std::string> groups;
    std::vector<std::size_t> weeks;          // 0-based indices from window_start
    Matrix sizes;                            // groups x weeks, log(1 + distinct users)
    std::vector<std::size_t> creation_week;  // week of first event per group
};

[[nodiscard]] GroupPanel build_panel(std::span<const EventRecord> events,
                                     std::span<const std::string> groups,
                                     const CorpusConfig& config);

struct UserFrequencyMatrix {
    std::vector<std::string> users;   // rows; users with no retained events omitted
    std::vector<std::string> groups;  // columns
    SparseMatrix counts;              // n_{u,j}
};

[[nodiscard]] UserFrequencyMatrix build_user_frequency(std::span<const EventRecord> events,
                                                       std::span<const std::string> groups);

// Plain-text persistence (CSV panel, coordinate-list sparse matrix).
void write_panel_csv(const GroupPanel& panel, const std::string& path);
[[nodiscard]] GroupPanel read_panel_csv(const std::string& path);
void write_frequency_matrix(const UserFrequencyMatrix& ufm, const std::string& path);
[[nodiscard]] UserFrequencyMatrix read_frequency_matrix(const std::string& path);

void write_events_csv(std::span<const EventRecord> events, const std::string& path);
void write_events_ndjson(std::span<const EventRecord> events, const std::string& path);

}  // namespace ecokit
