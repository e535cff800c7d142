#include "ecokit/ingest.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"

namespace ecokit {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

// Day index of the most recent anchor-weekday midnight at or before `day`.
// Unix day 0 (1970-01-01) was a Thursday, i.e. weekday 3 when Monday = 0.
std::int64_t align_to_anchor(std::int64_t day, int anchor) {
    const std::int64_t monday_weekday = ((day % 7) + 7 + 3) % 7;
    const std::int64_t behind = (monday_weekday - anchor + 7) % 7;
    return day - behind;
}

void check_config(const CorpusConfig& config) {
    if (config.window_start >= config.window_end)
        throw Error("corpus window is empty: start must precede end");
    if (config.week_anchor < 0 || config.week_anchor > 6)
        throw Error("week_anchor must be in [0, 6] (0 = Monday)");
    if (config.top_n < 1) throw Error("top_n must be at least 1");
}

bool looks_like_header(const std::vector<std::string>& fields) {
    return fields.size() == 3 && fields[0] == "user" && fields[1] == "group" && fields[2] == "ts";
}

bool parse_csv_event(const std::string& line, EventRecord& out) {
    const std::vector<std::string> fields = io::split(line, ',');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) return false;
    std::int64_t ts = 0;
    if (!io::parse_i64(fields[2], ts)) return false;
    out.user = fields[0];
    out.group = fields[1];
    out.timestamp = ts;
    return true;
}

bool parse_ndjson_event(const std::string& line, EventRecord& out) {
    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (!doc.is_object()) return false;
    const auto user = doc.find("user");
    const auto group = doc.find("group");
    const auto ts = doc.find("ts");
    if (user == doc.end() || group == doc.end() || ts == doc.end()) return false;
    if (!user->is_string() || !group->is_string() || !ts->is_number_integer()) return false;
    out.user = user->get<std::string>();
    out.group = group->get<std::string>();
    out.timestamp = ts->get<std::int64_t>();
    return !out.user.empty() && !out.group.empty();
}

void check_id(const std::string& id, const char* what) {
    if (id.empty() || id.find(',') != std::string::npos || id.find('\n') != std::string::npos)
        throw Error(std::string(what) + " id must be non-empty and free of ',' and newlines: \"" +
                    id + "\"");
}

}  // namespace

EventFormat parse_event_format(const std::string& name) {
    if (name == "csv") return EventFormat::csv;
    if (name == "ndjson") return EventFormat::ndjson;
    throw Error("unknown event format \"" + name + "\" (expected csv or ndjson)");
}

LoadResult load_events(const std::string& path, EventFormat format) {
    const std::string content = io::read_file(path);
    LoadResult result;
    std::istringstream in(content);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && format == EventFormat::csv) {
            first = false;
            if (looks_like_header(io::split(line, ','))) continue;
        }
        first = false;
        ++result.total_lines;
        EventRecord rec;
        const bool ok = format == EventFormat::csv ? parse_csv_event(line, rec)
                                                   : parse_ndjson_event(line, rec);
        if (ok) {
            result.events.push_back(std::move(rec));
        } else {
            ++result.malformed;
        }
    }
    if (result.total_lines > 0 &&
        static_cast<double>(result.malformed) > 0.01 * static_cast<double>(result.total_lines)) {
        throw Error("event file " + path + ": " + std::to_string(result.malformed) + " of " +
                    std::to_string(result.total_lines) +
                    " lines malformed (over the 1% tolerance)");
    }
    if (result.malformed > 0)
        warn("event file " + path + ": skipped " + std::to_string(result.malformed) +
             " malformed lines");
    return result;
}

std::vector<EventRecord> window_filter(std::span<const EventRecord> events,
                                       const CorpusConfig& config) {
    check_config(config);
    std::vector<EventRecord> kept;
    kept.reserve(events.size());
    for (const EventRecord& e : events)
        if (e.timestamp >= config.window_start && e.timestamp < config.window_end)
            kept.push_back(e);
    return kept;
}

std::vector<std::string> select_population(std::span<const EventRecord> events,
                                           const CorpusConfig& config) {
    check_config(config);
    if (events.empty()) throw Error("select_population: no events");

    std::map<std::string, std::size_t> counts;
    for (const EventRecord& e : events) {
        if (e.timestamp < config.window_start || e.timestamp >= config.window_end) continue;
        ++counts[e.group];
    }
    if (!config.exclude_before_truncation) {
        // Rank everything first, truncate, then drop exclusions.
        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (ranked.size() > config.top_n) ranked.resize(config.top_n);
        std::vector<std::string> out;
        for (const auto& [group, count] : ranked)
            if (!config.exclusion_list.count(group)) out.push_back(group);
        if (counts.size() < config.top_n)
            warn("select_population: only " + std::to_string(counts.size()) +
                 " groups available for top_n=" + std::to_string(config.top_n));
        return out;
    }

    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (const auto& [group, count] : counts)
        if (!config.exclusion_list.count(group)) ranked.emplace_back(group, count);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() < config.top_n)
        warn("select_population: only " + std::to_string(ranked.size()) +
             " groups available for top_n=" + std::to_string(config.top_n));
    if (ranked.size() > config.top_n) ranked.resize(config.top_n);
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (const auto& [group, count] : ranked) out.push_back(group);
    return out;
}

std::size_t week_index(std::int64_t timestamp, const CorpusConfig& config) {
    const std::int64_t day = floor_div(timestamp, 86400);
    const std::int64_t start_day = floor_div(config.window_start, 86400);
    const std::int64_t aligned = align_to_anchor(day, config.week_anchor);
    const std::int64_t aligned_start = align_to_anchor(start_day, config.week_anchor);
    const std::int64_t idx = (aligned - aligned_start) / 7;
    if (idx < 0) throw Error("week_index: timestamp precedes the corpus window");
    return static_cast<std::size_t>(idx);
}

std::size_t week_count(const CorpusConfig& config) {
    check_config(config);
    return week_index(config.window_end - 1, config) + 1;
}

GroupPanel build_panel(std::span<const EventRecord> events, std::span<const std::string> groups,
                       const CorpusConfig& config) {
    check_config(config);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t g = 0; g < groups.size(); ++g) index.emplace(groups[g], g);

    const std::size_t n_weeks = week_count(config);
    // (group, week, user) triples; sorting makes distinct-user counting a scan.
    std::vector<std::tuple<std::size_t, std::size_t, std::string_view>> seen;
    std::vector<bool> observed(groups.size(), false);
    for (const EventRecord& e : events) {
        if (e.timestamp < config.window_start || e.timestamp >= config.window_end) continue;
        const auto it = index.find(e.group);
        if (it == index.end()) continue;
        observed[it->second] = true;
        seen.emplace_back(it->second, week_index(e.timestamp, config), e.user);
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (!observed[g])
            throw Error("build_panel: group \"" + groups[g] + "\" has no events in the window");

    std::sort(seen.begin(), seen.end());
    GroupPanel panel;
    panel.groups.assign(groups.begin(), groups.end());
    panel.weeks.resize(n_weeks);
    for (std::size_t w = 0; w < n_weeks; ++w) panel.weeks[w] = w;
    panel.sizes = Matrix(groups.size(), n_weeks);
    panel.creation_week.assign(groups.size(), 0);

    std::vector<bool> first_seen(groups.size(), false);
    std::size_t i = 0;
    while (i < seen.size()) {
        const auto [g, w, u] = seen[i];
        std::size_t distinct = 0;
        std::string_view prev_user;
        std::size_t j = i;
        for (; j < seen.size(); ++j) {
            const auto& [gj, wj, uj] = seen[j];
            if (gj != g || wj != w) break;
            if (distinct == 0 || uj != prev_user) {
                ++distinct;
                prev_user = uj;
            }
        }
        panel.sizes(g, w) = std::log1p(static_cast<double>(distinct));
        if (!first_seen[g]) {
            first_seen[g] = true;
            panel.creation_week[g] = w;  // seen is sorted, so this is the first week
        }
        i = j;
    }
    return panel;
}

UserFrequencyMatrix build_user_frequency(std::span<const EventRecord> events,
                                         std::span<const std::string> groups) {
    if (groups.empty()) throw Error("build_user_frequency: no groups");
    std::unordered_map<std::string, std::size_t> gindex;
    for (std::size_t g = 0; g < groups.size(); ++g) gindex.emplace(groups[g], g);

    // (user, group) -> count; std::map keeps users in lexicographic order so
    // row numbering is deterministic.
    std::map<std::string, std::map<std::size_t, double>> counts;
    for (const EventRecord& e : events) {
        const auto it = gindex.find(e.group);
        if (it == gindex.end()) continue;
        counts[e.user][it->second] += 1.0;
    }

    UserFrequencyMatrix ufm;
    ufm.groups.assign(groups.begin(), groups.end());
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    for (const auto& [user, per_group] : counts) {
        const std::size_t r = ufm.users.size();
        ufm.users.push_back(user);
        for (const auto& [g, c] : per_group) {
            rows.push_back(r);
            cols.push_back(g);
            vals.push_back(c);
        }
    }
    ufm.counts = sparse_from_triplets(ufm.users.size(), groups.size(), rows, cols, vals);
    return ufm;
}

void write_panel_csv(const GroupPanel& panel, const std::string& path) {
    std::ostringstream out;
    out << "group,creation_week";
    for (std::size_t w : panel.weeks) out << ",w" << w;
    out << '\n';
    for (std::size_t g = 0; g < panel.groups.size(); ++g) {
        check_id(panel.groups[g], "group");
        out << panel.groups[g] << ',' << panel.creation_week[g];
        for (std::size_t w = 0; w < panel.weeks.size(); ++w)
            out << ',' << io::fmt_g17(panel.sizes(g, w));
        out << '\n';
    }
    io::write_file(path, out.str());
}

GroupPanel read_panel_csv(const std::string& path) {
    const std::string content = io::read_file(path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw Error("panel file is empty: " + path);
    const std::vector<std::string> header = io::split(line, ',');
    if (header.size() < 3 || header[0] != "group" || header[1] != "creation_week")
        throw Error("panel file has an unexpected header: " + path);
    const std::size_t n_weeks = header.size() - 2;

    GroupPanel panel;
    panel.weeks.resize(n_weeks);
    for (std::size_t w = 0; w < n_weeks; ++w) panel.weeks[w] = w;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = io::split(line, ',');
        if (fields.size() != header.size())
            throw Error("panel file row has wrong field count: " + path);
        panel.groups.push_back(fields[0]);
        std::uint64_t cw = 0;
        if (!io::parse_u64(fields[1], cw))
            throw Error("panel file has an invalid creation week: " + path);
        panel.creation_week.push_back(cw);
        std::vector<double> row(n_weeks);
        for (std::size_t w = 0; w < n_weeks; ++w)
            if (!io::parse_double(fields[2 + w], row[w]))
                throw Error("panel file has an invalid size value: " + path);
        rows.push_back(std::move(row));
    }
    panel.sizes = Matrix(rows.size(), n_weeks);
    for (std::size_t g = 0; g < rows.size(); ++g)
        for (std::size_t w = 0; w < n_weeks; ++w) panel.sizes(g, w) = rows[g][w];
    return panel;
}

void write_frequency_matrix(const UserFrequencyMatrix& ufm, const std::string& path) {
    std::ostringstream out;
    out << "users," << ufm.users.size() << '\n';
    out << "groups," << ufm.groups.size() << '\n';
    for (const std::string& u : ufm.users) {
        check_id(u, "user");
        out << "u," << u << '\n';
    }
    for (const std::string& g : ufm.groups) {
        check_id(g, "group");
        out << "g," << g << '\n';
    }
    for (std::size_t r = 0; r < ufm.counts.rows; ++r)
        for (std::size_t i = ufm.counts.row_start[r]; i < ufm.counts.row_start[r + 1]; ++i)
            out << "e," << r << ',' << ufm.counts.col[i] << ','
                << io::fmt_g17(ufm.counts.val[i]) << '\n';
    io::write_file(path, out.str());
}

UserFrequencyMatrix read_frequency_matrix(const std::string& path) {
    const std::string content = io::read_file(path);
    std::istringstream in(content);
    std::string line;
    auto bad = [&](const char* why) { return Error(std::string("frequency matrix file ") + path + ": " + why); };

    std::uint64_t n_users = 0;
    std::uint64_t n_groups = 0;
    if (!std::getline(in, line)) throw bad("empty file");
    {
        const auto f = io::split(line, ',');
        if (f.size() != 2 || f[0] != "users" || !io::parse_u64(f[1], n_users))
            throw bad("missing users header");
    }
    if (!std::getline(in, line)) throw bad("truncated file");
    {
        const auto f = io::split(line, ',');
        if (f.size() != 2 || f[0] != "groups" || !io::parse_u64(f[1], n_groups))
            throw bad("missing groups header");
    }

    UserFrequencyMatrix ufm;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() == 2 && f[0] == "u") {
            ufm.users.push_back(f[1]);
        } else if (f.size() == 2 && f[0] == "g") {
            ufm.groups.push_back(f[1]);
        } else if (f.size() == 4 && f[0] == "e") {
            std::uint64_t r = 0;
            std::uint64_t c = 0;
            double v = 0.0;
            if (!io::parse_u64(f[1], r) || !io::parse_u64(f[2], c) || !io::parse_double(f[3], v))
                throw bad("invalid entry line");
            rows.push_back(r);
            cols.push_back(c);
            vals.push_back(v);
        } else {
            throw bad("unrecognized line");
        }
    }
    if (ufm.users.size() != n_users || ufm.groups.size() != n_groups)
        throw bad("id counts disagree with the header");
    ufm.counts = sparse_from_triplets(n_users, n_groups, rows, cols, vals);
    return ufm;
}

void write_events_csv(std::span<const EventRecord> events, const std::string& path) {
    std::ostringstream out;
    out << "user,group,ts\n";
    for (const EventRecord& e : events) {
        check_id(e.user, "user");
        check_id(e.group, "group");
        out << e.user << ',' << e.group << ',' << e.timestamp << '\n';
    }
    io::write_file(path, out.str());
}

void write_events_ndjson(std::span<const EventRecord> events, const std::string& path) {
    std::ostringstream out;
    for (const EventRecord& e : events) {
        nlohmann::json doc;
        doc["user"] = e.user;
        doc["group"] = e.group;
        doc["ts"] = e.timestamp;
        out << doc.dump() << '\n';
    }
    io::write_file(path, out.str());
}

}  // namespace ecokit
