#include "ecokit/synth.hpp"

#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"
#include "ecokit/rng.hpp"
#include "json.hpp"

namespace ecokit {

namespace {

void check_spec(const SynthSpec& spec) {
    if (spec.clusters.empty()) throw Error("synth: spec has no clusters");
    if (spec.weeks < 1) throw Error("synth: weeks must be positive");
    if (spec.noise_sd < 0.0) throw Error("synth: noise sd must be nonnegative");
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
        const SynthCluster& cluster = spec.clusters[c];
        const std::string tag = "cluster " + std::to_string(c);
        if (cluster.members < 1) throw Error("synth: " + tag + " has no members");
        if (cluster.phi.rows() != cluster.members || cluster.phi.cols() != cluster.members)
            throw Error("synth: " + tag + " coefficient matrix does not match its member count");
        if (cluster.b0.size() != cluster.members || cluster.b1.size() != cluster.members ||
            cluster.y0.size() != cluster.members || cluster.creation.size() != cluster.members)
            throw Error("synth: " + tag + " parameter vectors do not match its member count");
        for (std::size_t creation : cluster.creation)
            if (creation >= spec.weeks)
                throw Error("synth: " + tag + " creates a member at or past the final week");
        const double radius = spectral_radius_estimate(cluster.phi);
        if (radius >= 1.0 && !spec.allow_unstable)
            throw Error("synth: " + tag + " has planted spectral radius " + io::fmt_g17(radius) +
                        " >= 1; set allow_unstable to generate anyway");
    }
}

// Distinct users for one group week: max(0, round-half-up(exp(y) - 1)),
// at least one on the creation week so detection of first activity is exact.
std::size_t quantize_count(double log_size, bool creation_week) {
    const double raw = std::exp(log_size) - 1.0;
    const double rounded = std::floor(raw + 0.5);
    auto count = rounded <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(rounded);
    if (creation_week && count == 0) count = 1;
    return count;
}

int weekday_of_midnight(std::int64_t timestamp) {
    // Unix day 0 was a Thursday, i.e. weekday 3 when Monday = 0.
    const std::int64_t day = timestamp / 86400;
    return static_cast<int>(((day % 7) + 7 + 3) % 7);
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
    nlohmann::ordered_json out;
    out["rows"] = m.rows();
    out["cols"] = m.cols();
    out["data"] = std::vector<double>(m.data(), m.data() + m.rows() * m.cols());
    return out;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.rows() * m.cols())
        throw Error("truth json: matrix data does not match its dimensions");
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

}  // namespace

SynthPanel simulate_panel(const SynthSpec& spec) {
    check_spec(spec);

    SynthPanel out;
    out.truth.clusters = spec.clusters;
    out.truth.weeks = spec.weeks;
    out.truth.noise_sd = spec.noise_sd;
    out.truth.seed = spec.seed;

    std::size_t total = 0;
    for (const SynthCluster& cluster : spec.clusters) total += cluster.members;
    out.panel.sizes = Matrix(total, spec.weeks);
    for (std::size_t w = 0; w < spec.weeks; ++w) out.panel.weeks.push_back(w);

    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
        const SynthCluster& cluster = spec.clusters[c];
        for (std::size_t k = 0; k < cluster.members; ++k) {
            const std::string name = "c" + std::to_string(c) + "m" + std::to_string(k);
            out.panel.groups.push_back(name);
            out.panel.creation_week.push_back(cluster.creation[k]);
            out.truth.groups.push_back(name);
            out.truth.labels.push_back(static_cast<int>(c));
        }

        Rng rng(spec.seed, c + 1);
        const std::size_t m = cluster.members;
        for (std::size_t t = 0; t < spec.weeks; ++t) {
            for (std::size_t k = 0; k < m; ++k) {
                double y = 0.0;
                if (t == cluster.creation[k]) {
                    y = cluster.y0[k] + spec.noise_sd * rng.next_normal();
                } else if (t > cluster.creation[k]) {
                    y = cluster.b0[k] + cluster.b1[k] * static_cast<double>(t) +
                        spec.noise_sd * rng.next_normal();
                    for (std::size_t i = 0; i < m; ++i)
                        y += cluster.phi(i, k) * out.panel.sizes(row + i, t - 1);
                }
                out.panel.sizes(row + k, t) = y;
            }
        }
        row += m;
    }
    return out;
}

SynthCorpus simulate_events(const SynthSpec& spec) {
    if (spec.cluster_pool == 0)
        throw Error("synth: event generation needs a positive cluster pool size");
    if (spec.sharing_rate < 0.0 || spec.sharing_rate > 1.0)
        throw Error("synth: sharing rate must lie in [0, 1]");
    if (spec.sharing_rate < 1.0 && spec.global_pool == 0)
        throw Error("synth: a global pool is required when the sharing rate is below one");
    if (spec.window_start % 86400 != 0)
        throw Error("synth: window_start must be midnight UTC");

    SynthCorpus out;
    SynthPanel generated = simulate_panel(spec);
    out.panel = std::move(generated.panel);
    out.truth = std::move(generated.truth);

    out.config.top_n = out.panel.groups.size();
    out.config.window_start = spec.window_start;
    out.config.window_end =
        spec.window_start + static_cast<std::int64_t>(spec.weeks) * 604800;
    out.config.week_anchor = weekday_of_midnight(spec.window_start);

    out.counts = Matrix(out.panel.groups.size(), spec.weeks);

    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
        const SynthCluster& cluster = spec.clusters[c];
        Rng rng(spec.seed, spec.clusters.size() + c + 1);
        const std::string cluster_prefix = "u_c" + std::to_string(c) + "_";
        for (std::size_t t = 0; t < spec.weeks; ++t) {
            const std::int64_t week_start =
                spec.window_start + static_cast<std::int64_t>(t) * 604800;
            for (std::size_t k = 0; k < cluster.members; ++k) {
                const std::size_t g = row + k;
                const std::size_t count =
                    quantize_count(out.panel.sizes(g, t), t == cluster.creation[k]);
                out.counts(g, t) = static_cast<double>(count);
                if (count == 0) continue;
                const std::size_t reachable =
                    spec.sharing_rate < 1.0 ? spec.cluster_pool + spec.global_pool
                                            : spec.cluster_pool;
                if (count > reachable)
                    throw Error("synth: group " + out.panel.groups[g] + " needs " +
                                std::to_string(count) + " distinct users in week " +
                                std::to_string(t) + " but only " + std::to_string(reachable) +
                                " are reachable; enlarge the user pools");

                std::unordered_set<std::string> seen;
                seen.reserve(count * 2);
                std::vector<std::string> chosen;  // draw order, for stable output
                chosen.reserve(count);
                std::size_t attempts = 0;
                const std::size_t attempt_cap = 30 * count + 200;
                while (chosen.size() < count) {
                    if (++attempts > attempt_cap)
                        throw Error("synth: could not draw " + std::to_string(count) +
                                    " distinct users for group " + out.panel.groups[g] +
                                    " in week " + std::to_string(t) +
                                    "; enlarge the user pools");
                    const bool from_cluster = rng.next_double() < spec.sharing_rate;
                    std::string user =
                        from_cluster
                            ? cluster_prefix + std::to_string(rng.next_below(spec.cluster_pool))
                            : "u_g_" + std::to_string(rng.next_below(spec.global_pool));
                    if (!seen.insert(user).second) continue;
                    chosen.push_back(std::move(user));
                }
                // Deterministic spread of timestamps inside the week keeps
                // event files stable across runs and platforms.
                for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
                    const std::int64_t offset =
                        static_cast<std::int64_t>(((g + 1) * 3719 + slot * 37) % 604800);
                    out.events.push_back(EventRecord{std::move(chosen[slot]),
                                                     out.panel.groups[g],
                                                     week_start + offset});
                }
            }
        }
        row += cluster.members;
    }
    return out;
}

void write_truth_json(const PlantedTruth& truth, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["groups"] = truth.groups;
    doc["labels"] = truth.labels;
    doc["weeks"] = truth.weeks;
    doc["noise_sd"] = truth.noise_sd;
    doc["seed"] = truth.seed;
    doc["clusters"] = nlohmann::ordered_json::array();
    for (const SynthCluster& cluster : truth.clusters) {
        nlohmann::ordered_json c;
        c["members"] = cluster.members;
        c["phi"] = matrix_json(cluster.phi);
        c["b0"] = cluster.b0;
        c["b1"] = cluster.b1;
        c["y0"] = cluster.y0;
        c["creation"] = cluster.creation;
        doc["clusters"].push_back(std::move(c));
    }
    io::write_file(path, doc.dump(2) + "\n");
}

SynthSpec read_synth_spec_json(const std::string& path) {
    SynthSpec spec;
    try {
        const auto doc = nlohmann::json::parse(io::read_file(path));
        spec.weeks = doc.at("weeks").get<std::size_t>();
        for (const auto& c : doc.at("clusters")) {
            SynthCluster cluster;
            cluster.members = c.at("members").get<std::size_t>();
            cluster.phi = matrix_from_json(c.at("phi"));
            cluster.b0 = c.at("b0").get<std::vector<double>>();
            cluster.b1 = c.at("b1").get<std::vector<double>>();
            cluster.y0 = c.at("y0").get<std::vector<double>>();
            cluster.creation = c.at("creation").get<std::vector<std::size_t>>();
            spec.clusters.push_back(std::move(cluster));
        }
        if (doc.contains("noise_sd")) spec.noise_sd = doc["noise_sd"].get<double>();
        if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("allow_unstable")) spec.allow_unstable = doc["allow_unstable"].get<bool>();
        if (doc.contains("cluster_pool")) spec.cluster_pool = doc["cluster_pool"].get<std::size_t>();
        if (doc.contains("global_pool")) spec.global_pool = doc["global_pool"].get<std::size_t>();
        if (doc.contains("sharing_rate")) spec.sharing_rate = doc["sharing_rate"].get<double>();
        if (doc.contains("window_start"))
            spec.window_start = doc["window_start"].get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("synth spec json: " + path + ": " + e.what());
    }
    return spec;
}

PlantedTruth read_truth_json(const std::string& path) {
    PlantedTruth truth;
    try {
        const auto doc = nlohmann::json::parse(io::read_file(path));
        truth.groups = doc.at("groups").get<std::vector<std::string>>();
        truth.labels = doc.at("labels").get<std::vector<int>>();
        truth.weeks = doc.at("weeks").get<std::size_t>();
        truth.noise_sd = doc.at("noise_sd").get<double>();
        truth.seed = doc.at("seed").get<std::uint64_t>();
        for (const auto& c : doc.at("clusters")) {
            SynthCluster cluster;
            cluster.members = c.at("members").get<std::size_t>();
            cluster.phi = matrix_from_json(c.at("phi"));
            cluster.b0 = c.at("b0").get<std::vector<double>>();
            cluster.b1 = c.at("b1").get<std::vector<double>>();
            cluster.y0 = c.at("y0").get<std::vector<double>>();
            cluster.creation = c.at("creation").get<std::vector<std::size_t>>();
            truth.clusters.push_back(std::move(cluster));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("truth json: " + path + ": " + e.what());
    }
    return truth;
}

}  // namespace ecokit
