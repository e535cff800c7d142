#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "ecokit/cluster.hpp"
#include "ecokit/error.hpp"
#include "ecokit/ingest.hpp"
#include "ecokit/io.hpp"
#include "ecokit/overlap.hpp"
#include "ecokit/synth.hpp"
#include "test_util.hpp"

namespace {

ecokit::Matrix make_matrix(std::size_t rows, std::size_t cols,
                           std::initializer_list<double> values) {
    ecokit::Matrix m(rows, cols);
    std::size_t i = 0;
    for (double v : values) m.data()[i++] = v;
    REQUIRE(i == rows * cols);
    return m;
}

ecokit::SynthCluster uniform_cluster(std::size_t members, double diag, double off, double b0,
                                     double y0) {
    ecokit::SynthCluster c;
    c.members = members;
    c.phi = ecokit::Matrix(members, members);
    for (std::size_t i = 0; i < members; ++i)
        for (std::size_t j = 0; j < members; ++j) c.phi(i, j) = i == j ? diag : off;
    c.b0.assign(members, b0);
    c.b1.assign(members, 0.0);
    c.y0.assign(members, y0);
    c.creation.assign(members, 0);
    return c;
}

}  // namespace

TEST_CASE("noiseless panel generation follows the recursion exactly") {
    ecokit::SynthCluster c;
    c.members = 2;
    c.phi = make_matrix(2, 2, {0.5, 0.2, 0.0, 0.4});
    c.b0 = {0.3, -0.1};
    c.b1 = {0.02, 0.0};
    c.y0 = {1.0, -0.5};
    c.creation = {0, 2};

    ecokit::SynthSpec spec;
    spec.clusters = {c};
    spec.weeks = 6;
    spec.noise_sd = 0.0;
    spec.seed = 7;

    const auto out = ecokit::simulate_panel(spec);
    REQUIRE(out.panel.groups.size() == 2);
    CHECK(out.panel.groups[0] == "c0m0");
    CHECK(out.panel.groups[1] == "c0m1");
    CHECK(out.truth.labels == std::vector<int>{0, 0});
    REQUIRE(out.panel.weeks.size() == 6);
    CHECK(out.panel.creation_week == std::vector<std::size_t>{0, 2});

    // Replay the recursion in the test with its own loop.
    std::vector<double> prev(2, 0.0);
    for (std::size_t t = 0; t < 6; ++t) {
        std::vector<double> cur(2, 0.0);
        for (std::size_t j = 0; j < 2; ++j) {
            if (t < c.creation[j]) {
                cur[j] = 0.0;
            } else if (t == c.creation[j]) {
                cur[j] = c.y0[j];
            } else {
                double y = c.b0[j] + c.b1[j] * static_cast<double>(t);
                for (std::size_t i = 0; i < 2; ++i) y += c.phi(i, j) * prev[i];
                cur[j] = y;
            }
        }
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(test_util::close(out.panel.sizes(j, t), cur[j], 1e-12));
        prev = cur;
    }

    // Spot checks: dormant member is exactly zero, creation week is exactly y0.
    CHECK(out.panel.sizes(1, 0) == 0.0);
    CHECK(out.panel.sizes(1, 1) == 0.0);
    CHECK(out.panel.sizes(0, 0) == 1.0);
    CHECK(out.panel.sizes(1, 2) == -0.5);
}

TEST_CASE("noiseless autoregression converges to its fixed point") {
    ecokit::SynthCluster c;
    c.members = 1;
    c.phi = make_matrix(1, 1, {0.9});
    c.b0 = {0.5};
    c.b1 = {0.0};
    c.y0 = {0.0};
    c.creation = {0};

    ecokit::SynthSpec spec;
    spec.clusters = {c};
    spec.weeks = 400;
    spec.noise_sd = 0.0;
    spec.seed = 1;

    const auto out = ecokit::simulate_panel(spec);
    CHECK(test_util::close(out.panel.sizes(0, 399), 0.5 / (1.0 - 0.9), 1e-8));
    for (std::size_t t = 1; t < 400; ++t)
        CHECK(out.panel.sizes(0, t) > out.panel.sizes(0, t - 1) - 1e-15);
}

TEST_CASE("each cluster draws from its own substream") {
    const auto c0 = uniform_cluster(2, 0.4, 0.1, 0.8, 1.0);
    const auto c1 = uniform_cluster(3, 0.3, 0.0, 0.5, 0.7);

    ecokit::SynthSpec both;
    both.clusters = {c0, c1};
    both.weeks = 50;
    both.noise_sd = 0.25;
    both.seed = 42;

    ecokit::SynthSpec first_only = both;
    first_only.clusters = {c0};

    const auto panel_both = ecokit::simulate_panel(both);
    const auto panel_first = ecokit::simulate_panel(first_only);
    // Cluster 0's rows do not depend on what other clusters exist.
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t t = 0; t < 50; ++t)
            CHECK(panel_both.panel.sizes(j, t) == panel_first.panel.sizes(j, t));
}

TEST_CASE("generation is deterministic in the seed") {
    ecokit::SynthSpec spec;
    spec.clusters = {uniform_cluster(3, 0.4, 0.1, 1.2, 1.5),
                     uniform_cluster(2, 0.5, 0.0, 1.0, 1.0)};
    spec.weeks = 30;
    spec.noise_sd = 0.2;
    spec.seed = 0x5eedbeef;
    spec.cluster_pool = 500;
    spec.global_pool = 2000;
    spec.sharing_rate = 0.8;

    const auto a = ecokit::simulate_events(spec);
    const auto b = ecokit::simulate_events(spec);
    CHECK(test_util::max_abs_diff(a.panel.sizes, b.panel.sizes) == 0.0);
    CHECK(test_util::max_abs_diff(a.counts, b.counts) == 0.0);
    REQUIRE(a.events.size() == b.events.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        identical = identical && a.events[i].user == b.events[i].user &&
                    a.events[i].group == b.events[i].group &&
                    a.events[i].timestamp == b.events[i].timestamp;
    }
    CHECK(identical);

    ecokit::SynthSpec other = spec;
    other.seed = 0x5eedbef0;
    const auto d = ecokit::simulate_events(other);
    CHECK(test_util::max_abs_diff(a.panel.sizes, d.panel.sizes) > 0.0);
}

TEST_CASE("weekly sizes quantize to distinct-user counts") {
    // Noise-free members with no coupling hold constant levels after the
    // creation week, so every count can be worked out by hand.
    ecokit::SynthCluster c;
    c.members = 4;
    c.phi = ecokit::Matrix(4, 4);  // zero: each week is b0 alone
    c.b0 = {std::log(1.3), std::log(3.8), std::log(6.1), std::log(2.2)};
    c.b1 = {0.0, 0.0, 0.0, 0.0};
    c.y0 = {0.0, std::log(4.2), std::log(9.9), -2.0};
    c.creation = {0, 0, 0, 0};

    ecokit::SynthSpec spec;
    spec.clusters = {c};
    spec.weeks = 3;
    spec.noise_sd = 0.0;
    spec.seed = 3;
    spec.cluster_pool = 64;

    const auto corpus = ecokit::simulate_events(spec);
    // exp(y) - 1 rounded half-up, never negative, at least 1 on creation week.
    CHECK(corpus.counts(0, 0) == 1.0);  // exp(0) - 1 = 0, forced up on creation
    CHECK(corpus.counts(0, 1) == 0.0);  // 0.3 rounds down
    CHECK(corpus.counts(0, 2) == 0.0);
    CHECK(corpus.counts(1, 0) == 3.0);  // 3.2 rounds down
    CHECK(corpus.counts(1, 1) == 3.0);  // 2.8 rounds up
    CHECK(corpus.counts(2, 0) == 9.0);  // 8.9 rounds up... to 9
    CHECK(corpus.counts(2, 1) == 5.0);  // 5.1 rounds down
    CHECK(corpus.counts(3, 0) == 1.0);  // negative size clamps to 0, forced up
    CHECK(corpus.counts(3, 1) == 1.0);  // 1.2 rounds down
    // The continuous panel is untouched by quantization.
    CHECK(corpus.panel.sizes(1, 0) == std::log(4.2));

    // Event total matches the planted counts.
    double total = 0.0;
    for (std::size_t g = 0; g < 4; ++g)
        for (std::size_t t = 0; t < 3; ++t) total += corpus.counts(g, t);
    CHECK(static_cast<double>(corpus.events.size()) == total);
}

TEST_CASE("rebuilding a panel from generated events recovers the planted counts") {
    ecokit::SynthSpec spec;
    for (int k = 0; k < 3; ++k) {
        auto c = uniform_cluster(3, 0.4, 0.1, 1.2, 1.5);
        c.y0 = {1.5, 1.2, 1.0};
        c.creation = {0, 5, 11};
        spec.clusters.push_back(c);
    }
    spec.weeks = 40;
    spec.noise_sd = 0.15;
    spec.seed = 0xc0de;
    spec.cluster_pool = 400;
    spec.global_pool = 1500;
    spec.sharing_rate = 0.8;

    const auto corpus = ecokit::simulate_events(spec);
    CHECK(corpus.config.week_anchor == 0);  // default start is a Monday
    CHECK(ecokit::week_count(corpus.config) == 40);

    for (const auto& e : corpus.events) {
        REQUIRE(e.timestamp >= corpus.config.window_start);
        REQUIRE(e.timestamp < corpus.config.window_end);
    }

    const auto rebuilt =
        ecokit::build_panel(corpus.events, corpus.truth.groups, corpus.config);
    REQUIRE(rebuilt.groups.size() == 9);
    REQUIRE(rebuilt.weeks.size() == 40);
    for (std::size_t g = 0; g < 9; ++g) {
        CHECK(rebuilt.creation_week[g] == corpus.panel.creation_week[g]);
        for (std::size_t t = 0; t < 40; ++t)
            CHECK(rebuilt.sizes(g, t) == std::log1p(corpus.counts(g, t)));
    }
}

TEST_CASE("sharing rate selects between cluster and global user pools") {
    ecokit::SynthSpec spec;
    spec.clusters = {uniform_cluster(2, 0.3, 0.1, 1.0, 1.0),
                     uniform_cluster(2, 0.3, 0.1, 1.0, 1.0)};
    spec.weeks = 10;
    spec.noise_sd = 0.1;
    spec.seed = 11;
    spec.cluster_pool = 200;
    spec.global_pool = 500;

    SUBCASE("rate one keeps every draw inside the group's own cluster pool") {
        spec.sharing_rate = 1.0;
        const auto corpus = ecokit::simulate_events(spec);
        REQUIRE(!corpus.events.empty());
        for (const auto& e : corpus.events) {
            // group "c<k>m..." must only see users "u_c<k>_..."
            const std::string want = "u_c" + e.group.substr(1, 1) + "_";
            REQUIRE(e.user.substr(0, want.size()) == want);
        }
    }

    SUBCASE("rate zero sends every draw to the global pool") {
        spec.sharing_rate = 0.0;
        const auto corpus = ecokit::simulate_events(spec);
        REQUIRE(!corpus.events.empty());
        for (const auto& e : corpus.events) REQUIRE(e.user.substr(0, 4) == "u_g_");
    }

    SUBCASE("an intermediate rate mixes the two pools") {
        spec.sharing_rate = 0.7;
        const auto corpus = ecokit::simulate_events(spec);
        bool saw_cluster = false;
        bool saw_global = false;
        for (const auto& e : corpus.events) {
            if (e.user.substr(0, 4) == "u_g_") saw_global = true;
            else saw_cluster = true;
        }
        CHECK(saw_cluster);
        CHECK(saw_global);
    }
}

TEST_CASE("planted clusters are recoverable from the event stream") {
    ecokit::SynthSpec spec;
    for (int k = 0; k < 5; ++k) spec.clusters.push_back(uniform_cluster(4, 0.35, 0.05, 1.4, 2.0));
    spec.weeks = 120;
    spec.noise_sd = 0.1;
    spec.seed = 0xec0;
    spec.cluster_pool = 300;
    spec.global_pool = 1000;
    spec.sharing_rate = 0.9;

    const auto corpus = ecokit::simulate_events(spec);
    const auto ufm = ecokit::build_user_frequency(corpus.events, corpus.truth.groups);
    const auto normalized = ecokit::normalize_frequencies(ufm.counts);
    const auto embedding = ecokit::embed(normalized, 8, 99);
    const auto labels = ecokit::kmeans_cosine(embedding, 5, 99);
    CHECK(ecokit::adjusted_rand_index(labels, corpus.truth.labels) >= 0.9);
}

TEST_CASE("planted truth survives a file round trip") {
    ecokit::SynthSpec spec;
    spec.clusters = {uniform_cluster(2, 0.4, 0.1, 0.8, 1.0),
                     uniform_cluster(3, 0.3, 0.0, 0.5, 0.7)};
    spec.clusters[1].creation = {0, 2, 4};
    spec.weeks = 12;
    spec.noise_sd = 0.2;
    spec.seed = 0xabcd;

    const auto truth = ecokit::simulate_panel(spec).truth;
    ecokit::write_truth_json(truth, "truth_roundtrip.tmp");
    const auto loaded = ecokit::read_truth_json("truth_roundtrip.tmp");

    CHECK(loaded.groups == truth.groups);
    CHECK(loaded.labels == truth.labels);
    CHECK(loaded.weeks == truth.weeks);
    CHECK(loaded.noise_sd == truth.noise_sd);
    CHECK(loaded.seed == truth.seed);
    REQUIRE(loaded.clusters.size() == truth.clusters.size());
    for (std::size_t c = 0; c < truth.clusters.size(); ++c) {
        const auto& a = truth.clusters[c];
        const auto& b = loaded.clusters[c];
        CHECK(a.members == b.members);
        CHECK(a.b0 == b.b0);
        CHECK(a.b1 == b.b1);
        CHECK(a.y0 == b.y0);
        CHECK(a.creation == b.creation);
        REQUIRE(b.phi.rows() == a.phi.rows());
        REQUIRE(b.phi.cols() == a.phi.cols());
        CHECK(test_util::max_abs_diff(a.phi, b.phi) == 0.0);
    }

    // Writing the loaded truth again reproduces the file byte for byte.
    ecokit::write_truth_json(loaded, "truth_roundtrip2.tmp");
    CHECK(ecokit::io::read_file("truth_roundtrip.tmp") ==
          ecokit::io::read_file("truth_roundtrip2.tmp"));
    std::remove("truth_roundtrip.tmp");
    std::remove("truth_roundtrip2.tmp");

    ecokit::io::write_file("truth_bad.tmp", "{}\n");
    CHECK_THROWS_WITH_AS((void)ecokit::read_truth_json("truth_bad.tmp"),
                         doctest::Contains("truth json"), ecokit::Error);
    std::remove("truth_bad.tmp");
}

TEST_CASE("generator specs are validated") {
    const auto good = [] {
        ecokit::SynthSpec spec;
        spec.clusters = {uniform_cluster(2, 0.4, 0.1, 0.8, 1.0)};
        spec.weeks = 10;
        spec.seed = 5;
        spec.cluster_pool = 100;
        spec.global_pool = 100;
        spec.sharing_rate = 0.9;
        return spec;
    };

    SUBCASE("panel-level problems") {
        auto spec = good();
        spec.clusters.clear();
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_panel(spec),
                             doctest::Contains("no clusters"), ecokit::Error);

        spec = good();
        spec.weeks = 0;
        CHECK_THROWS_AS((void)ecokit::simulate_panel(spec), ecokit::Error);

        spec = good();
        spec.noise_sd = -0.1;
        CHECK_THROWS_AS((void)ecokit::simulate_panel(spec), ecokit::Error);

        spec = good();
        spec.clusters[0].phi = ecokit::Matrix(3, 3);
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_panel(spec),
                             doctest::Contains("coefficient matrix"), ecokit::Error);

        spec = good();
        spec.clusters[0].b0 = {0.8};
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_panel(spec),
                             doctest::Contains("parameter vectors"), ecokit::Error);

        spec = good();
        spec.clusters[0].creation = {0, 10};
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_panel(spec),
                             doctest::Contains("final week"), ecokit::Error);
    }

    SUBCASE("planted instability needs an explicit opt-in") {
        auto spec = good();
        spec.clusters[0].phi = make_matrix(2, 2, {1.2, 0.0, 0.0, 0.3});
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_panel(spec),
                             doctest::Contains("allow_unstable"), ecokit::Error);
        spec.allow_unstable = true;
        CHECK_NOTHROW((void)ecokit::simulate_panel(spec));
    }

    SUBCASE("event-level problems") {
        auto spec = good();
        spec.cluster_pool = 0;
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_events(spec),
                             doctest::Contains("cluster pool"), ecokit::Error);

        spec = good();
        spec.sharing_rate = 1.5;
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_events(spec),
                             doctest::Contains("sharing rate"), ecokit::Error);

        spec = good();
        spec.sharing_rate = 0.5;
        spec.global_pool = 0;
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_events(spec),
                             doctest::Contains("global pool"), ecokit::Error);

        spec = good();
        spec.window_start += 3600;
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_events(spec),
                             doctest::Contains("midnight"), ecokit::Error);

        // A group that needs more distinct users than the pools can supply.
        spec = good();
        spec.sharing_rate = 1.0;
        spec.cluster_pool = 5;
        spec.clusters[0].y0 = {std::log(1000.0), std::log(1000.0)};
        CHECK_THROWS_WITH_AS((void)ecokit::simulate_events(spec),
                             doctest::Contains("enlarge the user pools"), ecokit::Error);
    }
}

TEST_CASE("window anchoring matches the generated timestamps") {
    ecokit::SynthSpec spec;
    spec.clusters = {uniform_cluster(1, 0.2, 0.0, 1.0, 1.5)};
    spec.weeks = 8;
    spec.noise_sd = 0.05;
    spec.seed = 9;
    spec.cluster_pool = 50;
    // Shift the window to a Saturday midnight; the anchor must follow.
    spec.window_start = 1420416000 + 5 * 86400;

    const auto corpus = ecokit::simulate_events(spec);
    CHECK(corpus.config.week_anchor == 5);
    CHECK(ecokit::week_count(corpus.config) == 8);

    // Every event lands in the week that planted it.
    const auto rebuilt =
        ecokit::build_panel(corpus.events, corpus.truth.groups, corpus.config);
    for (std::size_t t = 0; t < 8; ++t)
        CHECK(rebuilt.sizes(0, t) == std::log1p(corpus.counts(0, t)));
}
