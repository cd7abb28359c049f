#include <doctest.h>

#include <cmath>
#include <functional>

#include "commprobe/graph.hpp"
#include "commprobe/util.hpp"

using namespace commprobe;
using graph::InteractionGraph;

namespace {

using Pairs = std::vector<std::tuple<std::string, std::string, std::int64_t>>;

// dense-matrix modularity
double reference_q(const InteractionGraph& g, const std::vector<int>& c) {
    const auto n = g.node_count();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (const auto& e : g.edges()) {
        a[e.u][e.v] += static_cast<double>(e.weight);
        a[e.v][e.u] += static_cast<double>(e.weight);
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            k[i] += a[i][j];
            two_m += a[i][j];
        }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (c[i] == c[j]) q += a[i][j] - k[i] * k[j] / two_m;
    return q / two_m;
}

// best modularity over every set partition
double brute_force_best(const InteractionGraph& g) {
    const auto n = g.node_count();
    std::vector<int> rgs(n, 0);
    double best = -1.0;
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int max_label) {
        if (i == n) {
            best = std::max(best, reference_q(g, rgs));
            return;
        }
        for (int l = 0; l <= max_label + 1; ++l) {
            rgs[i] = l;
            rec(i + 1, std::max(max_label, l));
        }
    };
    rgs[0] = 0;
    rec(1, 0);
    return best;
}

InteractionGraph random_graph(util::Rng& rng, int n, double p) {
    Pairs pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform01() < p)
                pairs.emplace_back("n" + std::to_string(i), "n" + std::to_string(j),
                                   1 + static_cast<std::int64_t>(rng.uniform_index(3)));
    return InteractionGraph::from_pairs(pairs);
}

InteractionGraph two_cliques() {
    Pairs pairs;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j)
                pairs.emplace_back("c" + std::to_string(c) + "_" + std::to_string(i),
                                   "c" + std::to_string(c) + "_" + std::to_string(j), 1);
    pairs.emplace_back("c0_0", "c1_0", 1);
    return InteractionGraph::from_pairs(pairs);
}

}  // namespace

TEST_CASE("edges accumulate and drop self pairs") {
    auto g = InteractionGraph::from_pairs({{"b", "a", 1}, {"a", "b", 2}, {"a", "a", 5}, {"c", "a", 1}});
    CHECK(g.node_count() == 3);
    CHECK(g.weight("a", "b") == 3);
    CHECK(g.weight("b", "a") == 3);
    CHECK(g.weight("b", "c") == 0);
    CHECK(g.total_weight() == 4);
    auto bin = InteractionGraph::from_pairs({{"b", "a", 1}, {"a", "b", 2}}, graph::EdgeWeighting::Binary);
    CHECK(bin.weight("a", "b") == 1);
    CHECK_THROWS_AS(InteractionGraph::from_pairs({{"a", "b", 0}}), ValidationError);

    const auto text = g.to_edge_list();
    CHECK(text == "a b 3\na c 1\n");
    CHECK(InteractionGraph::from_edge_list(text).to_edge_list() == text);
}

TEST_CASE("retweet graph from posts") {
    std::vector<corpus::Post> posts(3);
    posts[0].post_id = "1";
    posts[0].author_id = "x";
    posts[0].is_retweet = true;
    posts[0].retweeted_author_id = "y";
    posts[1] = posts[0];
    posts[1].post_id = "2";
    posts[2].post_id = "3";
    posts[2].author_id = "z";
    corpus::PostStore store(posts);
    auto g = graph::build_graph(store);
    CHECK(g.node_count() == 2);
    CHECK(g.weight("x", "y") == 2);
    CHECK(graph::build_graph(store, graph::EdgeWeighting::Binary).weight("x", "y") == 1);
    auto counts = graph::posts_per_node(g, store);
    CHECK(counts == std::vector<std::size_t>{2, 0});
}

TEST_CASE("modularity matches the dense formula") {
    util::Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_graph(rng, 12, 0.3);
        if (g.empty()) continue;
        std::vector<int> c(g.node_count());
        for (auto& x : c) x = static_cast<int>(rng.uniform_index(4));
        CHECK(graph::modularity(g, c) == doctest::Approx(reference_q(g, c)).epsilon(1e-12));
    }
}

TEST_CASE("modularity edge cases") {
    auto g = two_cliques();
    std::vector<int> all_same(g.node_count(), 0);
    CHECK(std::abs(graph::modularity(g, all_same)) < 1e-12);
    CHECK_THROWS_AS(graph::modularity(InteractionGraph{}, std::vector<int>{}), ValidationError);
    graph::Assignment missing{{"c0_0", 0}};
    CHECK_THROWS_AS(graph::modularity(g, missing), ValidationError);
}

TEST_CASE("louvain finds the optimum on small graphs") {
    auto g = two_cliques();
    const double best = brute_force_best(g);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto p = graph::louvain(g, seed);
        CHECK(p.community_count == 2);
        CHECK(p.modularity_q == doctest::Approx(best).epsilon(1e-9));
        CHECK(p.modularity_q == doctest::Approx(graph::modularity(g, p.assignment)).epsilon(1e-12));
    }
    util::Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        auto h = random_graph(rng, 8, 0.4);
        if (h.node_count() < 2) continue;
        auto p = graph::louvain(h, static_cast<std::uint64_t>(trial));
        CHECK(p.modularity_q <= brute_force_best(h) + 1e-9);
        CHECK(p.modularity_q >= -0.5);
    }
}

TEST_CASE("louvain is deterministic per seed") {
    util::Rng rng(3);
    auto g = random_graph(rng, 40, 0.1);
    auto a = graph::louvain(g, 9);
    auto b = graph::louvain(g, 9);
    CHECK(a.assignment == b.assignment);
    CHECK(a.modularity_q == b.modularity_q);
}

TEST_CASE("relabel orders communities by size") {
    graph::Partition p;
    p.assignment = {2, 2, 0, 1, 1, 1};
    p.community_count = 3;
    auto r = graph::relabel_by_size(p);
    CHECK(r.assignment == std::vector<int>{1, 1, 2, 0, 0, 0});
    auto top = graph::top_k(r, 2, {1, 1, 1, 1, 1, 1});
    REQUIRE(top.size() == 2);
    CHECK(top[0].size == 3);
    CHECK(top[0].posts == 3);
    CHECK(graph::top_k(r, 10).size() == 3);
}

TEST_CASE("grouping config") {
    graph::Partition p;
    p.assignment = {0, 0, 1, 2, 3};
    p.community_count = 4;
    auto cfg = graph::parse_grouping_config(R"({"Keto & Diet":[1,2],"Pro Eating Disorder":[0]})");
    REQUIRE(cfg.size() == 2);
    CHECK(cfg[0].first == "Keto & Diet");
    auto grouping = graph::group_communities(p, cfg);
    CHECK(grouping.excluded == std::vector<int>{3});
    CHECK_THROWS_AS(graph::group_communities(p, {{"Nope", {0}}}), ValidationError);
    CHECK_THROWS_AS(graph::group_communities(p, {{"Keto & Diet", {0}}, {"Body Image", {0}}}), ValidationError);
    CHECK_THROWS_AS(graph::group_communities(p, {{"Keto & Diet", {9}}}), ValidationError);
    CHECK_THROWS_AS(graph::parse_grouping_config("[1]"), ValidationError);
    CHECK_THROWS_AS(graph::parse_grouping_config(R"({"Keto & Diet":[1.5]})"), ValidationError);
}

TEST_CASE("echo chamber fractions") {
    auto g = two_cliques();
    auto p = graph::louvain(g, 1);
    auto stats = graph::echo_chamber_stats(g, p);
    REQUIRE(stats.size() == 2);
    for (const auto& s : stats) {
        CHECK(s.internal_weight == 10);
        CHECK(s.external_weight == 1);
        CHECK(*s.internal_fraction == doctest::Approx(10.0 / 11.0));
    }
}
