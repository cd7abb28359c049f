#include "commprobe/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "commprobe/util.hpp"

namespace commprobe::graph {

using nlohmann::json;

// ---------------------------------------------------------------- graph

InteractionGraph InteractionGraph::from_pairs(
    const std::vector<std::tuple<std::string, std::string, std::int64_t>>& pairs, EdgeWeighting weighting) {
    std::map<std::pair<std::string, std::string>, std::int64_t> acc;
    for (const auto& [a, b, w] : pairs) {
        if (w < 1) throw ValidationError("edge weight must be >= 1");
        if (a == b) continue;
        auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        acc[key] += w;
    }
    InteractionGraph g;
    std::set<std::string> names;
    for (const auto& [key, w] : acc) {
        names.insert(key.first);
        names.insert(key.second);
    }
    g.nodes_.assign(names.begin(), names.end());
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i], i);
    g.edges_.reserve(acc.size());
    for (const auto& [key, w] : acc) {
        const auto weight = weighting == EdgeWeighting::Binary ? std::int64_t{1} : w;
        g.edges_.push_back({g.index_.at(key.first), g.index_.at(key.second), weight});
        g.total_weight_ += weight;
    }
    return g;
}

std::optional<std::size_t> InteractionGraph::index_of(std::string_view node) const {
    auto it = index_.find(node);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::int64_t InteractionGraph::weight(std::string_view a, std::string_view b) const {
    auto ia = index_of(a);
    auto ib = index_of(b);
    if (!ia || !ib || *ia == *ib) return 0;
    auto u = std::min(*ia, *ib);
    auto v = std::max(*ia, *ib);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(u, v),
                               [](const Edge& e, const std::pair<std::size_t, std::size_t>& key) {
                                   return std::tie(e.u, e.v) < std::tie(key.first, key.second);
                               });
    return (it != edges_.end() && it->u == u && it->v == v) ? it->weight : 0;
}

std::vector<double> InteractionGraph::degrees() const {
    std::vector<double> k(nodes_.size(), 0.0);
    for (const auto& e : edges_) {
        k[e.u] += static_cast<double>(e.weight);
        k[e.v] += static_cast<double>(e.weight);
    }
    return k;
}

std::string InteractionGraph::to_edge_list() const {
    std::string out;
    for (const auto& e : edges_) {
        out += nodes_[e.u];
        out += ' ';
        out += nodes_[e.v];
        out += ' ';
        out += std::to_string(e.weight);
        out += '\n';
    }
    return out;
}

InteractionGraph InteractionGraph::from_edge_list(std::string_view text) {
    std::vector<std::tuple<std::string, std::string, std::int64_t>> pairs;
    std::size_t line_no = 0;
    for (const auto& line : util::split_lines(text)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        std::int64_t w = 0;
        if (!(ss >> a >> b >> w)) throw ValidationError("edge list line " + std::to_string(line_no) + " malformed");
        pairs.emplace_back(a, b, w);
    }
    return from_pairs(pairs);
}

json InteractionGraph::metadata() const {
    return json{{"nodes", nodes_.size()}, {"edges", edges_.size()}, {"total_weight", total_weight_}};
}

InteractionGraph build_graph(const corpus::PostStore& store, EdgeWeighting weighting) {
    std::vector<std::tuple<std::string, std::string, std::int64_t>> pairs;
    for (const auto& post : store.posts()) {
        if (post.is_retweet && post.retweeted_author_id) pairs.emplace_back(post.author_id, *post.retweeted_author_id, 1);
    }
    return InteractionGraph::from_pairs(pairs, weighting);
}

// ---------------------------------------------------------------- partition

std::map<std::string, int> Partition::as_map(const InteractionGraph& g) const {
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) out.emplace(g.nodes()[i], assignment[i]);
    return out;
}

std::vector<std::vector<std::size_t>> Partition::members() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(community_count));
    for (std::size_t i = 0; i < assignment.size(); ++i) out[static_cast<std::size_t>(assignment[i])].push_back(i);
    return out;
}

json Partition::to_json(const InteractionGraph& g) const {
    json assign = json::object();
    for (const auto& [node, c] : as_map(g)) assign[node] = c;
    return json{{"communities", community_count}, {"modularity", modularity_q}, {"assignment", assign}};
}

double modularity(const InteractionGraph& g, const std::vector<int>& assignment) {
    if (g.empty() || g.total_weight() <= 0) throw ValidationError("modularity is undefined on an empty graph");
    if (assignment.size() != g.node_count()) throw ValidationError("assignment does not cover every node");
    const double two_m = 2.0 * static_cast<double>(g.total_weight());
    std::map<int, double> internal;  // ordered-pair sum of A_ij inside each community
    std::map<int, double> total;     // sum of degrees
    const auto k = g.degrees();
    for (std::size_t i = 0; i < k.size(); ++i) total[assignment[i]] += k[i];
    for (const auto& e : g.edges()) {
        if (assignment[e.u] == assignment[e.v]) internal[assignment[e.u]] += 2.0 * static_cast<double>(e.weight);
    }
    double q = 0.0;
    for (const auto& [c, tot] : total) {
        const double in = internal.count(c) ? internal[c] : 0.0;
        q += in / two_m - (tot / two_m) * (tot / two_m);
    }
    return q;
}

double modularity(const InteractionGraph& g, const Assignment& assignment) {
    std::vector<int> vec(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        auto it = assignment.find(g.nodes()[i]);
        if (it == assignment.end()) throw ValidationError("node missing from assignment: " + g.nodes()[i]);
        vec[i] = it->second;
    }
    return modularity(g, vec);
}

namespace {

// Working graph for one Louvain level. Self-loop weights use the ordered-pair
// convention: loop[i] = sum of A_jk over ordered pairs collapsed into node i.
struct LevelGraph {
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;
    std::vector<double> loop;
    std::vector<double> degree;
    double two_m = 0.0;

    std::size_t size() const { return adjacency.size(); }
};

LevelGraph initial_level(const InteractionGraph& g) {
    LevelGraph lg;
    const auto n = g.node_count();
    lg.adjacency.resize(n);
    lg.loop.assign(n, 0.0);
    lg.degree.assign(n, 0.0);
    for (const auto& e : g.edges()) {
        const auto w = static_cast<double>(e.weight);
        lg.adjacency[e.u].emplace_back(e.v, w);
        lg.adjacency[e.v].emplace_back(e.u, w);
        lg.degree[e.u] += w;
        lg.degree[e.v] += w;
    }
    lg.two_m = 2.0 * static_cast<double>(g.total_weight());
    return lg;
}

// Dense renumbering in order of first appearance.
int renumber(std::vector<int>& comm) {
    std::map<int, int> remap;
    for (auto& c : comm) {
        auto [it, inserted] = remap.emplace(c, static_cast<int>(remap.size()));
        c = it->second;
    }
    return static_cast<int>(remap.size());
}

// Returns true when at least one node changed community.
bool local_moving(const LevelGraph& lg, std::vector<int>& comm, util::Rng& rng, double min_gain) {
    const auto n = lg.size();
    comm.resize(n);
    std::iota(comm.begin(), comm.end(), 0);
    std::vector<double> tot = lg.degree;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    const double m = lg.two_m / 2.0;
    std::vector<double> link(n, 0.0);
    std::vector<std::size_t> touched;
    bool any_move = false;
    bool moved = true;
    while (moved) {
        moved = false;
        for (auto i : order) {
            const auto own = static_cast<std::size_t>(comm[i]);
            const double ki = lg.degree[i];
            touched.clear();
            for (const auto& [j, w] : lg.adjacency[i]) {
                const auto c = static_cast<std::size_t>(comm[j]);
                if (link[c] == 0.0) touched.push_back(c);
                link[c] += w;
            }
            tot[own] -= ki;
            auto gain = [&](std::size_t c) { return link[c] - tot[c] * ki / lg.two_m; };
            const double base = gain(own);
            std::size_t best = own;
            double best_gain = base;
            std::sort(touched.begin(), touched.end());
            for (auto c : touched) {
                if (c == own) continue;
                const double g = gain(c);
                if (g > best_gain || (g == best_gain && best != own && c < best)) {
                    best = c;
                    best_gain = g;
                }
            }
            if (best != own && (best_gain - base) / m > min_gain) {
                comm[i] = static_cast<int>(best);
                moved = true;
                any_move = true;
            } else {
                best = own;
            }
            tot[best] += ki;
            for (auto c : touched) link[c] = 0.0;
        }
    }
    return any_move;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<int>& comm, int count) {
    LevelGraph next;
    const auto c_count = static_cast<std::size_t>(count);
    next.loop.assign(c_count, 0.0);
    next.degree.assign(c_count, 0.0);
    next.two_m = lg.two_m;
    std::vector<std::map<std::size_t, double>> links(c_count);
    for (std::size_t i = 0; i < lg.size(); ++i) {
        const auto ci = static_cast<std::size_t>(comm[i]);
        next.loop[ci] += lg.loop[i];
        next.degree[ci] += lg.degree[i];
        for (const auto& [j, w] : lg.adjacency[i]) {
            const auto cj = static_cast<std::size_t>(comm[j]);
            if (ci == cj) {
                next.loop[ci] += w;  // visited from both endpoints: ordered-pair sum
            } else {
                links[ci][cj] += w;
            }
        }
    }
    next.adjacency.resize(c_count);
    for (std::size_t c = 0; c < c_count; ++c) {
        next.adjacency[c].assign(links[c].begin(), links[c].end());
    }
    return next;
}

}  // namespace

Partition louvain(const InteractionGraph& g, const LouvainOptions& options) {
    if (g.empty()) throw ValidationError("louvain requires a non-empty graph");
    util::Rng rng(options.seed);
    LevelGraph level = initial_level(g);
    std::vector<int> node_comm(g.node_count());
    std::iota(node_comm.begin(), node_comm.end(), 0);

    while (true) {
        std::vector<int> comm;
        if (!local_moving(level, comm, rng, options.min_gain)) break;
        const int count = renumber(comm);
        for (auto& c : node_comm) c = comm[static_cast<std::size_t>(c)];
        if (static_cast<std::size_t>(count) == level.size()) break;
        level = aggregate(level, comm, count);
    }

    Partition p;
    p.assignment = node_comm;
    p.community_count = renumber(p.assignment);
    p.modularity_q = modularity(g, p.assignment);

    std::vector<int> singletons(g.node_count());
    std::iota(singletons.begin(), singletons.end(), 0);
    const double singleton_q = modularity(g, singletons);
    if (p.modularity_q < singleton_q) {
        p.assignment = singletons;
        p.community_count = static_cast<int>(singletons.size());
        p.modularity_q = singleton_q;
    }
    return p;
}

Partition relabel_by_size(const Partition& p) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(p.community_count), 0);
    for (int c : p.assignment) ++sizes[static_cast<std::size_t>(c)];
    std::vector<int> ids(sizes.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
    });
    std::vector<int> rank(ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r) rank[static_cast<std::size_t>(ids[r])] = static_cast<int>(r);
    Partition out = p;
    for (auto& c : out.assignment) c = rank[static_cast<std::size_t>(c)];
    return out;
}

std::vector<RankedCommunity> top_k(const Partition& p, int k, const std::vector<std::size_t>& posts_per_node) {
    if (k < 1) throw ValidationError("top_k requires k >= 1");
    if (!posts_per_node.empty() && posts_per_node.size() != p.assignment.size()) {
        throw ValidationError("posts_per_node size does not match the partition");
    }
    std::vector<RankedCommunity> all(static_cast<std::size_t>(p.community_count));
    for (std::size_t c = 0; c < all.size(); ++c) all[c].id = static_cast<int>(c);
    for (std::size_t i = 0; i < p.assignment.size(); ++i) {
        auto& rc = all[static_cast<std::size_t>(p.assignment[i])];
        ++rc.size;
        if (!posts_per_node.empty()) rc.posts += posts_per_node[i];
    }
    std::stable_sort(all.begin(), all.end(), [](const RankedCommunity& a, const RankedCommunity& b) {
        return a.size != b.size ? a.size > b.size : a.id < b.id;
    });
    all.resize(std::min(all.size(), static_cast<std::size_t>(k)));
    return all;
}

std::vector<std::size_t> posts_per_node(const InteractionGraph& g, const corpus::PostStore& store) {
    std::vector<std::size_t> counts(g.node_count(), 0);
    for (const auto& post : store.posts()) {
        if (auto idx = g.index_of(post.author_id)) ++counts[*idx];
    }
    return counts;
}

// ---------------------------------------------------------------- grouping

json Grouping::to_json() const {
    json arr = json::array();
    for (const auto& g : groups) {
        arr.push_back({{"name", g.name},
                       {"member_community_ids", g.member_community_ids},
                       {"profile", g.profile ? json(*g.profile) : json(nullptr)}});
    }
    return json{{"groups", arr}, {"excluded", excluded}};
}

GroupingConfig parse_grouping_config(std::string_view json_text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("grouping config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("grouping config must be a JSON object");
    GroupingConfig out;
    for (const auto& [name, ids] : j.items()) {
        if (!ids.is_array()) throw ValidationError("grouping entry '" + name + "' must be a list of ids");
        std::vector<int> list;
        for (const auto& id : ids) {
            if (!id.is_number_integer()) throw ValidationError("grouping entry '" + name + "' has a non-integer id");
            list.push_back(id.get<int>());
        }
        out.emplace_back(name, std::move(list));
    }
    return out;
}

Grouping group_communities(const Partition& p, const GroupingConfig& mapping) {
    const auto& names = group_names();
    std::set<int> used;
    std::set<std::string> seen_names;
    Grouping out;
    for (const auto& [name, ids] : mapping) {
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw ValidationError("unknown group name: '" + name + "'");
        }
        if (!seen_names.insert(name).second) throw ValidationError("group listed twice: '" + name + "'");
        GroupedCommunity gc;
        gc.name = name;
        for (int id : ids) {
            if (id < 0 || id >= p.community_count) {
                throw ValidationError("grouping references unknown community id " + std::to_string(id));
            }
            if (!used.insert(id).second) {
                throw ValidationError("community id " + std::to_string(id) + " appears in more than one group");
            }
            gc.member_community_ids.push_back(id);
        }
        out.groups.push_back(std::move(gc));
    }
    for (int c = 0; c < p.community_count; ++c) {
        if (!used.count(c)) out.excluded.push_back(c);
    }
    return out;
}

std::vector<CommunityMixing> echo_chamber_stats(const InteractionGraph& g, const Partition& p) {
    if (p.assignment.size() != g.node_count()) throw ValidationError("partition does not match graph");
    std::vector<CommunityMixing> out(static_cast<std::size_t>(p.community_count));
    for (std::size_t c = 0; c < out.size(); ++c) out[c].community = static_cast<int>(c);
    for (const auto& e : g.edges()) {
        const auto cu = static_cast<std::size_t>(p.assignment[e.u]);
        const auto cv = static_cast<std::size_t>(p.assignment[e.v]);
        if (cu == cv) {
            out[cu].internal_weight += e.weight;
        } else {
            out[cu].external_weight += e.weight;
            out[cv].external_weight += e.weight;
        }
    }
    for (auto& m : out) {
        const auto total = m.internal_weight + m.external_weight;
        if (total > 0) m.internal_fraction = static_cast<double>(m.internal_weight) / static_cast<double>(total);
    }
    return out;
}

}  // namespace commprobe::graph
