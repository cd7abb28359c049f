#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "commprobe/corpus.hpp"

namespace commprobe::graph {

struct Edge {
    std::size_t u;  // u < v
    std::size_t v;
    std::int64_t weight;
};

enum class EdgeWeighting { EventCount, Binary };

/// Undirected weighted user graph. Nodes are kept in sorted order so node
/// indices are stable across runs.
class InteractionGraph {
public:
    InteractionGraph() = default;

    /// Accumulates (a, b, w) triples into undirected edges. Self-pairs are dropped.
    static InteractionGraph from_pairs(const std::vector<std::tuple<std::string, std::string, std::int64_t>>& pairs,
                                       EdgeWeighting weighting = EdgeWeighting::EventCount);

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::int64_t total_weight() const { return total_weight_; }
    bool empty() const { return nodes_.empty(); }

    std::optional<std::size_t> index_of(std::string_view node) const;
    std::int64_t weight(std::string_view a, std::string_view b) const;
    /// Weighted degree of each node.
    std::vector<double> degrees() const;

    /// `u v weight` per line, sorted by (u, v).
    std::string to_edge_list() const;
    static InteractionGraph from_edge_list(std::string_view text);
    nlohmann::json metadata() const;

private:
    std::vector<std::string> nodes_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::vector<Edge> edges_;
    std::int64_t total_weight_ = 0;
};

/// Retweet graph: one undirected edge per retweeting pair, weighted by event count.
InteractionGraph build_graph(const corpus::PostStore& store, EdgeWeighting weighting = EdgeWeighting::EventCount);

/// Community assignment indexed like graph.nodes().
struct Partition {
    std::vector<int> assignment;
    int community_count = 0;
    double modularity_q = 0.0;

    std::map<std::string, int> as_map(const InteractionGraph& g) const;
    std::vector<std::vector<std::size_t>> members() const;
    nlohmann::json to_json(const InteractionGraph& g) const;
};

using Assignment = std::map<std::string, int, std::less<>>;

/// Newman-Girvan weighted modularity. Throws on an empty graph or a node
/// missing from the assignment.
double modularity(const InteractionGraph& g, const Assignment& assignment);
double modularity(const InteractionGraph& g, const std::vector<int>& assignment);

struct LouvainOptions {
    std::uint64_t seed = 0;
    double min_gain = 1e-9;
};

/// Two-phase Louvain: local moving then aggregation, until a level makes no move.
Partition louvain(const InteractionGraph& g, const LouvainOptions& options);
inline Partition louvain(const InteractionGraph& g, std::uint64_t seed) { return louvain(g, LouvainOptions{seed}); }

/// Renumbers communities by size descending (ties: smaller original id first).
Partition relabel_by_size(const Partition& p);

struct RankedCommunity {
    int id = 0;
    std::size_t size = 0;
    std::size_t posts = 0;
};

/// Largest min(k, C) communities. `posts_per_node` is indexed like graph nodes
/// and may be empty, in which case post counts are zero.
std::vector<RankedCommunity> top_k(const Partition& p, int k, const std::vector<std::size_t>& posts_per_node = {});

/// Post counts per graph node, counting every stored post authored by the node.
std::vector<std::size_t> posts_per_node(const InteractionGraph& g, const corpus::PostStore& store);

inline const std::vector<std::string>& group_names() {
    static const std::vector<std::string> kNames{"Pro Eating Disorder", "Keto & Diet",
                                                 "Body Image", "Anti Eating Disorder",
                                                 "Healthy Lifestyle & Weight Loss", "Weight Loss Drugs"};
    return kNames;
}

struct GroupedCommunity {
    std::string name;
    std::vector<int> member_community_ids;
    std::optional<std::string> profile;
};

struct Grouping {
    std::vector<GroupedCommunity> groups;
    std::vector<int> excluded;

    nlohmann::json to_json() const;
};

/// Ordered map group name -> community ids, as read from the grouping config.
using GroupingConfig = std::vector<std::pair<std::string, std::vector<int>>>;
GroupingConfig parse_grouping_config(std::string_view json_text);

Grouping group_communities(const Partition& p, const GroupingConfig& mapping);

struct CommunityMixing {
    int community = 0;
    std::int64_t internal_weight = 0;
    std::int64_t external_weight = 0;
    std::optional<double> internal_fraction;
};

std::vector<CommunityMixing> echo_chamber_stats(const InteractionGraph& g, const Partition& p);

}  // namespace commprobe::graph
