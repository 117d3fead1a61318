#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastica/grouping.hpp"
#include "elastica/records.hpp"

namespace elastica {

struct PriceInterval {
    double lower = 0.0;
    double upper = 0.0;

    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(double p) const { return p >= lower && p < upper; }
};

// Weighted bipartite graph of the rooms in one competing group and the price
// intervals they were booked at. Node ids: rooms are [0, R), prices [R, R+P).
class RoomPriceGraph {
public:
    struct Edge {
        std::size_t room = 0;   // index into rooms()
        std::size_t price = 0;  // index into prices()
        double weight = 0.0;
    };

    RoomPriceGraph() = default;
    RoomPriceGraph(int group, std::vector<RoomId> rooms, std::vector<PriceInterval> prices, std::vector<Edge> edges);

    int group() const { return group_; }
    const std::vector<RoomId>& rooms() const { return rooms_; }
    const std::vector<PriceInterval>& prices() const { return prices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool empty() const { return edges_.empty(); }

    std::size_t node_count() const { return rooms_.size() + prices_.size(); }
    bool is_room_node(std::size_t node) const { return node < rooms_.size(); }
    std::size_t room_node(RoomId rid) const;  // throws LookupError
    std::optional<std::size_t> find_room_node(RoomId rid) const;
    std::size_t price_node(std::size_t price_index) const { return rooms_.size() + price_index; }
    std::string node_label(std::size_t node) const;

    struct Neighbor {
        std::size_t node;
        double weight;
    };
    const std::vector<Neighbor>& neighbors(std::size_t node) const { return adjacency_[node]; }

    std::string edges_csv() const;

private:
    int group_ = 0;
    std::vector<RoomId> rooms_;
    std::vector<PriceInterval> prices_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Neighbor>> adjacency_;
};

// Interval of width `bin_width` holding `price`: [floor(p/w)*w, +w).
PriceInterval price_bin(double price, double bin_width);

// One graph per group over the supplied reservation window. Every member room
// of a group becomes a node, booked or not.
std::map<int, RoomPriceGraph> build_graph(std::span<const ReservationRecord> records, const GroupAssignment& assignment,
                                          double bin_width);

enum class Metapath { room_price_room, price_room_price };

using Walk = std::vector<std::size_t>;

std::vector<Walk> metapath_walks(const RoomPriceGraph& graph, Metapath metapath, int walk_length, int walks_per_node,
                                 std::uint64_t seed);

struct SkipGramParams {
    int dim = 32;
    int window = 2;
    int negatives = 5;
    int epochs = 10;
    double lr = 0.025;
    std::uint64_t seed = 1;
};

struct EmbeddingTable {
    int dimension = 0;
    std::vector<std::vector<double>> vectors;  // indexed by node id
    std::vector<double> epoch_loss;
};

EmbeddingTable train_skipgram(std::span<const Walk> walks, std::size_t node_count, const SkipGramParams& params);

// Exact bin hit returns that bin's vector, otherwise the mean of the two bins
// with the nearest midpoints (lower midpoint wins ties).
std::vector<double> price_vector(const EmbeddingTable& table, const RoomPriceGraph& graph, double price);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct GroupEmbedding {
    RoomPriceGraph graph;
    EmbeddingTable table;
};

struct EmbedParams {
    double bin_width = 50.0;
    int walk_length = 20;
    int walks_per_node = 10;
    SkipGramParams skipgram;
};

// Graph construction, both metapaths, and skip-gram, for every group.
std::map<int, GroupEmbedding> embed_groups(std::span<const ReservationRecord> window, const GroupAssignment& assignment,
                                           const EmbedParams& params);

// {"g<group>/r<rid>": [...], "g<group>/p<lower>": [...]} plus graph metadata.
nlohmann::json embeddings_to_json(const std::map<int, GroupEmbedding>& groups, double bin_width);
std::map<int, GroupEmbedding> embeddings_from_json(const nlohmann::json& j);

}  // namespace elastica
