#include "elastica/graph_embed.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "elastica/errors.hpp"
#include "elastica/market_sim.hpp"

namespace elastica {

RoomPriceGraph::RoomPriceGraph(int group, std::vector<RoomId> rooms, std::vector<PriceInterval> prices,
                               std::vector<Edge> edges)
    : group_(group), rooms_(std::move(rooms)), prices_(std::move(prices)), edges_(std::move(edges)) {
    for (std::size_t i = 1; i < prices_.size(); ++i) {
        if (!(prices_[i].lower >= prices_[i - 1].upper)) {
            throw DataError("RoomPriceGraph: price intervals must be disjoint and ascending");
        }
    }
    adjacency_.assign(node_count(), {});
    for (const auto& e : edges_) {
        if (e.room >= rooms_.size() || e.price >= prices_.size()) {
            throw DataError("RoomPriceGraph: edges must join a room node to a price node");
        }
        if (!(e.weight > 0.0)) throw DataError("RoomPriceGraph: edge weights must be positive");
        adjacency_[e.room].push_back({price_node(e.price), e.weight});
        adjacency_[price_node(e.price)].push_back({e.room, e.weight});
    }
}

std::optional<std::size_t> RoomPriceGraph::find_room_node(RoomId rid) const {
    auto it = std::find(rooms_.begin(), rooms_.end(), rid);
    if (it == rooms_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - rooms_.begin());
}

std::size_t RoomPriceGraph::room_node(RoomId rid) const {
    auto n = find_room_node(rid);
    if (!n) throw LookupError("room " + std::to_string(rid) + " is not in group " + std::to_string(group_) + "'s graph");
    return *n;
}

std::string RoomPriceGraph::node_label(std::size_t node) const {
    if (is_room_node(node)) return "r" + std::to_string(rooms_[node]);
    return "p" + format_double(prices_[node - rooms_.size()].lower);
}

std::string RoomPriceGraph::edges_csv() const {
    std::string out = "group,rid,price_lower,price_upper,weight\n";
    for (const auto& e : edges_) {
        out += std::to_string(group_) + "," + std::to_string(rooms_[e.room]) + "," +
               format_double(prices_[e.price].lower) + "," + format_double(prices_[e.price].upper) + "," +
               format_double(e.weight) + "\n";
    }
    return out;
}

PriceInterval price_bin(double price, double bin_width) {
    if (!(bin_width > 0.0)) throw UsageError("price_bin: bin_width must be positive");
    const double lower = std::floor(price / bin_width) * bin_width;
    return {lower, lower + bin_width};
}

std::map<int, RoomPriceGraph> build_graph(std::span<const ReservationRecord> records, const GroupAssignment& assignment,
                                          double bin_width) {
    if (!(bin_width > 0.0)) throw UsageError("build_graph: bin_width must be positive");
    // group -> (rid, bin) -> weight
    std::map<int, std::map<std::pair<RoomId, long>, double>> weights;
    for (const auto& rec : records) {
        const int g = assignment.group(rec.rid);
        if (rec.quantity <= 0.0) continue;
        const long bin = static_cast<long>(std::floor(rec.price / bin_width));
        weights[g][{rec.rid, bin}] += rec.quantity;
    }
    std::map<int, RoomPriceGraph> out;
    for (int g = 0; g < assignment.k(); ++g) {
        std::vector<RoomId> rooms = assignment.members(g);
        std::set<long> bins;
        for (const auto& [key, _] : weights[g]) bins.insert(key.second);
        std::vector<PriceInterval> prices;
        std::map<long, std::size_t> bin_index;
        for (long b : bins) {
            bin_index[b] = prices.size();
            prices.push_back({static_cast<double>(b) * bin_width, static_cast<double>(b + 1) * bin_width});
        }
        std::vector<RoomPriceGraph::Edge> edges;
        for (const auto& [key, w] : weights[g]) {
            const auto room = static_cast<std::size_t>(std::find(rooms.begin(), rooms.end(), key.first) - rooms.begin());
            edges.push_back({room, bin_index[key.second], w});
        }
        out.emplace(g, RoomPriceGraph(g, std::move(rooms), std::move(prices), std::move(edges)));
    }
    return out;
}

std::vector<Walk> metapath_walks(const RoomPriceGraph& graph, Metapath metapath, int walk_length, int walks_per_node,
                                 std::uint64_t seed) {
    if (walk_length < 2) throw UsageError("metapath_walks: walk_length must be >= 2");
    if (walks_per_node < 1) throw UsageError("metapath_walks: walks_per_node must be >= 1");
    std::vector<std::size_t> starts;
    for (std::size_t n = 0; n < graph.node_count(); ++n) {
        if (graph.is_room_node(n) == (metapath == Metapath::room_price_room)) starts.push_back(n);
    }
    const auto per = static_cast<std::size_t>(walks_per_node);
    std::vector<Walk> walks(starts.size() * per);
    const long n_starts = static_cast<long>(starts.size());
    const std::uint64_t path_salt = metapath == Metapath::room_price_room ? 0 : 1;

#pragma omp parallel for schedule(dynamic)
    for (long si = 0; si < n_starts; ++si) {
        const auto s = static_cast<std::size_t>(si);
        for (std::size_t k = 0; k < per; ++k) {
            std::mt19937_64 rng(derive_seed(seed, (starts[s] * per + k) * 2 + path_salt));
            Walk walk{starts[s]};
            while (walk.size() < static_cast<std::size_t>(walk_length)) {
                const auto& nbrs = graph.neighbors(walk.back());
                if (nbrs.empty()) break;
                double total = 0.0;
                for (const auto& nb : nbrs) total += nb.weight;
                double r = std::uniform_real_distribution<double>(0.0, total)(rng);
                std::size_t next = nbrs.back().node;
                for (const auto& nb : nbrs) {
                    r -= nb.weight;
                    if (r < 0.0) {
                        next = nb.node;
                        break;
                    }
                }
                walk.push_back(next);
            }
            walks[s * per + k] = std::move(walk);
        }
    }
    return walks;
}

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

EmbeddingTable train_skipgram(std::span<const Walk> walks, std::size_t node_count, const SkipGramParams& p) {
    if (p.dim < 1 || p.window < 1 || p.negatives < 1) {
        throw UsageError("train_skipgram: dim, window and negatives must be >= 1");
    }
    if (p.epochs < 0) throw UsageError("train_skipgram: epochs must be >= 0");
    if (walks.empty()) throw UsageError("train_skipgram: no walks to train on");

    const auto dim = static_cast<std::size_t>(p.dim);
    std::mt19937_64 rng(derive_seed(p.seed, 5));
    EmbeddingTable table;
    table.dimension = p.dim;
    table.vectors.assign(node_count, std::vector<double>(dim));
    std::uniform_real_distribution<double> init(-0.5 / p.dim, 0.5 / p.dim);
    for (auto& v : table.vectors) {
        for (auto& x : v) x = init(rng);
    }
    if (p.epochs == 0) return table;

    std::vector<std::vector<double>> context(node_count, std::vector<double>(dim, 0.0));

    // Unigram^(3/4) noise distribution over walk occurrences.
    std::vector<double> freq(node_count, 0.0);
    std::size_t pairs_per_epoch = 0;
    for (const auto& w : walks) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            freq[w[i]] += 1.0;
            const std::size_t lo = i >= static_cast<std::size_t>(p.window) ? i - p.window : 0;
            const std::size_t hi = std::min(w.size() - 1, i + p.window);
            pairs_per_epoch += hi - lo;
        }
    }
    std::vector<double> cdf(node_count);
    double acc = 0.0;
    for (std::size_t i = 0; i < node_count; ++i) {
        acc += std::pow(freq[i], 0.75);
        cdf[i] = acc;
    }
    auto sample_negative = [&](std::mt19937_64& g) {
        const double r = std::uniform_real_distribution<double>(0.0, acc)(g);
        auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
        return std::min(static_cast<std::size_t>(it - cdf.begin()), node_count - 1);
    };

    const double total_steps = static_cast<double>(pairs_per_epoch) * p.epochs;
    double step = 0.0;
    std::vector<double> grad_center(dim);
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::size_t pair_count = 0;
        for (const auto& w : walks) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                const std::size_t lo = i >= static_cast<std::size_t>(p.window) ? i - p.window : 0;
                const std::size_t hi = std::min(w.size() - 1, i + p.window);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const double lr = p.lr * std::max(1e-4, 1.0 - step / total_steps);
                    step += 1.0;
                    auto& center = table.vectors[w[i]];
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);
                    auto update = [&](std::size_t target, double label) {
                        auto& ctx = context[target];
                        double dot = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) dot += center[d] * ctx[d];
                        loss_sum -= label > 0.5 ? log_sigmoid(dot) : log_sigmoid(-dot);
                        const double g = (label - sigmoid(dot)) * lr;
                        for (std::size_t d = 0; d < dim; ++d) {
                            grad_center[d] += g * ctx[d];
                            ctx[d] += g * center[d];
                        }
                    };
                    update(w[j], 1.0);
                    for (int k = 0; k < p.negatives; ++k) {
                        const std::size_t neg = sample_negative(rng);
                        if (neg == w[j]) continue;
                        update(neg, 0.0);
                    }
                    for (std::size_t d = 0; d < dim; ++d) center[d] += grad_center[d];
                    ++pair_count;
                }
            }
        }
        table.epoch_loss.push_back(pair_count ? loss_sum / static_cast<double>(pair_count) : 0.0);
    }
    for (const auto& v : table.vectors) {
        for (double x : v) {
            if (!std::isfinite(x)) throw NumericError("train_skipgram: non-finite embedding entry");
        }
    }
    return table;
}

std::vector<double> price_vector(const EmbeddingTable& table, const RoomPriceGraph& graph, double price) {
    const auto& prices = graph.prices();
    if (prices.empty()) {
        throw LookupError("price_vector: group " + std::to_string(graph.group()) + " has no price nodes");
    }
    auto vec = [&](std::size_t pi) -> const std::vector<double>& { return table.vectors.at(graph.price_node(pi)); };
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (prices[i].contains(price)) return vec(i);
    }
    if (prices.size() == 1) return vec(0);
    // Rank by midpoint distance; stable sort over ascending intervals keeps the
    // lower midpoint first on ties.
    std::vector<std::size_t> order(prices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(prices[a].midpoint() - price) < std::abs(prices[b].midpoint() - price);
    });
    const auto& a = vec(order[0]);
    const auto& b = vec(order[1]);
    std::vector<double> out(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) out[d] = 0.5 * (a[d] + b[d]);
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

std::map<int, GroupEmbedding> embed_groups(std::span<const ReservationRecord> window, const GroupAssignment& assignment,
                                           const EmbedParams& params) {
    auto graphs = build_graph(window, assignment, params.bin_width);
    std::map<int, GroupEmbedding> out;
    for (auto& [g, graph] : graphs) {
        const std::uint64_t gseed = derive_seed(params.skipgram.seed, 100 + static_cast<std::uint64_t>(g));
        auto walks = metapath_walks(graph, Metapath::room_price_room, params.walk_length, params.walks_per_node, gseed);
        auto more = metapath_walks(graph, Metapath::price_room_price, params.walk_length, params.walks_per_node, gseed);
        walks.insert(walks.end(), more.begin(), more.end());
        SkipGramParams sg = params.skipgram;
        sg.seed = gseed;
        EmbeddingTable table = train_skipgram(walks, graph.node_count(), sg);
        out.emplace(g, GroupEmbedding{std::move(graph), std::move(table)});
    }
    return out;
}

nlohmann::json embeddings_to_json(const std::map<int, GroupEmbedding>& groups, double bin_width) {
    using nlohmann::json;
    json vectors = json::object();
    json graphs = json::object();
    int dim = 0;
    for (const auto& [g, ge] : groups) {
        dim = ge.table.dimension;
        const std::string prefix = "g" + std::to_string(g) + "/";
        for (std::size_t n = 0; n < ge.graph.node_count(); ++n) {
            vectors[prefix + ge.graph.node_label(n)] = ge.table.vectors[n];
        }
        json prices = json::array();
        for (const auto& p : ge.graph.prices()) prices.push_back({p.lower, p.upper});
        json edges = json::array();
        for (const auto& e : ge.graph.edges()) edges.push_back({e.room, e.price, e.weight});
        graphs[std::to_string(g)] = {{"rooms", ge.graph.rooms()}, {"prices", prices}, {"edges", edges}};
    }
    return {{"version", 1}, {"bin_width", bin_width}, {"dimension", dim}, {"graphs", graphs}, {"vectors", vectors}};
}

std::map<int, GroupEmbedding> embeddings_from_json(const nlohmann::json& j) {
    std::map<int, GroupEmbedding> out;
    try {
        const int dim = j.at("dimension").get<int>();
        const auto& vectors = j.at("vectors");
        for (const auto& [key, gj] : j.at("graphs").items()) {
            const int g = std::stoi(key);
            std::vector<PriceInterval> prices;
            for (const auto& p : gj.at("prices")) prices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            std::vector<RoomPriceGraph::Edge> edges;
            for (const auto& e : gj.at("edges")) {
                edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
            }
            RoomPriceGraph graph(g, gj.at("rooms").get<std::vector<RoomId>>(), std::move(prices), std::move(edges));
            EmbeddingTable table;
            table.dimension = dim;
            const std::string prefix = "g" + key + "/";
            for (std::size_t n = 0; n < graph.node_count(); ++n) {
                table.vectors.push_back(vectors.at(prefix + graph.node_label(n)).get<std::vector<double>>());
            }
            out.emplace(g, GroupEmbedding{std::move(graph), std::move(table)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("embeddings JSON: ") + e.what());
    }
    return out;
}

}  // namespace elastica
