#include "elastica/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "elastica/errors.hpp"
#include "elastica/market_sim.hpp"

namespace elastica {

int GroupAssignment::group(RoomId rid) const {
    auto it = group_of.find(rid);
    if (it == group_of.end()) throw DataError("rid " + std::to_string(rid) + " has no group assignment");
    return it->second;
}

std::vector<RoomId> GroupAssignment::members(int g) const {
    std::vector<RoomId> out;
    for (const auto& [rid, grp] : group_of) {
        if (grp == g) out.push_back(rid);
    }
    return out;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::vector<std::vector<double>> seed_centroids(std::span<const std::vector<double>> points, int k,
                                                std::mt19937_64& rng) {
    const std::size_t n = points.size();
    std::vector<std::vector<double>> centers;
    std::vector<bool> chosen(n, false);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    centers.push_back(points[first]);
    chosen[first] = true;
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
            if (!chosen[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                pick = i;
                r -= d2[i];
                if (r < 0.0) break;
            }
        } else {
            std::vector<std::size_t> remaining;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) remaining.push_back(i);
            }
            pick = remaining[std::uniform_int_distribution<std::size_t>(0, remaining.size() - 1)(rng)];
        }
        chosen[pick] = true;
        centers.push_back(points[pick]);
    }
    return centers;
}

}  // namespace

double within_cluster_ss(std::span<const std::vector<double>> points, std::span<const int> labels,
                         std::span<const std::vector<double>> centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        s += sq_dist(points[i], centroids[static_cast<std::size_t>(labels[i])]);
    }
    return s;
}

KMeansResult kmeans(std::span<const std::vector<double>> points, int k, std::uint64_t seed, int max_iterations) {
    const std::size_t n = points.size();
    if (k < 1) throw UsageError("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > n) {
        throw UsageError("kmeans: k=" + std::to_string(k) + " exceeds the number of points (" + std::to_string(n) + ")");
    }
    const std::size_t dim = points[0].size();
    std::mt19937_64 rng(derive_seed(seed, 77));

    KMeansResult res;
    res.centroids = seed_centroids(points, k, rng);
    res.labels.assign(n, -1);

    for (int iter = 0; iter < max_iterations; ++iter) {
        std::vector<int> next(n);
        const long ln = static_cast<long>(n);
#pragma omp parallel for
        for (long li = 0; li < ln; ++li) {
            const auto i = static_cast<std::size_t>(li);
            int best = res.labels[i];
            double best_d = best >= 0 ? sq_dist(points[i], res.centroids[static_cast<std::size_t>(best)])
                                      : std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(points[i], res.centroids[static_cast<std::size_t>(c)]);
                // Keep the current label on ties so assignments cannot oscillate.
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            next[i] = best;
        }
        const bool changed = next != res.labels;
        res.labels = std::move(next);

        // Empty-cluster repair: move the point farthest from its centroid.
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int l : res.labels) ++sizes[static_cast<std::size_t>(l)];
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto l = static_cast<std::size_t>(res.labels[i]);
                if (sizes[l] < 2) continue;
                const double d = sq_dist(points[i], res.centroids[l]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) break;
            --sizes[static_cast<std::size_t>(res.labels[far])];
            res.labels[far] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
        }

        // Update step, accumulated in point order for reproducibility.
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[static_cast<std::size_t>(res.labels[i])];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
        }
        for (int c = 0; c < k; ++c) {
            const auto cs = static_cast<std::size_t>(c);
            if (sizes[cs] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) res.centroids[cs][d] = sums[cs][d] / sizes[cs];
        }
        res.objective_history.push_back(within_cluster_ss(points, res.labels, res.centroids));
        res.iterations = iter + 1;
        if (!changed && iter > 0) break;
    }
    return res;
}

std::vector<std::vector<double>> encode_clustering_features(std::span<const RoomType> rooms) {
    // location, district, star
    const int fields[] = {0, 1, 2};
    std::vector<int> width;
    for (int f : fields) {
        int mx = 0;
        for (const auto& r : rooms) mx = std::max(mx, static_code(r.features, f));
        width.push_back(mx + 1);
    }
    std::vector<std::vector<double>> out;
    for (const auto& r : rooms) {
        std::vector<double> v;
        for (std::size_t i = 0; i < std::size(fields); ++i) {
            std::vector<double> block(static_cast<std::size_t>(width[i]), 0.0);
            block[static_cast<std::size_t>(static_code(r.features, fields[i]))] = 1.0;
            v.insert(v.end(), block.begin(), block.end());
        }
        out.push_back(std::move(v));
    }
    return out;
}

int distinct_districts(std::span<const RoomType> rooms) {
    std::set<int> d;
    for (const auto& r : rooms) d.insert(r.features.district);
    return static_cast<int>(d.size());
}

GroupAssignment kmeans_group(std::span<const RoomType> rooms_in, int k, std::uint64_t seed) {
    if (rooms_in.empty()) throw UsageError("kmeans_group: no rooms");
    std::vector<RoomType> rooms(rooms_in.begin(), rooms_in.end());
    std::sort(rooms.begin(), rooms.end(), [](const RoomType& a, const RoomType& b) { return a.rid < b.rid; });
    if (k <= 0) k = distinct_districts(rooms);
    const auto points = encode_clustering_features(rooms);
    auto km = kmeans(points, k, seed);

    GroupAssignment out;
    out.centroids = std::move(km.centroids);
    out.objective_history = std::move(km.objective_history);
    out.iterations = km.iterations;
    out.group_size.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        out.group_of[rooms[i].rid] = km.labels[i];
        ++out.group_size[static_cast<std::size_t>(km.labels[i])];
    }
    return out;
}

std::vector<GroupRecord> aggregate_group(std::span<const ReservationRecord> records, const GroupAssignment& assignment,
                                         std::span<const RoomType> rooms, double bin_width) {
    if (!(bin_width > 0.0)) throw UsageError("aggregate_group: bin_width must be positive");
    std::map<RoomId, double> q_avg;
    for (const auto& r : rooms) q_avg[r.rid] = r.avg_sales;

    struct Acc {
        double quantity = 0.0;
        double weighted_price = 0.0;
        double price_sum = 0.0;
        double q_avg = 0.0;
        int count = 0;
        std::set<RoomId> members;
    };
    std::map<std::tuple<int, int, long>, Acc> acc;
    for (const auto& rec : records) {
        auto it = assignment.group_of.find(rec.rid);
        if (it == assignment.group_of.end()) {
            throw DataError("aggregate_group: rid " + std::to_string(rec.rid) + " is not assigned to a group");
        }
        const long bin = static_cast<long>(std::floor(rec.price / bin_width));
        auto& a = acc[{it->second, rec.night.days, bin}];
        a.quantity += rec.quantity;
        a.weighted_price += rec.quantity * rec.price;
        a.price_sum += rec.price;
        ++a.count;
        if (a.members.insert(rec.rid).second) {
            auto q = q_avg.find(rec.rid);
            a.q_avg += q == q_avg.end() ? 0.0 : q->second;
        }
    }
    std::vector<GroupRecord> out;
    out.reserve(acc.size());
    for (const auto& [key, a] : acc) {
        GroupRecord g;
        g.group = std::get<0>(key);
        g.night = Night{std::get<1>(key)};
        g.quantity = a.quantity;
        g.price = a.quantity > 0.0 ? a.weighted_price / a.quantity : a.price_sum / a.count;
        g.q_avg = a.q_avg;
        g.members = static_cast<int>(a.members.size());
        out.push_back(g);
    }
    return out;
}

std::string assignment_csv(const GroupAssignment& assignment) {
    std::string out = "rid,group_id\n";
    for (const auto& [rid, g] : assignment.group_of) out += std::to_string(rid) + "," + std::to_string(g) + "\n";
    return out;
}

GroupAssignment assignment_from_csv(const std::string& text) {
    GroupAssignment out;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    int max_group = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("assignment CSV: malformed line '" + line + "'");
        const int rid = std::stoi(line.substr(0, comma));
        const int g = std::stoi(line.substr(comma + 1));
        out.group_of[rid] = g;
        max_group = std::max(max_group, g);
    }
    out.group_size.assign(static_cast<std::size_t>(max_group + 1), 0);
    for (const auto& [_, g] : out.group_of) ++out.group_size[static_cast<std::size_t>(g)];
    out.centroids.assign(static_cast<std::size_t>(max_group + 1), {});
    return out;
}

}  // namespace elastica
