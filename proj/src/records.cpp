#include "elastica/records.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "elastica/errors.hpp"

namespace elastica {

using nlohmann::json;

int static_code(const StaticFeatures& f, int index) {
    switch (index) {
        case 0: return f.location;
        case 1: return f.district;
        case 2: return f.star;
        case 3: return f.size_band;
        case 4: return f.decoration_band;
        case 5: return f.review_band;
        default: throw UsageError("static feature index out of range: " + std::to_string(index));
    }
}

json to_json(const RoomType& r) {
    json feats = json::object();
    for (int i = 0; i < kStaticFeatureCount; ++i) feats[kStaticFeatureNames[i]] = static_code(r.features, i);
    return {{"rid", r.rid},
            {"shid", r.shid},
            {"inventory", r.inventory},
            {"avg_sales", r.avg_sales},
            {"static_features", feats}};
}

json to_json(const ReservationRecord& r) {
    return {{"rid", r.rid}, {"night", format_night(r.night)}, {"price", r.price}, {"quantity", r.quantity}};
}

json to_json(const BehaviorSeries& r) {
    json j = {{"rid", r.rid},
              {"night", format_night(r.night)},
              {"clicks", r.clicks},
              {"searches", r.searches},
              {"sale_price", r.sale_price},
              {"booking_price", r.booking_price},
              {"occupancy", r.occupancy}};
    j["competitor_price"] = r.competitor_price ? json(*r.competitor_price) : json(nullptr);
    return j;
}

RoomType room_from_json(const json& j) {
    try {
        RoomType r;
        r.rid = j.at("rid").get<int>();
        r.shid = j.at("shid").get<int>();
        r.inventory = j.at("inventory").get<int>();
        r.avg_sales = j.at("avg_sales").get<double>();
        const auto& f = j.at("static_features");
        r.features.location = f.value("location", 0);
        r.features.district = f.value("district", 0);
        r.features.star = f.value("star", 0);
        r.features.size_band = f.value("size_band", 0);
        r.features.decoration_band = f.value("decoration_band", 0);
        r.features.review_band = f.value("review_band", 0);
        if (r.inventory < 1) throw DataError("room " + std::to_string(r.rid) + ": inventory must be >= 1");
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed room record: ") + e.what());
    }
}

ReservationRecord reservation_from_json(const json& j) {
    try {
        ReservationRecord r;
        r.rid = j.at("rid").get<int>();
        r.night = parse_night(j.at("night").get<std::string>());
        r.price = j.at("price").get<double>();
        r.quantity = j.at("quantity").get<double>();
        if (!(r.price > 0.0)) throw DataError("reservation for rid " + std::to_string(r.rid) + ": non-positive price");
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed reservation record: ") + e.what());
    }
}

BehaviorSeries behavior_from_json(const json& j) {
    try {
        BehaviorSeries r;
        r.rid = j.at("rid").get<int>();
        r.night = parse_night(j.at("night").get<std::string>());
        r.clicks = j.at("clicks").get<double>();
        r.searches = j.at("searches").get<double>();
        r.sale_price = j.at("sale_price").get<double>();
        r.booking_price = j.at("booking_price").get<double>();
        r.occupancy = j.at("occupancy").get<double>();
        if (j.contains("competitor_price") && !j["competitor_price"].is_null()) {
            r.competitor_price = j["competitor_price"].get<double>();
        }
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed behavior record: ") + e.what());
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string to_jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::vector<json> parse_jsonl(const std::string& text, const std::string& origin) {
    std::vector<json> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<RoomType> read_rooms(const std::string& path) {
    std::vector<RoomType> out;
    for (const auto& j : parse_jsonl(read_file(path), path)) out.push_back(room_from_json(j));
    return out;
}

std::vector<ReservationRecord> read_reservations(const std::string& path) {
    std::vector<ReservationRecord> out;
    for (const auto& j : parse_jsonl(read_file(path), path)) out.push_back(reservation_from_json(j));
    return out;
}

std::vector<BehaviorSeries> read_behavior(const std::string& path) {
    std::vector<BehaviorSeries> out;
    for (const auto& j : parse_jsonl(read_file(path), path)) out.push_back(behavior_from_json(j));
    return out;
}

std::string rooms_csv(const std::vector<RoomType>& rooms) {
    std::string out = "rid,shid,inventory,avg_sales";
    for (const char* name : kStaticFeatureNames) out += std::string(",") + name;
    out += "\n";
    for (const auto& r : rooms) {
        out += std::to_string(r.rid) + "," + std::to_string(r.shid) + "," + std::to_string(r.inventory) + "," +
               format_double(r.avg_sales);
        for (int i = 0; i < kStaticFeatureCount; ++i) out += "," + std::to_string(static_code(r.features, i));
        out += "\n";
    }
    return out;
}

std::string reservations_csv(const std::vector<ReservationRecord>& rows) {
    std::string out = "rid,night,price,quantity\n";
    for (const auto& r : rows) {
        out += std::to_string(r.rid) + "," + format_night(r.night) + "," + format_double(r.price) + "," +
               format_double(r.quantity) + "\n";
    }
    return out;
}

std::string behavior_csv(const std::vector<BehaviorSeries>& rows) {
    std::string out = "rid,night,clicks,searches,sale_price,booking_price,occupancy,competitor_price\n";
    for (const auto& r : rows) {
        out += std::to_string(r.rid) + "," + format_night(r.night) + "," + format_double(r.clicks) + "," +
               format_double(r.searches) + "," + format_double(r.sale_price) + "," +
               format_double(r.booking_price) + "," + format_double(r.occupancy) + "," +
               (r.competitor_price ? format_double(*r.competitor_price) : std::string()) + "\n";
    }
    return out;
}

}  // namespace elastica
