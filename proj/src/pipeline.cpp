#include "elastica/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "elastica/errors.hpp"

namespace elastica {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "seed", "n_hotels", "rooms_per_hotel", "n_groups", "horizon_days", "train_days", "start", "p_min", "p_max",
        "seasonality_amplitude", "noise", "integer_counts", "k_benchmark", "avg_sales_min", "avg_sales_max",
        "inventory_min", "inventory_max", "elasticity_spread", "natural_growth_max", "observe_fraction",
        "click_rate", "search_rate", "competitor_noise", "competitor_missing", "fixed_price",
        "grouping.k", "grouping.seed", "grouping.bin_width",
        "embed.bin_width", "embed.walk_length", "embed.walks_per_node", "embed.dim", "embed.window",
        "embed.negatives", "embed.epochs", "embed.lr", "embed.seed",
        "features.window_days", "features.static_vocab", "features.click_scale", "features.search_scale",
        "model.variant", "model.trunk", "model.head_hidden", "model.embed_dim", "model.fm_factors",
        "model.conv_widths", "model.conv_filters", "model.attention_dim", "model.recurrent", "model.gru_hidden",
        "model.gru_layers", "model.wiring",
        "train.alpha", "train.beta", "train.theta", "train.batch", "train.lr", "train.dropout", "train.epochs",
        "train.seed", "train.lambda", "train.lambda_weighting"};
    return keys;
}

std::vector<std::size_t> sizes(const std::vector<double>& v, const std::string& key) {
    std::vector<std::size_t> out;
    for (double d : v) {
        if (!(d >= 1.0) || d != static_cast<double>(static_cast<std::size_t>(d))) {
            throw UsageError("config field '" + key + "' must hold positive integers");
        }
        out.push_back(static_cast<std::size_t>(d));
    }
    return out;
}

std::vector<double> as_doubles(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::size_t get_size(const Config& cfg, const std::string& key, std::size_t fallback) {
    const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw UsageError("config field '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
}

}  // namespace

PipelineConfig PipelineConfig::from_config(const Config& cfg) {
    for (const auto& [key, _] : cfg.values()) {
        if (!known_keys().count(key)) throw UsageError("unknown config field '" + key + "'");
    }
    PipelineConfig c;
    c.scenario = Scenario::from_config(cfg);
    const auto seed = static_cast<std::int64_t>(c.scenario.seed);

    c.groups = static_cast<int>(cfg.get_int("grouping.k", c.groups));
    c.grouping_seed = static_cast<std::uint64_t>(cfg.get_int("grouping.seed", seed));
    c.group_bin_width = cfg.get_double("grouping.bin_width", c.group_bin_width);
    if (!(c.group_bin_width > 0.0)) throw UsageError("config field 'grouping.bin_width' must be positive");

    auto& e = c.embed;
    e.bin_width = cfg.get_double("embed.bin_width", e.bin_width);
    e.walk_length = static_cast<int>(cfg.get_int("embed.walk_length", e.walk_length));
    e.walks_per_node = static_cast<int>(cfg.get_int("embed.walks_per_node", e.walks_per_node));
    e.skipgram.dim = static_cast<int>(cfg.get_int("embed.dim", e.skipgram.dim));
    e.skipgram.window = static_cast<int>(cfg.get_int("embed.window", e.skipgram.window));
    e.skipgram.negatives = static_cast<int>(cfg.get_int("embed.negatives", e.skipgram.negatives));
    e.skipgram.epochs = static_cast<int>(cfg.get_int("embed.epochs", e.skipgram.epochs));
    e.skipgram.lr = cfg.get_double("embed.lr", e.skipgram.lr);
    e.skipgram.seed = static_cast<std::uint64_t>(cfg.get_int("embed.seed", seed));

    auto& f = c.features;
    f.window_days = static_cast<int>(cfg.get_int("features.window_days", f.window_days));
    f.static_vocab = static_cast<int>(cfg.get_int("features.static_vocab", f.static_vocab));
    f.click_scale = cfg.get_double("features.click_scale", f.click_scale);
    f.search_scale = cfg.get_double("features.search_scale", f.search_scale);
    f.embedding_dim = e.skipgram.dim;

    auto& m = c.model;
    auto& t = c.train;
    const std::string variant = cfg.get_string("model.variant", "gated");
    if (variant == "recurrent") {
        m.wiring = Wiring::concatenated;
        m.recurrent = true;
        m.gru_layers = 2;
        t.lambda_weighting = true;
    } else if (variant != "gated") {
        throw UsageError("config field 'model.variant' must be \"gated\" or \"recurrent\"");
    }
    m.trunk = sizes(cfg.get_doubles("model.trunk", as_doubles(m.trunk)), "model.trunk");
    m.head_hidden = get_size(cfg, "model.head_hidden", m.head_hidden);
    m.embed_dim = get_size(cfg, "model.embed_dim", m.embed_dim);
    m.fm_factors = get_size(cfg, "model.fm_factors", m.fm_factors);
    m.conv_widths = sizes(cfg.get_doubles("model.conv_widths", as_doubles(m.conv_widths)), "model.conv_widths");
    m.conv_filters = get_size(cfg, "model.conv_filters", m.conv_filters);
    m.attention_dim = get_size(cfg, "model.attention_dim", m.attention_dim);
    m.recurrent = cfg.get_bool("model.recurrent", m.recurrent);
    m.gru_hidden = get_size(cfg, "model.gru_hidden", m.gru_hidden);
    m.gru_layers = get_size(cfg, "model.gru_layers", m.gru_layers);
    if (cfg.has("model.wiring")) {
        const auto w = cfg.get_string("model.wiring", "");
        if (w == "separate") {
            m.wiring = Wiring::separate;
        } else if (w == "concatenated") {
            m.wiring = Wiring::concatenated;
        } else {
            throw UsageError("config field 'model.wiring' must be \"separate\" or \"concatenated\"");
        }
    }
    m.k_benchmark = c.scenario.k_benchmark;

    t.alpha = cfg.get_double("train.alpha", t.alpha);
    t.beta = cfg.get_double("train.beta", t.beta);
    t.theta = cfg.get_double("train.theta", t.theta);
    t.k_benchmark = c.scenario.k_benchmark;
    t.batch = get_size(cfg, "train.batch", t.batch);
    t.lr = cfg.get_double("train.lr", t.lr);
    t.dropout = cfg.get_double("train.dropout", t.dropout);
    t.epochs = static_cast<int>(cfg.get_int("train.epochs", t.epochs));
    t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", seed));
    t.lambda = cfg.get_double("train.lambda", t.lambda);
    t.lambda_weighting = cfg.get_bool("train.lambda_weighting", t.lambda_weighting);
    t.validate();
    return c;
}

Dataset simulate_dataset(const Scenario& scenario, Market* market) {
    Market generated = generate_market(scenario);
    auto logs = simulate_logs(generated, scenario);
    Dataset d{generated.rooms, std::move(logs.reservations), std::move(logs.behavior)};
    if (market) *market = std::move(generated);
    return d;
}

Dataset load_dataset(const std::string& directory) {
    const std::filesystem::path dir(directory);
    Dataset d;
    d.rooms = read_rooms((dir / "rooms.jsonl").string());
    d.reservations = read_reservations((dir / "reservations.jsonl").string());
    d.behavior = read_behavior((dir / "behavior.jsonl").string());
    if (d.rooms.empty()) throw DataError("dataset '" + directory + "' has no rooms");
    return d;
}

std::pair<Night, Night> log_span(const Dataset& data) {
    if (data.reservations.empty() && data.behavior.empty()) throw DataError("dataset has no log records");
    Night lo{std::numeric_limits<int>::max()}, hi{std::numeric_limits<int>::min()};
    for (const auto& r : data.reservations) {
        lo = std::min(lo, r.night);
        hi = std::max(hi, r.night);
    }
    for (const auto& b : data.behavior) {
        lo = std::min(lo, b.night);
        hi = std::max(hi, b.night);
    }
    return {lo, Night{hi.days + 1}};
}

Prepared prepare_with(const Dataset& data, const PipelineConfig& config, GroupAssignment assignment,
                      std::map<int, GroupEmbedding> embeddings) {
    Prepared p;
    std::tie(p.first, p.end) = log_span(data);
    p.split = Night{p.first.days + config.scenario.train_days};
    std::vector<ReservationRecord> history;
    for (const auto& r : data.reservations) {
        if (r.night < p.split) history.push_back(r);
    }
    p.group_records = aggregate_group(history, assignment, data.rooms, config.group_bin_width);
    FeatureSources sources{data.rooms, data.reservations, data.behavior, assignment,
                           embeddings, config.scenario.bounds, p.split};
    p.context = std::make_shared<FeatureContext>(std::move(sources), config.features);
    p.assignment = std::move(assignment);
    p.embeddings = std::move(embeddings);
    return p;
}

Prepared prepare(const Dataset& data, const PipelineConfig& config) {
    const auto [first, end] = log_span(data);
    const Night split{first.days + config.scenario.train_days};
    auto assignment = kmeans_group(data.rooms, config.groups, config.grouping_seed);
    std::vector<ReservationRecord> history;
    for (const auto& r : data.reservations) {
        if (r.night < split) history.push_back(r);
    }
    auto embeddings = embed_groups(history, assignment, config.embed);
    return prepare_with(data, config, std::move(assignment), std::move(embeddings));
}

std::vector<TrainingExample> training_rows(const Prepared& prepared, const Dataset& data,
                                           const PipelineConfig& config) {
    return build_examples(*prepared.context, data.reservations, prepared.group_records, config.group_bin_width,
                          prepared.first, prepared.split, false);
}

std::vector<TrainingExample> heldout_rows(const Prepared& prepared, const Dataset& data,
                                          const PipelineConfig& config) {
    return build_examples(*prepared.context, data.reservations, {}, config.group_bin_width, prepared.split,
                          prepared.end, true);
}

ElasticityModel make_model(const Prepared& prepared, const PipelineConfig& config) {
    return ElasticityModel(model_config_for(*prepared.context, config.model), config.train.seed);
}

Evaluation evaluate_model(ElasticityModel& model, const Prepared& prepared, const Dataset& data,
                          const PipelineConfig& config) {
    const auto rows = heldout_rows(prepared, data, config);
    if (rows.empty()) throw DataError("evaluate: no observed nights after the training window");

    std::vector<ReservationRecord> history;
    for (const auto& r : data.reservations) {
        if (r.night < prepared.split) history.push_back(r);
    }
    Evaluation ev;
    ev.baseline =
        constant_elasticity_baseline(history, data.rooms, config.scenario.bounds, config.scenario.k_benchmark);

    std::vector<const RawExample*> raw;
    for (const auto& r : rows) raw.push_back(&r.x);
    const auto heads = model.evaluate(raw);
    const double k = model.config().k_benchmark;

    std::vector<double> actual, predicted, baseline;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        PredictionRow row;
        row.rid = r.x.rid;
        row.night = r.x.night;
        row.price = r.price;
        row.actual = r.quantity / r.inventory;
        if (r.q_avg > 0.0) {
            row.predicted = occupancy(ExpDemandCurve(k * r.q_avg, heads[i].w_r, heads[i].b_r), r.price, r.inventory);
            row.baseline = occupancy(ExpDemandCurve(k * r.q_avg, ev.baseline.w, 0.0), r.price, r.inventory);
        } else {
            row.predicted = heads[i].b_r / r.price / r.inventory;
        }
        actual.push_back(row.actual);
        predicted.push_back(row.predicted);
        baseline.push_back(row.baseline);
        ev.rows.push_back(row);
    }
    ev.report.n = rows.size();
    ev.report.mape = mape(actual, predicted, &ev.report.excluded);
    ev.report.wmape = wmape(actual, predicted);
    ev.report.baseline_mape = mape(actual, baseline);
    ev.report.baseline_wmape = wmape(actual, baseline);

    std::map<RoomId, double> prices;
    std::map<RoomId, ExpDemandCurve> curves;
    for (const auto& room : data.rooms) {
        if (!(room.avg_sales > 0.0)) continue;
        const auto curve = predict_curve(model, *prepared.context, room.rid, prepared.split);
        prices[room.rid] = optimal_price(curve, config.scenario.bounds).optimal_price;
        curves.emplace(room.rid, curve);
    }
    ev.report.gmv = gmv(prices, curves);
    return ev;
}

}  // namespace elastica
