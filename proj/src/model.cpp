#include "elastica/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "elastica/errors.hpp"
#include "elastica/graph_embed.hpp"
#include "elastica/market_sim.hpp"

namespace elastica {

using ad::Var;

namespace {

const char* const kContextNames[] = {"dow", "month", "weekend"};
constexpr std::size_t kContextVocab[] = {7, 12, 2};

std::string wiring_name(Wiring w) { return w == Wiring::separate ? "separate" : "concatenated"; }

Wiring wiring_from(const std::string& s) {
    if (s == "separate") return Wiring::separate;
    if (s == "concatenated") return Wiring::concatenated;
    throw UsageError("model: unknown wiring '" + s + "' (expected separate or concatenated)");
}

std::size_t create_mlp(ad::ParameterStore& store, const std::string& prefix, std::size_t in,
                       std::span<const std::size_t> sizes, std::mt19937_64& rng) {
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        ad::create_dense(store, prefix + "/l" + std::to_string(l), in, sizes[l], rng);
        in = sizes[l];
    }
    return in;
}

Var apply_mlp(ad::Binder& p, const std::string& prefix, Var x, std::size_t layers, bool training, double dropout,
              std::mt19937_64& rng) {
    for (std::size_t l = 0; l < layers; ++l) {
        x = ad::relu(p.dense(prefix + "/l" + std::to_string(l), x));
        x = ad::dropout(x, dropout, training, rng);
    }
    return x;
}

void create_gru(ad::ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                std::mt19937_64& rng) {
    for (const char* gate : {"z", "r", "h"}) {
        store.create(prefix + "/w_" + gate, {in, hidden}, ad::ParameterStore::Init::glorot, rng);
        store.create(prefix + "/u_" + gate, {hidden, hidden}, ad::ParameterStore::Init::glorot, rng);
        store.create(prefix + "/b_" + gate, {hidden}, ad::ParameterStore::Init::zeros, rng);
    }
}

ad::GruParams bind_gru(ad::Binder& p, const std::string& prefix) {
    return {p(prefix + "/w_z"), p(prefix + "/u_z"), p(prefix + "/b_z"), p(prefix + "/w_r"), p(prefix + "/u_r"),
            p(prefix + "/b_r"), p(prefix + "/w_h"), p(prefix + "/u_h"), p(prefix + "/b_h")};
}

// Maps raw outputs into [-1/p_min, -1/p_max].
Var constrain_w(Var raw, const ModelConfig& c) {
    return ad::bounded_sigmoid(raw, -1.0 / c.p_min, -1.0 / c.p_max);
}

Var constrain_b(Var raw, const ModelConfig& c) { return ad::scale(ad::softplus(raw), c.b_scale); }

std::vector<std::size_t> head_sizes(const ModelConfig& c) { return {c.head_hidden}; }

// Layer 0 keeps the unnumbered name.
std::string gru_prefix(std::size_t layer) {
    return layer == 0 ? std::string("lspm/gru") : "lspm/gru" + std::to_string(layer + 1);
}

}  // namespace

// --- configuration -----------------------------------------------------------

std::size_t ModelConfig::temporal_dim() const {
    return conv_widths.size() * conv_filters + 3 * attention_dim + (recurrent ? 2 * gru_hidden : 0);
}

void ModelConfig::validate() const {
    if (trunk.empty()) throw UsageError("model: trunk needs at least one layer");
    for (auto s : trunk) {
        if (s == 0) throw UsageError("model: trunk layer sizes must be positive");
    }
    if (head_hidden == 0 || embed_dim == 0 || fm_factors == 0 || conv_filters == 0 || attention_dim == 0) {
        throw UsageError("model: layer sizes must be positive");
    }
    if (conv_widths.empty()) throw UsageError("model: conv_widths is empty");
    for (auto w : conv_widths) {
        if (w == 0 || w > window_days) {
            throw UsageError("model: conv width " + std::to_string(w) + " does not fit a window of " +
                             std::to_string(window_days));
        }
    }
    if (recurrent && gru_hidden == 0) throw UsageError("model: gru_hidden must be positive");
    if (recurrent && gru_layers == 0) throw UsageError("model: gru_layers must be positive");
    if (!(p_min > 0.0) || !(p_max > p_min)) throw UsageError("model: need 0 < p_min < p_max");
    if (!(k_benchmark > 0.0)) throw UsageError("model: k_benchmark must be positive");
    if (!(b_scale > 0.0)) throw UsageError("model: b_scale must be positive");
}

nlohmann::json ModelConfig::to_json() const {
    return {{"trunk", trunk},
            {"head_hidden", head_hidden},
            {"embed_dim", embed_dim},
            {"fm_factors", fm_factors},
            {"conv_widths", conv_widths},
            {"conv_filters", conv_filters},
            {"attention_dim", attention_dim},
            {"recurrent", recurrent},
            {"gru_hidden", gru_hidden},
            {"gru_layers", gru_layers},
            {"wiring", wiring_name(wiring)},
            {"window_days", window_days},
            {"static_vocab", static_vocab},
            {"icm_dim", icm_dim},
            {"p_min", p_min},
            {"p_max", p_max},
            {"k_benchmark", k_benchmark},
            {"b_scale", b_scale}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    try {
        ModelConfig c;
        c.trunk = j.at("trunk").get<std::vector<std::size_t>>();
        c.head_hidden = j.at("head_hidden").get<std::size_t>();
        c.embed_dim = j.at("embed_dim").get<std::size_t>();
        c.fm_factors = j.at("fm_factors").get<std::size_t>();
        c.conv_widths = j.at("conv_widths").get<std::vector<std::size_t>>();
        c.conv_filters = j.at("conv_filters").get<std::size_t>();
        c.attention_dim = j.at("attention_dim").get<std::size_t>();
        c.recurrent = j.at("recurrent").get<bool>();
        c.gru_hidden = j.at("gru_hidden").get<std::size_t>();
        c.gru_layers = j.at("gru_layers").get<std::size_t>();
        c.wiring = wiring_from(j.at("wiring").get<std::string>());
        c.window_days = j.at("window_days").get<std::size_t>();
        c.static_vocab = j.at("static_vocab").get<std::size_t>();
        c.icm_dim = j.at("icm_dim").get<std::size_t>();
        c.p_min = j.at("p_min").get<double>();
        c.p_max = j.at("p_max").get<double>();
        c.k_benchmark = j.at("k_benchmark").get<double>();
        c.b_scale = j.at("b_scale").get<double>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
}

ModelConfig model_config_for(const FeatureContext& context, ModelConfig base) {
    base.window_days = static_cast<std::size_t>(context.config().window_days);
    base.static_vocab = static_cast<std::size_t>(context.config().static_vocab);
    base.icm_dim = context.icm_dim();
    base.p_min = context.bounds().p_min();
    base.p_max = context.bounds().p_max();
    base.b_scale = context.reference_price();
    return base;
}

void TrainConfig::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw UsageError("train: alpha and beta must be >= 0");
    if (!(theta > 0.0)) throw UsageError("train: theta must be positive");
    if (!(k_benchmark > 0.0)) throw UsageError("train: k_benchmark must be positive");
    if (batch == 0) throw UsageError("train: batch must be positive");
    if (!(lr >= 0.0)) throw UsageError("train: lr must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("train: dropout must lie in [0, 1)");
    if (epochs < 0) throw UsageError("train: epochs must be >= 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("train: lambda must lie in [0, 1]");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"alpha", loss_alpha()}, {"beta", loss_beta()}, {"theta", theta},   {"k_benchmark", k_benchmark},
            {"batch", batch},        {"lr", lr},            {"dropout", dropout}, {"epochs", epochs},
            {"seed", seed}};
}

// --- model -------------------------------------------------------------------

ElasticityModel::ElasticityModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    create_parameters(seed);
}

ElasticityModel::ElasticityModel(ModelConfig config, ad::ParameterStore params) : config_(std::move(config)) {
    config_.validate();
    create_parameters(0);
    std::size_t matched = 0;
    for (auto& [name, p] : params) {
        if (!params_.contains(name)) throw DataError("checkpoint: unexpected parameter " + name);
        auto& mine = params_.at(name);
        if (mine.value.shape != p.value.shape) {
            throw DataError("checkpoint: parameter " + name + " has shape " + ad::shape_str(p.value.shape) +
                            ", expected " + ad::shape_str(mine.value.shape));
        }
        mine.value = p.value;
        ++matched;
    }
    if (matched != params_.size()) {
        throw DataError("checkpoint: " + std::to_string(params_.size() - matched) + " parameters missing");
    }
}

void ElasticityModel::create_parameters(std::uint64_t seed) {
    using Init = ad::ParameterStore::Init;
    const auto& c = config_;
    std::mt19937_64 rng(derive_seed(seed, 77));
    const std::size_t e = c.embed_dim;

    for (int f = 0; f < kStaticFeatureCount; ++f) {
        params_.create(std::string("emb/") + kStaticFeatureNames[f], {c.static_vocab, e}, Init::glorot, rng);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        params_.create(std::string("emb/") + kContextNames[i], {kContextVocab[i], e}, Init::glorot, rng);
    }
    for (std::size_t q = 0; q < kQualityFeatures; ++q) {
        params_.create("icm/quality_" + std::to_string(q), {kQualityLevels, e}, Init::glorot, rng);
    }
    params_.create("ecm/fm_w0", {1}, Init::zeros, rng);
    params_.create("ecm/fm_w", {kEcmFeatures}, Init::glorot, rng);
    params_.create("ecm/fm_v", {kEcmFeatures, c.fm_factors}, Init::glorot, rng);
    params_.create("ecm/sb/w", {c.external_dim(), c.external_dim()}, Init::glorot, rng);
    params_.create("ecm/sb/b", {c.external_dim()}, Init::zeros, rng);

    for (auto w : c.conv_widths) {
        const std::string prefix = "lspm/conv" + std::to_string(w);
        params_.create(prefix + "/k", {w, kBehaviorChannels, c.conv_filters}, Init::glorot, rng);
        params_.create(prefix + "/b", {c.conv_filters}, Init::zeros, rng);
    }
    for (std::size_t g = 0; g < 3; ++g) {
        const std::string prefix = "lspm/lt" + std::to_string(g);
        ad::create_dense(params_, prefix + "/value", kLongTermVariables, c.attention_dim, rng);
        params_.create(prefix + "/key", {kLongTermBuckets[g], c.attention_dim}, Init::glorot, rng);
        params_.create(prefix + "/query", {kLongTermBuckets[g], c.attention_dim}, Init::glorot, rng);
    }
    if (c.recurrent) {
        for (std::size_t l = 0; l < c.gru_layers; ++l) {
            const std::size_t in = l == 0 ? kBehaviorChannels : 2 * c.gru_hidden;
            create_gru(params_, gru_prefix(l) + "_fwd", in, c.gru_hidden, rng);
            create_gru(params_, gru_prefix(l) + "_bwd", in, c.gru_hidden, rng);
        }
    }

    const std::size_t all_room = c.context_dim() + c.internal_dim() + c.external_dim() + c.temporal_dim();
    const std::size_t w_in = c.wiring == Wiring::separate ? c.context_dim() + c.internal_dim() + c.external_dim()
                                                          : all_room;
    const std::size_t b_in = c.wiring == Wiring::separate ? c.context_dim() + c.temporal_dim() : all_room;
    const std::size_t g_in = c.group_context_dim() + c.temporal_dim();
    const auto heads = head_sizes(c);

    std::size_t h = create_mlp(params_, "w_r", w_in, c.trunk, rng);
    h = create_mlp(params_, "w_r/head", h, heads, rng);
    ad::create_dense(params_, "w_r/out", h, 1, rng);

    const std::size_t hg = create_mlp(params_, "group", g_in, c.trunk, rng);
    h = create_mlp(params_, "w_g", hg, heads, rng);
    ad::create_dense(params_, "w_g/out", h, 1, rng);
    h = create_mlp(params_, "b_g", hg, heads, rng);
    ad::create_dense(params_, "b_g/out", h, 1, rng);

    const std::size_t hb = create_mlp(params_, "b_r", b_in, c.trunk, rng);
    ad::create_dense(params_, "gate/proj", hg, c.temporal_dim(), rng);
    params_.create("gate/sb/w", {c.temporal_dim(), c.temporal_dim()}, Init::glorot, rng);
    params_.create("gate/sb/b", {c.temporal_dim()}, Init::zeros, rng);
    h = create_mlp(params_, "b_r/head", hb + c.temporal_dim(), heads, rng);
    ad::create_dense(params_, "b_r/out", h, 1, rng);
}

HeadOutputs ElasticityModel::forward(ad::Tape& tape, std::span<const RawExample* const> batch, bool training,
                                     double dropout, std::mt19937_64& rng) {
    if (batch.empty()) throw UsageError("forward: empty batch");
    const auto& c = config_;
    const std::size_t rows = batch.size();
    ad::Binder p(tape, params_);

    auto gather = [&](auto field) {
        std::vector<std::size_t> idx(rows);
        for (std::size_t i = 0; i < rows; ++i) idx[i] = field(*batch[i]);
        return idx;
    };
    auto constant = [&](ad::Shape shape, auto fill) {
        std::vector<double> v;
        v.reserve(ad::numel(shape));
        for (std::size_t i = 0; i < rows; ++i) fill(*batch[i], v);
        if (v.size() != ad::numel(shape)) {
            throw DataError("forward: input of size " + std::to_string(v.size()) + " does not match " +
                            ad::shape_str(shape));
        }
        return tape.constant(ad::Tensor(std::move(shape), std::move(v)));
    };

    // Static and calendar context.
    std::vector<Var> context, group_context;
    for (int f = 0; f < kStaticFeatureCount; ++f) {
        const auto idx = gather([f](const RawExample& x) { return x.static_codes[static_cast<std::size_t>(f)]; });
        const Var v = ad::embedding_lookup(p(std::string("emb/") + kStaticFeatureNames[f]), idx);
        context.push_back(v);
        if (f < 3) group_context.push_back(v);  // location, district, star describe the group
    }
    const std::vector<std::size_t> calendar[3] = {gather([](const RawExample& x) { return x.dow; }),
                                                  gather([](const RawExample& x) { return x.month; }),
                                                  gather([](const RawExample& x) { return x.weekend; })};
    for (std::size_t i = 0; i < 3; ++i) {
        const Var v = ad::embedding_lookup(p(std::string("emb/") + kContextNames[i]), calendar[i]);
        context.push_back(v);
        group_context.push_back(v);
    }

    HeadOutputs out;
    out.room.v_c = ad::concat(context);
    out.group.v_c = ad::concat(group_context);

    // Internal competitiveness: graph embeddings plus quality differentials.
    std::vector<Var> internal{constant({rows, c.icm_dim}, [](const RawExample& x, std::vector<double>& v) {
        v.insert(v.end(), x.icm.begin(), x.icm.end());
    })};
    for (std::size_t q = 0; q < kQualityFeatures; ++q) {
        const auto idx = gather([q](const RawExample& x) { return x.quality[q]; });
        internal.push_back(ad::embedding_lookup(p("icm/quality_" + std::to_string(q)), idx));
    }
    out.room.v_i = ad::concat(internal);

    // External competitiveness: FM crosses plus raw inputs, filtered by a selector block.
    const Var ecm = constant({rows, kEcmFeatures}, [](const RawExample& x, std::vector<double>& v) {
        v.insert(v.end(), x.ecm.begin(), x.ecm.end());
    });
    const Var fm = ad::factorization_machine(ecm, p("ecm/fm_w0"), p("ecm/fm_w"), p("ecm/fm_v"));
    out.room.v_e = ad::selector_block(ad::concat({fm, ecm}), p("ecm/sb/w"), p("ecm/sb/b"));

    // Long-term attention over proportion series; shared by room and group views.
    std::vector<Var> long_term;
    for (std::size_t g = 0; g < 3; ++g) {
        const std::size_t steps = kLongTermBuckets[g];
        const std::string prefix = "lspm/lt" + std::to_string(g);
        const Var raw = constant({rows * steps, kLongTermVariables}, [g](const RawExample& x, std::vector<double>& v) {
            v.insert(v.end(), x.long_term[g].begin(), x.long_term[g].end());
        });
        const Var values = ad::reshape(p.dense(prefix + "/value", raw), {rows, steps, c.attention_dim});
        std::vector<std::size_t> key_idx(rows * steps);
        for (std::size_t i = 0; i < key_idx.size(); ++i) key_idx[i] = i % steps;
        const Var keys = ad::reshape(ad::embedding_lookup(p(prefix + "/key"), key_idx), {rows, steps, c.attention_dim});
        const auto q_idx = gather([g](const RawExample& x) { return x.long_term_query[g]; });
        const Var query = ad::embedding_lookup(p(prefix + "/query"), q_idx);
        long_term.push_back(ad::time_attention(values, keys, query));
    }
    const Var h_long = ad::concat(long_term);

    auto temporal = [&](bool group_view) {
        const Var seq = constant({rows, c.window_days, kBehaviorChannels},
                                 [group_view](const RawExample& x, std::vector<double>& v) {
                                     const auto& w = group_view ? x.group_window : x.room_window;
                                     v.insert(v.end(), w.begin(), w.end());
                                 });
        std::vector<Var> parts;
        for (auto w : c.conv_widths) {
            const std::string prefix = "lspm/conv" + std::to_string(w);
            parts.push_back(ad::avg_pool(ad::tanh(ad::conv1d(seq, p(prefix + "/k"), p(prefix + "/b")))));
        }
        parts.push_back(h_long);
        if (c.recurrent) {
            Var h = seq;
            for (std::size_t l = 0; l < c.gru_layers; ++l) {
                h = ad::bi_gru(h, bind_gru(p, gru_prefix(l) + "_fwd"), bind_gru(p, gru_prefix(l) + "_bwd"));
            }
            parts.push_back(ad::avg_pool(h));
        }
        return ad::concat(parts);
    };
    out.room.v_l = temporal(false);
    out.group.v_l = temporal(true);

    const std::size_t trunk_layers = c.trunk.size();
    const std::size_t head_layers = head_sizes(c).size();
    const bool separate = c.wiring == Wiring::separate;
    const Var all_room = ad::concat({out.room.v_c, out.room.v_i, out.room.v_e, out.room.v_l});

    // Room elasticity head.
    const Var w_in = separate ? ad::concat({out.room.v_c, out.room.v_i, out.room.v_e}) : all_room;
    Var h = apply_mlp(p, "w_r", w_in, trunk_layers, training, dropout, rng);
    h = apply_mlp(p, "w_r/head", h, head_layers, training, dropout, rng);
    out.w_r = constrain_w(p.dense("w_r/out", h), c);

    // Group task.
    const Var hg = apply_mlp(p, "group", ad::concat({out.group.v_c, out.group.v_l}), trunk_layers, training, dropout,
                             rng);
    out.w_g = constrain_w(p.dense("w_g/out", apply_mlp(p, "w_g", hg, head_layers, training, dropout, rng)), c);
    out.b_g = constrain_b(p.dense("b_g/out", apply_mlp(p, "b_g", hg, head_layers, training, dropout, rng)), c);

    // Room natural growth, with group knowledge transferred through the gate.
    const Var b_in = separate ? ad::concat({out.room.v_c, out.room.v_l}) : all_room;
    const Var hb = apply_mlp(p, "b_r", b_in, trunk_layers, training, dropout, rng);
    out.gate_input = p.dense("gate/proj", hg);
    const Var gated = ad::gating(out.gate_input, out.group.v_l, out.room.v_l, p("gate/sb/w"), p("gate/sb/b"));
    h = apply_mlp(p, "b_r/head", ad::concat({hb, gated}), head_layers, training, dropout, rng);
    out.b_r = constrain_b(p.dense("b_r/out", h), c);
    return out;
}

std::vector<HeadValues> ElasticityModel::evaluate(std::span<const RawExample* const> batch) {
    std::vector<HeadValues> values;
    values.reserve(batch.size());
    constexpr std::size_t kChunk = 256;
    std::mt19937_64 unused(0);
    for (std::size_t start = 0; start < batch.size(); start += kChunk) {
        const auto chunk = batch.subspan(start, std::min(kChunk, batch.size() - start));
        ad::Tape tape;
        const auto out = forward(tape, chunk, false, 0.0, unused);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            values.push_back({out.w_r.value()[i], out.b_r.value()[i], out.w_g.value()[i], out.b_g.value()[i]});
        }
    }
    return values;
}

HeadValues ElasticityModel::evaluate(const RawExample& example) {
    const RawExample* ptr = &example;
    return evaluate(std::span<const RawExample* const>(&ptr, 1)).front();
}

// --- examples and loss -------------------------------------------------------

std::vector<TrainingExample> build_examples(const FeatureContext& context, std::span<const ReservationRecord> records,
                                            std::span<const GroupRecord> groups, double group_bin_width, Night from,
                                            Night to, bool observed_only) {
    if (!(group_bin_width > 0.0)) throw UsageError("build_examples: group bin width must be positive");
    std::map<std::pair<RoomId, int>, const ReservationRecord*> observed;
    for (const auto& r : records) {
        if (r.night < from || r.night >= to) continue;
        if (!(r.price > 0.0)) throw DataError("build_examples: non-positive price for rid " + std::to_string(r.rid));
        observed[{r.rid, r.night.days}] = &r;
    }
    std::map<std::pair<int, int>, std::vector<const GroupRecord*>> by_group_night;
    for (const auto& g : groups) {
        if (g.night < from || g.night >= to) continue;
        by_group_night[{g.group, g.night.days}].push_back(&g);
    }

    std::vector<TrainingExample> rows;
    for (const auto& room : context.rooms()) {
        for (int d = from.days; d < to.days; ++d) {
            auto it = observed.find({room.rid, d});
            if (observed_only && it == observed.end()) continue;
            TrainingExample ex;
            ex.x = context.build(room.rid, Night{d});
            ex.inventory = room.inventory;
            ex.q_avg = room.avg_sales;
            if (it != observed.end()) {
                ex.room_observed = true;
                ex.price = it->second->price;
                ex.quantity = it->second->quantity;
            }
            auto git = by_group_night.find({ex.x.group, d});
            if (git != by_group_night.end()) {
                const GroupRecord* pick = nullptr;
                if (ex.room_observed) {
                    const double bin = std::floor(ex.price / group_bin_width);
                    for (const auto* g : git->second) {
                        if (std::floor(g->price / group_bin_width) == bin) pick = g;
                    }
                }
                if (!pick) {
                    for (const auto* g : git->second) {
                        if (!pick || g->quantity > pick->quantity ||
                            (g->quantity == pick->quantity && g->price < pick->price)) {
                            pick = g;
                        }
                    }
                }
                ex.group_observed = true;
                ex.group_price = pick->price;
                ex.group_quantity = pick->quantity;
                ex.group_q_avg = pick->q_avg;
            }
            rows.push_back(std::move(ex));
        }
    }
    return rows;
}

LossBatch LossBatch::from_examples(std::span<const TrainingExample* const> rows) {
    LossBatch b;
    for (const auto* r : rows) {
        b.room_mask.push_back(r->room_observed ? 1.0 : 0.0);
        b.room_price.push_back(r->room_observed ? r->price : 1.0);
        b.room_quantity.push_back(r->room_observed ? r->quantity : 0.0);
        b.room_q_avg.push_back(r->q_avg);
        b.group_mask.push_back(r->group_observed ? 1.0 : 0.0);
        b.group_price.push_back(r->group_observed ? r->group_price : 1.0);
        b.group_quantity.push_back(r->group_observed ? r->group_quantity : 0.0);
        b.group_q_avg.push_back(r->group_observed ? r->group_q_avg : 0.0);
    }
    return b;
}

Var predicted_sales(Var w, Var b, std::span<const double> price, std::span<const double> q_avg, double k_benchmark) {
    for (double p : price) {
        if (!(p > 0.0)) throw DataError("loss: non-positive price in batch");
    }
    std::vector<double> scale(q_avg.size()), inv_price(price.size());
    for (std::size_t i = 0; i < q_avg.size(); ++i) scale[i] = k_benchmark * q_avg[i];
    for (std::size_t i = 0; i < price.size(); ++i) inv_price[i] = 1.0 / price[i];
    const Var elastic = ad::mul_const(ad::exp(ad::mul_const(w, price)), scale);
    return ad::add(elastic, ad::mul_const(b, inv_price));
}

namespace {

Var task_loss(Var w, Var b, std::span<const double> price, std::span<const double> quantity,
              std::span<const double> q_avg, std::span<const double> mask, double theta, double k) {
    ad::Tape& tape = *w.tape;
    const Var f = predicted_sales(w, b, price, q_avg, k);
    const Var target = tape.constant(ad::Tensor(f.shape(), std::vector<double>(quantity.begin(), quantity.end())));
    const Var loss = ad::mul_const(ad::huber(ad::sub(target, f), theta), mask);
    return ad::scale(ad::sum(loss), 1.0 / static_cast<double>(mask.size()));
}

}  // namespace

Var multitask_loss(const HeadOutputs& out, const LossBatch& batch, double alpha, double beta, double theta,
                   double k_benchmark) {
    const Var room = task_loss(out.w_r, out.b_r, batch.room_price, batch.room_quantity, batch.room_q_avg,
                               batch.room_mask, theta, k_benchmark);
    const Var group = task_loss(out.w_g, out.b_g, batch.group_price, batch.group_quantity, batch.group_q_avg,
                                batch.group_mask, theta, k_benchmark);
    return ad::add(ad::scale(room, alpha), ad::scale(group, beta));
}

// --- training ----------------------------------------------------------------

namespace {

std::vector<const RawExample*> raw_pointers(std::span<const TrainingExample* const> rows) {
    std::vector<const RawExample*> out;
    out.reserve(rows.size());
    for (const auto* r : rows) out.push_back(&r->x);
    return out;
}

}  // namespace

double evaluate_loss(ElasticityModel& model, std::span<const TrainingExample> rows, const TrainConfig& config) {
    if (rows.empty()) throw UsageError("evaluate_loss: no rows");
    double total = 0.0;
    std::mt19937_64 unused(0);
    for (std::size_t start = 0; start < rows.size(); start += config.batch) {
        std::vector<const TrainingExample*> chunk;
        for (std::size_t i = start; i < std::min(rows.size(), start + config.batch); ++i) chunk.push_back(&rows[i]);
        ad::Tape tape;
        const auto raw = raw_pointers(chunk);
        const auto out = model.forward(tape, raw, false, 0.0, unused);
        const Var loss = multitask_loss(out, LossBatch::from_examples(chunk), config.loss_alpha(), config.loss_beta(),
                                        config.theta, config.k_benchmark);
        total += loss.item() * static_cast<double>(chunk.size());
    }
    return total / static_cast<double>(rows.size());
}

TrainResult train(ElasticityModel& model, std::span<const TrainingExample> rows, const TrainConfig& config,
                  std::span<const TrainingExample> validation) {
    config.validate();
    if (rows.empty()) throw DataError("train: no training examples");
    auto& params = model.params();
    ad::AdamState adam(ad::AdamConfig{config.lr, 0.9, 0.999, 1e-8});
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
    std::mt19937_64 dropout_rng(derive_seed(config.seed, 2));

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            std::vector<const TrainingExample*> chunk;
            for (std::size_t i = start; i < std::min(order.size(), start + config.batch); ++i) {
                chunk.push_back(&rows[order[i]]);
            }
            params.zero_grad();
            ad::Tape tape;
            const auto raw = raw_pointers(chunk);
            const auto out = model.forward(tape, raw, config.dropout > 0.0, config.dropout, dropout_rng);
            const Var loss = multitask_loss(out, LossBatch::from_examples(chunk), config.loss_alpha(),
                                            config.loss_beta(), config.theta, config.k_benchmark);
            if (!std::isfinite(loss.item())) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   "; parameters hold the last finite state");
            }
            tape.backward(loss);
            for (const auto& [name, p] : params) {
                for (double g : p.grad) {
                    if (!std::isfinite(g)) {
                        throw NumericError("train: non-finite gradient for " + name + " at epoch " +
                                           std::to_string(epoch + 1) + "; parameters hold the last finite state");
                    }
                }
            }
            adam.step(params);
            total += loss.item() * static_cast<double>(chunk.size());
        }
        result.epoch_loss.push_back(total / static_cast<double>(rows.size()));
        if (!validation.empty()) result.validation_loss.push_back(evaluate_loss(model, validation, config));
    }
    return result;
}

// --- prediction --------------------------------------------------------------

ExpDemandCurve predict_curve(ElasticityModel& model, const FeatureContext& context, RoomId rid, Night night) {
    const RoomType& room = context.room(rid);
    if (!(room.avg_sales > 0.0)) throw DataError("rid " + std::to_string(rid) + " has no benchmark sales");
    const auto heads = model.evaluate(context.build(rid, night));
    return ExpDemandCurve(model.config().k_benchmark * room.avg_sales, heads.w_r, heads.b_r);
}

double predict_occupancy(ElasticityModel& model, const FeatureContext& context, RoomId rid, Night night,
                         double price) {
    const auto curve = predict_curve(model, context, rid, night);
    return occupancy(curve, price, context.room(rid).inventory);
}

PricingResult suggest_price(ElasticityModel& model, const FeatureContext& context, RoomId rid, Night night,
                            const PriceBounds& bounds) {
    return optimal_price(predict_curve(model, context, rid, night), bounds);
}

}  // namespace elastica
