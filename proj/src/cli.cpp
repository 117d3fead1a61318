#include "elastica/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "elastica/checkpoint.hpp"
#include "elastica/errors.hpp"
#include "elastica/pipeline.hpp"

#ifndef ELASTICA_VERSION
#define ELASTICA_VERSION "0.0.0"
#endif

namespace elastica::cli {

namespace fs = std::filesystem;

Config resolve_config(const std::string& path, const std::vector<std::string>& overrides, const char* env_seed) {
    Config cfg;
    if (!path.empty()) cfg = Config::load(path);
    if (env_seed && *env_seed) cfg.apply_override(std::string("seed=") + env_seed);
    for (const auto& o : overrides) cfg.apply_override(o);
    return cfg;
}

std::string provenance_line(const Config& config) {
    return std::string("# elastica ") + ELASTICA_VERSION + " config=" + fnv1a_hex(config.canonical()) + "\n";
}

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
};

std::string path_in(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void write_csv(const std::string& path, const Config& config, const std::string& body) {
    write_file_atomic(path, provenance_line(config) + body);
}

std::string read_text(const std::string& path) {
    if (!fs::exists(path)) throw IoError("missing input file '" + path + "'");
    return read_file(path);
}

nlohmann::json read_json(const std::string& path) {
    const auto text = read_text(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("cannot parse '" + path + "': " + e.what());
    }
}

void require_dir(const std::string& dir, const char* what) {
    if (!fs::is_directory(dir)) throw IoError(std::string(what) + " directory '" + dir + "' does not exist");
}

// --- simulate ----------------------------------------------------------------

void cmd_simulate(const Common& common, const std::string& out_dir, std::ostream& out) {
    const Config cfg = resolve_config(common.config_path, common.overrides, std::getenv("ELASTICA_SEED"));
    const auto pipeline = PipelineConfig::from_config(cfg);
    Market market;
    const Dataset data = simulate_dataset(pipeline.scenario, &market);

    write_file_atomic(path_in(out_dir, "rooms.jsonl"), records_to_jsonl(data.rooms));
    write_file_atomic(path_in(out_dir, "reservations.jsonl"), records_to_jsonl(data.reservations));
    write_file_atomic(path_in(out_dir, "behavior.jsonl"), records_to_jsonl(data.behavior));
    write_csv(path_in(out_dir, "rooms.csv"), cfg, rooms_csv(data.rooms));
    write_csv(path_in(out_dir, "reservations.csv"), cfg, reservations_csv(data.reservations));
    write_csv(path_in(out_dir, "behavior.csv"), cfg, behavior_csv(data.behavior));
    Config scenario_cfg = pipeline.scenario.to_config();
    write_file_atomic(path_in(out_dir, "scenario.toml"), scenario_cfg.canonical());

    nlohmann::json truth = nlohmann::json::object();
    for (const auto& [rid, curve] : market.true_curves) {
        truth[std::to_string(rid)] = {{"curve", to_json(DemandCurve(curve))},
                                      {"planted_group", market.planted_group.at(rid)}};
    }
    write_file_atomic(path_in(out_dir, "truth.json"), truth.dump(2) + "\n");
    out << "simulated " << data.rooms.size() << " rooms, " << data.reservations.size() << " reservation records\n";
}

// --- train -------------------------------------------------------------------

void cmd_train(const Common& common, const std::string& data_dir, const std::string& out_dir, std::ostream& out) {
    require_dir(data_dir, "data");
    const Config cfg = resolve_config(common.config_path, common.overrides, std::getenv("ELASTICA_SEED"));
    const auto config = PipelineConfig::from_config(cfg);
    const Dataset data = load_dataset(data_dir);
    const Prepared prepared = prepare(data, config);
    const auto rows = training_rows(prepared, data, config);
    const auto validation = heldout_rows(prepared, data, config);

    write_file_atomic(path_in(out_dir, "config.toml"), cfg.canonical());
    write_csv(path_in(out_dir, "assignment.csv"), cfg, assignment_csv(prepared.assignment));
    std::string edges;
    for (const auto& [g, ge] : prepared.embeddings) {
        const auto csv = ge.graph.edges_csv();
        edges += edges.empty() ? csv : csv.substr(csv.find('\n') + 1);
    }
    write_csv(path_in(out_dir, "graph_edges.csv"), cfg, edges);
    write_file_atomic(path_in(out_dir, "embeddings.json"),
                      embeddings_to_json(prepared.embeddings, config.embed.bin_width).dump() + "\n");

    ElasticityModel model = make_model(prepared, config);
    auto save = [&](const char* status) {
        nlohmann::json header = {{"model", model.config().to_json()},
                                 {"train", config.train.to_json()},
                                 {"config_hash", fnv1a_hex(cfg.canonical())},
                                 {"status", status}};
        write_file_atomic(path_in(out_dir, "checkpoint.json"),
                          ad::checkpoint_to_json(model.params(), header).dump() + "\n");
    };
    TrainResult result;
    try {
        result = train(model, rows, config.train, validation);
    } catch (const NumericError&) {
        save("diverged");
        throw;
    }
    save("ok");
    std::string loss = "epoch,train_loss,validation_loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        loss += std::to_string(e + 1) + "," + format_double(result.epoch_loss[e]) + "," +
                (e < result.validation_loss.size() ? format_double(result.validation_loss[e]) : "") + "\n";
    }
    write_csv(path_in(out_dir, "loss.csv"), cfg, loss);
    out << "trained on " << rows.size() << " rows for " << result.epoch_loss.size() << " epochs";
    if (!result.epoch_loss.empty()) out << ", final loss " << format_double(result.epoch_loss.back());
    out << "\n";
}

// --- model loading shared by evaluate / price / demand-curve ------------------

struct Loaded {
    Config cfg;
    PipelineConfig config;
    Dataset data;
    Prepared prepared;
    std::unique_ptr<ElasticityModel> model;
};

Loaded load_model(const std::string& data_dir, const std::string& model_dir) {
    require_dir(data_dir, "data");
    require_dir(model_dir, "model");
    Loaded l;
    l.cfg = Config::parse(read_text(path_in(model_dir, "config.toml")), path_in(model_dir, "config.toml"));
    l.config = PipelineConfig::from_config(l.cfg);
    l.data = load_dataset(data_dir);
    auto assignment = assignment_from_csv(read_text(path_in(model_dir, "assignment.csv")));
    auto embeddings = embeddings_from_json(read_json(path_in(model_dir, "embeddings.json")));
    l.prepared = prepare_with(l.data, l.config, std::move(assignment), std::move(embeddings));
    const auto checkpoint = read_json(path_in(model_dir, "checkpoint.json"));
    try {
        auto model_cfg = ModelConfig::from_json(checkpoint.at("header").at("model"));
        l.model = std::make_unique<ElasticityModel>(model_cfg, ad::store_from_checkpoint(checkpoint));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header: ") + e.what());
    }
    return l;
}

Night pick_night(const std::string& text, const Prepared& prepared) {
    return text.empty() ? prepared.split : parse_night(text);
}

void cmd_evaluate(const std::string& data_dir, const std::string& model_dir, const std::string& out_dir,
                  std::ostream& out) {
    Loaded l = load_model(data_dir, model_dir);
    const auto ev = evaluate_model(*l.model, l.prepared, l.data, l.config);
    write_file_atomic(path_in(out_dir, "eval.json"), ev.report.to_json().dump(2) + "\n");
    write_csv(path_in(out_dir, "eval.csv"), l.cfg, EvalReport::csv_header() + "\n" + ev.report.csv_row() + "\n");
    std::string rows = "rid,night,price,actual_occupancy,predicted_occupancy,baseline_occupancy\n";
    for (const auto& r : ev.rows) {
        rows += std::to_string(r.rid) + "," + format_night(r.night) + "," + format_double(r.price) + "," +
                format_double(r.actual) + "," + format_double(r.predicted) + "," + format_double(r.baseline) + "\n";
    }
    write_csv(path_in(out_dir, "predictions.csv"), l.cfg, rows);
    out << "mape " << format_double(ev.report.mape) << " wmape " << format_double(ev.report.wmape) << " baseline_mape "
        << format_double(ev.report.baseline_mape) << " n " << ev.report.n << "\n";
}

void cmd_price(const std::string& data_dir, const std::string& model_dir, const std::string& out_file,
               const std::string& night_text, std::optional<double> p_min, std::optional<double> p_max,
               std::ostream& out) {
    Loaded l = load_model(data_dir, model_dir);
    const Night night = pick_night(night_text, l.prepared);
    const PriceBounds bounds(p_min.value_or(l.config.scenario.bounds.p_min()),
                             p_max.value_or(l.config.scenario.bounds.p_max()));
    std::string csv = "rid,night,optimal_price,expected_sales,expected_revenue,clamped,w,b\n";
    for (const auto& room : l.prepared.context->rooms()) {
        const auto curve = predict_curve(*l.model, *l.prepared.context, room.rid, night);
        const auto r = optimal_price(curve, bounds);
        csv += std::to_string(room.rid) + "," + format_night(night) + "," + format_double(r.optimal_price) + "," +
               format_double(r.expected_sales) + "," + format_double(r.expected_revenue) + "," +
               (r.clamped ? "1" : "0") + "," + format_double(curve.w()) + "," + format_double(curve.b()) + "\n";
    }
    write_csv(out_file, l.cfg, csv);
    out << "priced " << l.prepared.context->rooms().size() << " rooms for " << format_night(night) << "\n";
}

void cmd_demand_curve(const std::string& data_dir, const std::string& model_dir, const std::string& out_file,
                      const std::string& night_text, int rid, int points, std::ostream& out) {
    if (points < 2) throw UsageError("--points must be >= 2");
    Loaded l = load_model(data_dir, model_dir);
    const Night night = pick_night(night_text, l.prepared);
    const auto curve = predict_curve(*l.model, *l.prepared.context, rid, night);
    const auto grid = default_price_grid(l.config.scenario.bounds, static_cast<std::size_t>(points));
    std::string csv = "price,demand,revenue\n";
    for (double p : grid) {
        csv += format_double(p) + "," + format_double(exp_demand(curve, p)) + "," + format_double(exp_revenue(curve, p)) +
               "\n";
    }
    write_csv(out_file, l.cfg, csv);
    out << "wrote " << grid.size() << " points for rid " << rid << "\n";
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c == '\n' ? ' ' : c);
    }
    return out + "\"";
}

int report(std::ostream& err, const std::string& kind, int code, const std::string& message) {
    err << "error kind=" << kind << " code=" << code << " message=" << quote(message) << "\n";
    return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Price elasticity estimation and price suggestion"};
    app.set_version_flag("--version", std::string(ELASTICA_VERSION));
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "TOML configuration file");
        sub->add_option("--set", common.overrides, "Override a config field, key=value")->take_all();
    };
    std::string out_dir, data_dir, model_dir, out_file, night;
    int rid = 0, points = 100;
    std::optional<double> p_min, p_max;

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic market and its logs");
    add_common(simulate);
    simulate->add_option("--out", out_dir, "Output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "Fit grouping, embeddings and the elasticity model");
    add_common(train_cmd);
    train_cmd->add_option("--data", data_dir, "Directory written by simulate")->required();
    train_cmd->add_option("--out", out_dir, "Model directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Occupancy accuracy on held-out nights");
    evaluate->add_option("--data", data_dir)->required();
    evaluate->add_option("--model", model_dir)->required();
    evaluate->add_option("--out", out_dir)->required();

    auto* price = app.add_subcommand("price", "Suggested price per room");
    price->add_option("--data", data_dir)->required();
    price->add_option("--model", model_dir)->required();
    price->add_option("--out", out_file, "CSV file")->required();
    price->add_option("--night", night, "YYYY-MM-DD, default first held-out night");
    price->add_option("--p-min", p_min);
    price->add_option("--p-max", p_max);

    auto* curve = app.add_subcommand("demand-curve", "Predicted demand and revenue over the price range");
    curve->add_option("--data", data_dir)->required();
    curve->add_option("--model", model_dir)->required();
    curve->add_option("--out", out_file, "CSV file")->required();
    curve->add_option("--rid", rid)->required();
    curve->add_option("--night", night);
    curve->add_option("--points", points);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << ELASTICA_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        return report(err, "usage", static_cast<int>(ExitCode::usage), e.what());
    }

    try {
        if (simulate->parsed()) {
            cmd_simulate(common, out_dir, out);
        } else if (train_cmd->parsed()) {
            cmd_train(common, data_dir, out_dir, out);
        } else if (evaluate->parsed()) {
            cmd_evaluate(data_dir, model_dir, out_dir, out);
        } else if (price->parsed()) {
            cmd_price(data_dir, model_dir, out_file, night, p_min, p_max, out);
        } else if (curve->parsed()) {
            cmd_demand_curve(data_dir, model_dir, out_file, night, rid, points, out);
        }
    } catch (const Error& e) {
        return report(err, e.kind(), static_cast<int>(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return report(err, "data", static_cast<int>(ExitCode::data), e.what());
    } catch (const std::invalid_argument& e) {
        return report(err, "data", static_cast<int>(ExitCode::data), e.what());
    } catch (const std::out_of_range& e) {
        return report(err, "data", static_cast<int>(ExitCode::data), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report(err, "io", static_cast<int>(ExitCode::io), e.what());
    }
    return 0;
}

}  // namespace elastica::cli
