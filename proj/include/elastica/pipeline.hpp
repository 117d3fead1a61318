#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elastica/config.hpp"
#include "elastica/features.hpp"
#include "elastica/graph_embed.hpp"
#include "elastica/grouping.hpp"
#include "elastica/market_sim.hpp"
#include "elastica/metrics.hpp"
#include "elastica/model.hpp"

namespace elastica {

// Everything a run needs, read from one TOML document. Scenario fields live
// at the top level; [grouping], [embed], [features], [model] and [train]
// hold the rest. `model.variant = "recurrent"` switches to concatenated wiring,
// the recurrent temporal path and lambda-weighted losses; explicit keys still
// win over the variant's defaults.
struct PipelineConfig {
    Scenario scenario;
    int groups = 0;  // <= 0: one group per district
    std::uint64_t grouping_seed = 7;
    double group_bin_width = 50.0;
    EmbedParams embed;
    FeatureConfig features;
    ModelConfig model;
    TrainConfig train;

    static PipelineConfig from_config(const Config& cfg);
};

struct Dataset {
    std::vector<RoomType> rooms;
    std::vector<ReservationRecord> reservations;
    std::vector<BehaviorSeries> behavior;
};

Dataset simulate_dataset(const Scenario& scenario, Market* market = nullptr);
Dataset load_dataset(const std::string& directory);

// First logged night and the exclusive end of the logs.
std::pair<Night, Night> log_span(const Dataset& data);

// Grouping, embeddings and feature context, all fitted on nights before `split`.
struct Prepared {
    GroupAssignment assignment;
    std::map<int, GroupEmbedding> embeddings;
    std::vector<GroupRecord> group_records;
    std::shared_ptr<FeatureContext> context;
    Night first;
    Night split;
    Night end;
};

Prepared prepare(const Dataset& data, const PipelineConfig& config);
// Same as prepare() with grouping and embeddings supplied (e.g. read back from disk).
Prepared prepare_with(const Dataset& data, const PipelineConfig& config, GroupAssignment assignment,
                      std::map<int, GroupEmbedding> embeddings);

std::vector<TrainingExample> training_rows(const Prepared& prepared, const Dataset& data,
                                           const PipelineConfig& config);
// Observed room nights from `split` onwards.
std::vector<TrainingExample> heldout_rows(const Prepared& prepared, const Dataset& data, const PipelineConfig& config);

ElasticityModel make_model(const Prepared& prepared, const PipelineConfig& config);

struct PredictionRow {
    RoomId rid = 0;
    Night night;
    double price = 0.0;
    double actual = 0.0;     // occupancy
    double predicted = 0.0;  // model occupancy
    double baseline = 0.0;   // constant-elasticity occupancy
};

struct Evaluation {
    EvalReport report;
    std::vector<PredictionRow> rows;
    BaselineFit baseline;
};

// Occupancy accuracy on held-out nights for the model and the baseline, plus
// GMV at the model's suggested prices for the first held-out night.
Evaluation evaluate_model(ElasticityModel& model, const Prepared& prepared, const Dataset& data,
                          const PipelineConfig& config);

}  // namespace elastica
