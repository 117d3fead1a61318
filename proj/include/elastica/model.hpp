#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastica/demand.hpp"
#include "elastica/features.hpp"
#include "elastica/nn.hpp"
#include "elastica/records.hpp"

namespace elastica {

// Which feature vectors feed which head. `separate`: the W head sees
// (V_c, V_i, V_e) and the b head (V_c, V_l). `concatenated`: every room head
// sees all four.
enum class Wiring { separate, concatenated };

struct ModelConfig {
    std::vector<std::size_t> trunk{512, 256};
    std::size_t head_hidden = 128;
    std::size_t embed_dim = 16;
    std::size_t fm_factors = 8;
    std::vector<std::size_t> conv_widths{3, 7, 14};
    std::size_t conv_filters = 8;
    std::size_t attention_dim = 16;
    bool recurrent = false;  // Bi-GRU over the short-term window
    std::size_t gru_hidden = 8;
    std::size_t gru_layers = 1;  // stacked Bi-GRU layers
    Wiring wiring = Wiring::separate;

    // Input sizes, normally copied from the feature context.
    std::size_t window_days = 30;
    std::size_t static_vocab = 64;
    std::size_t icm_dim = 64;

    double p_min = 50.0;
    double p_max = 300.0;
    double k_benchmark = 1.1;
    double b_scale = 175.0;  // b = b_scale * softplus(raw)

    std::size_t context_dim() const { return 9 * embed_dim; }
    std::size_t group_context_dim() const { return 6 * embed_dim; }
    std::size_t internal_dim() const { return icm_dim + kQualityFeatures * embed_dim; }
    std::size_t external_dim() const { return 1 + kEcmFeatures; }
    std::size_t temporal_dim() const;

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// Copies input sizes and bounds from a feature context.
ModelConfig model_config_for(const FeatureContext& context, ModelConfig base = {});

struct TrainConfig {
    double alpha = 1.0;
    double beta = 0.5;
    double theta = 1.0;
    double k_benchmark = 1.1;
    std::size_t batch = 512;
    double lr = 0.001;
    double dropout = 0.2;
    int epochs = 30;
    std::uint64_t seed = 1;
    double lambda = 0.9;
    // Alternative weighting (alpha, beta) = (lambda, 1 - lambda).
    bool lambda_weighting = false;

    double loss_alpha() const { return lambda_weighting ? lambda : alpha; }
    double loss_beta() const { return lambda_weighting ? 1.0 - lambda : beta; }
    void validate() const;
    nlohmann::json to_json() const;
};

struct FeatureBundle {
    ad::Var v_c;
    ad::Var v_i;
    ad::Var v_e;
    ad::Var v_l;
};

struct GroupBundle {
    ad::Var v_c;
    ad::Var v_l;
};

struct HeadOutputs {
    ad::Var w_r;  // [B,1]
    ad::Var b_r;
    ad::Var w_g;
    ad::Var b_g;
    FeatureBundle room;
    GroupBundle group;
    ad::Var gate_input;  // transferred group representation before gating
};

struct HeadValues {
    double w_r = 0.0;
    double b_r = 0.0;
    double w_g = 0.0;
    double b_g = 0.0;
};

class ElasticityModel {
public:
    ElasticityModel(ModelConfig config, std::uint64_t seed);
    // Adopts trained parameters; names and shapes must match the config.
    ElasticityModel(ModelConfig config, ad::ParameterStore params);

    const ModelConfig& config() const { return config_; }
    ad::ParameterStore& params() { return params_; }
    const ad::ParameterStore& params() const { return params_; }

    HeadOutputs forward(ad::Tape& tape, std::span<const RawExample* const> batch, bool training, double dropout,
                        std::mt19937_64& rng);
    std::vector<HeadValues> evaluate(std::span<const RawExample* const> batch);
    HeadValues evaluate(const RawExample& example);

private:
    void create_parameters(std::uint64_t seed);

    ModelConfig config_;
    ad::ParameterStore params_;
};

// One (rid, night) training row with its room and group targets.
struct TrainingExample {
    RawExample x;
    double inventory = 1.0;
    double q_avg = 0.0;
    bool room_observed = false;
    double price = 0.0;
    double quantity = 0.0;
    bool group_observed = false;
    double group_price = 0.0;
    double group_quantity = 0.0;
    double group_q_avg = 0.0;
};

// Builds rows for every room and night in [from, to). Rooms unobserved on a
// night keep a group target (the group's largest bin that night) but no room
// target; with `observed_only` they are dropped.
std::vector<TrainingExample> build_examples(const FeatureContext& context, std::span<const ReservationRecord> records,
                                            std::span<const GroupRecord> groups, double group_bin_width, Night from,
                                            Night to, bool observed_only);

struct LossBatch {
    std::vector<double> room_price, room_quantity, room_q_avg, room_mask;
    std::vector<double> group_price, group_quantity, group_q_avg, group_mask;

    static LossBatch from_examples(std::span<const TrainingExample* const> rows);
};

// F(P) = k * q_avg * exp(w P) + b / P, elementwise over [B,1].
ad::Var predicted_sales(ad::Var w, ad::Var b, std::span<const double> price, std::span<const double> q_avg,
                        double k_benchmark);

// alpha * mean huber(q_r - F_r) + beta * mean huber(q_g - F_g); masked rows
// contribute zero, means divide by the batch size.
ad::Var multitask_loss(const HeadOutputs& out, const LossBatch& batch, double alpha, double beta, double theta,
                       double k_benchmark);

struct TrainResult {
    std::vector<double> epoch_loss;
    std::vector<double> validation_loss;
};

// Mini-batch Adam over shuffled rows. On a non-finite loss the parameters
// from before the failing step are restored and NumericError is thrown.
TrainResult train(ElasticityModel& model, std::span<const TrainingExample> rows, const TrainConfig& config,
                  std::span<const TrainingExample> validation = {});

// Mean loss in inference mode.
double evaluate_loss(ElasticityModel& model, std::span<const TrainingExample> rows, const TrainConfig& config);

ExpDemandCurve predict_curve(ElasticityModel& model, const FeatureContext& context, RoomId rid, Night night);
double predict_occupancy(ElasticityModel& model, const FeatureContext& context, RoomId rid, Night night, double price);
PricingResult suggest_price(ElasticityModel& model, const FeatureContext& context, RoomId rid, Night night,
                            const PriceBounds& bounds);

}  // namespace elastica
