#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trendkern/tape.hpp"
#include "trendkern/tensor.hpp"

namespace trendkern::model {

/// Model hyperparameters. Defaults mirror the GeoStyle column of the
/// published parameter table.
struct KernConfig {
    int input_len = 52;
    int output_len = 26;
    bool ext_kg = true;
    bool int_kg = true;
    double triplet_lambda = 0.002;
    int sample_range = 500;
    int feat_size = 10;
    int rnn_hidden_size = 50;
    double margin = 0.5;
    uint64_t seed = 42;

    void validate() const;
    /// Per-step LSTM input width: value + element + group (+ parent).
    int step_input_size() const { return 1 + (ext_kg ? 3 : 2) * feat_size; }
    bool operator==(const KernConfig&) const = default;
};

struct LstmWeights {
    num::Tensor input_weights;      // [D_in, 4H], gate order i|f|g|o
    num::Tensor recurrent_weights;  // [H, 4H]
    num::Tensor bias;               // [4H]
};

/// All learnable weights. The parent embedding exists only when the config
/// was built with ext_kg; tensor order of all() is the canonical
/// initialization and checkpoint order.
struct KernParams {
    int element_vocab = 0;
    int group_vocab = 0;
    int category_vocab = 0;  // 0 when no parent embedding
    num::Tensor element_embedding;
    num::Tensor group_embedding;
    num::Tensor parent_embedding;
    LstmWeights encoder;
    LstmWeights decoder;
    num::Tensor output_weight;  // [H, 1]
    num::Tensor output_bias;    // [1]

    bool has_parent_embedding() const { return category_vocab > 0; }
    std::vector<num::Tensor*> all();
    std::vector<const num::Tensor*> all() const;
    std::vector<std::string> names() const;
};

/// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out)) per matrix),
/// zero biases except LSTM forget gates at 1.0. Deterministic in the seed.
KernParams init_params(const KernConfig& config, int element_vocab, int group_vocab, int category_vocab,
                       uint64_t seed);

/// Tape ids of one batch's parameter leaves.
struct StagedParams {
    num::ValueId element_embedding = -1;
    num::ValueId group_embedding = -1;
    num::ValueId parent_embedding = -1;
    struct Lstm {
        num::ValueId input_weights = -1;
        num::ValueId recurrent_weights = -1;
        num::ValueId bias = -1;
    } encoder, decoder;
    num::ValueId output_weight = -1;
    num::ValueId output_bias = -1;

    std::vector<num::ValueId> all(bool ext_kg) const;
};

StagedParams stage_params(num::Tape& tape, const KernParams& params, bool ext_kg);

/// Per-batch embedding ids; parent_ids stays empty when ext_kg is off.
struct FeatureBatch {
    std::vector<int> element_ids;
    std::vector<int> group_ids;
    std::vector<int> parent_ids;
};

struct EncodedState {
    num::ValueId hidden = -1;  // [B, H]
    num::ValueId cell = -1;    // [B, H]
};

/// Runs the encoder LSTM over the input window. Each timestep consumes
/// [value_t || element || group (|| parent)] with the embeddings re-fed at
/// every step.
EncodedState encode(num::Tape& tape, const StagedParams& params, const KernConfig& config, num::ValueId input,
                    const FeatureBatch& features);

/// Autoregressive decoder: step 1 consumes the last input value, later steps
/// consume the previous prediction. Returns the forecast [B, output_len].
num::ValueId decode(num::Tape& tape, const StagedParams& params, const KernConfig& config,
                    const EncodedState& state, num::ValueId last_values, const FeatureBatch& features,
                    int output_len);

/// Mean absolute error over every horizon step of every sample.
num::ValueId regression_loss(num::Tape& tape, num::ValueId forecast, num::ValueId target);

/// Hinge on l2-normalized hidden vectors:
/// mean(max(0, d(k,p) - d(k,q) + margin)).
num::ValueId triplet_loss(num::Tape& tape, num::ValueId anchor_hidden, num::ValueId positive_hidden,
                          num::ValueId negative_hidden, double margin);

/// regression + lambda * triplet when int_kg, regression alone otherwise.
num::ValueId combine_losses(num::Tape& tape, num::ValueId regression, num::ValueId triplet, double lambda,
                            bool int_kg);

struct BatchData {
    num::Tensor inputs;   // [B, input_len]
    num::Tensor targets;  // [B, output_len]
    FeatureBatch features;
};

struct TripletBatch {
    num::Tensor positive_inputs;  // [B, input_len]
    num::Tensor negative_inputs;  // [B, input_len]
    FeatureBatch positive_features;
    FeatureBatch negative_features;
};

struct LossGraph {
    StagedParams params;
    num::ValueId forecast = -1;
    num::ValueId regression = -1;
    num::ValueId triplet = -1;  // -1 when int_kg is off
    num::ValueId total = -1;
};

/// Builds the full training graph for one batch: forecast + regression loss,
/// plus the triplet term when int_kg is on (triplets required then).
LossGraph build_total_loss(num::Tape& tape, const KernParams& params, const KernConfig& config,
                           const BatchData& batch, const TripletBatch* triplets);

struct Checkpoint {
    KernConfig config;
    KernParams params;
};

/// Binary container: config echo, vocab sizes, then every tensor with a
/// shape header. Write -> read is value-exact.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace trendkern::model
