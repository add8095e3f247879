#include "trendkern/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace trendkern::model {

using num::Tape;
using num::Tensor;
using num::ValueId;

void KernConfig::validate() const {
    if (input_len < 1 || output_len < 1) throw std::invalid_argument("KernConfig: window lengths must be >= 1");
    if (feat_size < 1 || rnn_hidden_size < 1) throw std::invalid_argument("KernConfig: sizes must be >= 1");
    if (triplet_lambda < 0.0) throw std::invalid_argument("KernConfig: triplet_lambda must be >= 0");
    if (margin <= 0.0) throw std::invalid_argument("KernConfig: margin must be > 0");
    if (sample_range < 1) throw std::invalid_argument("KernConfig: sample_range must be >= 1");
}

std::vector<Tensor*> KernParams::all() {
    std::vector<Tensor*> out{&element_embedding, &group_embedding};
    if (has_parent_embedding()) out.push_back(&parent_embedding);
    for (LstmWeights* lstm : {&encoder, &decoder}) {
        out.push_back(&lstm->input_weights);
        out.push_back(&lstm->recurrent_weights);
        out.push_back(&lstm->bias);
    }
    out.push_back(&output_weight);
    out.push_back(&output_bias);
    return out;
}

std::vector<const Tensor*> KernParams::all() const {
    auto mutable_list = const_cast<KernParams*>(this)->all();
    return {mutable_list.begin(), mutable_list.end()};
}

std::vector<std::string> KernParams::names() const {
    std::vector<std::string> out{"element_embedding", "group_embedding"};
    if (has_parent_embedding()) out.push_back("parent_embedding");
    for (const char* prefix : {"encoder", "decoder"}) {
        out.push_back(std::string(prefix) + ".input_weights");
        out.push_back(std::string(prefix) + ".recurrent_weights");
        out.push_back(std::string(prefix) + ".bias");
    }
    out.push_back("output_weight");
    out.push_back("output_bias");
    return out;
}

namespace {

Tensor xavier_matrix(int rows, int cols, num::Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Tensor t = Tensor::zeros({rows, cols});
    for (size_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-bound, bound);
    return t;
}

Tensor lstm_bias(int hidden) {
    // Gate order i|f|g|o; forget-gate slice starts warm.
    Tensor b = Tensor::zeros({4 * hidden});
    for (int j = hidden; j < 2 * hidden; ++j) b.at(j) = 1.0;
    return b;
}

}  // namespace

KernParams init_params(const KernConfig& config, int element_vocab, int group_vocab, int category_vocab,
                       uint64_t seed) {
    config.validate();
    if (element_vocab < 1 || group_vocab < 1) throw std::invalid_argument("init_params: vocab sizes must be >= 1");
    if (config.ext_kg && category_vocab < 1) {
        throw std::invalid_argument("init_params: ext_kg needs a category vocab >= 1");
    }
    num::Rng rng(seed);
    const int feat = config.feat_size;
    const int hidden = config.rnn_hidden_size;
    const int step_input = config.step_input_size();

    KernParams p;
    p.element_vocab = element_vocab;
    p.group_vocab = group_vocab;
    p.category_vocab = config.ext_kg ? category_vocab : 0;
    p.element_embedding = xavier_matrix(element_vocab, feat, rng);
    p.group_embedding = xavier_matrix(group_vocab, feat, rng);
    if (config.ext_kg) p.parent_embedding = xavier_matrix(category_vocab, feat, rng);
    for (LstmWeights* lstm : {&p.encoder, &p.decoder}) {
        lstm->input_weights = xavier_matrix(step_input, 4 * hidden, rng);
        lstm->recurrent_weights = xavier_matrix(hidden, 4 * hidden, rng);
        lstm->bias = lstm_bias(hidden);
    }
    p.output_weight = xavier_matrix(hidden, 1, rng);
    p.output_bias = Tensor::zeros({1});
    return p;
}

StagedParams stage_params(Tape& tape, const KernParams& params, bool ext_kg) {
    if (ext_kg && !params.has_parent_embedding()) {
        throw std::invalid_argument("stage_params: ext_kg is enabled but params carry no parent embedding");
    }
    StagedParams ids;
    ids.element_embedding = tape.leaf(params.element_embedding);
    ids.group_embedding = tape.leaf(params.group_embedding);
    if (ext_kg) ids.parent_embedding = tape.leaf(params.parent_embedding);
    auto stage_lstm = [&tape](const LstmWeights& w, StagedParams::Lstm& out) {
        out.input_weights = tape.leaf(w.input_weights);
        out.recurrent_weights = tape.leaf(w.recurrent_weights);
        out.bias = tape.leaf(w.bias);
    };
    stage_lstm(params.encoder, ids.encoder);
    stage_lstm(params.decoder, ids.decoder);
    ids.output_weight = tape.leaf(params.output_weight);
    ids.output_bias = tape.leaf(params.output_bias);
    return ids;
}

std::vector<ValueId> StagedParams::all(bool ext_kg) const {
    std::vector<ValueId> out{element_embedding, group_embedding};
    if (ext_kg) out.push_back(parent_embedding);
    for (const Lstm* lstm : {&encoder, &decoder}) {
        out.push_back(lstm->input_weights);
        out.push_back(lstm->recurrent_weights);
        out.push_back(lstm->bias);
    }
    out.push_back(output_weight);
    out.push_back(output_bias);
    return out;
}

namespace {

struct StepState {
    ValueId hidden;
    ValueId cell;
};

StepState lstm_step(Tape& tape, const StagedParams::Lstm& weights, ValueId x, StepState prev, int hidden) {
    ValueId z = tape.add(tape.add(tape.matmul(x, weights.input_weights),
                                  tape.matmul(prev.hidden, weights.recurrent_weights)),
                         weights.bias);
    ValueId in_gate = tape.sigmoid(tape.slice_cols(z, 0, hidden));
    ValueId forget_gate = tape.sigmoid(tape.slice_cols(z, hidden, 2 * hidden));
    ValueId candidate = tape.tanh(tape.slice_cols(z, 2 * hidden, 3 * hidden));
    ValueId out_gate = tape.sigmoid(tape.slice_cols(z, 3 * hidden, 4 * hidden));
    ValueId cell = tape.add(tape.mul(forget_gate, prev.cell), tape.mul(in_gate, candidate));
    ValueId new_hidden = tape.mul(out_gate, tape.tanh(cell));
    return {new_hidden, cell};
}

/// Embedding rows for the batch, concatenated once and re-fed per step.
ValueId feature_block(Tape& tape, const StagedParams& params, const KernConfig& config,
                      const FeatureBatch& features) {
    if (features.element_ids.size() != features.group_ids.size()) {
        throw std::invalid_argument("feature batch: element/group id counts differ");
    }
    std::vector<ValueId> parts;
    parts.push_back(tape.gather(params.element_embedding, features.element_ids));
    parts.push_back(tape.gather(params.group_embedding, features.group_ids));
    if (config.ext_kg) {
        if (features.parent_ids.size() != features.element_ids.size()) {
            throw std::invalid_argument("feature batch: ext_kg needs one parent id per sample");
        }
        parts.push_back(tape.gather(params.parent_embedding, features.parent_ids));
    }
    return tape.concat(parts);
}

}  // namespace

EncodedState encode(Tape& tape, const StagedParams& params, const KernConfig& config, ValueId input,
                    const FeatureBatch& features) {
    const Tensor& in = tape.value(input);
    if (in.rank() != 2 || in.dim(1) != config.input_len) {
        throw std::invalid_argument("encode: input shape " + num::shape_str(in.shape()) +
                                    " does not match input_len " + std::to_string(config.input_len));
    }
    const int batch = in.dim(0);
    const int hidden = config.rnn_hidden_size;
    ValueId embeddings = feature_block(tape, params, config, features);
    StepState state{tape.leaf(Tensor::zeros({batch, hidden})), tape.leaf(Tensor::zeros({batch, hidden}))};
    for (int t = 0; t < config.input_len; ++t) {
        ValueId x = tape.concat({tape.slice_cols(input, t, t + 1), embeddings});
        state = lstm_step(tape, params.encoder, x, state, hidden);
    }
    return EncodedState{state.hidden, state.cell};
}

ValueId decode(Tape& tape, const StagedParams& params, const KernConfig& config, const EncodedState& state,
               ValueId last_values, const FeatureBatch& features, int output_len) {
    if (output_len < 1) throw std::invalid_argument("decode: output_len must be >= 1");
    const int hidden = config.rnn_hidden_size;
    ValueId embeddings = feature_block(tape, params, config, features);
    StepState step{state.hidden, state.cell};
    ValueId prev_value = last_values;
    std::vector<ValueId> predictions;
    predictions.reserve(static_cast<size_t>(output_len));
    for (int t = 0; t < output_len; ++t) {
        ValueId x = tape.concat({prev_value, embeddings});
        step = lstm_step(tape, params.decoder, x, step, hidden);
        ValueId pred = tape.add(tape.matmul(step.hidden, params.output_weight), params.output_bias);
        predictions.push_back(pred);
        prev_value = pred;
    }
    return tape.concat(predictions);
}

ValueId regression_loss(Tape& tape, ValueId forecast, ValueId target) {
    const Tensor& f = tape.value(forecast);
    const Tensor& t = tape.value(target);
    if (!f.same_shape(t)) {
        throw std::invalid_argument("regression_loss: forecast " + num::shape_str(f.shape()) + " vs target " +
                                    num::shape_str(t.shape()));
    }
    return tape.mean(tape.abs(tape.add(forecast, tape.scale(target, -1.0))));
}

ValueId triplet_loss(Tape& tape, ValueId anchor_hidden, ValueId positive_hidden, ValueId negative_hidden,
                     double margin) {
    ValueId anchor = tape.l2_normalize(anchor_hidden);
    ValueId positive = tape.l2_normalize(positive_hidden);
    ValueId negative = tape.l2_normalize(negative_hidden);
    ValueId d_pos = tape.euclidean_distance(anchor, positive);
    ValueId d_neg = tape.euclidean_distance(anchor, negative);
    ValueId hinge = tape.relu(tape.add_scalar(tape.add(d_pos, tape.scale(d_neg, -1.0)), margin));
    return tape.mean(hinge);
}

ValueId combine_losses(Tape& tape, ValueId regression, ValueId triplet, double lambda, bool int_kg) {
    if (!int_kg) return regression;
    if (triplet < 0) throw std::invalid_argument("combine_losses: int_kg is on but no triplet loss was built");
    return tape.add(regression, tape.scale(triplet, lambda));
}

LossGraph build_total_loss(Tape& tape, const KernParams& params, const KernConfig& config, const BatchData& batch,
                           const TripletBatch* triplets) {
    if (config.int_kg && (triplets == nullptr || triplets->positive_inputs.numel() == 0)) {
        throw std::invalid_argument("build_total_loss: int_kg is on but no triplets were provided");
    }
    LossGraph graph;
    graph.params = stage_params(tape, params, config.ext_kg);
    ValueId input = tape.leaf(batch.inputs);
    ValueId target = tape.leaf(batch.targets);
    EncodedState encoded = encode(tape, graph.params, config, input, batch.features);
    ValueId last = tape.slice_cols(input, config.input_len - 1, config.input_len);
    graph.forecast = decode(tape, graph.params, config, encoded, last, batch.features, config.output_len);
    graph.regression = regression_loss(tape, graph.forecast, target);
    if (config.int_kg) {
        ValueId pos_input = tape.leaf(triplets->positive_inputs);
        ValueId neg_input = tape.leaf(triplets->negative_inputs);
        EncodedState pos = encode(tape, graph.params, config, pos_input, triplets->positive_features);
        EncodedState neg = encode(tape, graph.params, config, neg_input, triplets->negative_features);
        graph.triplet = triplet_loss(tape, encoded.hidden, pos.hidden, neg.hidden, config.margin);
    }
    graph.total = combine_losses(tape, graph.regression, graph.triplet, config.triplet_lambda, config.int_kg);
    return graph;
}

namespace {

constexpr char kMagic[8] = {'T', 'K', 'C', 'K', 'P', 'T', '1', '\n'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return value;
}

void write_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(t.rank()));
    for (int d : t.shape()) write_pod<int32_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

Tensor read_tensor(std::ifstream& in, const std::string& expected_name) {
    const auto name_len = read_pod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != expected_name) {
        throw std::runtime_error("checkpoint: expected tensor '" + expected_name + "', found '" + name + "'");
    }
    const auto rank = read_pod<uint32_t>(in);
    std::vector<int> shape;
    size_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        shape.push_back(read_pod<int32_t>(in));
        numel *= static_cast<size_t>(shape.back());
    }
    std::vector<double> data(numel);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor '" + expected_name + "'");
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    const KernConfig& c = checkpoint.config;
    write_pod<int32_t>(out, c.input_len);
    write_pod<int32_t>(out, c.output_len);
    write_pod<uint8_t>(out, c.ext_kg ? 1 : 0);
    write_pod<uint8_t>(out, c.int_kg ? 1 : 0);
    write_pod<double>(out, c.triplet_lambda);
    write_pod<int32_t>(out, c.sample_range);
    write_pod<int32_t>(out, c.feat_size);
    write_pod<int32_t>(out, c.rnn_hidden_size);
    write_pod<double>(out, c.margin);
    write_pod<uint64_t>(out, c.seed);
    const KernParams& p = checkpoint.params;
    write_pod<int32_t>(out, p.element_vocab);
    write_pod<int32_t>(out, p.group_vocab);
    write_pod<int32_t>(out, p.category_vocab);
    const auto tensors = p.all();
    const auto names = p.names();
    write_pod<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
    for (size_t i = 0; i < tensors.size(); ++i) write_tensor(out, names[i], *tensors[i]);
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("'" + path + "' is not a trendkern checkpoint");
    }
    Checkpoint ck;
    KernConfig& c = ck.config;
    c.input_len = read_pod<int32_t>(in);
    c.output_len = read_pod<int32_t>(in);
    c.ext_kg = read_pod<uint8_t>(in) != 0;
    c.int_kg = read_pod<uint8_t>(in) != 0;
    c.triplet_lambda = read_pod<double>(in);
    c.sample_range = read_pod<int32_t>(in);
    c.feat_size = read_pod<int32_t>(in);
    c.rnn_hidden_size = read_pod<int32_t>(in);
    c.margin = read_pod<double>(in);
    c.seed = read_pod<uint64_t>(in);
    KernParams& p = ck.params;
    p.element_vocab = read_pod<int32_t>(in);
    p.group_vocab = read_pod<int32_t>(in);
    p.category_vocab = read_pod<int32_t>(in);
    const auto count = read_pod<uint32_t>(in);
    const auto names = p.names();
    if (count != names.size()) {
        throw std::runtime_error("checkpoint: tensor count " + std::to_string(count) + " does not match config");
    }
    const auto tensors = p.all();
    for (size_t i = 0; i < tensors.size(); ++i) *tensors[i] = read_tensor(in, names[i]);
    return ck;
}

}  // namespace trendkern::model
