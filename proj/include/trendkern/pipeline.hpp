#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trendkern/config.hpp"
#include "trendkern/dataio.hpp"
#include "trendkern/knowledge.hpp"
#include "trendkern/model.hpp"

namespace trendkern::pipeline {

/// Mean of |pred - target| over every (sample, horizon step).
double mae(const std::vector<std::vector<double>>& predictions, const std::vector<std::vector<double>>& targets);

/// 100 * mean of |pred - target| / |target| over points with |target| above
/// epsilon; excluded points are counted through excluded_count.
double mape(const std::vector<std::vector<double>>& predictions, const std::vector<std::vector<double>>& targets,
            double epsilon = 1e-6, size_t* excluded_count = nullptr);

struct MetricsReport {
    double mae = 0.0;
    double mape = 0.0;
    std::vector<double> mae_per_step;
    std::vector<double> mape_per_step;
    int sample_count = 0;
    size_t mape_excluded = 0;
    model::KernConfig config;
};

/// Call counts into the knowledge module; both stay zero on a KERN-IE run.
struct KnowledgeCounters {
    uint64_t taxonomy_lookups = 0;
    uint64_t triplets_sampled = 0;
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double test_mae = 0.0;
    double test_mape = 0.0;
    bool saved = false;
};

struct TrainResult {
    std::vector<EpochLog> log;
    double best_test_mae = 0.0;
    double final_train_mae = 0.0;  // forward pass of the final weights over the train set
    std::string checkpoint_path;
    std::string log_path;
    std::string metrics_path;
    KnowledgeCounters counters;
};

/// Per-epoch: set lr, shuffle, resample triplets (int_kg), train batches of
/// batch_size (final partial batch kept), evaluate on the test split, and
/// keep the checkpoint with the best test MAE. Deterministic given the seed.
/// Writes out_dir/train_log.jsonl, out_dir/checkpoint.bin, out_dir/metrics.json.
TrainResult train(const cli::ExperimentConfig& config, const dataio::Dataset& dataset, bool quiet = true);

/// Forward-only scoring of a saved model. The checkpoint must match the
/// sample windows and id ranges; no parameters are mutated.
MetricsReport evaluate(const model::Checkpoint& checkpoint, const dataio::SampleSet& test,
                       const knowledge::Taxonomy* taxonomy);

/// Loads the taxonomy named by the config, or derives the documented modulo
/// fallback when ext_kg is on and no path is set.
knowledge::Taxonomy resolve_taxonomy(const cli::ExperimentConfig& config, int element_vocab_size);

/// Repeat-last-value baseline over a test split.
double naive_last_value_mae(const dataio::SampleSet& test);

/// One row of the reproduction sweep. The label fixes the ablation flags:
/// KERN=(ext,int), KERN-I=(ext only), KERN-E=(int only), KERN-IE=(neither).
struct ExperimentSpec {
    std::string label;
    std::string dataset_id;  // "geostyle" | "fit-half" | "fit-one" | free-form
    int output_len = 0;
    double triplet_lambda = 0.0;
    int sample_range = 0;
};

std::pair<bool, bool> label_flags(const std::string& label);  // (ext_kg, int_kg)
std::string label_from_flags(bool ext_kg, bool int_kg);

struct ExperimentRun {
    ExperimentSpec spec;
    cli::ExperimentConfig config;
};

struct ReproduceRow {
    ExperimentSpec spec;
    bool skipped = false;
    std::string skip_reason;
    double mae = 0.0;
    double mape = 0.0;
    // Published numbers; NaN where the paper has no entry.
    double original_mae = 0.0;
    double replication_mae = 0.0;
    double original_mape = 0.0;
    double replication_mape = 0.0;
};

struct ReproduceTable {
    std::vector<ReproduceRow> rows;

    std::string render() const;    // aligned plain text
    std::string to_json() const;   // machine-readable
};

/// Runs every experiment in order; a missing dataset marks its row skipped
/// and the sweep continues.
ReproduceTable reproduce(const std::vector<ExperimentRun>& runs, bool quiet = true);

/// Published reference numbers for (dataset_id, label); NaN fields where the
/// paper tables have no entry.
struct ReferenceNumbers {
    double original_mae;
    double replication_mae;
    double original_mape;
    double replication_mape;
};
std::optional<ReferenceNumbers> reference_numbers(const std::string& dataset_id, const std::string& label);

void write_metrics_json(const MetricsReport& report, const std::string& path);

}  // namespace trendkern::pipeline
