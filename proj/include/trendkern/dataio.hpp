#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace trendkern::dataio {

/// One popularity time series for a (user-group, fashion-element) pair.
/// Values are dimensionless fractions, one per fixed time bin.
struct TrendSeries {
    int series_id = 0;
    int group_id = 0;
    int element_id = 0;
    std::vector<double> values;
};

struct Dataset {
    std::vector<TrendSeries> series;
    int group_vocab_size = 0;
    int element_vocab_size = 0;
    std::string bin_duration = "week";

    int series_length() const;
    /// Enforces the structural invariants: equal lengths, finite non-negative
    /// values, unique (group, element) pairs, ids within vocab bounds.
    void validate() const;
};

/// One (input-window, target-window) instance. input and target are
/// contiguous, adjacent slices of the parent series.
struct TrendSample {
    int sample_id = 0;
    int series_id = 0;
    std::vector<double> input;
    std::vector<double> target;
    int group_id = 0;
    int element_id = 0;
    int window_start = 0;
};

enum class SampleRole { kTrain, kTest };

struct SampleSet {
    std::vector<TrendSample> samples;
    SampleRole role = SampleRole::kTrain;
    int input_len = 0;
    int output_len = 0;
};

enum class DatasetFormat { kTrendkernJson, kGeostyleRaw };

DatasetFormat parse_format(const std::string& name);  // "trendkern-json" | "geostyle-raw"
std::string format_name(DatasetFormat format);

Dataset load_dataset(const std::string& path, DatasetFormat format);
void save_dataset(const Dataset& dataset, const std::string& path);  // trendkern-json

/// Stride-1 windowing. The window ending at the series end is the single
/// test sample; every earlier window is a training sample. Sample ids are
/// dense in (series, window_start) order across both sets.
std::pair<SampleSet, SampleSet> make_samples(const Dataset& dataset, int input_len, int output_len);

/// Deterministic seasonal generator: one series per (group, element) pair,
/// clip(base + amp*sin(2*pi*(t+phase)/52) + slope*t + noise, 0, 1) with
/// per-series parameters from a seeded generator and noise stddev 0.01.
/// phase_groups > 0 pins each element's phase to one of that many evenly
/// spaced offsets (bucket = element_id % phase_groups) so that elements in
/// the same taxonomy bucket share their seasonal phase.
Dataset generate_synthetic(int num_groups, int num_elements, int length, uint64_t seed, int phase_groups = 0);

}  // namespace trendkern::dataio
