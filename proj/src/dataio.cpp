#include "trendkern/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "trendkern/tensor.hpp"

namespace trendkern::dataio {

using nlohmann::json;

int Dataset::series_length() const {
    if (series.empty()) throw std::runtime_error("Dataset: no series");
    return static_cast<int>(series.front().values.size());
}

void Dataset::validate() const {
    if (series.empty()) throw std::runtime_error("Dataset: no series");
    const size_t length = series.front().values.size();
    std::vector<int> bad_lengths;
    std::unordered_set<int64_t> seen_pairs;
    for (const TrendSeries& s : series) {
        if (s.values.empty()) {
            throw std::runtime_error("Dataset: series " + std::to_string(s.series_id) + " has no values");
        }
        if (s.values.size() != length) bad_lengths.push_back(s.series_id);
        for (size_t i = 0; i < s.values.size(); ++i) {
            const double v = s.values[i];
            if (!std::isfinite(v) || v < 0.0) {
                throw std::runtime_error("Dataset: series " + std::to_string(s.series_id) + " value " +
                                         std::to_string(i) + " is not a finite non-negative number");
            }
        }
        if (s.group_id < 0 || s.group_id >= group_vocab_size) {
            throw std::runtime_error("Dataset: series " + std::to_string(s.series_id) + " group_id " +
                                     std::to_string(s.group_id) + " outside vocab " +
                                     std::to_string(group_vocab_size));
        }
        if (s.element_id < 0 || s.element_id >= element_vocab_size) {
            throw std::runtime_error("Dataset: series " + std::to_string(s.series_id) + " element_id " +
                                     std::to_string(s.element_id) + " outside vocab " +
                                     std::to_string(element_vocab_size));
        }
        const int64_t key = static_cast<int64_t>(s.group_id) * (static_cast<int64_t>(element_vocab_size) + 1) +
                            s.element_id;
        if (!seen_pairs.insert(key).second) {
            throw std::runtime_error("Dataset: duplicate (group_id, element_id) pair (" +
                                     std::to_string(s.group_id) + ", " + std::to_string(s.element_id) + ")");
        }
    }
    if (!bad_lengths.empty()) {
        std::ostringstream os;
        os << "Dataset: inconsistent series lengths (expected " << length << "); offending series_ids:";
        for (int id : bad_lengths) os << ' ' << id;
        throw std::runtime_error(os.str());
    }
}

DatasetFormat parse_format(const std::string& name) {
    if (name == "trendkern-json") return DatasetFormat::kTrendkernJson;
    if (name == "geostyle-raw") return DatasetFormat::kGeostyleRaw;
    throw std::invalid_argument("unknown dataset format '" + name + "' (expected trendkern-json or geostyle-raw)");
}

std::string format_name(DatasetFormat format) {
    return format == DatasetFormat::kTrendkernJson ? "trendkern-json" : "geostyle-raw";
}

namespace {

Dataset load_trendkern_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("parse error in '" + path + "': " + e.what());
    }
    Dataset ds;
    try {
        ds.group_vocab_size = doc.at("group_vocab_size").get<int>();
        ds.element_vocab_size = doc.at("element_vocab_size").get<int>();
        if (doc.contains("bin_duration")) ds.bin_duration = doc.at("bin_duration").get<std::string>();
        const json& arr = doc.at("series");
        size_t record = 0;
        for (const json& rec : arr) {
            TrendSeries s;
            try {
                s.series_id = rec.at("series_id").get<int>();
                s.group_id = rec.at("group_id").get<int>();
                s.element_id = rec.at("element_id").get<int>();
                for (const json& v : rec.at("values")) {
                    if (!v.is_number()) {
                        throw std::runtime_error("values must be numbers");
                    }
                    s.values.push_back(v.get<double>());
                }
            } catch (const std::exception& e) {
                throw std::runtime_error("malformed series record " + std::to_string(record) + ": " + e.what());
            }
            ds.series.push_back(std::move(s));
            ++record;
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed dataset '" + path + "': " + e.what());
    }
    ds.validate();
    return ds;
}

// Long-format CSV export: header "city,style,week,fraction", one row per
// observation. Group ids follow first appearance of each city, element ids
// first appearance of each style; weeks must cover the same contiguous
// 0-based range for every (city, style) pair.
Dataset load_geostyle_raw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
    ++line_no;
    if (line != "city,style,week,fraction") {
        throw std::runtime_error("'" + path + "' line 1: expected header 'city,style,week,fraction'");
    }
    std::unordered_map<std::string, int> city_ids;
    std::unordered_map<std::string, int> style_ids;
    std::map<std::pair<int, int>, std::map<int, double>> observations;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string city, style, week_text, value_text;
        if (!std::getline(row, city, ',') || !std::getline(row, style, ',') ||
            !std::getline(row, week_text, ',') || !std::getline(row, value_text)) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": malformed record");
        }
        int week;
        double value;
        try {
            size_t used = 0;
            week = std::stoi(week_text, &used);
            if (used != week_text.size()) throw std::invalid_argument("trailing characters");
            value = std::stod(value_text, &used);
            if (used != value_text.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": malformed record");
        }
        if (!std::isfinite(value) || value < 0.0) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) +
                                     ": fraction must be finite and non-negative");
        }
        if (week < 0) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": negative week index");
        }
        const int g = city_ids.emplace(city, static_cast<int>(city_ids.size())).first->second;
        const int e = style_ids.emplace(style, static_cast<int>(style_ids.size())).first->second;
        auto [it, fresh] = observations[{g, e}].emplace(week, value);
        if (!fresh) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": duplicate week " +
                                     std::to_string(week) + " for this city/style pair");
        }
    }
    if (observations.empty()) throw std::runtime_error("'" + path + "': no data rows");

    Dataset ds;
    ds.group_vocab_size = static_cast<int>(city_ids.size());
    ds.element_vocab_size = static_cast<int>(style_ids.size());
    int next_id = 0;
    for (const auto& [pair, weeks] : observations) {
        TrendSeries s;
        s.series_id = next_id++;
        s.group_id = pair.first;
        s.element_id = pair.second;
        int expected = 0;
        for (const auto& [week, value] : weeks) {
            if (week != expected) {
                throw std::runtime_error("'" + path + "': series for group " + std::to_string(s.group_id) +
                                         "/element " + std::to_string(s.element_id) + " missing week " +
                                         std::to_string(expected));
            }
            s.values.push_back(value);
            ++expected;
        }
        ds.series.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path, DatasetFormat format) {
    return format == DatasetFormat::kTrendkernJson ? load_trendkern_json(path) : load_geostyle_raw(path);
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    json doc;
    doc["group_vocab_size"] = dataset.group_vocab_size;
    doc["element_vocab_size"] = dataset.element_vocab_size;
    doc["bin_duration"] = dataset.bin_duration;
    json arr = json::array();
    for (const TrendSeries& s : dataset.series) {
        json rec;
        rec["series_id"] = s.series_id;
        rec["group_id"] = s.group_id;
        rec["element_id"] = s.element_id;
        rec["values"] = s.values;
        arr.push_back(std::move(rec));
    }
    doc["series"] = std::move(arr);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file '" + path + "'");
    out << doc.dump(1) << '\n';
}

std::pair<SampleSet, SampleSet> make_samples(const Dataset& dataset, int input_len, int output_len) {
    if (input_len < 1 || output_len < 1) throw std::invalid_argument("make_samples: window lengths must be >= 1");
    const int window = input_len + output_len;
    for (const TrendSeries& s : dataset.series) {
        const int length = static_cast<int>(s.values.size());
        if (length < window + 1) {
            throw std::invalid_argument("make_samples: series " + std::to_string(s.series_id) + " has length " +
                                        std::to_string(length) + ", need at least " + std::to_string(window + 1) +
                                        " (input_len + output_len + 1)");
        }
    }
    SampleSet train{{}, SampleRole::kTrain, input_len, output_len};
    SampleSet test{{}, SampleRole::kTest, input_len, output_len};
    int next_id = 0;
    for (const TrendSeries& s : dataset.series) {
        const int length = static_cast<int>(s.values.size());
        const int num_windows = length - window + 1;
        for (int start = 0; start < num_windows; ++start) {
            TrendSample sample;
            sample.sample_id = next_id++;
            sample.series_id = s.series_id;
            sample.group_id = s.group_id;
            sample.element_id = s.element_id;
            sample.window_start = start;
            sample.input.assign(s.values.begin() + start, s.values.begin() + start + input_len);
            sample.target.assign(s.values.begin() + start + input_len, s.values.begin() + start + window);
            if (start == num_windows - 1) {
                test.samples.push_back(std::move(sample));
            } else {
                train.samples.push_back(std::move(sample));
            }
        }
    }
    return {std::move(train), std::move(test)};
}

Dataset generate_synthetic(int num_groups, int num_elements, int length, uint64_t seed, int phase_groups) {
    if (num_groups < 1 || num_elements < 1 || length < 1) {
        throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
    }
    Dataset ds;
    ds.group_vocab_size = num_groups;
    ds.element_vocab_size = num_elements;
    constexpr double kPeriod = 52.0;  // weekly bins, annual cycle
    for (int g = 0; g < num_groups; ++g) {
        for (int e = 0; e < num_elements; ++e) {
            TrendSeries s;
            s.series_id = g * num_elements + e;
            s.group_id = g;
            s.element_id = e;
            num::Rng rng(num::Rng::derive(seed, static_cast<uint64_t>(s.series_id)));
            const double base = rng.uniform(0.25, 0.6);
            const double amp = rng.uniform(0.05, 0.25);
            double phase = rng.uniform(0.0, kPeriod);
            const double slope = rng.uniform(-0.001, 0.001);
            if (phase_groups > 0) phase = kPeriod * (e % phase_groups) / phase_groups;
            s.values.resize(static_cast<size_t>(length));
            for (int t = 0; t < length; ++t) {
                const double seasonal = amp * std::sin(2.0 * std::numbers::pi * (t + phase) / kPeriod);
                const double v = base + seasonal + slope * t + rng.normal(0.0, 0.01);
                s.values[static_cast<size_t>(t)] = std::clamp(v, 0.0, 1.0);
            }
            ds.series.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace trendkern::dataio
