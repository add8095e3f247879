#include "trendkern/config.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "trendkern/dataio.hpp"

namespace trendkern::cli {

namespace {

const std::unordered_set<std::string> kKnownKeys = {
    "dataset_profile", "input_len", "output_len", "ext_kg", "int_kg", "triplet_lambda", "sample_range",
    "feat_size", "rnn_hidden_size", "lr", "lr_decay", "lr_decay_interval", "lr_decay_gamma", "epoch",
    "batch_size", "dataset_path", "dataset_format", "taxonomy_path", "seed", "margin", "out_dir"};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& message) {
    throw std::runtime_error(origin + " line " + std::to_string(line) + ": " + message);
}

bool parse_bool(const std::string& v, const std::string& origin, int line, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(origin, line, "key '" + key + "' expects true or false, got '" + v + "'");
}

long long parse_int(const std::string& v, const std::string& origin, int line, const std::string& key) {
    try {
        size_t used = 0;
        long long value = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        fail(origin, line, "key '" + key + "' expects an integer, got '" + v + "'");
    }
}

double parse_float(const std::string& v, const std::string& origin, int line, const std::string& key) {
    try {
        size_t used = 0;
        double value = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        fail(origin, line, "key '" + key + "' expects a number, got '" + v + "'");
    }
}

std::string float_text(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

void ExperimentConfig::validate() const {
    model.validate();
    schedule.validate();
    if (epochs < 1) throw std::invalid_argument("config: epoch must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    dataio::parse_format(dataset_format);  // throws on unknown format
}

ExperimentConfig profile_defaults(const std::string& profile) {
    ExperimentConfig c;
    c.dataset_profile = profile;
    c.model.margin = 0.5;
    c.model.seed = 42;
    if (profile == "geostyle") {
        c.model.input_len = 52;
        c.model.output_len = 26;
        c.model.triplet_lambda = 0.002;
        c.model.sample_range = 500;
        c.schedule = num::LrSchedule{0.001, 15, 0.1, true};
        c.epochs = 20;
        c.batch_size = 400;
        c.dataset_format = "geostyle-raw";
        c.out_dir = "out/geostyle";
    } else if (profile == "fit-half" || profile == "fit-one") {
        c.model.input_len = 48;
        c.model.output_len = profile == "fit-half" ? 12 : 24;
        c.model.triplet_lambda = 0.002;
        c.model.sample_range = 500;
        c.schedule = num::LrSchedule{0.001, 10, 0.1, true};
        c.epochs = 15;
        c.batch_size = 400;
        c.dataset_format = "trendkern-json";
        c.out_dir = "out/" + profile;
    } else if (profile == "synthetic") {
        c.model.input_len = 26;
        c.model.output_len = 13;
        c.model.triplet_lambda = 0.002;
        c.model.sample_range = 50;
        c.schedule = num::LrSchedule{0.001, 40, 0.1, true};
        c.epochs = 50;
        c.batch_size = 64;
        c.dataset_format = "trendkern-json";
        c.out_dir = "out/synthetic";
    } else {
        throw std::invalid_argument("unknown dataset_profile '" + profile +
                                    "' (expected geostyle, fit-half, fit-one, or synthetic)");
    }
    return c;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    struct Entry {
        std::string key;
        std::string value;
        int line;
    };
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::string profile = "synthetic";
    int profile_line = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const size_t colon = stripped.find(':');
        if (colon == std::string::npos) fail(origin, line_no, "expected 'key: value'");
        const std::string key = trim(stripped.substr(0, colon));
        const std::string value = trim(stripped.substr(colon + 1));
        if (!kKnownKeys.count(key)) fail(origin, line_no, "unknown key '" + key + "'");
        if (value.empty() && key != "dataset_path" && key != "taxonomy_path") {
            fail(origin, line_no, "key '" + key + "' has no value");
        }
        if (key == "dataset_profile") {
            profile = value;
            profile_line = line_no;
            continue;
        }
        entries.push_back(Entry{key, value, line_no});
    }

    ExperimentConfig c;
    try {
        c = profile_defaults(profile);
    } catch (const std::exception& e) {
        fail(origin, profile_line, e.what());
    }
    for (const Entry& entry : entries) {
        const std::string& k = entry.key;
        const std::string& v = entry.value;
        const int ln = entry.line;
        if (k == "input_len") c.model.input_len = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "output_len") c.model.output_len = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "ext_kg") c.model.ext_kg = parse_bool(v, origin, ln, k);
        else if (k == "int_kg") c.model.int_kg = parse_bool(v, origin, ln, k);
        else if (k == "triplet_lambda") c.model.triplet_lambda = parse_float(v, origin, ln, k);
        else if (k == "sample_range") c.model.sample_range = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "feat_size") c.model.feat_size = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "rnn_hidden_size") c.model.rnn_hidden_size = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "lr") c.schedule.lr0 = parse_float(v, origin, ln, k);
        else if (k == "lr_decay") c.schedule.enabled = parse_bool(v, origin, ln, k);
        else if (k == "lr_decay_interval") c.schedule.decay_interval = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "lr_decay_gamma") c.schedule.gamma = parse_float(v, origin, ln, k);
        else if (k == "epoch") c.epochs = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "batch_size") c.batch_size = static_cast<int>(parse_int(v, origin, ln, k));
        else if (k == "dataset_path") c.dataset_path = v;
        else if (k == "dataset_format") c.dataset_format = v;
        else if (k == "taxonomy_path") c.taxonomy_path = v;
        else if (k == "seed") c.model.seed = static_cast<uint64_t>(parse_int(v, origin, ln, k));
        else if (k == "margin") c.model.margin = parse_float(v, origin, ln, k);
        else if (k == "out_dir") c.out_dir = v;
    }

    const int r = c.model.sample_range;
    if (r != 50 && r != 100 && r != 500 && r != 1000) {
        std::cerr << "warning: " << origin << ": sample_range " << r
                  << " is outside the published search grid {50, 100, 500, 1000}\n";
    }
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "dataset_profile: " << c.dataset_profile << '\n';
    out << "input_len: " << c.model.input_len << '\n';
    out << "output_len: " << c.model.output_len << '\n';
    out << "ext_kg: " << (c.model.ext_kg ? "true" : "false") << '\n';
    out << "int_kg: " << (c.model.int_kg ? "true" : "false") << '\n';
    out << "triplet_lambda: " << float_text(c.model.triplet_lambda) << '\n';
    out << "sample_range: " << c.model.sample_range << '\n';
    out << "feat_size: " << c.model.feat_size << '\n';
    out << "rnn_hidden_size: " << c.model.rnn_hidden_size << '\n';
    out << "lr: " << float_text(c.schedule.lr0) << '\n';
    out << "lr_decay: " << (c.schedule.enabled ? "true" : "false") << '\n';
    out << "lr_decay_interval: " << c.schedule.decay_interval << '\n';
    out << "lr_decay_gamma: " << float_text(c.schedule.gamma) << '\n';
    out << "epoch: " << c.epochs << '\n';
    out << "batch_size: " << c.batch_size << '\n';
    out << "dataset_path: " << c.dataset_path << '\n';
    out << "dataset_format: " << c.dataset_format << '\n';
    out << "taxonomy_path: " << c.taxonomy_path << '\n';
    out << "seed: " << c.model.seed << '\n';
    out << "margin: " << float_text(c.model.margin) << '\n';
    out << "out_dir: " << c.out_dir << '\n';
    return out.str();
}

}  // namespace trendkern::cli
