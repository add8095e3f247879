#pragma once

#include <string>

#include "trendkern/model.hpp"
#include "trendkern/optim.hpp"

namespace trendkern::cli {

/// Typed form of the flat `key: value` experiment file. Keys are exactly the
/// published parameter-table names plus artifact keys (paths, seed, margin,
/// out_dir, dataset_profile). Unknown keys are rejected; missing keys fall
/// back to the dataset profile's defaults.
struct ExperimentConfig {
    std::string dataset_profile = "synthetic";
    model::KernConfig model;
    num::LrSchedule schedule;
    int epochs = 50;
    int batch_size = 64;
    std::string dataset_path;
    std::string dataset_format = "trendkern-json";
    std::string taxonomy_path;
    std::string out_dir = "out";

    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Table-driven defaults: "geostyle", "fit-half", "fit-one", "synthetic".
ExperimentConfig profile_defaults(const std::string& profile);

ExperimentConfig parse_config(const std::string& path);
/// Same parser over in-memory text; origin names the source in errors.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical rendering of every key; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace trendkern::cli
