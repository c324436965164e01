#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>

#include "petaxon/gbdt.hpp"

namespace petaxon {

// Declarative training configuration. Sections: top-level `layout_version`,
// [split] fraction/seed, [families] top_k, [pipeline] min_stage_samples and
// quarantine_floor, [stages] defaults for every stage, and [stage.<name>]
// per-stage overrides (names: detection, threat_type, family, behavior,
// quarantine). Unknown keys or sections are rejected.
struct PipelineConfig {
    std::uint32_t layout_version = 1;
    double validation_fraction = 0.5;
    std::uint64_t seed = 7;
    std::size_t family_top_k = 20;
    std::size_t min_stage_samples = 200;
    std::size_t quarantine_floor = 50;
    TrainParams default_params;
    std::map<std::string, TrainParams> stage_overrides;

    TrainParams stage(const std::string& name) const {
        auto it = stage_overrides.find(name);
        return it == stage_overrides.end() ? default_params : it->second;
    }
};

PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::string& path);

}  // namespace petaxon
