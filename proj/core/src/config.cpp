#include "petaxon/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <vector>

#include "petaxon/errors.hpp"

namespace petaxon {

namespace {

constexpr std::array<const char*, 5> kStageNames = {"detection", "threat_type", "family",
                                                    "behavior", "quarantine"};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("invalid integer for " + key + ": '" + value + "'");
    }
}

double parse_f64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("invalid number for " + key + ": '" + value + "'");
    }
}

void apply_stage_key(TrainParams& p, const std::string& key, const std::string& value) {
    if (key == "iterations")
        p.iterations = parse_u64(key, value);
    else if (key == "learning_rate")
        p.learning_rate = parse_f64(key, value);
    else if (key == "max_leaves")
        p.max_leaves = parse_u64(key, value);
    else if (key == "min_samples_leaf")
        p.min_samples_leaf = parse_u64(key, value);
    else if (key == "l2")
        p.l2 = parse_f64(key, value);
    else if (key == "max_bins")
        p.max_bins = parse_u64(key, value);
    else if (key == "early_stopping_rounds")
        p.early_stopping_rounds = parse_u64(key, value);
    else
        throw ConfigError("unknown stage key: " + key);
}

}  // namespace

PipelineConfig parse_config(std::istream& in) {
    // Keys are collected per section first so [stages] defaults apply to
    // [stage.<name>] overrides regardless of file order.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    std::string section;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header: " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name");
            sections.try_emplace(section);
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("expected key = value, got: " + line);
        sections[section].emplace_back(key, value);
    }

    PipelineConfig cfg;
    for (const auto& [name, entries] : sections) {
        if (name.empty()) {
            for (const auto& [key, value] : entries) {
                if (key == "layout_version")
                    cfg.layout_version = static_cast<std::uint32_t>(parse_u64(key, value));
                else
                    throw ConfigError("unknown top-level key: " + key);
            }
        } else if (name == "split") {
            for (const auto& [key, value] : entries) {
                if (key == "fraction")
                    cfg.validation_fraction = parse_f64(key, value);
                else if (key == "seed")
                    cfg.seed = parse_u64(key, value);
                else
                    throw ConfigError("unknown [split] key: " + key);
            }
        } else if (name == "families") {
            for (const auto& [key, value] : entries) {
                if (key == "top_k")
                    cfg.family_top_k = parse_u64(key, value);
                else
                    throw ConfigError("unknown [families] key: " + key);
            }
        } else if (name == "pipeline") {
            for (const auto& [key, value] : entries) {
                if (key == "min_stage_samples")
                    cfg.min_stage_samples = parse_u64(key, value);
                else if (key == "quarantine_floor")
                    cfg.quarantine_floor = parse_u64(key, value);
                else
                    throw ConfigError("unknown [pipeline] key: " + key);
            }
        } else if (name == "stages") {
            for (const auto& [key, value] : entries) apply_stage_key(cfg.default_params, key, value);
        } else if (name.starts_with("stage.")) {
            std::string stage = name.substr(6);
            if (std::find(kStageNames.begin(), kStageNames.end(), stage) == kStageNames.end())
                throw ConfigError("unknown stage section: [" + name + "]");
        } else {
            throw ConfigError("unknown section: [" + name + "]");
        }
    }

    // Overrides start from the resolved defaults.
    for (const auto& [name, entries] : sections) {
        if (!name.starts_with("stage.")) continue;
        std::string stage = name.substr(6);
        TrainParams p = cfg.default_params;
        for (const auto& [key, value] : entries) apply_stage_key(p, key, value);
        cfg.stage_overrides[stage] = p;
    }

    if (cfg.layout_version != 1)
        throw ConfigError("unsupported layout_version " + std::to_string(cfg.layout_version));
    if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0))
        throw ConfigError("split fraction must be in (0,1)");
    if (cfg.family_top_k == 0) throw ConfigError("families top_k must be positive");
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_config(in);
}

}  // namespace petaxon
