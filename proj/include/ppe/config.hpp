#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "ppe/gate.hpp"
#include "ppe/pipeline.hpp"

namespace ppe {

// Flat "key = value" configuration with '#' comments. Environment
// variables override file values at lookup time: key "server.port" is
// overridden by GATE_SERVER_PORT.
class Config {
public:
    Config() = default;

    static Config from_file(const std::filesystem::path& path);
    static Config from_string(const std::string& text);

    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);

private:
    std::map<std::string, std::string> values_;
};

// "fixture:<path>", "model:<onnx>,<metadata>", or "fullframe".
std::unique_ptr<DetectorBackend> make_backend(const std::string& spec);

// pipeline.* keys: person_backend, ppe_backend, margin_frac, fusion.n,
// fusion.k, region_priors.{enabled,head_band,torso_lo,torso_hi},
// required_classes (comma-separated names), detector thresholds.
PipelineConfig pipeline_config_from(const Config& config);

// policy.* keys: required_classes, frames_required, check_timeout,
// allow_anonymous, cooldown.
GatePolicy gate_policy_from(const Config& config);

std::set<PpeClass> parse_class_list(const std::string& csv);

} // namespace ppe
