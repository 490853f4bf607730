#include "ppe/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ppe/errors.hpp"

namespace ppe {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string env_name_for(const std::string& key) {
    std::string name = "GATE_";
    for (char c : key) {
        name += c == '.' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

} // namespace

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        }
        config.values_[key] = value;
    }
    return config;
}

std::optional<std::string> Config::get(const std::string& key) const {
    if (const char* env = std::getenv(env_name_for(key).c_str())) {
        return std::string(env);
    }
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string Config::get_or(const std::string& key,
                           const std::string& fallback) const {
    return get(key).value_or(fallback);
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return std::stoi(*v);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + *v);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + *v);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
        return false;
    }
    throw ConfigError("config key " + key + ": not a boolean: " + *v);
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

std::unique_ptr<DetectorBackend> make_backend(const std::string& spec) {
    if (spec == "fullframe") {
        return whole_frame_person_backend();
    }
    if (spec.rfind("fixture:", 0) == 0) {
        return load_fixture_backend(spec.substr(8));
    }
    if (spec.rfind("model:", 0) == 0) {
        const std::string rest = spec.substr(6);
        const auto comma = rest.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("model backend spec needs 'model:<onnx>,<metadata>'");
        }
        return load_model_backend(rest.substr(0, comma), rest.substr(comma + 1));
    }
    throw ConfigError("unknown backend spec: " + spec);
}

std::set<PpeClass> parse_class_list(const std::string& csv) {
    std::set<PpeClass> classes;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (token.empty()) {
            continue;
        }
        const auto cls = class_from_name(token);
        if (!cls) {
            throw ConfigError("unknown PPE class: " + token);
        }
        classes.insert(*cls);
    }
    return classes;
}

PipelineConfig pipeline_config_from(const Config& config) {
    PipelineConfig pc;
    pc.margin_frac = config.get_double("pipeline.margin_frac", pc.margin_frac);
    pc.detector.input_size =
        config.get_int("pipeline.detector.input_size", pc.detector.input_size);
    pc.detector.confidence_threshold = config.get_double(
        "pipeline.detector.confidence_threshold", pc.detector.confidence_threshold);
    pc.detector.nms_iou_threshold = config.get_double(
        "pipeline.detector.nms_iou_threshold", pc.detector.nms_iou_threshold);
    pc.fusion.window = std::size_t(config.get_int("pipeline.fusion.n", 1));
    pc.fusion.quorum = std::size_t(config.get_int("pipeline.fusion.k", 1));
    pc.priors.enabled =
        config.get_bool("pipeline.region_priors.enabled", pc.priors.enabled);
    pc.priors.head_band =
        config.get_double("pipeline.region_priors.head_band", pc.priors.head_band);
    pc.priors.torso_band_lo = config.get_double("pipeline.region_priors.torso_lo",
                                                pc.priors.torso_band_lo);
    pc.priors.torso_band_hi = config.get_double("pipeline.region_priors.torso_hi",
                                                pc.priors.torso_band_hi);
    if (const auto classes = config.get("pipeline.required_classes")) {
        pc.required = parse_class_list(*classes);
    }
    return pc;
}

GatePolicy gate_policy_from(const Config& config) {
    GatePolicy policy;
    if (const auto classes = config.get("policy.required_classes")) {
        policy.required = parse_class_list(*classes);
    }
    policy.frames_required =
        config.get_int("policy.frames_required", policy.frames_required);
    policy.check_timeout =
        config.get_double("policy.check_timeout", policy.check_timeout);
    policy.allow_anonymous =
        config.get_bool("policy.allow_anonymous", policy.allow_anonymous);
    policy.cooldown = config.get_double("policy.cooldown", policy.cooldown);
    if (policy.frames_required < 1 || policy.check_timeout <= 0.0 ||
        policy.cooldown < 0.0) {
        throw ConfigError("gate policy: K >= 1 and positive timeouts required");
    }
    return policy;
}

} // namespace ppe
