#include "ppe/augment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ppe/errors.hpp"
#include "ppe/imageio.hpp"

using nlohmann::json;

namespace ppe {

namespace {

// Round half away from zero, then clamp into the channel range.
std::uint8_t quantize(double v) {
    const long long r = std::llround(v);
    return std::uint8_t(std::clamp(r, 0ll, 255ll));
}

void check_pct(int pct) {
    if (pct < -100 || pct > 100) {
        throw ParameterError("percent out of [-100,100]: " + std::to_string(pct));
    }
}

// Unrounded 3x3 Gaussian at (x,y,c), replicate border.
double gaussian_at(const Image& img, int x, int y, int c) {
    static constexpr int kKernel[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
    double acc = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
        const int sy = std::clamp(y + dy, 0, img.height - 1);
        for (int dx = -1; dx <= 1; ++dx) {
            const int sx = std::clamp(x + dx, 0, img.width - 1);
            acc += kKernel[dy + 1][dx + 1] * double(img.at(sx, sy, c));
        }
    }
    return acc / 16.0;
}

Recipe make_phase2() {
    using enum AugmentOp;
    Recipe r;
    r.name = "PHASE2";
    r.entries = {
        {{{Brightness, 20}, {Contrast, 10}, {Sharpen}}, 269, "hardhat"},
        {{{Brightness, 10}, {Contrast, -20}, {Blur}}, 114, "safety_vest"},
        {{{Brightness, 40}, {Contrast, 30}, {Sharpen}}, 265, "safety_gloves"},
        {{{Brightness, -20}, {Contrast, -30}, {Blur}}, 264, "safety_gloves"},
        {{{Brightness, 25}, {Contrast, -25}, {Blur}}, 260, "safety_glasses"},
        {{{Brightness, -15}, {Contrast, 40}, {Sharpen}}, 261, "safety_glasses"},
        {{{Brightness, 30}, {Contrast, -40}, {Blur}}, 311, "hearing_protection"},
        {{{Brightness, -30}, {Contrast, 10}, {Sharpen}}, 311, "hearing_protection"},
    };
    return r;
}

Recipe make_phase4_a() {
    using enum AugmentOp;
    Recipe r;
    r.name = "PHASE4_A";
    r.entries = {
        {{{Brightness, 30}, {Contrast, 30}, {Sharpen}}, 110, "glasses+hearing"},
        {{{Brightness, -40}, {Contrast, 20}, {Sharpen}}, 110, "glasses+hearing"},
        {{{Brightness, 20}, {Contrast, -10}, {Sharpen}}, 110, "glasses+hearing"},
        {{{Brightness, 30}, {Contrast, 60}, {Blur}}, 110, "glasses+hearing"},
    };
    return r;
}

Recipe make_phase4_b() {
    using enum AugmentOp;
    Recipe r;
    r.name = "PHASE4_B";
    r.entries = {
        {{{Brightness, -10}, {Contrast, -20}, {Blur}}, 111, "glasses+hearing"},
        {{{Brightness, -40}, {Sharpen}}, 111, "glasses+hearing"},
        {{{Brightness, 50}, {Contrast, 50}, {Sharpen}}, 111, "glasses+hearing"},
        {{{Brightness, 40}, {Blur}}, 111, "glasses+hearing"},
    };
    return r;
}

std::string_view op_name(AugmentOp op) {
    switch (op) {
    case AugmentOp::Brightness: return "brightness";
    case AugmentOp::Contrast: return "contrast";
    case AugmentOp::Sharpen: return "sharpen";
    case AugmentOp::Blur: return "blur";
    }
    return "?";
}

} // namespace

Image apply_brightness(const Image& img, int pct) {
    check_pct(pct);
    const double gain = 1.0 + pct / 100.0;
    Image out = img;
    for (auto& v : out.pixels) {
        v = quantize(double(v) * gain);
    }
    return out;
}

Image apply_contrast(const Image& img, int pct) {
    check_pct(pct);
    const double gain = 1.0 + pct / 100.0;
    Image out = img;
    for (auto& v : out.pixels) {
        v = quantize(128.0 + (double(v) - 128.0) * gain);
    }
    return out;
}

Image apply_blur(const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = quantize(gaussian_at(img, x, y, c));
            }
        }
    }
    return out;
}

Image apply_sharpen(const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = 2.0 * double(img.at(x, y, c)) - gaussian_at(img, x, y, c);
                out.at(x, y, c) = quantize(v);
            }
        }
    }
    return out;
}

Image apply_recipe(const Image& img, std::span<const AugmentationStep> steps) {
    Image out = img;
    for (const auto& step : steps) {
        switch (step.op) {
        case AugmentOp::Brightness: out = apply_brightness(out, step.pct); break;
        case AugmentOp::Contrast: out = apply_contrast(out, step.pct); break;
        case AugmentOp::Sharpen: out = apply_sharpen(out); break;
        case AugmentOp::Blur: out = apply_blur(out); break;
        }
    }
    return out;
}

const BuiltinRecipes& builtin_recipes() {
    static const BuiltinRecipes recipes = {make_phase2(), make_phase4_a(),
                                           make_phase4_b()};
    return recipes;
}

const Recipe* find_builtin_recipe(std::string_view name) {
    const auto& b = builtin_recipes();
    if (name == "PHASE2") return &b.phase2;
    if (name == "PHASE4_A") return &b.phase4_a;
    if (name == "PHASE4_B") return &b.phase4_b;
    return nullptr;
}

Recipe parse_recipe_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("recipe JSON: ") + e.what());
    }
    Recipe recipe;
    try {
        recipe.name = doc.at("name").get<std::string>();
        for (const auto& je : doc.at("entries")) {
            RecipeEntry entry;
            entry.count = je.at("count").get<int>();
            if (entry.count < 0) {
                throw FormatError("recipe JSON: negative count");
            }
            entry.note = je.value("note", "");
            for (const auto& js : je.at("steps")) {
                const auto op = js.at("op").get<std::string>();
                AugmentationStep step;
                if (op == "brightness") {
                    step = {AugmentOp::Brightness, js.at("pct").get<int>()};
                } else if (op == "contrast") {
                    step = {AugmentOp::Contrast, js.at("pct").get<int>()};
                } else if (op == "sharpen") {
                    step = {AugmentOp::Sharpen, 0};
                } else if (op == "blur") {
                    step = {AugmentOp::Blur, 0};
                } else if (op == "saturation") {
                    // Named in the source material but never used by any
                    // recipe; no pixel semantics are defined for it.
                    throw FormatError("recipe JSON: saturation is not supported");
                } else {
                    throw FormatError("recipe JSON: unknown op '" + op + "'");
                }
                if (step.pct < -100 || step.pct > 100) {
                    throw FormatError("recipe JSON: percent out of [-100,100]");
                }
                entry.steps.push_back(step);
            }
            recipe.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("recipe JSON: ") + e.what());
    }
    return recipe;
}

std::string recipe_to_json(const Recipe& recipe) {
    json entries = json::array();
    for (const auto& entry : recipe.entries) {
        json steps = json::array();
        for (const auto& step : entry.steps) {
            json js{{"op", std::string(op_name(step.op))}};
            if (step.op == AugmentOp::Brightness || step.op == AugmentOp::Contrast) {
                js["pct"] = step.pct;
            }
            steps.push_back(js);
        }
        entries.push_back(
            {{"steps", steps}, {"count", entry.count}, {"note", entry.note}});
    }
    return json{{"name", recipe.name}, {"entries", entries}}.dump(2);
}

OccurrenceProjection project_occurrences(
    const std::array<std::int64_t, kPpeClassCount>& before, const Recipe& recipe,
    std::span<const std::array<std::int64_t, kPpeClassCount>> per_image_class_counts) {
    if (per_image_class_counts.size() != recipe.entries.size()) {
        throw ParameterError("project_occurrences: one class-count row per entry required");
    }
    OccurrenceProjection proj;
    proj.before = before;
    proj.after = before;
    for (std::size_t e = 0; e < recipe.entries.size(); ++e) {
        for (int c = 0; c < kPpeClassCount; ++c) {
            const std::int64_t per_image = per_image_class_counts[e][c];
            if (per_image < 0) {
                throw ParameterError("project_occurrences: negative class count");
            }
            proj.delta[c] += std::int64_t(recipe.entries[e].count) * per_image;
        }
    }
    for (int c = 0; c < kPpeClassCount; ++c) {
        proj.after[c] += proj.delta[c];
    }
    return proj;
}

Manifest expand_dataset(const Manifest& manifest,
                        const std::map<std::string, std::vector<StepSequence>>& assignments,
                        const std::filesystem::path& out_dir) {
    std::string missing;
    for (const auto& [id, _] : assignments) {
        const bool found = std::any_of(manifest.images.begin(), manifest.images.end(),
                                       [&](const ImageRecord& r) { return r.id == id; });
        if (!found) {
            missing += missing.empty() ? id : ", " + id;
        }
    }
    if (!missing.empty()) {
        throw ParameterError("expand_dataset: unknown image ids: " + missing);
    }
    if (!assignments.empty()) {
        std::filesystem::create_directories(out_dir);
    }

    Manifest out;
    for (const auto& rec : manifest.images) {
        out.images.push_back(rec);
        const auto it = assignments.find(rec.id);
        if (it == assignments.end()) {
            continue;
        }
        const Image source = read_image(rec.path);
        for (std::size_t k = 0; k < it->second.size(); ++k) {
            const Image transformed = apply_recipe(source, it->second[k]);
            ImageRecord aug = rec;
            aug.id = rec.id + "__aug" + std::to_string(k);
            std::string filename = aug.id + ".png";
            std::replace(filename.begin(), filename.end(), '/', '_');
            const auto path = out_dir / filename;
            write_png(path, transformed);
            aug.path = path.generic_string();
            out.images.push_back(std::move(aug));
        }
    }
    return out;
}

} // namespace ppe
