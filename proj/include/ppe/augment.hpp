#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ppe/dataset.hpp"
#include "ppe/image.hpp"

namespace ppe {

enum class AugmentOp { Brightness, Contrast, Sharpen, Blur };

struct AugmentationStep {
    AugmentOp op = AugmentOp::Brightness;
    int pct = 0; // used by Brightness/Contrast only, in [-100, 100]

    bool operator==(const AugmentationStep&) const = default;
};

using StepSequence = std::vector<AugmentationStep>;

struct RecipeEntry {
    StepSequence steps;
    int count = 0; // images this entry is applied to
    std::string note;
};

struct Recipe {
    std::string name;
    std::vector<RecipeEntry> entries;
};

// out = clamp(round(in * (1 + pct/100))), per channel.
Image apply_brightness(const Image& img, int pct);

// out = clamp(round(128 + (in - 128) * (1 + pct/100))), per channel.
Image apply_contrast(const Image& img, int pct);

// 3x3 Gaussian (1/16)[1 2 1; 2 4 2; 1 2 1], replicate border.
Image apply_blur(const Image& img);

// Unsharp mask, amount 1: clamp(round(2*in - gaussian(in))).
Image apply_sharpen(const Image& img);

// Left-to-right composition; deterministic, bit-exact.
Image apply_recipe(const Image& img, std::span<const AugmentationStep> steps);

struct BuiltinRecipes {
    Recipe phase2;
    Recipe phase4_a;
    Recipe phase4_b;
};

const BuiltinRecipes& builtin_recipes();
const Recipe* find_builtin_recipe(std::string_view name);

// {"name", "entries":[{"steps":[{"op","pct"?}], "count", "note"?}]}
Recipe parse_recipe_json(const std::string& text);
std::string recipe_to_json(const Recipe& recipe);

struct OccurrenceProjection {
    std::array<std::int64_t, kPpeClassCount> before{};
    std::array<std::int64_t, kPpeClassCount> after{};
    std::array<std::int64_t, kPpeClassCount> delta{};
};

// per_image_class_counts[e][c] = occurrences of class c contributed by one
// image processed under entry e; one row per recipe entry.
OccurrenceProjection project_occurrences(
    const std::array<std::int64_t, kPpeClassCount>& before, const Recipe& recipe,
    std::span<const std::array<std::int64_t, kPpeClassCount>> per_image_class_counts);

// Apply per-image step sequences and append the results as new records.
// Annotations are copied verbatim; new ids are "<source id>__aug<k>";
// transformed pixels are written as PNG under out_dir.
Manifest expand_dataset(const Manifest& manifest,
                        const std::map<std::string, std::vector<StepSequence>>& assignments,
                        const std::filesystem::path& out_dir);

} // namespace ppe
