#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppe/geometry.hpp"

namespace ppe {

// Fixed class-id mapping 0..4, in this order, everywhere.
enum class PpeClass : int {
    Hardhat = 0,
    SafetyVest = 1,
    SafetyGloves = 2,
    SafetyGlasses = 3,
    HearingProtection = 4,
};

inline constexpr int kPpeClassCount = 5;

constexpr std::array<PpeClass, kPpeClassCount> all_ppe_classes() {
    return {PpeClass::Hardhat, PpeClass::SafetyVest, PpeClass::SafetyGloves,
            PpeClass::SafetyGlasses, PpeClass::HearingProtection};
}

std::string_view class_name(PpeClass cls);
std::optional<PpeClass> class_from_name(std::string_view name);

struct Annotation {
    PpeClass cls = PpeClass::Hardhat;
    NormalizedBox box;

    bool operator==(const Annotation&) const = default;
};

struct ImageRecord {
    std::string id;
    std::string path;
    int width = 0;
    int height = 0;
    std::vector<Annotation> annotations; // empty = negative image

    bool negative() const { return annotations.empty(); }
};

struct Manifest {
    std::vector<ImageRecord> images;
};

struct ClassStats {
    std::array<std::int64_t, kPpeClassCount> occurrences{};
    std::int64_t total = 0;
    // Integer percentages summing to 100 (largest-remainder apportionment);
    // all zero with empty_dataset set when there are no occurrences.
    std::array<int, kPpeClassCount> percentages{};
    bool empty_dataset = false;
};

// One object per line: "class_id cx cy w h", whitespace-separated, normalized.
// Blank input is a negative image. Throws FormatError with the line number.
std::vector<Annotation> parse_annotation_file(std::string_view text,
                                              int class_count = kPpeClassCount);

// Inverse of parse_annotation_file; fields printed with 6 decimals.
std::string serialize_annotation_file(std::span<const Annotation> annotations);

struct ManifestLoadResult {
    Manifest manifest;
    std::vector<std::string> warnings;
};

// Walk a directory of images with sibling .txt annotation files sharing the
// basename. Missing annotation file means a negative record. Records are
// ordered by path; per-file problems become warnings, not a failure.
ManifestLoadResult load_manifest(const std::filesystem::path& root);

ClassStats class_stats(const Manifest& manifest);

// Canonical JSON interchange form.
std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest_json(const std::filesystem::path& path);

} // namespace ppe
