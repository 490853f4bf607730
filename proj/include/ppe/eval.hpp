#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppe/dataset.hpp"
#include "ppe/detector.hpp"

namespace ppe {

// Pixel-space ground-truth box.
struct GroundTruth {
    PpeClass cls = PpeClass::Hardhat;
    BoundingBox box;
};

struct ScoredMatch {
    double confidence = 0.0;
    bool true_positive = false;
    PpeClass cls = PpeClass::Hardhat;
};

struct MatchResult {
    std::vector<ScoredMatch> matches; // one per prediction
    int false_negatives = 0;          // unmatched ground truths
};

// Greedy matching: predictions in confidence-descending order (ties by
// x_min, then y_min) each claim the unmatched same-class ground truth of
// maximal IoU, provided that IoU reaches the threshold.
MatchResult match_detections(std::vector<Detection> predictions,
                             const std::vector<GroundTruth>& ground_truths,
                             double iou_threshold = 0.5);

struct PrecisionRecall {
    std::optional<double> precision; // nullopt when TP+FP = 0
    std::optional<double> recall;    // nullopt when TP+FN = 0
};

PrecisionRecall precision_recall(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn);

// Area under the precision-recall curve via the all-point precision
// envelope. nullopt when there is no ground truth for the class.
std::optional<double> average_precision(std::vector<ScoredMatch> matches,
                                        std::int64_t n_ground_truth);

// Arithmetic mean over defined APs; throws when all are undefined.
double mean_ap(std::span<const std::optional<double>> class_aps);

struct ClassReport {
    PpeClass cls = PpeClass::Hardhat;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> average_precision;
    std::int64_t n_ground_truth = 0;
    std::int64_t n_detections = 0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

struct EvalReport {
    std::array<ClassReport, kPpeClassCount> classes;
    std::optional<double> map;
    double iou_threshold = 0.5;
    double confidence_threshold = 0.0;
    std::string dataset_id;
};

// Per-image matching aggregated per class over the whole manifest.
// Detection image ids must be a subset of the manifest's ids; detections of
// class Person are ignored.
EvalReport evaluate(
    const std::map<std::string, std::vector<Detection>>& detections_by_image,
    const Manifest& manifest, double iou_threshold = 0.5,
    double confidence_threshold = 0.0, const std::string& dataset_id = "");

enum class ReportLayout { Table2, Table45, Csv };

std::string render_report(const EvalReport& report, ReportLayout layout);

// Detection dump file, same line format as the detector fixture.
std::map<std::string, std::vector<Detection>> load_detection_file(
    const std::filesystem::path& path);

// Integer percent with round-half-up, for display.
int percent_round_half_up(double fraction);

} // namespace ppe
