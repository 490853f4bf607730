#pragma once

#include <deque>
#include <set>
#include <string>
#include <vector>

#include "ppe/detector.hpp"
#include "ppe/image.hpp"

namespace ppe {

struct ComplianceDecision {
    std::set<PpeClass> required;
    std::set<PpeClass> missing;
    bool compliant = false;
};

ComplianceDecision check_compliance(const std::set<PpeClass>& present,
                                    const std::set<PpeClass>& required);

struct PersonResult {
    BoundingBox person_box; // frame coords
    std::vector<Detection> ppe; // frame coords
    std::set<PpeClass> present;
    ComplianceDecision decision;
};

// Sliding window of per-frame presence sets; a class is fused-present when
// it was seen in at least `quorum` of the last `capacity` frames.
class FusionWindow {
public:
    FusionWindow(std::size_t capacity, std::size_t quorum);

    std::set<PpeClass> observe(const std::set<PpeClass>& present);

    std::size_t capacity() const { return capacity_; }
    std::size_t quorum() const { return quorum_; }
    std::size_t frames_observed() const { return history_.size(); }

private:
    std::size_t capacity_;
    std::size_t quorum_;
    std::deque<std::set<PpeClass>> history_;
};

struct RegionPriorConfig {
    bool enabled = false;
    double head_band = 0.40;      // top fraction of the person box
    double torso_band_lo = 0.20;  // vertical fraction interval for vests
    double torso_band_hi = 0.70;
};

struct FusionConfig {
    std::size_t window = 1;
    std::size_t quorum = 1;
};

struct PipelineConfig {
    double margin_frac = 0.10;
    DetectorConfig detector;
    FusionConfig fusion;
    RegionPriorConfig priors;
    std::set<PpeClass> required = {PpeClass::Hardhat, PpeClass::SafetyVest,
                                   PpeClass::SafetyGloves,
                                   PpeClass::SafetyGlasses,
                                   PpeClass::HearingProtection};
};

// Person boxes in frame coords, confidence-ordered.
std::vector<BoundingBox> detect_persons(const Image& frame,
                                        const std::string& image_id,
                                        DetectorBackend& person_backend,
                                        const DetectorConfig& config);

struct CropResult {
    Image crop;
    double offset_x = 0.0;
    double offset_y = 0.0;
};

// Pixels of expand_and_clamp(person_box, margin) with the crop origin in
// frame coords. Throws when the box misses the frame entirely.
CropResult crop_person(const Image& frame, const BoundingBox& person_box,
                       double margin_frac);

// Run PPE detection on a crop and translate boxes into frame coords.
std::vector<Detection> detect_ppe_on_person(const Image& crop, double offset_x,
                                            double offset_y,
                                            const std::string& image_id,
                                            DetectorBackend& ppe_backend,
                                            const DetectorConfig& config);

// Drop head-worn PPE detected below the head band and vests outside the
// torso band; gloves are never filtered. Disabled config is the identity.
PersonResult region_prior_filter(PersonResult person,
                                 const RegionPriorConfig& config);

struct FrameResult {
    std::vector<PersonResult> persons;
    // Presence for the primary (largest) person after optional fusion.
    std::set<PpeClass> fused_present;
    ComplianceDecision fused_decision;
    std::vector<std::string> person_errors;
};

// Full per-frame orchestration: persons -> crop -> PPE detect -> priors ->
// compliance, plus the fusion update for the primary person.
FrameResult process_frame(const Image& frame, const std::string& image_id,
                          DetectorBackend& person_backend,
                          DetectorBackend& ppe_backend,
                          const PipelineConfig& config,
                          FusionWindow* fusion = nullptr);

} // namespace ppe
