#include "ppe/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ppe/errors.hpp"

namespace ppe {

ComplianceDecision check_compliance(const std::set<PpeClass>& present,
                                    const std::set<PpeClass>& required) {
    ComplianceDecision decision;
    decision.required = required;
    for (const PpeClass cls : required) {
        if (!present.count(cls)) {
            decision.missing.insert(cls);
        }
    }
    decision.compliant = decision.missing.empty();
    return decision;
}

FusionWindow::FusionWindow(std::size_t capacity, std::size_t quorum)
    : capacity_(capacity), quorum_(quorum) {
    if (capacity == 0 || quorum == 0 || quorum > capacity) {
        throw ParameterError("FusionWindow: need 1 <= quorum <= capacity");
    }
}

std::set<PpeClass> FusionWindow::observe(const std::set<PpeClass>& present) {
    history_.push_back(present);
    if (history_.size() > capacity_) {
        history_.pop_front();
    }
    std::set<PpeClass> fused;
    for (const PpeClass cls : all_ppe_classes()) {
        const std::size_t hits = std::count_if(
            history_.begin(), history_.end(),
            [&](const std::set<PpeClass>& s) { return s.count(cls) > 0; });
        if (hits >= quorum_) {
            fused.insert(cls);
        }
    }
    return fused;
}

std::vector<BoundingBox> detect_persons(const Image& frame,
                                        const std::string& image_id,
                                        DetectorBackend& person_backend,
                                        const DetectorConfig& config) {
    const auto detections = detect(person_backend, frame, image_id, config);
    std::vector<BoundingBox> boxes;
    for (const auto& det : detections) {
        if (det.cls == ObjectClass::Person) {
            boxes.push_back(det.box);
        }
    }
    return boxes;
}

CropResult crop_person(const Image& frame, const BoundingBox& person_box,
                       double margin_frac) {
    const BoundingBox region =
        expand_and_clamp(person_box, margin_frac, frame.size());
    const int x0 = int(std::floor(region.x_min));
    const int y0 = int(std::floor(region.y_min));
    const int x1 = std::min(frame.width, int(std::ceil(region.x_max)));
    const int y1 = std::min(frame.height, int(std::ceil(region.y_max)));
    if (x1 <= x0 || y1 <= y0) {
        throw ParameterError("crop_person: person box does not intersect frame");
    }
    return {crop_image(frame, x0, y0, x1 - x0, y1 - y0), double(x0), double(y0)};
}

std::vector<Detection> detect_ppe_on_person(const Image& crop, double offset_x,
                                            double offset_y,
                                            const std::string& image_id,
                                            DetectorBackend& ppe_backend,
                                            const DetectorConfig& config) {
    auto detections = detect(ppe_backend, crop, image_id, config);
    for (auto& det : detections) {
        det.box = translate_box(det.box, offset_x, offset_y);
    }
    return detections;
}

PersonResult region_prior_filter(PersonResult person,
                                 const RegionPriorConfig& config) {
    if (!config.enabled) {
        return person;
    }
    if (config.head_band < 0.0 || config.head_band > 1.0 ||
        config.torso_band_lo < 0.0 || config.torso_band_hi > 1.0 ||
        config.torso_band_lo > config.torso_band_hi) {
        throw ParameterError("region_prior_filter: bad band configuration");
    }
    const double height = person.person_box.height();
    std::vector<Detection> kept;
    for (const auto& det : person.ppe) {
        const double rel =
            height > 0.0
                ? (det.box.center_y() - person.person_box.y_min) / height
                : 0.0;
        bool keep = true;
        switch (det.cls) {
        case ObjectClass::Hardhat:
        case ObjectClass::SafetyGlasses:
        case ObjectClass::HearingProtection:
            keep = rel <= config.head_band;
            break;
        case ObjectClass::SafetyVest:
            keep = rel >= config.torso_band_lo && rel <= config.torso_band_hi;
            break;
        default:
            break; // gloves and person boxes are exempt
        }
        if (keep) {
            kept.push_back(det);
        }
    }
    person.ppe = std::move(kept);
    person.present.clear();
    for (const auto& det : person.ppe) {
        if (const auto cls = to_ppe_class(det.cls)) {
            person.present.insert(*cls);
        }
    }
    person.decision = check_compliance(person.present, person.decision.required);
    return person;
}

FrameResult process_frame(const Image& frame, const std::string& image_id,
                          DetectorBackend& person_backend,
                          DetectorBackend& ppe_backend,
                          const PipelineConfig& config,
                          FusionWindow* fusion) {
    FrameResult result;
    const auto persons =
        detect_persons(frame, image_id, person_backend, config.detector);

    for (std::size_t i = 0; i < persons.size(); ++i) {
        try {
            const auto cropped = crop_person(frame, persons[i], config.margin_frac);
            PersonResult pr;
            pr.person_box = persons[i];
            pr.ppe = detect_ppe_on_person(
                cropped.crop, cropped.offset_x, cropped.offset_y,
                image_id + "#p" + std::to_string(i), ppe_backend, config.detector);
            for (const auto& det : pr.ppe) {
                if (const auto cls = to_ppe_class(det.cls)) {
                    pr.present.insert(*cls);
                }
            }
            pr.decision = check_compliance(pr.present, config.required);
            pr = region_prior_filter(std::move(pr), config.priors);
            result.persons.push_back(std::move(pr));
        } catch (const Error& e) {
            result.person_errors.push_back("person " + std::to_string(i) + ": " +
                                           e.what());
        }
    }

    // Fusion tracks the primary person: the largest box in the frame.
    std::set<PpeClass> primary_present;
    if (!result.persons.empty()) {
        const auto primary = std::max_element(
            result.persons.begin(), result.persons.end(),
            [](const PersonResult& a, const PersonResult& b) {
                return a.person_box.area() < b.person_box.area();
            });
        primary_present = primary->present;
        result.fused_present =
            fusion ? fusion->observe(primary_present) : primary_present;
    }
    result.fused_decision = check_compliance(result.fused_present, config.required);
    return result;
}

} // namespace ppe
