#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ppe/dataset.hpp"
#include "ppe/geometry.hpp"
#include "ppe/image.hpp"

namespace ppe {

// Everything a backend can emit: the five PPE classes plus Person.
enum class ObjectClass : int {
    Hardhat = 0,
    SafetyVest = 1,
    SafetyGloves = 2,
    SafetyGlasses = 3,
    HearingProtection = 4,
    Person = 5,
};

std::string_view object_class_name(ObjectClass cls);
std::optional<ObjectClass> object_class_from_name(std::string_view name);

inline ObjectClass to_object_class(PpeClass cls) {
    return static_cast<ObjectClass>(static_cast<int>(cls));
}
inline std::optional<PpeClass> to_ppe_class(ObjectClass cls) {
    if (cls == ObjectClass::Person) {
        return std::nullopt;
    }
    return static_cast<PpeClass>(static_cast<int>(cls));
}

struct Detection {
    ObjectClass cls = ObjectClass::Hardhat;
    double confidence = 0.0;
    BoundingBox box; // pixel coords of the image detect() ran on

    bool operator==(const Detection&) const = default;
};

struct DetectorConfig {
    int input_size = 476;
    double confidence_threshold = 0.25;
    double nms_iou_threshold = 0.45;
};

// Raw backend output, in letterboxed input-space coordinates.
struct RawDetection {
    ObjectClass cls = ObjectClass::Hardhat;
    double score = 0.0;
    BoundingBox box;
};

struct InferenceContext {
    std::string image_id;
    LetterboxTransform transform; // source frame -> letterboxed input
};

class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;
    virtual std::set<ObjectClass> classes() const = 0;
    // `input` is the letterboxed image of size config.input_size; boxes are
    // returned in that input space.
    virtual std::vector<RawDetection> infer(const Image& input,
                                            const InferenceContext& ctx) = 0;
};

// Letterbox, infer, unmap boxes to frame coords (clamped to the frame),
// confidence-filter, per-class NMS; sorted by confidence descending.
std::vector<Detection> detect(DetectorBackend& backend, const Image& frame,
                              const std::string& image_id,
                              const DetectorConfig& config = {});

// Greedy per-class suppression; cross-class pairs never interact.
// Tie-break: confidence desc, then x_min asc, then y_min asc.
std::vector<Detection> nms(std::vector<Detection> detections,
                           double iou_threshold);

// Replays detections from a text file, keyed by image id. Line format:
//   image_id class_name confidence x_min y_min x_max y_max
// with coords in pixels of the image detect() runs on. A lookup of
// "<id>#p<k>" falls back to "<id>" when the exact key is absent.
std::unique_ptr<DetectorBackend> load_fixture_backend(
    const std::filesystem::path& path);

// ONNX graph whose output is N x (4+1+C): center-form box in input-space
// pixels, objectness, per-class scores. Metadata JSON declares
// {"classes":[...], "input_size":476}.
std::unique_ptr<DetectorBackend> load_model_backend(
    const std::filesystem::path& model_path,
    const std::filesystem::path& metadata_path);

// Always reports one person covering the whole frame.
std::unique_ptr<DetectorBackend> whole_frame_person_backend();

// Pure decode step of the model backend, split out for direct testing.
std::vector<RawDetection> decode_model_output(
    const std::vector<float>& data, int rows, int cols,
    const std::vector<ObjectClass>& classes);

// Wraps another backend and accumulates source-frame pixels seen per call;
// used by the benchmark to compare crop-enabled vs crop-disabled cost.
class PixelCountingBackend : public DetectorBackend {
public:
    explicit PixelCountingBackend(DetectorBackend& inner) : inner_(inner) {}

    std::set<ObjectClass> classes() const override { return inner_.classes(); }
    std::vector<RawDetection> infer(const Image& input,
                                    const InferenceContext& ctx) override {
        pixels_ += std::int64_t(ctx.transform.source.width) *
                   ctx.transform.source.height;
        ++calls_;
        return inner_.infer(input, ctx);
    }

    std::int64_t pixels_processed() const { return pixels_; }
    std::int64_t calls() const { return calls_; }
    void reset() { pixels_ = 0; calls_ = 0; }

private:
    DetectorBackend& inner_;
    std::int64_t pixels_ = 0;
    std::int64_t calls_ = 0;
};

} // namespace ppe
