#include "ppe/detector.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>
#include <opencv2/dnn.hpp>

#include "ppe/errors.hpp"
#include "ppe/imageio.hpp"

using nlohmann::json;

namespace ppe {

namespace {

constexpr std::array<std::string_view, 6> kObjectClassNames = {
    "hardhat", "safety_vest", "safety_gloves", "safety_glasses",
    "hearing_protection", "person"};

double parse_double(std::string_view token, int line_no, const char* what) {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError("fixture line " + std::to_string(line_no) +
                          ": non-numeric " + what);
    }
    return value;
}

class FixtureBackend : public DetectorBackend {
public:
    explicit FixtureBackend(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw BackendError("cannot open fixture file: " + path.string());
        }
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ss(line);
            std::string id, cls_name;
            std::string conf_s, a, b, c, d;
            if (!(ss >> id)) {
                continue; // blank line
            }
            if (!(ss >> cls_name >> conf_s >> a >> b >> c >> d)) {
                throw FormatError("fixture line " + std::to_string(line_no) +
                                  ": expected 7 fields");
            }
            const auto cls = object_class_from_name(cls_name);
            if (!cls) {
                throw FormatError("fixture line " + std::to_string(line_no) +
                                  ": unknown class '" + cls_name + "'");
            }
            Detection det;
            det.cls = *cls;
            det.confidence = parse_double(conf_s, line_no, "confidence");
            if (det.confidence < 0.0 || det.confidence > 1.0) {
                throw FormatError("fixture line " + std::to_string(line_no) +
                                  ": confidence outside [0,1]");
            }
            det.box = {parse_double(a, line_no, "x_min"),
                       parse_double(b, line_no, "y_min"),
                       parse_double(c, line_no, "x_max"),
                       parse_double(d, line_no, "y_max")};
            if (!det.box.valid()) {
                throw FormatError("fixture line " + std::to_string(line_no) +
                                  ": inverted box");
            }
            by_image_[id].push_back(det);
            classes_.insert(det.cls);
        }
    }

    std::set<ObjectClass> classes() const override { return classes_; }

    std::vector<RawDetection> infer(const Image&,
                                    const InferenceContext& ctx) override {
        auto it = by_image_.find(ctx.image_id);
        if (it == by_image_.end()) {
            const auto hash = ctx.image_id.rfind("#p");
            if (hash != std::string::npos) {
                it = by_image_.find(ctx.image_id.substr(0, hash));
            }
        }
        std::vector<RawDetection> out;
        if (it == by_image_.end()) {
            return out;
        }
        for (const auto& det : it->second) {
            out.push_back({det.cls, det.confidence, ctx.transform.map_box(det.box)});
        }
        return out;
    }

private:
    std::map<std::string, std::vector<Detection>> by_image_;
    std::set<ObjectClass> classes_;
};

class WholeFramePersonBackend : public DetectorBackend {
public:
    std::set<ObjectClass> classes() const override {
        return {ObjectClass::Person};
    }
    std::vector<RawDetection> infer(const Image&,
                                    const InferenceContext& ctx) override {
        const BoundingBox frame{0, 0, double(ctx.transform.source.width),
                                double(ctx.transform.source.height)};
        return {{ObjectClass::Person, 1.0, ctx.transform.map_box(frame)}};
    }
};

class OnnxModelBackend : public DetectorBackend {
public:
    OnnxModelBackend(const std::filesystem::path& model_path,
                     const std::filesystem::path& metadata_path) {
        std::ifstream meta_in(metadata_path);
        if (!meta_in) {
            throw ConfigError("cannot read model metadata: " +
                              metadata_path.string());
        }
        json meta;
        try {
            meta = json::parse(meta_in);
            for (const auto& name : meta.at("classes")) {
                const auto cls = object_class_from_name(name.get<std::string>());
                if (!cls) {
                    throw ConfigError("metadata: unknown class '" +
                                      name.get<std::string>() + "'");
                }
                class_order_.push_back(*cls);
            }
            input_size_ = meta.value("input_size", 476);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("model metadata: ") + e.what());
        }
        if (class_order_.empty()) {
            throw ConfigError("metadata: empty class list");
        }
        try {
            net_ = cv::dnn::readNetFromONNX(model_path.string());
        } catch (const cv::Exception& e) {
            throw BackendError("cannot load ONNX model " + model_path.string() +
                               ": " + e.what());
        }
    }

    std::set<ObjectClass> classes() const override {
        return {class_order_.begin(), class_order_.end()};
    }

    std::vector<RawDetection> infer(const Image& input,
                                    const InferenceContext&) override {
        cv::Mat rgb(input.height, input.width, CV_8UC3,
                    const_cast<std::uint8_t*>(input.pixels.data()));
        cv::Mat blob = cv::dnn::blobFromImage(rgb, 1.0 / 255.0, cv::Size(), {},
                                              false, false, CV_32F);
        cv::Mat out;
        try {
            net_.setInput(blob);
            out = net_.forward();
        } catch (const cv::Exception& e) {
            throw BackendError(std::string("model inference failed: ") + e.what());
        }
        // Accept N x W or 1 x N x W layouts.
        if (out.dims == 3 && out.size[0] == 1) {
            out = out.reshape(1, out.size[1]);
        }
        if (out.dims != 2) {
            throw BackendError("model output has unexpected rank");
        }
        std::vector<float> data;
        data.reserve(std::size_t(out.rows) * out.cols);
        for (int r = 0; r < out.rows; ++r) {
            const float* row = out.ptr<float>(r);
            data.insert(data.end(), row, row + out.cols);
        }
        return decode_model_output(data, out.rows, out.cols, class_order_);
    }

    int input_size() const { return input_size_; }

private:
    cv::dnn::Net net_;
    std::vector<ObjectClass> class_order_;
    int input_size_ = 476;
};

} // namespace

std::string_view object_class_name(ObjectClass cls) {
    return kObjectClassNames[static_cast<int>(cls)];
}

std::optional<ObjectClass> object_class_from_name(std::string_view name) {
    for (int i = 0; i < int(kObjectClassNames.size()); ++i) {
        if (kObjectClassNames[i] == name) {
            return static_cast<ObjectClass>(i);
        }
    }
    return std::nullopt;
}

std::vector<RawDetection> decode_model_output(
    const std::vector<float>& data, int rows, int cols,
    const std::vector<ObjectClass>& classes) {
    const int expected = 4 + 1 + int(classes.size());
    if (rows > 0 && cols != expected) {
        throw BackendError("model output width mismatch: expected " +
                           std::to_string(expected) + ", got " +
                           std::to_string(cols));
    }
    std::vector<RawDetection> out;
    for (int r = 0; r < rows; ++r) {
        const float* row = &data[std::size_t(r) * cols];
        const double cx = row[0], cy = row[1], w = row[2], h = row[3];
        const double objectness = row[4];
        int best = 0;
        for (int c = 1; c < int(classes.size()); ++c) {
            if (row[5 + c] > row[5 + best]) {
                best = c;
            }
        }
        RawDetection det;
        det.cls = classes[best];
        det.score = objectness * double(row[5 + best]);
        det.box = {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
        out.push_back(det);
    }
    return out;
}

std::vector<Detection> nms(std::vector<Detection> detections,
                           double iou_threshold) {
    std::sort(detections.begin(), detections.end(),
              [](const Detection& a, const Detection& b) {
                  if (a.confidence != b.confidence) {
                      return a.confidence > b.confidence;
                  }
                  if (a.box.x_min != b.box.x_min) {
                      return a.box.x_min < b.box.x_min;
                  }
                  return a.box.y_min < b.box.y_min;
              });
    std::vector<Detection> kept;
    for (const auto& det : detections) {
        const bool suppressed = std::any_of(
            kept.begin(), kept.end(), [&](const Detection& k) {
                return k.cls == det.cls && iou(k.box, det.box) > iou_threshold;
            });
        if (!suppressed) {
            kept.push_back(det);
        }
    }
    return kept;
}

std::vector<Detection> detect(DetectorBackend& backend, const Image& frame,
                              const std::string& image_id,
                              const DetectorConfig& config) {
    const auto t = letterbox(frame.size(), {config.input_size, config.input_size});
    const Image input = letterbox_image(frame, t);
    const auto raw = backend.infer(input, {image_id, t});

    std::vector<Detection> detections;
    for (const auto& r : raw) {
        if (r.score < config.confidence_threshold) {
            continue;
        }
        Detection det;
        det.cls = r.cls;
        det.confidence = r.score;
        det.box = clamp_to_frame(t.unmap_box(r.box), frame.size());
        detections.push_back(det);
    }
    return nms(std::move(detections), config.nms_iou_threshold);
}

std::unique_ptr<DetectorBackend> load_fixture_backend(
    const std::filesystem::path& path) {
    return std::make_unique<FixtureBackend>(path);
}

std::unique_ptr<DetectorBackend> load_model_backend(
    const std::filesystem::path& model_path,
    const std::filesystem::path& metadata_path) {
    return std::make_unique<OnnxModelBackend>(model_path, metadata_path);
}

std::unique_ptr<DetectorBackend> whole_frame_person_backend() {
    return std::make_unique<WholeFramePersonBackend>();
}

} // namespace ppe
