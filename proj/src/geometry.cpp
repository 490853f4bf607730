#include "ppe/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "ppe/errors.hpp"

namespace ppe {

BoundingBox LetterboxTransform::map_box(const BoundingBox& b) const {
    return {b.x_min * scale + pad_x, b.y_min * scale + pad_y,
            b.x_max * scale + pad_x, b.y_max * scale + pad_y};
}

BoundingBox LetterboxTransform::unmap_box(const BoundingBox& b) const {
    return {(b.x_min - pad_x) / scale, (b.y_min - pad_y) / scale,
            (b.x_max - pad_x) / scale, (b.y_max - pad_y) / scale};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix_min = std::max(a.x_min, b.x_min);
    const double iy_min = std::max(a.y_min, b.y_min);
    const double ix_max = std::min(a.x_max, b.x_max);
    const double iy_max = std::min(a.y_max, b.y_max);
    const double iw = std::max(0.0, ix_max - ix_min);
    const double ih = std::max(0.0, iy_max - iy_min);
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox to_pixel(const NormalizedBox& n, int width, int height) {
    if (width <= 0 || height <= 0) {
        throw ParameterError("to_pixel: image dimensions must be positive");
    }
    if (!std::isfinite(n.cx) || !std::isfinite(n.cy) || !std::isfinite(n.w) ||
        !std::isfinite(n.h)) {
        throw ParameterError("to_pixel: non-finite normalized box field");
    }
    return {(n.cx - n.w / 2.0) * width, (n.cy - n.h / 2.0) * height,
            (n.cx + n.w / 2.0) * width, (n.cy + n.h / 2.0) * height};
}

NormalizedBox to_normalized(const BoundingBox& b, int width, int height,
                            double epsilon_frac) {
    if (width <= 0 || height <= 0) {
        throw ParameterError("to_normalized: image dimensions must be positive");
    }
    if (!b.valid()) {
        throw ParameterError("to_normalized: invalid box");
    }
    const double eps_x = epsilon_frac * width;
    const double eps_y = epsilon_frac * height;
    if (b.x_min < -eps_x || b.y_min < -eps_y || b.x_max > width + eps_x ||
        b.y_max > height + eps_y) {
        throw ParameterError("to_normalized: box exceeds frame beyond tolerance");
    }
    const double x_min = std::clamp(b.x_min, 0.0, double(width));
    const double y_min = std::clamp(b.y_min, 0.0, double(height));
    const double x_max = std::clamp(b.x_max, 0.0, double(width));
    const double y_max = std::clamp(b.y_max, 0.0, double(height));
    return {(x_min + x_max) / 2.0 / width, (y_min + y_max) / 2.0 / height,
            (x_max - x_min) / width, (y_max - y_min) / height};
}

LetterboxTransform letterbox(FrameSize source, FrameSize target) {
    if (source.width <= 0 || source.height <= 0 || target.width <= 0 ||
        target.height <= 0) {
        throw ParameterError("letterbox: dimensions must be positive");
    }
    LetterboxTransform t;
    t.source = source;
    t.target = target;
    t.scale = std::min(double(target.width) / source.width,
                       double(target.height) / source.height);
    t.pad_x = (target.width - source.width * t.scale) / 2.0;
    t.pad_y = (target.height - source.height * t.scale) / 2.0;
    return t;
}

BoundingBox expand_and_clamp(const BoundingBox& b, double margin_frac,
                             FrameSize frame) {
    if (margin_frac < 0.0) {
        throw ParameterError("expand_and_clamp: margin must be non-negative");
    }
    const double mx = margin_frac * b.width();
    const double my = margin_frac * b.height();
    return clamp_to_frame({b.x_min - mx, b.y_min - my, b.x_max + mx, b.y_max + my},
                          frame);
}

BoundingBox translate_box(const BoundingBox& b, double dx, double dy) {
    return {b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
}

BoundingBox clamp_to_frame(const BoundingBox& b, FrameSize frame) {
    const double w = frame.width;
    const double h = frame.height;
    return {std::clamp(b.x_min, 0.0, w), std::clamp(b.y_min, 0.0, h),
            std::clamp(b.x_max, 0.0, w), std::clamp(b.y_max, 0.0, h)};
}

} // namespace ppe
