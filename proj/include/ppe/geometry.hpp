#pragma once

#include <cstdint>

namespace ppe {

struct FrameSize {
    int width = 0;
    int height = 0;

    bool operator==(const FrameSize&) const = default;
};

// Axis-aligned box in pixel coordinates, x right, y down.
// Corner-coordinate convention: the box covers [x_min,x_max]×[y_min,y_max]
// as real intervals, independent of pixel sampling.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }
    bool valid() const { return x_min <= x_max && y_min <= y_max; }

    bool operator==(const BoundingBox&) const = default;
};

// Center/size box normalized to [0,1] fractions of the image dimensions.
struct NormalizedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const NormalizedBox&) const = default;
};

// Aspect-preserving resize with symmetric padding into a target frame.
struct LetterboxTransform {
    double scale = 1.0;
    double pad_x = 0.0;
    double pad_y = 0.0;
    FrameSize source;
    FrameSize target;

    BoundingBox map_box(const BoundingBox& b) const;
    BoundingBox unmap_box(const BoundingBox& b) const;
};

// Intersection over union. Zero-area union yields 0, never NaN.
double iou(const BoundingBox& a, const BoundingBox& b);

// Decode a normalized center/size box into pixel corner coordinates.
// Throws ParameterError on non-positive dimensions or non-finite fields.
BoundingBox to_pixel(const NormalizedBox& n, int width, int height);

// Inverse of to_pixel. Boxes spilling past the frame by at most
// epsilon_frac of the frame dimension are clamped; larger spill throws.
NormalizedBox to_normalized(const BoundingBox& b, int width, int height,
                            double epsilon_frac = 1e-3);

LetterboxTransform letterbox(FrameSize source, FrameSize target = {476, 476});

// Grow each side outward by margin_frac of the box's own extent,
// then clamp to the frame.
BoundingBox expand_and_clamp(const BoundingBox& b, double margin_frac,
                             FrameSize frame);

BoundingBox translate_box(const BoundingBox& b, double dx, double dy);

BoundingBox clamp_to_frame(const BoundingBox& b, FrameSize frame);

} // namespace ppe
