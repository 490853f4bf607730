#include "ppe/imageio.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace ppe {

namespace {

Image from_mat(const cv::Mat& bgr) {
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image img(rgb.cols, rgb.rows);
    if (rgb.isContinuous()) {
        std::copy(rgb.data, rgb.data + img.pixels.size(), img.pixels.begin());
    } else {
        for (int y = 0; y < rgb.rows; ++y) {
            const auto* row = rgb.ptr<std::uint8_t>(y);
            std::copy(row, row + std::size_t(rgb.cols) * 3,
                      img.pixels.begin() + std::size_t(y) * rgb.cols * 3);
        }
    }
    return img;
}

cv::Mat to_mat(const Image& img) {
    cv::Mat rgb(img.height, img.width, CV_8UC3,
                const_cast<std::uint8_t*>(img.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

} // namespace

Image read_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) {
        throw Error("cannot read image: " + path.string());
    }
    return from_mat(m);
}

void write_png(const std::filesystem::path& path, const Image& img) {
    if (!cv::imwrite(path.string(), to_mat(img))) {
        throw Error("cannot write image: " + path.string());
    }
}

Image decode_image(std::span<const std::uint8_t> bytes) {
    cv::Mat buf(1, int(bytes.size()), CV_8UC1,
                const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat m = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (m.empty()) {
        throw FormatError("cannot decode image payload");
    }
    return from_mat(m);
}

std::optional<FrameSize> probe_dimensions(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        return std::nullopt;
    }
    return FrameSize{m.cols, m.rows};
}

Image letterbox_image(const Image& img, const LetterboxTransform& t,
                      std::uint8_t fill) {
    const int scaled_w = int(std::lround(img.width * t.scale));
    const int scaled_h = int(std::lround(img.height * t.scale));
    cv::Mat src = to_mat(img);
    cv::Mat resized;
    cv::resize(src, resized, cv::Size(std::max(1, scaled_w), std::max(1, scaled_h)),
               0, 0, cv::INTER_LINEAR);
    cv::Mat canvas(t.target.height, t.target.width, CV_8UC3,
                   cv::Scalar(fill, fill, fill));
    const int ox = int(std::lround(t.pad_x));
    const int oy = int(std::lround(t.pad_y));
    cv::Rect roi(ox, oy, std::min(resized.cols, canvas.cols - ox),
                 std::min(resized.rows, canvas.rows - oy));
    resized(cv::Rect(0, 0, roi.width, roi.height)).copyTo(canvas(roi));
    return from_mat(canvas);
}

Image crop_image(const Image& img, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width ||
        y + h > img.height) {
        throw ParameterError("crop_image: rectangle outside image");
    }
    Image out(w, h);
    for (int row = 0; row < h; ++row) {
        const auto* src = &img.pixels[(std::size_t(y + row) * img.width + x) * 3];
        std::copy(src, src + std::size_t(w) * 3,
                  out.pixels.begin() + std::size_t(row) * w * 3);
    }
    return out;
}

} // namespace ppe
