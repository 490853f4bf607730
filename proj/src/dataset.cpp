#include "ppe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ppe/errors.hpp"
#include "ppe/imageio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ppe {

namespace {

constexpr std::array<std::string_view, kPpeClassCount> kClassNames = {
    "hardhat", "safety_vest", "safety_gloves", "safety_glasses",
    "hearing_protection"};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

double parse_field(std::string_view token, int line_no, const char* what) {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": non-numeric " +
                          what + " '" + std::string(token) + "'");
    }
    return value;
}

} // namespace

std::string_view class_name(PpeClass cls) {
    return kClassNames[static_cast<int>(cls)];
}

std::optional<PpeClass> class_from_name(std::string_view name) {
    for (int i = 0; i < kPpeClassCount; ++i) {
        if (kClassNames[i] == name) {
            return static_cast<PpeClass>(i);
        }
    }
    return std::nullopt;
}

std::vector<Annotation> parse_annotation_file(std::string_view text,
                                              int class_count) {
    std::vector<Annotation> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        const auto tokens = split_ws(line);
        if (tokens.empty()) {
            continue;
        }
        if (tokens.size() != 5) {
            throw FormatError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                              std::to_string(tokens.size()));
        }
        int cls_id = 0;
        const auto [ptr, ec] = std::from_chars(
            tokens[0].data(), tokens[0].data() + tokens[0].size(), cls_id);
        if (ec != std::errc{} || ptr != tokens[0].data() + tokens[0].size()) {
            throw FormatError("line " + std::to_string(line_no) +
                              ": non-numeric class id '" + std::string(tokens[0]) + "'");
        }
        if (cls_id < 0 || cls_id >= class_count) {
            throw FormatError("line " + std::to_string(line_no) + ": unknown class id " +
                              std::to_string(cls_id));
        }
        Annotation a;
        a.cls = static_cast<PpeClass>(cls_id);
        a.box.cx = parse_field(tokens[1], line_no, "cx");
        a.box.cy = parse_field(tokens[2], line_no, "cy");
        a.box.w = parse_field(tokens[3], line_no, "w");
        a.box.h = parse_field(tokens[4], line_no, "h");
        for (double v : {a.box.cx, a.box.cy, a.box.w, a.box.h}) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw FormatError("line " + std::to_string(line_no) +
                                  ": field outside [0,1]");
            }
        }
        out.push_back(a);
    }
    return out;
}

std::string serialize_annotation_file(std::span<const Annotation> annotations) {
    std::string out;
    char buf[128];
    for (const auto& a : annotations) {
        std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f\n",
                      static_cast<int>(a.cls), a.box.cx, a.box.cy, a.box.w,
                      a.box.h);
        out += buf;
    }
    return out;
}

ManifestLoadResult load_manifest(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw Error("not a directory: " + root.string());
    }
    static const std::set<std::string> kImageExts = {".jpg", ".jpeg", ".png",
                                                     ".bmp"};
    ManifestLoadResult result;
    std::vector<fs::path> image_paths;
    std::set<fs::path> annotation_paths;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (kImageExts.count(ext)) {
            image_paths.push_back(entry.path());
        } else if (ext == ".txt") {
            annotation_paths.insert(entry.path());
        }
    }
    std::sort(image_paths.begin(), image_paths.end());

    for (const auto& img_path : image_paths) {
        ImageRecord rec;
        rec.id = fs::relative(img_path, root).replace_extension("").generic_string();
        rec.path = img_path.generic_string();
        const auto dims = probe_dimensions(img_path);
        if (!dims) {
            result.warnings.push_back("unreadable image: " + img_path.string());
            continue;
        }
        rec.width = dims->width;
        rec.height = dims->height;

        fs::path ann_path = img_path;
        ann_path.replace_extension(".txt");
        if (fs::exists(ann_path)) {
            annotation_paths.erase(ann_path);
            std::ifstream in(ann_path);
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                rec.annotations = parse_annotation_file(ss.str());
            } catch (const FormatError& e) {
                result.warnings.push_back("bad annotation file " +
                                          ann_path.string() + ": " + e.what());
                continue;
            }
        }
        result.manifest.images.push_back(std::move(rec));
    }
    for (const auto& orphan : annotation_paths) {
        result.warnings.push_back("orphan annotation file: " + orphan.string());
    }
    return result;
}

ClassStats class_stats(const Manifest& manifest) {
    ClassStats stats;
    for (const auto& rec : manifest.images) {
        for (const auto& a : rec.annotations) {
            ++stats.occurrences[static_cast<int>(a.cls)];
        }
    }
    stats.total = std::accumulate(stats.occurrences.begin(),
                                  stats.occurrences.end(), std::int64_t{0});
    if (stats.total == 0) {
        stats.empty_dataset = true;
        return stats;
    }
    // Largest-remainder apportionment: integer percentages summing to 100.
    std::array<double, kPpeClassCount> remainder{};
    int assigned = 0;
    for (int i = 0; i < kPpeClassCount; ++i) {
        const double exact = 100.0 * double(stats.occurrences[i]) / double(stats.total);
        stats.percentages[i] = int(std::floor(exact));
        remainder[i] = exact - stats.percentages[i];
        assigned += stats.percentages[i];
    }
    std::array<int, kPpeClassCount> order{0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return remainder[a] > remainder[b];
    });
    for (int k = 0; k < 100 - assigned && k < kPpeClassCount; ++k) {
        ++stats.percentages[order[k]];
    }
    return stats;
}

std::string manifest_to_json(const Manifest& manifest) {
    json images = json::array();
    for (const auto& rec : manifest.images) {
        json anns = json::array();
        for (const auto& a : rec.annotations) {
            anns.push_back({{"class", std::string(class_name(a.cls))},
                            {"cx", a.box.cx},
                            {"cy", a.box.cy},
                            {"w", a.box.w},
                            {"h", a.box.h}});
        }
        images.push_back({{"id", rec.id},
                          {"path", rec.path},
                          {"width", rec.width},
                          {"height", rec.height},
                          {"annotations", anns}});
    }
    return json{{"images", images}}.dump(2);
}

Manifest manifest_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest JSON: ") + e.what());
    }
    Manifest manifest;
    try {
        for (const auto& jrec : doc.at("images")) {
            ImageRecord rec;
            rec.id = jrec.at("id").get<std::string>();
            rec.path = jrec.at("path").get<std::string>();
            rec.width = jrec.at("width").get<int>();
            rec.height = jrec.at("height").get<int>();
            for (const auto& ja : jrec.at("annotations")) {
                Annotation a;
                const auto cls = class_from_name(ja.at("class").get<std::string>());
                if (!cls) {
                    throw FormatError("manifest JSON: unknown class '" +
                                      ja.at("class").get<std::string>() + "'");
                }
                a.cls = *cls;
                a.box = {ja.at("cx").get<double>(), ja.at("cy").get<double>(),
                         ja.at("w").get<double>(), ja.at("h").get<double>()};
                rec.annotations.push_back(a);
            }
            manifest.images.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest JSON: ") + e.what());
    }
    return manifest;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write manifest: " + path.string());
    }
    out << manifest_to_json(manifest) << "\n";
}

Manifest load_manifest_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read manifest: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str());
}

} // namespace ppe
