// Command-line front end: dataset stats, augmentation, evaluation, detection,
// frame-pipeline runs, the gate service, and the crop-vs-full-frame benchmark.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppe/augment.hpp"
#include "ppe/config.hpp"
#include "ppe/dataset.hpp"
#include "ppe/errors.hpp"
#include "ppe/eval.hpp"
#include "ppe/gate_service.hpp"
#include "ppe/imageio.hpp"
#include "ppe/pipeline.hpp"

using namespace ppe;
using nlohmann::json;

namespace {

Manifest load_any_manifest(const std::string& path) {
    if (std::filesystem::is_directory(path)) {
        auto result = load_manifest(path);
        for (const auto& warning : result.warnings) {
            std::cerr << "warning: " << warning << "\n";
        }
        return std::move(result.manifest);
    }
    if (!std::filesystem::exists(path)) {
        throw ConfigError("manifest not found: " + path);
    }
    return load_manifest_json(path);
}

// Images eligible for a recipe entry. The entry note may name target
// classes ("hardhat", "glasses+hearing"); an empty or unrecognized note
// targets every image.
std::vector<std::size_t> eligible_images(const Manifest& manifest,
                                         const std::string& note) {
    std::set<PpeClass> targets;
    std::stringstream tokens(note);
    std::string token;
    while (std::getline(tokens, token, '+')) {
        if (auto cls = class_from_name(token)) {
            targets.insert(*cls);
        } else if (token == "glasses") {
            targets.insert(PpeClass::SafetyGlasses);
        } else if (token == "hearing") {
            targets.insert(PpeClass::HearingProtection);
        } else if (token == "vest") {
            targets.insert(PpeClass::SafetyVest);
        } else if (token == "gloves") {
            targets.insert(PpeClass::SafetyGloves);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < manifest.images.size(); ++i) {
        if (targets.empty()) {
            out.push_back(i);
            continue;
        }
        for (const auto& a : manifest.images[i].annotations) {
            if (targets.count(a.cls)) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

json stats_to_json(const ClassStats& stats) {
    json classes = json::array();
    for (const PpeClass cls : all_ppe_classes()) {
        const int c = static_cast<int>(cls);
        classes.push_back({{"class", std::string(class_name(cls))},
                           {"occurrences", stats.occurrences[c]},
                           {"percentage", stats.percentages[c]}});
    }
    return {{"classes", classes},
            {"total", stats.total},
            {"empty_dataset", stats.empty_dataset}};
}

void print_stats(const ClassStats& stats) {
    std::cout << "Object | Occurrences | Percentage\n";
    for (const PpeClass cls : all_ppe_classes()) {
        const int c = static_cast<int>(cls);
        std::cout << class_name(cls) << " | " << stats.occurrences[c] << " | "
                  << stats.percentages[c] << "%\n";
    }
    std::cout << "total | " << stats.total << " | 100%\n";
    if (stats.empty_dataset) {
        std::cerr << "warning: no annotated objects in the manifest\n";
    }
}

json report_to_json(const EvalReport& report) {
    json classes = json::array();
    for (const auto& cr : report.classes) {
        json entry = {{"class", std::string(class_name(cr.cls))},
                      {"n_ground_truth", cr.n_ground_truth},
                      {"n_detections", cr.n_detections},
                      {"tp", cr.tp},
                      {"fp", cr.fp},
                      {"fn", cr.fn}};
        entry["precision"] = cr.precision ? json(*cr.precision) : json(nullptr);
        entry["recall"] = cr.recall ? json(*cr.recall) : json(nullptr);
        entry["average_precision"] =
            cr.average_precision ? json(*cr.average_precision) : json(nullptr);
        classes.push_back(std::move(entry));
    }
    json out = {{"classes", classes},
                {"iou_threshold", report.iou_threshold},
                {"confidence_threshold", report.confidence_threshold}};
    out["map"] = report.map ? json(*report.map) : json(nullptr);
    return out;
}

json detection_to_json(const Detection& det) {
    return {{"class", std::string(object_class_name(det.cls))},
            {"confidence", det.confidence},
            {"box",
             {{"x_min", det.box.x_min},
              {"y_min", det.box.y_min},
              {"x_max", det.box.x_max},
              {"y_max", det.box.y_max}}}};
}

std::vector<std::filesystem::path> frame_files(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("frames directory not found: " + dir);
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ConfigError("no frames in " + dir);
    }
    return files;
}

struct BackendPair {
    std::unique_ptr<DetectorBackend> person;
    std::unique_ptr<DetectorBackend> ppe;
};

BackendPair backends_from(const Config& config) {
    BackendPair pair;
    pair.person = make_backend(config.get_or("pipeline.person_backend", "fullframe"));
    const auto ppe_spec = config.get("pipeline.ppe_backend");
    if (!ppe_spec) {
        throw ConfigError("pipeline.ppe_backend is required");
    }
    pair.ppe = make_backend(*ppe_spec);
    return pair;
}

json frame_result_to_json(const std::string& id, const FrameResult& result) {
    json persons = json::array();
    for (const auto& person : result.persons) {
        json present = json::array();
        for (const PpeClass cls : person.present) {
            present.push_back(std::string(class_name(cls)));
        }
        json missing = json::array();
        for (const PpeClass cls : person.decision.missing) {
            missing.push_back(std::string(class_name(cls)));
        }
        persons.push_back({{"box",
                            {{"x_min", person.person_box.x_min},
                             {"y_min", person.person_box.y_min},
                             {"x_max", person.person_box.x_max},
                             {"y_max", person.person_box.y_max}}},
                           {"present", present},
                           {"missing", missing},
                           {"compliant", person.decision.compliant}});
    }
    json fused_present = json::array();
    for (const PpeClass cls : result.fused_present) {
        fused_present.push_back(std::string(class_name(cls)));
    }
    json fused_missing = json::array();
    for (const PpeClass cls : result.fused_decision.missing) {
        fused_missing.push_back(std::string(class_name(cls)));
    }
    return {{"frame", id},
            {"persons", persons},
            {"fused_present", fused_present},
            {"fused_missing", fused_missing},
            {"fused_compliant", result.fused_decision.compliant},
            {"errors", result.person_errors}};
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int run_stats(const std::string& manifest_path, bool as_json) {
    const auto manifest = load_any_manifest(manifest_path);
    const auto stats = class_stats(manifest);
    if (as_json) {
        std::cout << stats_to_json(stats).dump() << "\n";
    } else {
        print_stats(stats);
    }
    return 0;
}

int run_augment(const std::string& manifest_path, const std::string& recipe_spec,
                const std::string& out_dir, bool as_json) {
    const auto manifest = load_any_manifest(manifest_path);

    Recipe recipe;
    if (const Recipe* builtin = find_builtin_recipe(recipe_spec)) {
        recipe = *builtin;
    } else if (std::filesystem::exists(recipe_spec)) {
        std::ifstream in(recipe_spec);
        std::ostringstream text;
        text << in.rdbuf();
        recipe = parse_recipe_json(text.str());
    } else {
        throw ConfigError("unknown recipe: " + recipe_spec);
    }

    // Each entry cycles over its eligible images, in manifest order.
    std::map<std::string, std::vector<StepSequence>> assignments;
    for (const auto& entry : recipe.entries) {
        const auto pool = eligible_images(manifest, entry.note);
        if (pool.empty() && entry.count > 0) {
            throw ConfigError("recipe entry '" + entry.note +
                              "' has no eligible images");
        }
        for (int i = 0; i < entry.count; ++i) {
            const auto& rec = manifest.images[pool[i % pool.size()]];
            assignments[rec.id].push_back(entry.steps);
        }
    }

    std::filesystem::create_directories(out_dir);
    const auto expanded = expand_dataset(manifest, assignments, out_dir);
    save_manifest(std::filesystem::path(out_dir) / "manifest.json", expanded);

    const auto before = class_stats(manifest);
    const auto after = class_stats(expanded);
    if (as_json) {
        json classes = json::array();
        for (const PpeClass cls : all_ppe_classes()) {
            const int c = static_cast<int>(cls);
            classes.push_back({{"class", std::string(class_name(cls))},
                               {"before", before.occurrences[c]},
                               {"after", after.occurrences[c]},
                               {"delta",
                                after.occurrences[c] - before.occurrences[c]}});
        }
        std::cout << json{{"recipe", recipe.name},
                          {"classes", classes},
                          {"images_before", manifest.images.size()},
                          {"images_after", expanded.images.size()}}
                         .dump()
                  << "\n";
    } else {
        std::cout << "Object | Before | After | Delta\n";
        for (const PpeClass cls : all_ppe_classes()) {
            const int c = static_cast<int>(cls);
            std::cout << class_name(cls) << " | " << before.occurrences[c]
                      << " | " << after.occurrences[c] << " | "
                      << after.occurrences[c] - before.occurrences[c] << "\n";
        }
        std::cout << "images: " << manifest.images.size() << " -> "
                  << expanded.images.size() << "\n";
    }
    return 0;
}

int run_evaluate(const std::string& manifest_path,
                 const std::string& detections_path, double iou_threshold,
                 double confidence_threshold, const std::string& layout,
                 bool as_json) {
    const auto manifest = load_any_manifest(manifest_path);
    if (!std::filesystem::exists(detections_path)) {
        throw ConfigError("detections file not found: " + detections_path);
    }
    const auto detections = load_detection_file(detections_path);
    const auto report = evaluate(detections, manifest, iou_threshold,
                                 confidence_threshold, manifest_path);
    if (as_json) {
        std::cout << report_to_json(report).dump() << "\n";
        return 0;
    }
    ReportLayout rl = ReportLayout::Table45;
    if (layout == "table2") {
        rl = ReportLayout::Table2;
    } else if (layout == "csv") {
        rl = ReportLayout::Csv;
    } else if (layout != "table45") {
        throw ConfigError("unknown layout: " + layout);
    }
    std::cout << render_report(report, rl);
    return 0;
}

int run_detect(const std::string& image_path, const std::string& backend_spec,
               const DetectorConfig& detector, bool as_json) {
    auto backend = make_backend(backend_spec);
    const auto image = read_image(image_path);
    const std::string id = std::filesystem::path(image_path).stem().string();
    const auto detections = detect(*backend, image, id, detector);
    if (as_json) {
        json out = json::array();
        for (const auto& det : detections) {
            out.push_back(detection_to_json(det));
        }
        std::cout << out.dump() << "\n";
    } else {
        for (const auto& det : detections) {
            char line[160];
            std::snprintf(line, sizeof(line), "%s %.4f %.2f %.2f %.2f %.2f",
                          std::string(object_class_name(det.cls)).c_str(),
                          det.confidence, det.box.x_min, det.box.y_min,
                          det.box.x_max, det.box.y_max);
            std::cout << line << "\n";
        }
    }
    return 0;
}

int run_frames(const std::string& frames_dir, const Config& config,
               bool as_json) {
    auto backends = backends_from(config);
    const auto pipeline_config = pipeline_config_from(config);
    FusionWindow window(pipeline_config.fusion.window,
                        pipeline_config.fusion.quorum);

    json frames = json::array();
    const FrameResult* last = nullptr;
    FrameResult last_result;
    for (const auto& path : frame_files(frames_dir)) {
        const auto frame = read_image(path);
        const std::string id = path.stem().string();
        last_result = process_frame(frame, id, *backends.person, *backends.ppe,
                                    pipeline_config, &window);
        last = &last_result;
        if (as_json) {
            frames.push_back(frame_result_to_json(id, last_result));
        } else {
            std::cout << id << ": persons=" << last_result.persons.size()
                      << " fused_compliant="
                      << (last_result.fused_decision.compliant ? "yes" : "no");
            if (!last_result.fused_decision.missing.empty()) {
                std::cout << " missing=";
                bool first = true;
                for (const PpeClass cls : last_result.fused_decision.missing) {
                    std::cout << (first ? "" : ",") << class_name(cls);
                    first = false;
                }
            }
            for (const auto& err : last_result.person_errors) {
                std::cerr << id << ": " << err << "\n";
            }
            std::cout << "\n";
        }
    }
    if (as_json) {
        std::cout << json{{"frames", frames},
                          {"final_compliant",
                           last && last->fused_decision.compliant}}
                         .dump()
                  << "\n";
    } else if (last) {
        std::cout << "final fused compliance: "
                  << (last->fused_decision.compliant ? "compliant"
                                                     : "non-compliant")
                  << "\n";
    }
    return 0;
}

int run_serve(const Config& config) {
    GateService service(config);
    std::cerr << "listening on port " << service.port() << "\n";
    return service.run() ? 0 : 1;
}

int run_bench(const std::string& frames_dir, const Config& config, int repeats,
              bool as_json) {
    if (repeats < 1) {
        throw ConfigError("bench: --repeat must be at least 1");
    }
    auto backends = backends_from(config);
    PixelCountingBackend counting_ppe(*backends.ppe);
    const auto pipeline_config = pipeline_config_from(config);

    std::vector<Image> frames;
    std::vector<std::string> ids;
    for (const auto& path : frame_files(frames_dir)) {
        frames.push_back(read_image(path));
        ids.push_back(path.stem().string());
    }

    const auto pass_cropped = [&] {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            process_frame(frames[i], ids[i], *backends.person, counting_ppe,
                          pipeline_config);
        }
    };
    // Crop disabled: PPE detection runs over the whole frame per person.
    const auto pass_full = [&] {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto persons = detect_persons(frames[i], ids[i],
                                                *backends.person,
                                                pipeline_config.detector);
            for (std::size_t p = 0; p < persons.size(); ++p) {
                detect_ppe_on_person(frames[i], 0.0, 0.0,
                                     ids[i] + "#p" + std::to_string(p),
                                     counting_ppe, pipeline_config.detector);
            }
        }
    };

    struct BenchResult {
        double fps = 0.0;
        double pixels_per_frame = 0.0;
    };
    const auto measure = [&](const std::function<void()>& pass) {
        pass(); // warmup, excluded from timing
        counting_ppe.reset();
        std::vector<double> seconds;
        for (int r = 0; r < repeats; ++r) {
            const auto start = std::chrono::steady_clock::now();
            pass();
            seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count());
        }
        BenchResult result;
        result.fps = double(frames.size()) / std::max(median(seconds), 1e-9);
        result.pixels_per_frame = double(counting_ppe.pixels_processed()) /
                                  double(repeats * frames.size());
        return result;
    };

    const auto cropped = measure(pass_cropped);
    const auto full = measure(pass_full);
    const double ratio = full.fps > 0.0 ? cropped.fps / full.fps : 0.0;

    if (as_json) {
        std::cout << json{{"frames", frames.size()},
                          {"repeats", repeats},
                          {"crop_enabled",
                           {{"fps", cropped.fps},
                            {"ppe_pixels_per_frame", cropped.pixels_per_frame}}},
                          {"crop_disabled",
                           {{"fps", full.fps},
                            {"ppe_pixels_per_frame", full.pixels_per_frame}}},
                          {"fps_ratio", ratio}}
                         .dump()
                  << "\n";
    } else {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "crop enabled:  %.2f fps, %.0f PPE pixels/frame\n"
                      "crop disabled: %.2f fps, %.0f PPE pixels/frame\n"
                      "fps ratio (crop/full): %.3f\n",
                      cropped.fps, cropped.pixels_per_frame, full.fps,
                      full.pixels_per_frame, ratio);
        std::cout << buf;
    }
    return 0;
}

Config config_from_args(const std::string& config_path) {
    if (config_path.empty()) {
        return {};
    }
    if (!std::filesystem::exists(config_path)) {
        throw ConfigError("config file not found: " + config_path);
    }
    return Config::from_file(config_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PPE compliance toolkit: dataset stats, augmentation, "
                 "evaluation, detection pipeline, gate service, benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    bool as_json = false;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_flag("--json", as_json, "machine-readable JSON on stdout");

    std::string manifest_path, recipe_spec, out_dir, detections_path,
        image_path, backend_spec, frames_dir, layout = "table45";
    double iou_threshold = 0.5, confidence_threshold = 0.0;
    int repeats = 3;
    DetectorConfig detector;

    auto* stats = app.add_subcommand("stats", "class occurrence statistics");
    stats->add_option("--manifest", manifest_path,
                      "dataset directory or manifest JSON")
        ->required();

    auto* augment = app.add_subcommand("augment", "expand a dataset by recipe");
    augment->add_option("--manifest", manifest_path)->required();
    augment->add_option("--recipe", recipe_spec,
                        "PHASE2, PHASE4_A, PHASE4_B, or a recipe JSON file")
        ->required();
    augment->add_option("--out", out_dir, "output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score detections");
    evaluate->add_option("--manifest", manifest_path)->required();
    evaluate->add_option("--detections", detections_path)->required();
    evaluate->add_option("--iou", iou_threshold, "IoU matching threshold");
    evaluate->add_option("--conf", confidence_threshold,
                         "confidence filter before scoring");
    evaluate->add_option("--layout", layout, "table2, table45, or csv");

    auto* detect_cmd = app.add_subcommand("detect", "detect on one image");
    detect_cmd->add_option("--image", image_path)->required();
    detect_cmd->add_option("--backend", backend_spec,
                           "fixture:<path>, model:<onnx>,<meta>, or fullframe")
        ->required();
    detect_cmd->add_option("--input-size", detector.input_size);
    detect_cmd->add_option("--conf", detector.confidence_threshold);
    detect_cmd->add_option("--nms", detector.nms_iou_threshold);

    auto* run = app.add_subcommand("run", "pipeline over a directory of frames");
    run->add_option("--frames", frames_dir)->required();

    auto* serve = app.add_subcommand("serve", "start the gate HTTP service");

    auto* bench = app.add_subcommand("bench",
                                     "crop-enabled vs crop-disabled throughput");
    bench->add_option("--frames", frames_dir)->required();
    bench->add_option("--repeat", repeats, "timed repetitions per config");

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough(); // lets --config/--json follow the subcommand name
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (stats->parsed()) {
            return run_stats(manifest_path, as_json);
        }
        if (augment->parsed()) {
            return run_augment(manifest_path, recipe_spec, out_dir, as_json);
        }
        if (evaluate->parsed()) {
            return run_evaluate(manifest_path, detections_path, iou_threshold,
                                confidence_threshold, layout, as_json);
        }
        if (detect_cmd->parsed()) {
            return run_detect(image_path, backend_spec, detector, as_json);
        }
        if (run->parsed()) {
            return run_frames(frames_dir, config_from_args(config_path), as_json);
        }
        if (serve->parsed()) {
            return run_serve(config_from_args(config_path));
        }
        if (bench->parsed()) {
            return run_bench(frames_dir, config_from_args(config_path), repeats,
                             as_json);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const BackendError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
