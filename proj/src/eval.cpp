#include "ppe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ppe/errors.hpp"

namespace ppe {

namespace {

constexpr std::array<std::string_view, kPpeClassCount> kDisplayNames = {
    "Hardhat", "Safety vest", "Safety gloves", "Safety glasses",
    "Hearing protection"};

std::string percent_or_dash(const std::optional<double>& v) {
    if (!v) {
        return "–";
    }
    return std::to_string(percent_round_half_up(*v)) + "%";
}

std::string csv_number(const std::optional<double>& v) {
    if (!v) {
        return "";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return buf;
}

} // namespace

int percent_round_half_up(double fraction) {
    return int(std::floor(fraction * 100.0 + 0.5));
}

MatchResult match_detections(std::vector<Detection> predictions,
                             const std::vector<GroundTruth>& ground_truths,
                             double iou_threshold) {
    std::sort(predictions.begin(), predictions.end(),
              [](const Detection& a, const Detection& b) {
                  if (a.confidence != b.confidence) {
                      return a.confidence > b.confidence;
                  }
                  if (a.box.x_min != b.box.x_min) {
                      return a.box.x_min < b.box.x_min;
                  }
                  return a.box.y_min < b.box.y_min;
              });
    std::vector<bool> consumed(ground_truths.size(), false);
    MatchResult result;
    for (const auto& pred : predictions) {
        const auto cls = to_ppe_class(pred.cls);
        if (!cls) {
            continue; // person detections are not evaluated
        }
        double best_iou = 0.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < ground_truths.size(); ++g) {
            if (consumed[g] || ground_truths[g].cls != *cls) {
                continue;
            }
            const double v = iou(pred.box, ground_truths[g].box);
            if (v > best_iou) {
                best_iou = v;
                best_gt = int(g);
            }
        }
        ScoredMatch m{pred.confidence, false, *cls};
        if (best_gt >= 0 && best_iou >= iou_threshold) {
            consumed[best_gt] = true;
            m.true_positive = true;
        }
        result.matches.push_back(m);
    }
    result.false_negatives =
        int(std::count(consumed.begin(), consumed.end(), false));
    return result;
}

PrecisionRecall precision_recall(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn) {
    if (tp < 0 || fp < 0 || fn < 0) {
        throw ParameterError("precision_recall: negative counts");
    }
    PrecisionRecall pr;
    if (tp + fp > 0) {
        pr.precision = double(tp) / double(tp + fp);
    }
    if (tp + fn > 0) {
        pr.recall = double(tp) / double(tp + fn);
    }
    return pr;
}

std::optional<double> average_precision(std::vector<ScoredMatch> matches,
                                        std::int64_t n_ground_truth) {
    if (n_ground_truth < 0) {
        throw ParameterError("average_precision: negative ground-truth count");
    }
    if (n_ground_truth == 0) {
        return std::nullopt;
    }
    // Equal confidences rank true positives first, so the curve does not
    // depend on input order.
    std::sort(matches.begin(), matches.end(),
              [](const ScoredMatch& a, const ScoredMatch& b) {
                  if (a.confidence != b.confidence) {
                      return a.confidence > b.confidence;
                  }
                  return a.true_positive > b.true_positive;
              });
    std::vector<double> precision, recall;
    std::int64_t tp = 0, fp = 0;
    for (const auto& m : matches) {
        m.true_positive ? ++tp : ++fp;
        precision.push_back(double(tp) / double(tp + fp));
        recall.push_back(double(tp) / double(n_ground_truth));
    }
    // Right-to-left precision envelope, integrated over recall.
    double envelope = 0.0;
    double ap = 0.0;
    double next_recall = 0.0; // recall of the point to the right
    for (int i = int(matches.size()) - 1; i >= 0; --i) {
        if (i + 1 < int(matches.size())) {
            ap += (next_recall - recall[i]) * envelope;
        }
        envelope = std::max(envelope, precision[i]);
        next_recall = recall[i];
    }
    if (!matches.empty()) {
        ap += next_recall * envelope; // segment from recall 0 to the first point
    }
    return ap;
}

double mean_ap(std::span<const std::optional<double>> class_aps) {
    double sum = 0.0;
    int n = 0;
    for (const auto& ap : class_aps) {
        if (ap) {
            sum += *ap;
            ++n;
        }
    }
    if (n == 0) {
        throw ParameterError("mean_ap: no defined class AP");
    }
    return sum / n;
}

EvalReport evaluate(
    const std::map<std::string, std::vector<Detection>>& detections_by_image,
    const Manifest& manifest, double iou_threshold,
    double confidence_threshold, const std::string& dataset_id) {
    std::set<std::string> known_ids;
    for (const auto& rec : manifest.images) {
        known_ids.insert(rec.id);
    }
    std::string unknown;
    for (const auto& [id, _] : detections_by_image) {
        if (!known_ids.count(id)) {
            unknown += unknown.empty() ? id : ", " + id;
        }
    }
    if (!unknown.empty()) {
        throw ParameterError("evaluate: detections for unknown image ids: " +
                             unknown);
    }

    std::array<std::vector<ScoredMatch>, kPpeClassCount> per_class;
    std::array<std::int64_t, kPpeClassCount> n_gt{};
    std::array<std::int64_t, kPpeClassCount> fn{};

    for (const auto& rec : manifest.images) {
        std::vector<GroundTruth> gts;
        for (const auto& a : rec.annotations) {
            gts.push_back({a.cls, to_pixel(a.box, rec.width, rec.height)});
            ++n_gt[static_cast<int>(a.cls)];
        }
        std::vector<Detection> preds;
        if (const auto it = detections_by_image.find(rec.id);
            it != detections_by_image.end()) {
            for (const auto& det : it->second) {
                if (det.confidence >= confidence_threshold) {
                    preds.push_back(det);
                }
            }
        }
        // Match per class so FN attribution per class is exact.
        for (const PpeClass cls : all_ppe_classes()) {
            std::vector<Detection> cls_preds;
            std::vector<GroundTruth> cls_gts;
            for (const auto& p : preds) {
                if (to_ppe_class(p.cls) == cls) {
                    cls_preds.push_back(p);
                }
            }
            for (const auto& g : gts) {
                if (g.cls == cls) {
                    cls_gts.push_back(g);
                }
            }
            auto matched = match_detections(std::move(cls_preds), cls_gts,
                                            iou_threshold);
            auto& bucket = per_class[static_cast<int>(cls)];
            bucket.insert(bucket.end(), matched.matches.begin(),
                          matched.matches.end());
            fn[static_cast<int>(cls)] += matched.false_negatives;
        }
    }

    EvalReport report;
    report.iou_threshold = iou_threshold;
    report.confidence_threshold = confidence_threshold;
    report.dataset_id = dataset_id;
    std::vector<std::optional<double>> aps;
    for (int c = 0; c < kPpeClassCount; ++c) {
        ClassReport& cr = report.classes[c];
        cr.cls = static_cast<PpeClass>(c);
        cr.n_ground_truth = n_gt[c];
        cr.n_detections = std::int64_t(per_class[c].size());
        cr.tp = std::count_if(per_class[c].begin(), per_class[c].end(),
                              [](const ScoredMatch& m) { return m.true_positive; });
        cr.fp = cr.n_detections - cr.tp;
        cr.fn = fn[c];
        const auto pr = precision_recall(cr.tp, cr.fp, cr.fn);
        cr.precision = pr.precision;
        cr.recall = pr.recall;
        cr.average_precision = average_precision(per_class[c], n_gt[c]);
        aps.push_back(cr.average_precision);
    }
    if (std::any_of(aps.begin(), aps.end(),
                    [](const auto& ap) { return ap.has_value(); })) {
        report.map = mean_ap(aps);
    }
    return report;
}

std::string render_report(const EvalReport& report, ReportLayout layout) {
    std::ostringstream out;
    switch (layout) {
    case ReportLayout::Table2:
        out << "Object | Precision/Recall | GT | Detections\n";
        for (const auto& cr : report.classes) {
            out << kDisplayNames[static_cast<int>(cr.cls)] << " | "
                << percent_or_dash(cr.precision) << " / "
                << percent_or_dash(cr.recall) << " | " << cr.n_ground_truth
                << " | " << cr.n_detections << "\n";
        }
        break;
    case ReportLayout::Table45:
        out << "Object | Prec/Rec | AP\n";
        for (const auto& cr : report.classes) {
            out << kDisplayNames[static_cast<int>(cr.cls)] << " | "
                << percent_or_dash(cr.precision) << " / "
                << percent_or_dash(cr.recall) << " | "
                << percent_or_dash(cr.average_precision) << "\n";
        }
        out << "mAP: " << percent_or_dash(report.map) << "\n";
        break;
    case ReportLayout::Csv:
        out << "class,precision,recall,ap,n_ground_truth,n_detections,tp,fp,fn\n";
        for (const auto& cr : report.classes) {
            out << class_name(cr.cls) << "," << csv_number(cr.precision) << ","
                << csv_number(cr.recall) << ","
                << csv_number(cr.average_precision) << "," << cr.n_ground_truth
                << "," << cr.n_detections << "," << cr.tp << "," << cr.fp << ","
                << cr.fn << "\n";
        }
        out << "mAP," << csv_number(report.map) << ",,,,,,,\n";
        break;
    }
    return out.str();
}

std::map<std::string, std::vector<Detection>> load_detection_file(
    const std::filesystem::path& path) {
    // Reuse the fixture parser: replay every image id through it.
    std::ifstream probe(path);
    if (!probe) {
        throw Error("cannot open detections file: " + path.string());
    }
    std::map<std::string, std::vector<Detection>> out;
    std::string line;
    int line_no = 0;
    while (std::getline(probe, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string id, cls_name;
        double conf, x0, y0, x1, y1;
        if (!(ss >> id)) {
            continue;
        }
        if (!(ss >> cls_name >> conf >> x0 >> y0 >> x1 >> y1)) {
            throw FormatError("detections line " + std::to_string(line_no) +
                              ": expected 7 fields");
        }
        const auto cls = object_class_from_name(cls_name);
        if (!cls) {
            throw FormatError("detections line " + std::to_string(line_no) +
                              ": unknown class '" + cls_name + "'");
        }
        if (conf < 0.0 || conf > 1.0) {
            throw FormatError("detections line " + std::to_string(line_no) +
                              ": confidence outside [0,1]");
        }
        out[id].push_back({*cls, conf, {x0, y0, x1, y1}});
    }
    return out;
}

} // namespace ppe
