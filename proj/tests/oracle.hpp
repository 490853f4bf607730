// Test-only brute-force evaluator, written independently of the library's
// evaluation path. Everything here is deliberately naive: O(n^2) matching,
// exhaustive envelope integration over all recall levels.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

struct Box {
    double x0, y0, x1, y1;
};

struct Pred {
    int cls;
    double conf;
    Box box;
};

struct Truth {
    int cls;
    Box box;
};

inline double box_iou(const Box& a, const Box& b) {
    const double w =
        std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double h =
        std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (w <= 0.0 || h <= 0.0) {
        return 0.0;
    }
    const double inter = w * h;
    const double area_a = (a.x1 - a.x0) * (a.y1 - a.y0);
    const double area_b = (b.x1 - b.x0) * (b.y1 - b.y0);
    const double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

struct Flag {
    double conf;
    bool tp;
};

struct ClassOutcome {
    std::vector<Flag> flags;
    long n_gt = 0;
    long tp = 0, fp = 0, fn = 0;
};

// Greedy matching, one image, one class. Predictions claim the unmatched
// ground truth of maximal IoU when that IoU reaches the threshold.
inline ClassOutcome match_one_image(std::vector<Pred> preds,
                                    const std::vector<Truth>& gts, int cls,
                                    double iou_threshold) {
    ClassOutcome out;
    std::vector<const Truth*> cls_gts;
    for (const auto& g : gts) {
        if (g.cls == cls) {
            cls_gts.push_back(&g);
        }
    }
    out.n_gt = long(cls_gts.size());
    std::erase_if(preds, [&](const Pred& p) { return p.cls != cls; });
    std::sort(preds.begin(), preds.end(), [](const Pred& a, const Pred& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        if (a.box.x0 != b.box.x0) return a.box.x0 < b.box.x0;
        return a.box.y0 < b.box.y0;
    });
    std::vector<bool> used(cls_gts.size(), false);
    for (const auto& p : preds) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < cls_gts.size(); ++g) {
            if (used[g]) continue;
            const double v = box_iou(p.box, cls_gts[g]->box);
            if (v > best_iou) {
                best_iou = v;
                best = int(g);
            }
        }
        const bool tp = best >= 0 && best_iou >= iou_threshold;
        if (tp) {
            used[best] = true;
            ++out.tp;
        } else {
            ++out.fp;
        }
        out.flags.push_back({p.conf, tp});
    }
    for (bool u : used) {
        if (!u) ++out.fn;
    }
    return out;
}

// Exhaustive all-point envelope integration: at each cumulative point,
// look up the maximum precision at any recall >= that point's recall.
inline std::optional<double> average_precision(std::vector<Flag> flags,
                                               long n_gt) {
    if (n_gt == 0) {
        return std::nullopt;
    }
    std::sort(flags.begin(), flags.end(), [](const Flag& a, const Flag& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        return a.tp > b.tp;
    });
    std::vector<double> prec, rec;
    long tp = 0, total = 0;
    for (const auto& f : flags) {
        ++total;
        if (f.tp) ++tp;
        prec.push_back(double(tp) / double(total));
        rec.push_back(double(tp) / double(n_gt));
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        double envelope = 0.0;
        for (std::size_t j = 0; j < flags.size(); ++j) {
            if (rec[j] >= rec[i]) {
                envelope = std::max(envelope, prec[j]);
            }
        }
        ap += (rec[i] - prev_recall) * envelope;
        prev_recall = rec[i];
    }
    return ap;
}

struct ClassEval {
    std::optional<double> precision, recall, ap;
    long n_gt = 0;
};

struct Result {
    std::map<int, ClassEval> per_class;
    std::optional<double> map;
};

// Full evaluation over a set of images keyed by id.
inline Result evaluate(
    const std::map<std::string, std::vector<Pred>>& preds_by_image,
    const std::map<std::string, std::vector<Truth>>& gts_by_image,
    int n_classes, double iou_threshold) {
    Result result;
    double ap_sum = 0.0;
    int ap_count = 0;
    for (int cls = 0; cls < n_classes; ++cls) {
        ClassOutcome merged;
        for (const auto& [id, gts] : gts_by_image) {
            std::vector<Pred> preds;
            if (const auto it = preds_by_image.find(id);
                it != preds_by_image.end()) {
                preds = it->second;
            }
            const auto one = match_one_image(preds, gts, cls, iou_threshold);
            merged.flags.insert(merged.flags.end(), one.flags.begin(),
                                one.flags.end());
            merged.n_gt += one.n_gt;
            merged.tp += one.tp;
            merged.fp += one.fp;
            merged.fn += one.fn;
        }
        ClassEval eval;
        eval.n_gt = merged.n_gt;
        if (merged.tp + merged.fp > 0) {
            eval.precision = double(merged.tp) / double(merged.tp + merged.fp);
        }
        if (merged.tp + merged.fn > 0) {
            eval.recall = double(merged.tp) / double(merged.tp + merged.fn);
        }
        eval.ap = average_precision(merged.flags, merged.n_gt);
        if (eval.ap) {
            ap_sum += *eval.ap;
            ++ap_count;
        }
        result.per_class[cls] = eval;
    }
    if (ap_count > 0) {
        result.map = ap_sum / ap_count;
    }
    return result;
}

} // namespace oracle
