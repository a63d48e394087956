#include "mdls/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "json.hpp"

namespace mdls {

void ConfusionMatrix::add(Label truth, Label predicted)
{
    const bool pos_truth = truth == Label::misinformation;
    const bool pos_pred = predicted == Label::misinformation;
    if (pos_truth && pos_pred)
        ++tp;
    else if (!pos_truth && pos_pred)
        ++fp;
    else if (!pos_truth && !pos_pred)
        ++tn;
    else
        ++fn;
}

namespace {

double ratio(int num, int den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassScores class_scores(int tp, int fp, int fn)
{
    ClassScores s;
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace

CorrectnessMetrics correctness_from_confusion(const ConfusionMatrix& cm)
{
    CorrectnessMetrics m;
    m.confusion = cm;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.misinformation = class_scores(cm.tp, cm.fp, cm.fn);
    m.neutral = class_scores(cm.tn, cm.fn, cm.fp);

    const bool misinfo_seen = cm.tp + cm.fp + cm.fn > 0;
    const bool neutral_seen = cm.tn + cm.fn + cm.fp > 0;
    double p = 0.0, r = 0.0, f = 0.0;
    if (misinfo_seen) {
        p += m.misinformation.precision;
        r += m.misinformation.recall;
        f += m.misinformation.f1;
        ++m.classes_averaged;
    }
    if (neutral_seen) {
        p += m.neutral.precision;
        r += m.neutral.recall;
        f += m.neutral.f1;
        ++m.classes_averaged;
    }
    if (m.classes_averaged > 0) {
        m.macro_precision = p / m.classes_averaged;
        m.macro_recall = r / m.classes_averaged;
        m.macro_f1 = f / m.classes_averaged;
    }
    return m;
}

namespace {

// Annotation for each prediction, by id. Throws on duplicates or mismatch.
std::vector<const VideoAnnotation*> align(std::span<const VideoPrediction> preds,
                                          std::span<const VideoAnnotation> anns)
{
    if (preds.size() != anns.size())
        throw ValidationError("predictions and annotations differ in count (" + std::to_string(preds.size()) +
                              " vs " + std::to_string(anns.size()) + ")");
    std::map<std::string_view, const VideoAnnotation*> by_id;
    for (const auto& a : anns)
        if (!by_id.emplace(a.video_id, &a).second)
            throw ValidationError("duplicate annotation id '" + a.video_id + "'");
    std::map<std::string_view, bool> seen;
    std::vector<const VideoAnnotation*> out;
    out.reserve(preds.size());
    for (const auto& p : preds) {
        if (!seen.emplace(p.video_id, true).second)
            throw ValidationError("duplicate prediction id '" + p.video_id + "'");
        auto it = by_id.find(p.video_id);
        if (it == by_id.end())
            throw ValidationError("prediction '" + p.video_id + "' has no annotation");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

CorrectnessMetrics correctness_metrics(std::span<const VideoPrediction> preds,
                                       std::span<const VideoAnnotation> anns)
{
    const auto matched = align(preds, anns);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i)
        cm.add(matched[i]->label, preds[i].verdict);
    return correctness_from_confusion(cm);
}

double timeliness_score(std::span<const int> alarm_starts, std::span<const Span> spans,
                        const TimelinessConfig& cfg)
{
    if (spans.empty())
        throw ContractViolation("timeliness is only defined for misinformation videos");
    for (std::size_t k = 1; k < spans.size(); ++k)
        if (spans[k].start < spans[k - 1].start)
            throw ContractViolation("spans must be sorted by start");
    if (alarm_starts.empty())
        return 0.0;

    const int t = alarm_starts.front();
    // first span starting at or after t; the nearest start is it or its predecessor
    auto it = std::lower_bound(spans.begin(), spans.end(), t, [](const Span& s, int v) { return s.start < v; });
    std::size_t j = static_cast<std::size_t>(it - spans.begin());
    if (it == spans.end() || (j > 0 && t - spans[j - 1].start <= it->start - t))
        --j;

    const int s = spans[j].start;
    if (std::abs(t - s) > cfg.alpha)
        return 0.0;
    const double discount = std::pow(cfg.gamma, static_cast<double>(j));
    return t <= s ? discount : discount * cfg.beta;
}

EvaluationReport evaluate(std::span<const VideoPrediction> preds, std::span<const VideoAnnotation> anns,
                          const TimelinessConfig& cfg)
{
    if (preds.empty())
        throw ValidationError("cannot evaluate an empty dataset");
    cfg.validate();
    const auto matched = align(preds, anns);

    EvaluationReport r;
    r.config = cfg;
    ConfusionMatrix cm;
    int in_time = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const VideoAnnotation& a = *matched[i];
        cm.add(a.label, preds[i].verdict);
        if (a.label != Label::misinformation)
            continue;
        const double score = timeliness_score(preds[i].alarm_starts, a.spans, cfg);
        r.per_video_timeliness[a.video_id] = score;
        if (score > 0.0)
            ++in_time;
    }
    r.correctness = correctness_from_confusion(cm);
    // summed in id order so the result is independent of input order
    for (const auto& [id, score] : r.per_video_timeliness)
        total += score;
    const auto n = r.per_video_timeliness.size();
    if (n > 0) {
        r.mean_timeliness = total / static_cast<double>(n);
        r.in_time_fraction = static_cast<double>(in_time) / static_cast<double>(n);
    }
    return r;
}

std::string report_json(const EvaluationReport& r)
{
    using nlohmann::ordered_json;
    const auto& c = r.correctness;
    ordered_json per_video = ordered_json::object();
    for (const auto& [id, score] : r.per_video_timeliness)
        per_video[id] = score;
    ordered_json record = {
        {"accuracy", c.accuracy},
        {"macro_precision", c.macro_precision},
        {"macro_recall", c.macro_recall},
        {"macro_f1", c.macro_f1},
        {"mean_timeliness", r.mean_timeliness},
        {"in_time_fraction", r.in_time_fraction},
        {"confusion", {{"tp", c.confusion.tp}, {"fp", c.confusion.fp}, {"tn", c.confusion.tn}, {"fn", c.confusion.fn}}},
        {"timeliness_config", {{"alpha", r.config.alpha}, {"beta", r.config.beta}, {"gamma", r.config.gamma}}},
        {"per_video_timeliness", per_video},
    };
    return record.dump(2) + "\n";
}

std::string report_table(const EvaluationReport& r)
{
    const auto& c = r.correctness;
    std::ostringstream out;
    char buf[128];
    auto row = [&](const char* name, double v) {
        std::snprintf(buf, sizeof buf, "%-18s %10.6f\n", name, v);
        out << buf;
    };
    std::snprintf(buf, sizeof buf, "%-18s %10s\n", "metric", "value");
    out << buf;
    row("accuracy", c.accuracy);
    row("macro_precision", c.macro_precision);
    row("macro_recall", c.macro_recall);
    row("macro_f1", c.macro_f1);
    row("mean_timeliness", r.mean_timeliness);
    row("in_time_fraction", r.in_time_fraction);
    std::snprintf(buf, sizeof buf, "\nconfusion          tp=%d fp=%d tn=%d fn=%d\n", c.confusion.tp, c.confusion.fp,
                  c.confusion.tn, c.confusion.fn);
    out << buf;
    std::snprintf(buf, sizeof buf, "timeliness config  alpha=%d beta=%g gamma=%g\n", r.config.alpha, r.config.beta,
                  r.config.gamma);
    out << buf;
    return out.str();
}

}  // namespace mdls
