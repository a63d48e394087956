#pragma once

// Video-level correctness (accuracy, macro P/R/F1) and per-video timeliness.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mdls/core.hpp"

namespace mdls {

/// Misinformation is the positive class.
struct ConfusionMatrix {
    int tp = 0;
    int fp = 0;
    int tn = 0;
    int fn = 0;

    int total() const { return tp + fp + tn + fn; }
    void add(Label truth, Label predicted);

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct CorrectnessMetrics {
    ConfusionMatrix confusion;
    ClassScores misinformation;
    ClassScores neutral;
    int classes_averaged = 0;  // classes present in labels or predictions
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

/// Zero denominators give 0; a class seen in neither labels nor predictions
/// is left out of the macro average.
CorrectnessMetrics correctness_from_confusion(const ConfusionMatrix& cm);

/// Predictions and annotations are matched by video_id; both lists must
/// hold the same ids exactly once.
CorrectnessMetrics correctness_metrics(std::span<const VideoPrediction> preds,
                                       std::span<const VideoAnnotation> anns);

/// Timeliness of the first alarm against the nearest span start:
/// gamma^j (j = 0-based index of that span) times 1 when on time or early,
/// beta when late, 0 beyond alpha or without alarms. Requires non-empty
/// sorted spans; throws ContractViolation otherwise.
double timeliness_score(std::span<const int> alarm_starts, std::span<const Span> spans,
                        const TimelinessConfig& cfg);

struct EvaluationReport {
    TimelinessConfig config;
    CorrectnessMetrics correctness;
    std::map<std::string, double> per_video_timeliness;  // misinformation-labeled videos only
    double mean_timeliness = 0.0;
    double in_time_fraction = 0.0;
};

/// Throws ValidationError on an empty or misaligned dataset.
EvaluationReport evaluate(std::span<const VideoPrediction> preds, std::span<const VideoAnnotation> anns,
                          const TimelinessConfig& cfg);

/// Structured record with the metric field names used by the CLI.
std::string report_json(const EvaluationReport& report);
/// Aligned plain-text table of the same numbers.
std::string report_table(const EvaluationReport& report);

}  // namespace mdls
