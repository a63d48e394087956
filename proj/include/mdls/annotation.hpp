#pragma once

// Annotation arithmetic: majority voting, Cohen's kappa, and two-pass span
// consistency by temporal IoU.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mdls/core.hpp"

namespace mdls {

struct AnnotatorLabels {
    std::string annotator_id;
    std::map<std::string, Label> labels;  // video_id -> label
};

/// Label held by more than half of an odd number (>= 3) of annotators.
/// Throws ValidationError on an even or too small count.
Label majority_vote(std::span<const Label> labels);

/// (p_o - p_e) / (1 - p_e). When p_e = 1 both raters are constant: 1 if
/// they agree everywhere, else 0. Throws ValidationError unless both cover
/// the same non-empty id set.
double cohen_kappa(const AnnotatorLabels& a, const AnnotatorLabels& b);

/// Mean of pairwise kappas. A convenience for more than two raters, not a
/// standard multi-rater statistic.
double mean_pairwise_kappa(std::span<const AnnotatorLabels> raters);

/// Majority label per video across an odd number of raters.
AnnotatorLabels vote_labels(std::span<const AnnotatorLabels> raters);

/// Intersection over union of two closed frame intervals.
double temporal_iou(const Span& a, const Span& b);

struct SpanMatch {
    int first = -1;   // index in pass 1, -1 when unmatched
    int second = -1;  // index in pass 2, -1 when unmatched
    double iou = 0.0;
};

struct ConsistencyReport {
    std::vector<SpanMatch> matches;  // matched pairs, then unmatched spans of each pass
    double mean_iou = 0.0;
    double threshold = 0.8;
    bool warning = false;
};

inline constexpr double default_consistency_threshold = 0.8;

/// Greedy one-to-one matching by largest IoU; unmatched spans count as 0.
/// Two empty passes agree perfectly (mean_iou 1).
ConsistencyReport pass_consistency(std::span<const Span> pass1, std::span<const Span> pass2,
                                   double threshold = default_consistency_threshold);

// Label files reuse the annotation record format with an `annotator_id`
// field; `spans` is optional. A file holds one annotator.
AnnotatorLabels read_annotator_labels(std::istream& in);
AnnotatorLabels load_annotator_labels(const std::filesystem::path& path);
void write_annotator_labels(std::ostream& out, const AnnotatorLabels& labels);

std::string consistency_json(const std::string& video_id, const ConsistencyReport& report);

}  // namespace mdls
