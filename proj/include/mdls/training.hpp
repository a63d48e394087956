#pragma once

// Frame-level supervision and scorer training for the baseline detectors.
//
// Two objectives over the scorer parameters:
//
//   ramp_regression   mean over frames of (c_t - y_t)^2, with y_t the ramp
//                     target (0 outside spans, rising to 1 over ramp_len).
//   max_margin        mean over (positive p, negative n) pairs of
//                       max(0, m - (c_p - c_n))
//                     plus monotonicity_weight times the mean over
//                     consecutive in-span frames within the first ramp_len
//                     steps of
//                       max(0, c_t - c_{t+1}).
//
// Both are minimised with mini-batch gradient steps; everything is
// deterministic given the seed.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdls/core.hpp"
#include "mdls/detectors.hpp"
#include "mdls/stream_sim.hpp"

namespace mdls {

/// Raised when the data cannot support training (one class only, empty).
struct TrainingError : ValidationError {
    using ValidationError::ValidationError;
};

enum class Objective { ramp_regression, max_margin };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

struct TrainConfig {
    Objective objective = Objective::ramp_regression;
    ScorerKind scorer = ScorerKind::linear;
    std::size_t hidden = 8;     // mlp only
    int ramp_len = 5;
    double learning_rate = 0.5;  // scaled by 1 / (1 + mean |o|^2)
    int epochs = 30;            // 0 returns the initial scorer
    int batch_size = 64;        // 0 means full batch
    double margin = 1.0;        // max_margin only
    double monotonicity_weight = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// target_t = 0 outside spans; at 0-based offset i inside a span,
/// min(1, (i + 1) / ramp_len). Throws ValidationError on invalid spans.
std::vector<double> ramp_targets(std::span<const Span> spans, int length, int ramp_len);

/// Representations o_t of every frame in a set of videos, with the
/// labels both objectives need.
struct FrameSet {
    std::vector<std::vector<double>> reps;
    std::vector<double> targets;                   // ramp targets
    std::vector<std::size_t> positives;            // in-span frame indices
    std::vector<std::size_t> negatives;            // out-of-span frame indices
    std::vector<std::pair<std::size_t, std::size_t>> monotone_pairs;  // (t, t+1) early in spans

    std::size_t dim() const { return reps.empty() ? 0 : reps.front().size(); }
};

/// `modality` selects o_t: visual_only, audio_only or concat.
FrameSet build_frame_set(std::span<const FeatureStream> streams, std::span<const VideoAnnotation> anns,
                         FusionKind modality, int ramp_len);

class RampRegressionObjective {
public:
    /// Loss restricted to `frames` (indices into the set); empty = all.
    RampRegressionObjective(const FrameSet& set, std::vector<std::size_t> frames = {});

    double loss(const FrameScorer& scorer) const;
    /// Overwrites grad with d(loss)/d(params); returns the loss.
    double loss_and_gradient(const FrameScorer& scorer, std::span<double> grad) const;

private:
    const FrameSet* set_;
    std::vector<std::size_t> frames_;
};

class MaxMarginObjective {
public:
    MaxMarginObjective(const FrameSet& set, std::vector<std::pair<std::size_t, std::size_t>> rank_pairs,
                       std::vector<std::pair<std::size_t, std::size_t>> monotone_pairs, double margin,
                       double monotonicity_weight);

    double loss(const FrameScorer& scorer) const;
    double loss_and_gradient(const FrameScorer& scorer, std::span<double> grad) const;

private:
    const FrameSet* set_;
    std::vector<std::pair<std::size_t, std::size_t>> rank_pairs_;
    std::vector<std::pair<std::size_t, std::size_t>> monotone_pairs_;
    double margin_;
    double weight_;
};

/// Starting point of training. Linear scorers start at zero; mlp weights
/// are drawn from a seeded normal.
FrameScorer initial_scorer(ScorerKind kind, std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

struct TrainResult {
    FrameScorer scorer;                // lowest-loss iterate
    std::vector<double> loss_history;  // every iterate; [0] before the first epoch
    int best_epoch = 0;
    double final_loss = 0.0;           // loss of `scorer`
};

/// Returns the iterate with the lowest full training loss, so the result
/// never scores worse than the initial point. Throws TrainingError without at least one positive and one negative frame.
TrainResult train_scorer(const FrameSet& set, const TrainConfig& cfg);

struct DetectorTraining {
    DetectorModel model;                           // threshold not yet calibrated
    std::vector<std::vector<double>> loss_history; // one per scorer
};

/// One scorer on o_t, or for score_average a visual and an audio scorer.
DetectorTraining train_detector(std::span<const FeatureStream> streams, std::span<const VideoAnnotation> anns,
                                FusionKind fusion, const TrainConfig& cfg);

/// 21 nearest-rank quantiles (0, 5%, ..., 100%) of the given scores.
std::vector<double> quantile_grid(std::vector<double> scores, int points = 21);

/// Calibration grid: 21 quantiles of all frame scores, then the smallest
/// per-video maximum and the midpoints between consecutive distinct
/// per-video maxima. A verdict only changes when theta passes a video's
/// maximum, so the midpoints reach every distinct verdict pattern while
/// keeping theta clear of the nearest scores on either side.
std::vector<double> default_grid(std::span<const std::vector<double>> video_scores);

struct Calibration {
    double threshold = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::pair<double, double>> objective;  // (theta, macro F1) per grid value, in grid order
};

/// Grid value maximising video-level Macro-F1 of the induced verdicts;
/// ties go to the smallest theta. Throws ValidationError on an empty grid.
Calibration grid_search_threshold(std::span<const std::vector<double>> video_scores,
                                  std::span<const VideoAnnotation> anns, std::span<const double> grid);

Calibration grid_search_threshold(const DetectorModel& model, std::span<const FeatureStream> streams,
                                  std::span<const VideoAnnotation> anns, std::span<const double> grid);

/// Per-video score sequences of a model.
std::vector<std::vector<double>> score_streams(const DetectorModel& model, std::span<const FeatureStream> streams);

}  // namespace mdls
