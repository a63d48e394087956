#pragma once

// Online detector contract and the frame-level baseline family: per-frame
// representation o_t, frame score c_t, and alarms at upward threshold
// crossings.

#include <cstddef>
#include <iosfwd>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdls/core.hpp"
#include "mdls/stream_sim.hpp"

namespace mdls {

enum class FusionKind { visual_only, audio_only, concat, score_average };

std::string_view to_string(FusionKind kind);
FusionKind parse_fusion(std::string_view text);

/// Input dimension of o_t for single-representation strategies. For
/// score_average there is no joint o_t; use the per-modality dimensions.
std::size_t representation_dim(FusionKind kind, std::size_t d_visual, std::size_t d_audio);

/// o_t for one frame. score_average is rejected here: fusion happens after
/// scoring, see DetectorModel.
std::vector<double> build_representation(const FrameFeature& frame, FusionKind kind);

enum class ScorerKind { linear, mlp };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view text);

/// Stateless per-frame scorer.
///
/// Parameters are stored flat so trainers can treat them as one vector:
///   linear: [w (d), b]                          c = w.o + b
///   mlp:    [W1 (h x d, row-major), b1 (h), w2 (h), b2]
///           c = w2 . tanh(W1 o + b1) + b2
class FrameScorer {
public:
    FrameScorer() = default;
    FrameScorer(ScorerKind kind, std::size_t input_dim, std::size_t hidden, std::vector<double> params);

    static FrameScorer zeros(ScorerKind kind, std::size_t input_dim, std::size_t hidden = 0);
    static std::size_t param_count(ScorerKind kind, std::size_t input_dim, std::size_t hidden);

    ScorerKind kind() const { return kind_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }
    std::span<const double> params() const { return params_; }
    std::span<double> mutable_params() { return params_; }

    /// Throws DimensionMismatch when o.size() != input_dim().
    double score(std::span<const double> o) const;

    /// grad += coeff * d(score)/d(params). Returns the score.
    double accumulate_gradient(std::span<const double> o, double coeff, std::span<double> grad) const;

    friend bool operator==(const FrameScorer&, const FrameScorer&) = default;

private:
    void check_dim(std::span<const double> o) const;

    ScorerKind kind_ = ScorerKind::linear;
    std::size_t input_dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;
};

inline double score_frame(const FrameScorer& scorer, std::span<const double> o)
{
    return scorer.score(o);
}

struct AlarmPolicy {
    double threshold = 0.5;
};

/// Every t with c_t >= theta and c_{t-1} < theta, 1-based, with c_0 = -inf.
std::vector<int> detect_alarms(std::span<const double> scores, const AlarmPolicy& policy);

/// A trained baseline: fusion strategy, one scorer (two for score_average:
/// visual then audio), and the calibrated threshold.
struct DetectorModel {
    FusionKind fusion = FusionKind::concat;
    std::size_t d_visual = 0;
    std::size_t d_audio = 0;
    std::vector<FrameScorer> scorers;
    double threshold = 0.5;

    /// Throws DimensionMismatch/ValidationError on inconsistent structure.
    void validate() const;
    /// Throws DimensionMismatch when the stream's feature sizes differ.
    void check_stream(const FeatureStream& stream) const;

    double score(const FrameFeature& frame) const;

    friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

// Model file: one JSON object. Doubles round-trip exactly.
void write_model(std::ostream& out, const DetectorModel& model);
DetectorModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const DetectorModel& model);
DetectorModel load_model(const std::filesystem::path& path);

/// Consumes one frame at a time and emits c_t. Implementations may only use
/// the frames they have been shown.
class OnlineDetector {
public:
    virtual ~OnlineDetector() = default;
    virtual void reset() {}
    virtual double observe(const FrameFeature& frame) = 0;
};

class ModelDetector final : public OnlineDetector {
public:
    explicit ModelDetector(const DetectorModel& model) : model_(&model) {}
    double observe(const FrameFeature& frame) override { return model_->score(frame); }

private:
    const DetectorModel* model_;
};

/// Test-time stand-in that reads ground truth: 1 inside annotated spans,
/// 0 elsewhere. With threshold 0.5 its alarms are the span starts.
class OracleDetector final : public OnlineDetector {
public:
    explicit OracleDetector(std::vector<Span> spans) : spans_(std::move(spans)) {}
    double observe(const FrameFeature& frame) override;

private:
    std::vector<Span> spans_;
};

class ConstantDetector final : public OnlineDetector {
public:
    explicit ConstantDetector(double value) : value_(value) {}
    double observe(const FrameFeature&) override { return value_; }

private:
    double value_;
};

struct DetectionTrace {
    std::string video_id;
    std::vector<double> scores;
    std::vector<int> alarm_starts;
    Label verdict = Label::neutral;

    VideoPrediction to_prediction() const { return {video_id, verdict, alarm_starts, scores}; }
};

/// Drains the player, scoring each frame as it arrives.
DetectionTrace run_detector(const std::string& video_id, StreamPlayer& source, OnlineDetector& detector,
                            const AlarmPolicy& policy);

DetectionTrace run_detector(const FeatureStream& stream, const DetectorModel& model);

}  // namespace mdls
