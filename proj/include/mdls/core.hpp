#pragma once

// Shared domain types for online misinformation detection over feature streams.
//
// Time is an integer step, 1-based. Spans are closed intervals [start, end].

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mdls {

// Errors. The CLI maps these onto exit codes (see cli.hpp).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based, 0 when unknown.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line);
    std::size_t line;
};

struct ValidationError : Error {
    using Error::Error;
};

/// Invalid configuration value; `field` names the offending key.
struct ConfigError : ValidationError {
    ConfigError(std::string field, const std::string& what);
    std::string field;
};

/// Model and data disagree on feature dimensions.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// Missing or unwritable file.
struct IoError : Error {
    using Error::Error;
};

/// A function was called outside its documented precondition.
struct ContractViolation : Error {
    using Error::Error;
};

enum class Label { neutral, misinformation };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

struct FrameFeature {
    int index = 0;               // 1-based time step t
    std::vector<double> visual;  // r_t^I
    std::vector<double> audio;   // r_t^A

    friend bool operator==(const FrameFeature&, const FrameFeature&) = default;
};

/// An ordered, gap-free sequence of frames for one video. Construction
/// validates every invariant; instances are immutable afterwards.
class FeatureStream {
public:
    FeatureStream(std::string video_id, std::vector<FrameFeature> frames);

    const std::string& video_id() const { return video_id_; }
    std::span<const FrameFeature> frames() const { return frames_; }
    const FrameFeature& frame(int t) const { return frames_.at(static_cast<std::size_t>(t - 1)); }
    int length() const { return static_cast<int>(frames_.size()); }
    std::size_t visual_dim() const { return frames_.front().visual.size(); }
    std::size_t audio_dim() const { return frames_.front().audio.size(); }

    friend bool operator==(const FeatureStream&, const FeatureStream&) = default;

private:
    std::string video_id_;
    std::vector<FrameFeature> frames_;
};

struct Span {
    int start = 0;
    int end = 0;

    int length() const { return end - start + 1; }
    bool contains(int t) const { return start <= t && t <= end; }

    friend bool operator==(const Span&, const Span&) = default;
};

struct VideoAnnotation {
    std::string video_id;
    Label label = Label::neutral;
    std::vector<Span> spans;

    friend bool operator==(const VideoAnnotation&, const VideoAnnotation&) = default;
};

struct VideoPrediction {
    std::string video_id;
    Label verdict = Label::neutral;
    std::vector<int> alarm_starts;
    std::vector<double> scores;  // empty when the producer kept no scores
};

struct TimelinessConfig {
    int alpha = 5;
    double beta = 0.5;
    double gamma = 0.9;

    /// Throws ConfigError naming the first bad field.
    void validate() const;
};

enum class ViolationKind {
    label_spans_inconsistent,
    start_exceeds_end,
    out_of_bounds,
    unsorted,
    overlapping,
};

struct Violation {
    ViolationKind kind;
    std::size_t span_index;  // span the violation refers to; 0 for label checks
    std::string message;
};

/// Every violated annotation invariant against a stream of length T.
/// An empty result means the annotation is well formed.
std::vector<Violation> validate_annotation(const VideoAnnotation& ann, int length);

/// Throws ValidationError listing the violations, if any.
void require_valid(const VideoAnnotation& ann, int length);

Label video_verdict(std::span<const int> alarm_starts);

}  // namespace mdls
