#pragma once

// Synthetic labeled feature streams and causal replay.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mdls/core.hpp"

namespace mdls {

struct IntRange {
    int min = 1;
    int max = 1;
};

struct SyntheticConfig {
    int num_videos = 100;
    IntRange length_range{50, 200};
    double misinfo_fraction = 0.5;
    IntRange spans_per_video_range{1, 3};
    IntRange span_length_range{5, 20};
    int d_visual = 8;
    int d_audio = 4;
    double delta = 3.0;  // in-span mean shift, in noise standard deviations
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct SyntheticDataset {
    std::vector<FeatureStream> streams;
    std::vector<VideoAnnotation> annotations;  // aligned with streams
};

/// Features are i.i.d. standard normal; frames inside a planted span add
/// `delta` to every coordinate. Consecutive spans keep at least one frame
/// of gap. Exactly round(num_videos * misinfo_fraction) videos carry spans.
SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

/// Pull-based frame source. A consumer at cursor t has seen frames 1..t and
/// nothing else; the next frame is only read from storage when requested.
class StreamPlayer {
public:
    explicit StreamPlayer(const FeatureStream& stream);
    explicit StreamPlayer(std::span<const FrameFeature> frames);

    /// Copy of frame cursor+1, or nullopt once the stream is exhausted.
    std::optional<FrameFeature> next();

    int cursor() const { return cursor_; }
    int length() const { return static_cast<int>(frames_.size()); }
    bool done() const { return cursor_ >= length(); }

private:
    std::span<const FrameFeature> frames_;
    int cursor_ = 0;
};

}  // namespace mdls
