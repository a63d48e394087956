#include "mdls/core.hpp"

#include <cmath>
#include <sstream>

namespace mdls {

ParseError::ParseError(const std::string& what, std::size_t line_no)
    : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no)
{
}

ConfigError::ConfigError(std::string field_name, const std::string& what)
    : ValidationError(field_name + ": " + what), field(std::move(field_name))
{
}

std::string_view to_string(Label label)
{
    return label == Label::misinformation ? "misinformation" : "neutral";
}

Label parse_label(std::string_view text)
{
    if (text == "neutral")
        return Label::neutral;
    if (text == "misinformation")
        return Label::misinformation;
    throw ValidationError("unknown label '" + std::string(text) + "'");
}

namespace {

void check_finite(std::span<const double> values, int t, const char* what)
{
    for (double v : values)
        if (!std::isfinite(v))
            throw ValidationError("frame " + std::to_string(t) + ": non-finite " + what + " entry");
}

}  // namespace

FeatureStream::FeatureStream(std::string video_id, std::vector<FrameFeature> frames)
    : video_id_(std::move(video_id)), frames_(std::move(frames))
{
    if (frames_.empty())
        throw ValidationError("stream '" + video_id_ + "' has no frames");

    const auto d_visual = frames_.front().visual.size();
    const auto d_audio = frames_.front().audio.size();
    if (d_visual == 0 || d_audio == 0)
        throw ValidationError("stream '" + video_id_ + "': empty feature vector");

    std::vector<bool> seen(frames_.size() + 1, false);
    for (const auto& f : frames_) {
        if (f.index < 1 || static_cast<std::size_t>(f.index) > frames_.size())
            throw ValidationError("stream '" + video_id_ + "': frame index " + std::to_string(f.index) +
                                  " outside 1.." + std::to_string(frames_.size()));
        if (seen[static_cast<std::size_t>(f.index)])
            throw ValidationError("stream '" + video_id_ + "': duplicate index " + std::to_string(f.index));
        seen[static_cast<std::size_t>(f.index)] = true;
        if (f.visual.size() != d_visual || f.audio.size() != d_audio)
            throw ValidationError("stream '" + video_id_ + "': frame " + std::to_string(f.index) +
                                  " changes feature dimension");
        check_finite(f.visual, f.index, "visual");
        check_finite(f.audio, f.index, "audio");
    }
    // indices are a permutation of 1..T here; store them in order
    std::vector<FrameFeature> ordered(frames_.size());
    for (auto& f : frames_)
        ordered[static_cast<std::size_t>(f.index - 1)] = std::move(f);
    frames_ = std::move(ordered);
}

void TimelinessConfig::validate() const
{
    if (alpha < 0)
        throw ConfigError("alpha", "must be >= 0");
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("beta", "must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ConfigError("gamma", "must lie in (0, 1)");
}

std::vector<Violation> validate_annotation(const VideoAnnotation& ann, int length)
{
    std::vector<Violation> out;
    const bool misinfo = ann.label == Label::misinformation;
    if (misinfo == ann.spans.empty())
        out.push_back({ViolationKind::label_spans_inconsistent, 0,
                       misinfo ? "misinformation label without spans" : "neutral label with spans"});

    for (std::size_t k = 0; k < ann.spans.size(); ++k) {
        const Span& s = ann.spans[k];
        std::ostringstream where;
        where << "span " << k << " (" << s.start << ", " << s.end << ")";
        if (s.start > s.end)
            out.push_back({ViolationKind::start_exceeds_end, k, where.str() + ": start exceeds end"});
        if (s.start < 1 || s.end < 1 || s.start > length || s.end > length)
            out.push_back({ViolationKind::out_of_bounds, k,
                           where.str() + ": outside 1.." + std::to_string(length)});
        if (k == 0)
            continue;
        const Span& prev = ann.spans[k - 1];
        if (s.start < prev.start)
            out.push_back({ViolationKind::unsorted, k, where.str() + ": not sorted by start"});
        else if (s.start <= prev.end)
            out.push_back({ViolationKind::overlapping, k, where.str() + ": overlaps previous span"});
    }
    return out;
}

void require_valid(const VideoAnnotation& ann, int length)
{
    const auto violations = validate_annotation(ann, length);
    if (violations.empty())
        return;
    std::string msg = "annotation '" + ann.video_id + "':";
    for (const auto& v : violations)
        msg += " " + v.message + ";";
    throw ValidationError(msg);
}

Label video_verdict(std::span<const int> alarm_starts)
{
    return alarm_starts.empty() ? Label::neutral : Label::misinformation;
}

}  // namespace mdls
