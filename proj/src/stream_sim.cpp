#include "mdls/stream_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mdls {

void SyntheticConfig::validate() const
{
    if (num_videos < 1)
        throw ConfigError("num_videos", "must be positive");
    if (length_range.min < 1 || length_range.min > length_range.max)
        throw ConfigError("length_range", "need 1 <= min <= max");
    if (!(misinfo_fraction >= 0.0 && misinfo_fraction <= 1.0))
        throw ConfigError("misinfo_fraction", "must lie in [0, 1]");
    if (spans_per_video_range.min < 1 || spans_per_video_range.min > spans_per_video_range.max)
        throw ConfigError("spans_per_video_range", "need 1 <= min <= max");
    if (span_length_range.min < 1 || span_length_range.min > span_length_range.max)
        throw ConfigError("span_length_range", "need 1 <= min <= max");
    if (span_length_range.min > length_range.max)
        throw ConfigError("span_length_range", "shortest span exceeds the longest video");
    if (d_visual < 1)
        throw ConfigError("d_visual", "must be positive");
    if (d_audio < 1)
        throw ConfigError("d_audio", "must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ConfigError("delta", "must be a finite non-negative number");

    // smallest possible footprint must fit in the longest video
    const long need = static_cast<long>(spans_per_video_range.min) * span_length_range.min +
                      (spans_per_video_range.min - 1);
    if (misinfo_fraction > 0.0 && need > length_range.max)
        throw ConfigError("span_length_range", "no span placement fits any video length");
}

namespace {

int uniform(std::mt19937_64& rng, IntRange r)
{
    return std::uniform_int_distribution<int>(r.min, r.max)(rng);
}

std::string video_name(int i, int total)
{
    const auto width = std::to_string(std::max(total - 1, 0)).size();
    std::string n = std::to_string(i);
    return "vid_" + std::string(width > n.size() ? width - n.size() : 0, '0') + n;
}

// Places spans with the given lengths (in order) into [1, T] with at least
// one free frame between neighbours, uniformly over all such placements.
std::vector<Span> place_spans(std::mt19937_64& rng, int length, const std::vector<int>& lens)
{
    const int k = static_cast<int>(lens.size());
    const int used = std::accumulate(lens.begin(), lens.end(), 0) + (k - 1);
    const int slack = length - used;
    // uniform composition of `slack` into k+1 non-negative gaps:
    // choose k bar positions among slack+k slots
    std::vector<int> slots(static_cast<std::size_t>(slack + k));
    std::iota(slots.begin(), slots.end(), 0);
    std::vector<int> bars;
    std::sample(slots.begin(), slots.end(), std::back_inserter(bars), k, rng);
    std::sort(bars.begin(), bars.end());

    std::vector<Span> spans;
    int cursor = 1;
    int prev_bar = -1;
    for (int i = 0; i < k; ++i) {
        const int gap = bars[static_cast<std::size_t>(i)] - prev_bar - 1;
        prev_bar = bars[static_cast<std::size_t>(i)];
        cursor += gap;
        spans.push_back({cursor, cursor + lens[static_cast<std::size_t>(i)] - 1});
        cursor = spans.back().end + 2;
    }
    return spans;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    const int n_misinfo = static_cast<int>(std::lround(cfg.num_videos * cfg.misinfo_fraction));
    std::vector<int> order(static_cast<std::size_t>(cfg.num_videos));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> is_misinfo(order.size(), false);
    for (int i = 0; i < n_misinfo; ++i)
        is_misinfo[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

    SyntheticDataset out;
    out.streams.reserve(order.size());
    out.annotations.reserve(order.size());
    for (int v = 0; v < cfg.num_videos; ++v) {
        VideoAnnotation ann{video_name(v, cfg.num_videos), Label::neutral, {}};
        int length = 0;
        if (!is_misinfo[static_cast<std::size_t>(v)]) {
            length = uniform(rng, cfg.length_range);
        } else {
            constexpr int max_attempts = 10000;
            std::vector<int> lens;
            bool placed = false;
            for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
                length = uniform(rng, cfg.length_range);
                const int k = uniform(rng, cfg.spans_per_video_range);
                lens.assign(static_cast<std::size_t>(k), 0);
                for (auto& l : lens)
                    l = uniform(rng, cfg.span_length_range);
                placed = std::accumulate(lens.begin(), lens.end(), 0) + (k - 1) <= length;
            }
            if (!placed)
                throw ConfigError("span_length_range", "could not place spans after repeated sampling");
            ann.label = Label::misinformation;
            ann.spans = place_spans(rng, length, lens);
        }

        std::vector<FrameFeature> frames(static_cast<std::size_t>(length));
        std::size_t next_span = 0;
        for (int t = 1; t <= length; ++t) {
            while (next_span < ann.spans.size() && ann.spans[next_span].end < t)
                ++next_span;
            const bool inside = next_span < ann.spans.size() && ann.spans[next_span].contains(t);
            const double shift = inside ? cfg.delta : 0.0;
            auto& f = frames[static_cast<std::size_t>(t - 1)];
            f.index = t;
            f.visual.resize(static_cast<std::size_t>(cfg.d_visual));
            f.audio.resize(static_cast<std::size_t>(cfg.d_audio));
            for (auto& x : f.visual)
                x = noise(rng) + shift;
            for (auto& x : f.audio)
                x = noise(rng) + shift;
        }
        out.streams.emplace_back(ann.video_id, std::move(frames));
        out.annotations.push_back(std::move(ann));
    }
    return out;
}

StreamPlayer::StreamPlayer(const FeatureStream& stream) : frames_(stream.frames()) {}

StreamPlayer::StreamPlayer(std::span<const FrameFeature> frames) : frames_(frames) {}

std::optional<FrameFeature> StreamPlayer::next()
{
    if (done())
        return std::nullopt;
    return frames_[static_cast<std::size_t>(cursor_++)];
}

}  // namespace mdls
