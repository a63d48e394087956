#include <random>
#include <sstream>

#include "doctest.h"
#include "mdls/dataset_io.hpp"
#include "mdls/stream_sim.hpp"

using namespace mdls;

namespace {

SyntheticConfig small_config(std::uint64_t seed)
{
    SyntheticConfig c;
    c.num_videos = 20;
    c.length_range = {30, 60};
    c.spans_per_video_range = {1, 3};
    c.span_length_range = {3, 8};
    c.d_visual = 3;
    c.d_audio = 2;
    c.seed = seed;
    return c;
}

std::string streams_text(const SyntheticDataset& d)
{
    std::ostringstream out;
    write_streams(out, d.streams);
    write_annotations(out, d.annotations);
    return out.str();
}

}  // namespace

TEST_CASE("generation is deterministic in the seed")
{
    const auto a = generate_synthetic(small_config(7));
    const auto b = generate_synthetic(small_config(7));
    CHECK(streams_text(a) == streams_text(b));
    CHECK(a.streams == b.streams);
    CHECK(streams_text(a) != streams_text(generate_synthetic(small_config(8))));
}

TEST_CASE("generated annotations are valid and spaced")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = small_config(seed);
        cfg.length_range = {12, 40};
        const auto d = generate_synthetic(cfg);
        int misinfo = 0;
        for (std::size_t i = 0; i < d.streams.size(); ++i) {
            const auto& a = d.annotations[i];
            CHECK(a.video_id == d.streams[i].video_id());
            CHECK(validate_annotation(a, d.streams[i].length()).empty());
            CHECK(d.streams[i].length() >= cfg.length_range.min);
            CHECK(d.streams[i].length() <= cfg.length_range.max);
            for (std::size_t k = 1; k < a.spans.size(); ++k)
                CHECK(a.spans[k].start >= a.spans[k - 1].end + 2);
            for (const auto& s : a.spans) {
                CHECK(s.length() >= cfg.span_length_range.min);
                CHECK(s.length() <= cfg.span_length_range.max);
            }
            misinfo += a.label == Label::misinformation;
        }
        CHECK(misinfo == 10);
    }
}

TEST_CASE("misinformation count is round(num_videos * fraction)")
{
    auto cfg = small_config(3);
    cfg.misinfo_fraction = 0.0;
    for (const auto& a : generate_synthetic(cfg).annotations) {
        CHECK(a.label == Label::neutral);
        CHECK(a.spans.empty());
    }
    cfg.num_videos = 7;
    cfg.misinfo_fraction = 0.3;  // 2.1 -> 2
    auto d = generate_synthetic(cfg);
    CHECK(std::count_if(d.annotations.begin(), d.annotations.end(),
                        [](const auto& a) { return a.label == Label::misinformation; }) == 2);
    cfg.misinfo_fraction = 1.0;
    d = generate_synthetic(cfg);
    CHECK(std::all_of(d.annotations.begin(), d.annotations.end(),
                      [](const auto& a) { return a.label == Label::misinformation; }));
}

TEST_CASE("planted spans shift the mean by delta")
{
    SyntheticConfig cfg;
    cfg.num_videos = 80;
    cfg.misinfo_fraction = 1.0;
    cfg.delta = 3.0;
    cfg.d_visual = 4;
    cfg.seed = 11;
    const auto d = generate_synthetic(cfg);
    std::vector<double> in(4, 0.0), out(4, 0.0);
    int n_in = 0, n_out = 0;
    for (std::size_t v = 0; v < d.streams.size(); ++v)
        for (const auto& f : d.streams[v].frames()) {
            bool inside = false;
            for (const auto& s : d.annotations[v].spans)
                inside = inside || s.contains(f.index);
            auto& acc = inside ? in : out;
            (inside ? n_in : n_out)++;
            for (std::size_t i = 0; i < 4; ++i)
                acc[i] += f.visual[i];
        }
    REQUIRE(n_in >= 1000);
    for (std::size_t i = 0; i < 4; ++i) {
        const double diff = in[i] / n_in - out[i] / n_out;
        CHECK(diff == doctest::Approx(3.0).epsilon(0.10));
    }
}

TEST_CASE("config validation names the field")
{
    auto cfg = small_config(1);
    cfg.span_length_range = {9, 4};
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "span_length_range");
    }
    cfg = small_config(1);
    cfg.spans_per_video_range = {3, 3};
    cfg.span_length_range = {30, 30};  // 3 * 30 + 2 > 60
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    cfg.misinfo_fraction = 0.0;  // nothing to place
    CHECK_NOTHROW(generate_synthetic(cfg));
    cfg = small_config(1);
    cfg.length_range = {10, 5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config(1);
    cfg.misinfo_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("player yields frames in order and can stop early")
{
    const auto d = generate_synthetic(small_config(2));
    const auto& s = d.streams.front();
    StreamPlayer player(s);
    int expected = 1;
    while (auto f = player.next()) {
        CHECK(f->index == expected);
        CHECK(player.cursor() == expected);
        ++expected;
    }
    CHECK(expected - 1 == s.length());
    CHECK_FALSE(player.next().has_value());

    std::vector<FrameFeature> five;
    for (int t = 1; t <= 5; ++t)
        five.push_back({t, {double(t)}, {0.0}});
    StreamPlayer partial(five);
    for (int i = 0; i < 3; ++i)
        partial.next();
    CHECK(partial.cursor() == 3);
    CHECK_FALSE(partial.done());
}

TEST_CASE("frames already emitted are unaffected by later storage mutation")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise;
    for (int trial = 0; trial < 50; ++trial) {
        const int length = 2 + static_cast<int>(rng() % 30);
        std::vector<FrameFeature> frames;
        for (int t = 1; t <= length; ++t)
            frames.push_back({t, {noise(rng), noise(rng)}, {noise(rng)}});
        const auto original = frames;
        const int stop = 1 + static_cast<int>(rng() % static_cast<unsigned>(length - 1));

        StreamPlayer player(frames);
        std::vector<FrameFeature> emitted;
        for (int t = 1; t <= stop; ++t)
            emitted.push_back(*player.next());
        frames[static_cast<std::size_t>(stop)].visual[0] += 100.0;  // frame stop+1
        for (int t = 1; t <= stop; ++t)
            CHECK(emitted[static_cast<std::size_t>(t - 1)] == original[static_cast<std::size_t>(t - 1)]);
        // and the mutated frame is what shows up next
        CHECK(player.next()->visual[0] == original[static_cast<std::size_t>(stop)].visual[0] + 100.0);
    }
}

TEST_CASE("player never repeats or reorders indices")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = small_config(seed);
        cfg.num_videos = 3;
        for (const auto& s : generate_synthetic(cfg).streams) {
            StreamPlayer p(s);
            int last = 0;
            int count = 0;
            while (auto f = p.next()) {
                CHECK(f->index == last + 1);
                last = f->index;
                ++count;
            }
            CHECK(count == s.length());
        }
    }
}

TEST_CASE("stream and annotation files round trip exactly")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto d = generate_synthetic(small_config(seed));
        std::stringstream s_io, a_io;
        write_streams(s_io, d.streams);
        write_annotations(a_io, d.annotations);
        CHECK(read_streams(s_io) == d.streams);
        CHECK(read_annotations(a_io) == d.annotations);
    }
}

TEST_CASE("reading stream records")
{
    std::istringstream good(R"({"video_id":"a","t":1,"visual":[1,2],"audio":[0.5]}
{"video_id":"a","t":2,"visual":[1,2],"audio":[0.5]}

{"video_id":"a","t":3,"visual":[1,2],"audio":[0.5]}
)");
    const auto streams = read_streams(good);
    REQUIRE(streams.size() == 1);
    CHECK(streams[0].length() == 3);

    std::istringstream dup(R"({"video_id":"a","t":1,"visual":[1],"audio":[1]}
{"video_id":"a","t":2,"visual":[1],"audio":[1]}
{"video_id":"a","t":2,"visual":[1],"audio":[1]}
)");
    CHECK_THROWS_WITH_AS(read_streams(dup), doctest::Contains("duplicate index"), ValidationError);

    std::istringstream overflow(R"({"video_id":"a","t":1,"visual":[1],"audio":[1]}
{"video_id":"a","t":2,"visual":[1e999],"audio":[1]}
)");
    try {
        read_streams(overflow);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }

    std::istringstream null_entry(R"({"video_id":"a","t":1,"visual":[null],"audio":[1]})");
    CHECK_THROWS_AS(read_streams(null_entry), ParseError);
    std::istringstream broken(R"({"video_id":"a","t":1,"visual":[1],)");
    CHECK_THROWS_AS(read_streams(broken), ParseError);
    std::istringstream missing(R"({"video_id":"a","visual":[1],"audio":[1]})");
    CHECK_THROWS_AS(read_streams(missing), ParseError);
}

TEST_CASE("annotation and manifest records")
{
    std::istringstream anns(R"({"video_id":"a","label":"misinformation","spans":[{"start":2,"end":4}]}
{"video_id":"b","label":"neutral","spans":[]}
)");
    const auto a = read_annotations(anns);
    REQUIRE(a.size() == 2);
    CHECK(a[0].spans == std::vector<Span>{{2, 4}});
    std::istringstream bad_label(R"({"video_id":"a","label":"debunk","spans":[]})");
    CHECK_THROWS_AS(read_annotations(bad_label), ParseError);

    std::vector<ManifestEntry> m{{"a", Split::train}, {"b", Split::test}};
    std::stringstream io;
    write_manifest(io, m);
    CHECK(read_manifest(io) == m);
}
