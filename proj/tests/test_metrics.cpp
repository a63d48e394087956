#include <random>

#include "doctest.h"
#include "json.hpp"
#include "mdls/metrics.hpp"
#include "oracles.hpp"

using namespace mdls;

namespace {

constexpr Label M = Label::misinformation;
constexpr Label N = Label::neutral;

struct Split {
    std::vector<VideoPrediction> preds;
    std::vector<VideoAnnotation> anns;
};

Split make_split(const std::vector<Label>& labels, const std::vector<Label>& verdicts)
{
    Split s;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto id = "v" + std::to_string(i);
        s.anns.push_back({id, labels[i], labels[i] == M ? std::vector<Span>{{5, 9}} : std::vector<Span>{}});
        s.preds.push_back({id, verdicts[i], verdicts[i] == M ? std::vector<int>{5} : std::vector<int>{}, {}});
    }
    return s;
}

}  // namespace

TEST_CASE("correctness on the worked example")
{
    const auto s = make_split({M, M, N, N}, {M, N, N, N});
    const auto m = correctness_metrics(s.preds, s.anns);
    CHECK(m.confusion == ConfusionMatrix{1, 0, 2, 1});
    CHECK(m.accuracy == 0.75);
    CHECK(m.misinformation.precision == 1.0);
    CHECK(m.misinformation.recall == 0.5);
    CHECK(m.misinformation.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.neutral.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.neutral.recall == 1.0);
    CHECK(m.neutral.f1 == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(m.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0).epsilon(1e-15));
    CHECK(m.macro_f1 == doctest::Approx(0.733333333333).epsilon(1e-10));
}

TEST_CASE("correctness extremes")
{
    auto s = make_split({M, N, M, N}, {M, N, M, N});
    auto m = correctness_metrics(s.preds, s.anns);
    CHECK(m.accuracy == 1.0);
    CHECK(m.macro_precision == 1.0);
    CHECK(m.macro_recall == 1.0);
    CHECK(m.macro_f1 == 1.0);

    s = make_split({M, N, M, N}, {N, M, N, M});
    m = correctness_metrics(s.preds, s.anns);
    CHECK(m.accuracy == 0.0);
    CHECK(m.macro_recall == 0.0);
    CHECK(m.macro_f1 == 0.0);

    // only one class anywhere: the absent class is left out
    s = make_split({N, N, N}, {N, N, N});
    m = correctness_metrics(s.preds, s.anns);
    CHECK(m.classes_averaged == 1);
    CHECK(m.macro_f1 == 1.0);

    // predicted-only class still counts
    s = make_split({N, N}, {M, N});
    m = correctness_metrics(s.preds, s.anns);
    CHECK(m.classes_averaged == 2);
    CHECK(m.misinformation.precision == 0.0);
    CHECK(m.misinformation.recall == 0.0);
}

TEST_CASE("macro metrics agree with a naive implementation")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        const double p_label = std::uniform_real_distribution<double>(0, 1)(rng);
        std::vector<Label> labels(n), verdicts(n);
        std::vector<int> li(n), pi(n);
        for (std::size_t i = 0; i < n; ++i) {
            li[i] = std::bernoulli_distribution(p_label)(rng);
            pi[i] = std::bernoulli_distribution(0.5)(rng);
            labels[i] = li[i] ? M : N;
            verdicts[i] = pi[i] ? M : N;
        }
        // shuffle predictions so matching by id is exercised
        auto s = make_split(labels, verdicts);
        std::shuffle(s.preds.begin(), s.preds.end(), rng);
        const auto m = correctness_metrics(s.preds, s.anns);
        const auto ref = oracle::naive_macro(li, pi);
        CHECK(m.accuracy == ref.accuracy);
        CHECK(m.macro_precision == ref.precision);
        CHECK(m.macro_recall == ref.recall);
        CHECK(m.macro_f1 == ref.f1);
    }
}

TEST_CASE("alignment errors")
{
    auto s = make_split({M, N}, {M, N});
    s.preds[1].video_id = "v0";
    CHECK_THROWS_AS(correctness_metrics(s.preds, s.anns), ValidationError);
    s = make_split({M, N}, {M, N});
    s.preds.pop_back();
    CHECK_THROWS_AS(correctness_metrics(s.preds, s.anns), ValidationError);
    s = make_split({M, N}, {M, N});
    s.preds[1].video_id = "other";
    CHECK_THROWS_AS(correctness_metrics(s.preds, s.anns), ValidationError);
}

TEST_CASE("timeliness examples")
{
    const TimelinessConfig cfg{5, 0.5, 0.9};
    const std::vector<Span> one{{10, 20}};
    CHECK(timeliness_score(std::vector<int>{10}, one, cfg) == 1.0);
    CHECK(timeliness_score(std::vector<int>{13}, one, cfg) == 0.5);
    CHECK(timeliness_score(std::vector<int>{38}, std::vector<Span>{{10, 20}, {40, 50}}, cfg) == 0.9);
    CHECK(timeliness_score(std::vector<int>{30}, one, cfg) == 0.0);
    CHECK(timeliness_score(std::vector<int>{}, one, cfg) == 0.0);
}

TEST_CASE("timeliness edge cases")
{
    const TimelinessConfig cfg{5, 0.5, 0.9};
    const std::vector<Span> two{{10, 20}, {40, 50}};
    CHECK(timeliness_score(std::vector<int>{5}, two, cfg) == 1.0);      // early by exactly alpha
    CHECK(timeliness_score(std::vector<int>{4}, two, cfg) == 0.0);      // one frame too early
    CHECK(timeliness_score(std::vector<int>{15}, two, cfg) == 0.5);     // late by exactly alpha
    CHECK(timeliness_score(std::vector<int>{43}, two, cfg) == 0.9 * 0.5);
    CHECK(timeliness_score(std::vector<int>{25}, two, cfg) == 0.0);     // equidistant: earlier span, too far
    CHECK(timeliness_score(std::vector<int>{10, 40}, two, cfg) == 1.0); // only the first alarm counts
    CHECK(timeliness_score(std::vector<int>{60, 10}, two, cfg) == 0.0);
    // equidistant within tolerance goes to the earlier span
    const std::vector<Span> close{{10, 11}, {14, 15}};
    CHECK(timeliness_score(std::vector<int>{12}, close, cfg) == 0.5);
    CHECK_THROWS_AS(timeliness_score(std::vector<int>{1}, std::vector<Span>{}, cfg), ContractViolation);
}

TEST_CASE("timeliness agrees with a brute-force evaluator")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Span> spans;
        int cursor = 1 + static_cast<int>(rng() % 10);
        const int k = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < k; ++i) {
            const int len = 1 + static_cast<int>(rng() % 10);
            spans.push_back({cursor, cursor + len - 1});
            cursor += len + 1 + static_cast<int>(rng() % 12);
        }
        std::vector<int> alarms;
        const int n_alarms = static_cast<int>(rng() % 3);
        for (int i = 0; i < n_alarms; ++i)
            alarms.push_back(1 + static_cast<int>(rng() % static_cast<unsigned>(cursor + 5)));
        std::sort(alarms.begin(), alarms.end());
        const TimelinessConfig cfg{static_cast<int>(rng() % 8), std::uniform_real_distribution<double>(0.01, 0.99)(rng),
                                   std::uniform_real_distribution<double>(0.01, 0.99)(rng)};
        const double got = timeliness_score(alarms, spans, cfg);
        CHECK(got == oracle::timeliness(alarms, spans, cfg));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
        // the first span start is unbeatable
        CHECK(timeliness_score(std::vector<int>{spans[0].start}, spans, cfg) == 1.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("timeliness decays with the matched span index")
{
    const TimelinessConfig cfg{3, 0.5, 0.8};
    std::vector<Span> spans;
    for (int k = 0; k < 6; ++k)
        spans.push_back({1 + 20 * k, 5 + 20 * k});
    double prev_on = 2.0, prev_late = 2.0;
    for (int k = 0; k < 6; ++k) {
        const double on = timeliness_score(std::vector<int>{spans[k].start}, spans, cfg);
        const double late = timeliness_score(std::vector<int>{spans[k].start + 2}, spans, cfg);
        CHECK(on < prev_on);
        CHECK(late < prev_late);
        prev_on = on;
        prev_late = late;
    }
}

TEST_CASE("evaluate assembles the report")
{
    const TimelinessConfig cfg;
    // oracle predictions
    auto s = make_split({M, N, M, N}, {M, N, M, N});
    auto r = evaluate(s.preds, s.anns, cfg);
    CHECK(r.correctness.accuracy == 1.0);
    CHECK(r.correctness.macro_f1 == 1.0);
    CHECK(r.mean_timeliness == 1.0);
    CHECK(r.in_time_fraction == 1.0);
    CHECK(r.per_video_timeliness.size() == 2);

    // never alarm on a 50/50 split
    s = make_split({M, N, M, N}, {N, N, N, N});
    r = evaluate(s.preds, s.anns, cfg);
    CHECK(r.correctness.accuracy == 0.5);
    CHECK(r.mean_timeliness == 0.0);
    CHECK(r.in_time_fraction == 0.0);

    // one on time, one late, one missed
    s = make_split({M, M, M}, {M, M, M});
    s.preds[1].alarm_starts = {7};
    s.preds[2].alarm_starts = {30};
    r = evaluate(s.preds, s.anns, cfg);
    CHECK(r.mean_timeliness == doctest::Approx((1.0 + 0.5 + 0.0) / 3.0));
    CHECK(r.in_time_fraction == doctest::Approx(2.0 / 3.0));

    CHECK_THROWS_AS(evaluate({}, {}, cfg), ValidationError);
}

TEST_CASE("report record uses the documented field names")
{
    const auto s = make_split({M, N}, {M, M});
    const auto r = evaluate(s.preds, s.anns, TimelinessConfig{4, 0.25, 0.5});
    const auto j = nlohmann::json::parse(report_json(r));
    for (const char* key : {"accuracy", "macro_precision", "macro_recall", "macro_f1", "mean_timeliness", "in_time_fraction"})
        CHECK(j.contains(key));
    CHECK(j["timeliness_config"]["alpha"] == 4);
    CHECK(j["timeliness_config"]["beta"] == 0.25);
    CHECK(j["accuracy"] == 0.5);
    const auto table = report_table(r);
    CHECK(table.find("macro_f1") != std::string::npos);
    CHECK(table.find("alpha=4") != std::string::npos);
}
