#pragma once

// Random small training instances shared by the unit and acceptance suites.

#include <random>
#include <utility>
#include <vector>

#include "mdls/training.hpp"
#include "oracles.hpp"

namespace fixture {

struct GradientInstance {
    mdls::FrameSet set;
    std::vector<std::pair<std::size_t, std::size_t>> rank_pairs;
    mdls::FrameScorer scorer;
};

inline GradientInstance random_instance(std::mt19937_64& rng, mdls::ScorerKind kind)
{
    std::normal_distribution<double> n;
    GradientInstance g;
    const std::size_t d = 1 + rng() % 4;
    const std::size_t frames = 4 + rng() % 8;
    const std::size_t hidden = 1 + rng() % 4;
    for (std::size_t i = 0; i < frames; ++i) {
        std::vector<double> o(d);
        for (auto& x : o)
            x = n(rng);
        g.set.reps.push_back(std::move(o));
        g.set.targets.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
        (i % 2 ? g.set.positives : g.set.negatives).push_back(i);
    }
    for (std::size_t i = 0; i + 1 < frames; i += 2)
        g.set.monotone_pairs.emplace_back(i, i + 1);
    for (auto p : g.set.positives)
        g.rank_pairs.emplace_back(p, g.set.negatives[rng() % g.set.negatives.size()]);
    std::vector<double> params(mdls::FrameScorer::param_count(kind, d, hidden));
    for (auto& p : params)
        p = n(rng);
    g.scorer = mdls::FrameScorer(kind, d, hidden, params);
    return g;
}

// Relative error between the analytic gradient and central differences.
template <typename Objective>
double gradient_error(const Objective& objective, const mdls::FrameScorer& scorer, double step = 1e-5)
{
    std::vector<double> analytic(scorer.params().size());
    objective.loss_and_gradient(scorer, analytic);
    auto at = [&](const std::vector<double>& p) {
        mdls::FrameScorer s(scorer.kind(), scorer.input_dim(), scorer.hidden(), p);
        return objective.loss(s);
    };
    const auto numeric =
        oracle::central_difference(at, std::vector<double>(scorer.params().begin(), scorer.params().end()), step);
    return oracle::relative_error(analytic, numeric);
}

}  // namespace fixture
