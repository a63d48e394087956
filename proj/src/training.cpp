#include "mdls/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mdls/metrics.hpp"

namespace mdls {

std::string_view to_string(Objective objective)
{
    return objective == Objective::max_margin ? "max_margin" : "ramp_regression";
}

Objective parse_objective(std::string_view text)
{
    if (text == "ramp_regression")
        return Objective::ramp_regression;
    if (text == "max_margin")
        return Objective::max_margin;
    throw ConfigError("objective", "unknown objective '" + std::string(text) + "'");
}

void TrainConfig::validate() const
{
    if (scorer == ScorerKind::mlp && hidden == 0)
        throw ConfigError("hidden", "mlp needs a positive hidden width");
    if (ramp_len < 1)
        throw ConfigError("ramp_len", "must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate", "must be positive");
    if (epochs < 0)
        throw ConfigError("epochs", "must be non-negative");
    if (batch_size < 0)
        throw ConfigError("batch_size", "must be non-negative");
    if (!(margin > 0.0) || !std::isfinite(margin))
        throw ConfigError("margin", "must be positive");
    if (!(monotonicity_weight >= 0.0) || !std::isfinite(monotonicity_weight))
        throw ConfigError("monotonicity_weight", "must be non-negative");
}

std::vector<double> ramp_targets(std::span<const Span> spans, int length, int ramp_len)
{
    if (ramp_len < 1)
        throw ValidationError("ramp_len must be positive");
    VideoAnnotation probe{"", spans.empty() ? Label::neutral : Label::misinformation, {spans.begin(), spans.end()}};
    require_valid(probe, length);

    std::vector<double> y(static_cast<std::size_t>(length), 0.0);
    for (const auto& s : spans)
        for (int t = s.start; t <= s.end; ++t) {
            const int offset = t - s.start;
            y[static_cast<std::size_t>(t - 1)] = std::min(1.0, static_cast<double>(offset + 1) / ramp_len);
        }
    return y;
}

FrameSet build_frame_set(std::span<const FeatureStream> streams, std::span<const VideoAnnotation> anns,
                         FusionKind modality, int ramp_len)
{
    if (streams.size() != anns.size())
        throw ValidationError("streams and annotations differ in count");
    FrameSet set;
    for (std::size_t v = 0; v < streams.size(); ++v) {
        const auto& stream = streams[v];
        const auto& ann = anns[v];
        if (stream.video_id() != ann.video_id)
            throw ValidationError("stream '" + stream.video_id() + "' is not aligned with its annotation");
        const auto targets = ramp_targets(ann.spans, stream.length(), ramp_len);
        const std::size_t base = set.reps.size();
        for (const auto& f : stream.frames()) {
            set.reps.push_back(build_representation(f, modality));
            if (set.reps.back().size() != set.reps.front().size())
                throw DimensionMismatch("stream '" + stream.video_id() + "' changes representation dimension");
        }
        set.targets.insert(set.targets.end(), targets.begin(), targets.end());
        std::size_t next = 0;
        for (int t = 1; t <= stream.length(); ++t) {
            while (next < ann.spans.size() && ann.spans[next].end < t)
                ++next;
            const bool inside = next < ann.spans.size() && ann.spans[next].contains(t);
            (inside ? set.positives : set.negatives).push_back(base + static_cast<std::size_t>(t - 1));
        }
        for (const auto& s : ann.spans) {
            const int early = std::min(ramp_len, s.length());
            for (int i = 0; i + 1 < early; ++i) {
                const std::size_t t = base + static_cast<std::size_t>(s.start - 1 + i);
                set.monotone_pairs.emplace_back(t, t + 1);
            }
        }
    }
    return set;
}

RampRegressionObjective::RampRegressionObjective(const FrameSet& set, std::vector<std::size_t> frames)
    : set_(&set), frames_(std::move(frames))
{
    if (frames_.empty()) {
        frames_.resize(set.reps.size());
        std::iota(frames_.begin(), frames_.end(), std::size_t{0});
    }
}

double RampRegressionObjective::loss(const FrameScorer& scorer) const
{
    double sum = 0.0;
    for (auto i : frames_) {
        const double r = scorer.score(set_->reps[i]) - set_->targets[i];
        sum += r * r;
    }
    return frames_.empty() ? 0.0 : sum / static_cast<double>(frames_.size());
}

double RampRegressionObjective::loss_and_gradient(const FrameScorer& scorer, std::span<double> grad) const
{
    std::fill(grad.begin(), grad.end(), 0.0);
    if (frames_.empty())
        return 0.0;
    const double n = static_cast<double>(frames_.size());
    double sum = 0.0;
    for (auto i : frames_) {
        const auto& o = set_->reps[i];
        const double r = scorer.score(o) - set_->targets[i];
        sum += r * r;
        scorer.accumulate_gradient(o, 2.0 * r / n, grad);
    }
    return sum / n;
}

MaxMarginObjective::MaxMarginObjective(const FrameSet& set,
                                       std::vector<std::pair<std::size_t, std::size_t>> rank_pairs,
                                       std::vector<std::pair<std::size_t, std::size_t>> monotone_pairs,
                                       double margin, double monotonicity_weight)
    : set_(&set),
      rank_pairs_(std::move(rank_pairs)),
      monotone_pairs_(std::move(monotone_pairs)),
      margin_(margin),
      weight_(monotonicity_weight)
{
}

double MaxMarginObjective::loss(const FrameScorer& scorer) const
{
    double rank = 0.0;
    for (auto [p, n] : rank_pairs_)
        rank += std::max(0.0, margin_ - (scorer.score(set_->reps[p]) - scorer.score(set_->reps[n])));
    double mono = 0.0;
    for (auto [a, b] : monotone_pairs_)
        mono += std::max(0.0, scorer.score(set_->reps[a]) - scorer.score(set_->reps[b]));
    double total = 0.0;
    if (!rank_pairs_.empty())
        total += rank / static_cast<double>(rank_pairs_.size());
    if (!monotone_pairs_.empty())
        total += weight_ * mono / static_cast<double>(monotone_pairs_.size());
    return total;
}

double MaxMarginObjective::loss_and_gradient(const FrameScorer& scorer, std::span<double> grad) const
{
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> scratch(grad.size());
    double total = 0.0;

    // the score of each frame is needed before knowing whether its hinge is
    // active, so gradients go to scratch and are folded in when it is
    auto pair_term = [&](std::size_t hi, std::size_t lo, double offset, double coeff) {
        std::fill(scratch.begin(), scratch.end(), 0.0);
        const double c_hi = scorer.accumulate_gradient(set_->reps[hi], -1.0, scratch);
        const double c_lo = scorer.accumulate_gradient(set_->reps[lo], 1.0, scratch);
        const double h = offset - (c_hi - c_lo);
        if (h <= 0.0)
            return 0.0;
        for (std::size_t k = 0; k < grad.size(); ++k)
            grad[k] += coeff * scratch[k];
        return h;
    };

    if (!rank_pairs_.empty()) {
        const double coeff = 1.0 / static_cast<double>(rank_pairs_.size());
        double rank = 0.0;
        for (auto [p, n] : rank_pairs_)
            rank += pair_term(p, n, margin_, coeff);
        total += rank * coeff;
    }
    if (!monotone_pairs_.empty() && weight_ > 0.0) {
        // max(0, c_t - c_{t+1}) = max(0, 0 - (c_{t+1} - c_t))
        const double coeff = weight_ / static_cast<double>(monotone_pairs_.size());
        double mono = 0.0;
        for (auto [a, b] : monotone_pairs_)
            mono += pair_term(b, a, 0.0, coeff);
        total += mono * coeff;
    }
    return total;
}

FrameScorer initial_scorer(ScorerKind kind, std::size_t input_dim, std::size_t hidden, std::uint64_t seed)
{
    auto scorer = FrameScorer::zeros(kind, input_dim, hidden);
    if (kind == ScorerKind::linear)
        return scorer;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> w1(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
    std::normal_distribution<double> w2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
    auto p = scorer.mutable_params();
    const std::size_t n_w1 = hidden * input_dim;
    for (std::size_t i = 0; i < n_w1; ++i)
        p[i] = w1(rng);
    for (std::size_t j = 0; j < hidden; ++j)
        p[n_w1 + hidden + j] = w2(rng);
    return scorer;
}

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

Pairs sample_rank_pairs(const FrameSet& set, std::mt19937_64& rng)
{
    std::uniform_int_distribution<std::size_t> pick(0, set.negatives.size() - 1);
    Pairs pairs;
    pairs.reserve(set.positives.size());
    for (auto p : set.positives)
        pairs.emplace_back(p, set.negatives[pick(rng)]);
    return pairs;
}

void step(FrameScorer& scorer, std::span<const double> grad, double lr)
{
    auto p = scorer.mutable_params();
    for (std::size_t k = 0; k < p.size(); ++k)
        p[k] -= lr * grad[k];
}

std::size_t batch_count(std::size_t items, int batch_size)
{
    if (batch_size <= 0 || items == 0)
        return 1;
    return (items + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size);
}

template <typename T>
std::vector<T> slice(const std::vector<T>& v, std::size_t b, std::size_t batches)
{
    const std::size_t lo = v.size() * b / batches;
    const std::size_t hi = v.size() * (b + 1) / batches;
    return {v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi)};
}

// Normalised step: learning_rate over 1 + mean squared representation norm,
// which bounds the linear regression curvature by 2 (1 + mean |o|^2).
double step_size(const FrameSet& set, double learning_rate)
{
    double sq = 0.0;
    for (const auto& o : set.reps)
        for (double x : o)
            sq += x * x;
    return learning_rate / (1.0 + sq / static_cast<double>(set.reps.size()));
}

void keep_best(const FrameScorer& scorer, TrainResult& result)
{
    const double loss = result.loss_history.back();
    if (loss < result.final_loss) {
        result.final_loss = loss;
        result.best_epoch = static_cast<int>(result.loss_history.size()) - 1;
        result.scorer = scorer;
    }
}

}  // namespace

TrainResult train_scorer(const FrameSet& set, const TrainConfig& cfg)
{
    cfg.validate();
    if (set.reps.empty())
        throw TrainingError("no training frames");
    if (set.positives.empty() || set.negatives.empty())
        throw TrainingError("training data holds a single class; need positive and negative frames");

    TrainResult result{initial_scorer(cfg.scorer, set.dim(), cfg.hidden, cfg.seed), {}};
    // iterate, while result.scorer holds the best one seen
    FrameScorer scorer = result.scorer;
    std::mt19937_64 rng(cfg.seed + 1);
    std::vector<double> grad(scorer.params().size());
    const double lr = step_size(set, cfg.learning_rate);

    if (cfg.objective == Objective::ramp_regression) {
        const RampRegressionObjective full(set);
        result.loss_history.push_back(full.loss(scorer));
        result.final_loss = result.loss_history.front();
        std::vector<std::size_t> order(set.reps.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t batches = batch_count(order.size(), cfg.batch_size);
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t b = 0; b < batches; ++b) {
                RampRegressionObjective(set, slice(order, b, batches)).loss_and_gradient(scorer, grad);
                step(scorer, grad, lr);
            }
            result.loss_history.push_back(full.loss(scorer));
            keep_best(scorer, result);
        }
        return result;
    }

    std::mt19937_64 eval_rng(cfg.seed + 2);
    const MaxMarginObjective full(set, sample_rank_pairs(set, eval_rng), set.monotone_pairs, cfg.margin,
                                  cfg.monotonicity_weight);
    result.loss_history.push_back(full.loss(scorer));
    result.final_loss = result.loss_history.front();
    const std::size_t batches = batch_count(set.positives.size(), cfg.batch_size);
    auto monotone = set.monotone_pairs;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto pairs = sample_rank_pairs(set, rng);
        std::shuffle(pairs.begin(), pairs.end(), rng);
        std::shuffle(monotone.begin(), monotone.end(), rng);
        for (std::size_t b = 0; b < batches; ++b) {
            MaxMarginObjective(set, slice(pairs, b, batches), slice(monotone, b, batches), cfg.margin,
                               cfg.monotonicity_weight)
                .loss_and_gradient(scorer, grad);
            step(scorer, grad, lr);
        }
        result.loss_history.push_back(full.loss(scorer));
        keep_best(scorer, result);
    }
    return result;
}

DetectorTraining train_detector(std::span<const FeatureStream> streams, std::span<const VideoAnnotation> anns,
                                FusionKind fusion, const TrainConfig& cfg)
{
    if (streams.empty())
        throw TrainingError("empty training split");
    DetectorTraining out;
    out.model.fusion = fusion;
    out.model.d_visual = streams.front().visual_dim();
    out.model.d_audio = streams.front().audio_dim();
    for (const auto& s : streams)
        if (s.visual_dim() != out.model.d_visual || s.audio_dim() != out.model.d_audio)
            throw DimensionMismatch("training streams disagree on feature dimensions");

    auto train_on = [&](FusionKind modality, std::uint64_t seed) {
        TrainConfig c = cfg;
        c.seed = seed;
        auto r = train_scorer(build_frame_set(streams, anns, modality, cfg.ramp_len), c);
        out.model.scorers.push_back(std::move(r.scorer));
        out.loss_history.push_back(std::move(r.loss_history));
    };
    if (fusion == FusionKind::score_average) {
        train_on(FusionKind::visual_only, cfg.seed);
        train_on(FusionKind::audio_only, cfg.seed + 1000);
    } else {
        train_on(fusion, cfg.seed);
    }
    out.model.validate();
    return out;
}

std::vector<double> quantile_grid(std::vector<double> scores, int points)
{
    if (scores.empty())
        throw ValidationError("cannot build a grid from no scores");
    if (points < 2)
        throw ValidationError("grid needs at least two points");
    std::sort(scores.begin(), scores.end());
    const std::size_t last = scores.size() - 1;
    const auto steps = static_cast<std::size_t>(points - 1);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (std::size_t k = 0; k <= steps; ++k)
        grid.push_back(scores[(k * last + steps / 2) / steps]);
    return grid;
}

std::vector<double> default_grid(std::span<const std::vector<double>> video_scores)
{
    std::vector<double> all;
    std::vector<double> maxima;
    for (const auto& v : video_scores) {
        if (v.empty())
            continue;
        all.insert(all.end(), v.begin(), v.end());
        maxima.push_back(*std::max_element(v.begin(), v.end()));
    }
    auto grid = quantile_grid(std::move(all));
    std::sort(maxima.begin(), maxima.end());
    maxima.erase(std::unique(maxima.begin(), maxima.end()), maxima.end());
    grid.push_back(maxima.front());
    for (std::size_t i = 1; i < maxima.size(); ++i)
        grid.push_back(0.5 * (maxima[i - 1] + maxima[i]));
    return grid;
}

Calibration grid_search_threshold(std::span<const std::vector<double>> video_scores,
                                  std::span<const VideoAnnotation> anns, std::span<const double> grid)
{
    if (grid.empty())
        throw ValidationError("threshold grid is empty");
    if (video_scores.size() != anns.size())
        throw ValidationError("score sequences and annotations differ in count");

    Calibration best{0.0, -1.0, {}};
    for (double theta : grid) {
        ConfusionMatrix cm;
        for (std::size_t v = 0; v < anns.size(); ++v) {
            const auto alarms = detect_alarms(video_scores[v], AlarmPolicy{theta});
            cm.add(anns[v].label, video_verdict(alarms));
        }
        const double f1 = correctness_from_confusion(cm).macro_f1;
        best.objective.emplace_back(theta, f1);
        if (f1 > best.macro_f1 || (f1 == best.macro_f1 && theta < best.threshold)) {
            best.macro_f1 = f1;
            best.threshold = theta;
        }
    }
    return best;
}

std::vector<std::vector<double>> score_streams(const DetectorModel& model, std::span<const FeatureStream> streams)
{
    std::vector<std::vector<double>> out;
    out.reserve(streams.size());
    for (const auto& s : streams)
        out.push_back(run_detector(s, model).scores);
    return out;
}

Calibration grid_search_threshold(const DetectorModel& model, std::span<const FeatureStream> streams,
                                  std::span<const VideoAnnotation> anns, std::span<const double> grid)
{
    const auto scores = score_streams(model, streams);
    return grid_search_threshold(scores, anns, grid);
}

}  // namespace mdls
