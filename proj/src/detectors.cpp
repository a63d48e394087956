#include "mdls/detectors.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "mdls/dataset_io.hpp"

namespace mdls {

std::string_view to_string(FusionKind kind)
{
    switch (kind) {
    case FusionKind::visual_only:
        return "visual_only";
    case FusionKind::audio_only:
        return "audio_only";
    case FusionKind::concat:
        return "concat";
    case FusionKind::score_average:
        return "score_average";
    }
    return "?";
}

FusionKind parse_fusion(std::string_view text)
{
    for (auto k : {FusionKind::visual_only, FusionKind::audio_only, FusionKind::concat, FusionKind::score_average})
        if (to_string(k) == text)
            return k;
    throw ConfigError("fusion", "unknown strategy '" + std::string(text) + "'");
}

std::size_t representation_dim(FusionKind kind, std::size_t d_visual, std::size_t d_audio)
{
    switch (kind) {
    case FusionKind::visual_only:
        return d_visual;
    case FusionKind::audio_only:
        return d_audio;
    case FusionKind::concat:
        return d_visual + d_audio;
    case FusionKind::score_average:
        break;
    }
    throw ContractViolation("score_average has no joint representation");
}

std::vector<double> build_representation(const FrameFeature& frame, FusionKind kind)
{
    switch (kind) {
    case FusionKind::visual_only:
        return frame.visual;
    case FusionKind::audio_only:
        return frame.audio;
    case FusionKind::concat: {
        std::vector<double> o;
        o.reserve(frame.visual.size() + frame.audio.size());
        o.insert(o.end(), frame.visual.begin(), frame.visual.end());
        o.insert(o.end(), frame.audio.begin(), frame.audio.end());
        return o;
    }
    case FusionKind::score_average:
        break;
    }
    throw ContractViolation("score_average fuses scores, not representations");
}

std::string_view to_string(ScorerKind kind)
{
    return kind == ScorerKind::mlp ? "mlp" : "linear";
}

ScorerKind parse_scorer_kind(std::string_view text)
{
    if (text == "linear")
        return ScorerKind::linear;
    if (text == "mlp")
        return ScorerKind::mlp;
    throw ConfigError("scorer", "unknown scorer kind '" + std::string(text) + "'");
}

std::size_t FrameScorer::param_count(ScorerKind kind, std::size_t input_dim, std::size_t hidden)
{
    if (kind == ScorerKind::linear)
        return input_dim + 1;
    return hidden * input_dim + hidden + hidden + 1;
}

FrameScorer::FrameScorer(ScorerKind kind, std::size_t input_dim, std::size_t hidden, std::vector<double> params)
    : kind_(kind), input_dim_(input_dim), hidden_(kind == ScorerKind::linear ? 0 : hidden), params_(std::move(params))
{
    if (input_dim_ == 0)
        throw ValidationError("scorer input dimension must be positive");
    if (kind_ == ScorerKind::mlp && hidden_ == 0)
        throw ValidationError("mlp scorer needs a positive hidden width");
    if (params_.size() != param_count(kind_, input_dim_, hidden_))
        throw ValidationError("scorer expects " + std::to_string(param_count(kind_, input_dim_, hidden_)) +
                              " parameters, got " + std::to_string(params_.size()));
    for (double p : params_)
        if (!std::isfinite(p))
            throw ValidationError("non-finite scorer parameter");
}

FrameScorer FrameScorer::zeros(ScorerKind kind, std::size_t input_dim, std::size_t hidden)
{
    return FrameScorer(kind, input_dim, hidden, std::vector<double>(param_count(kind, input_dim, hidden), 0.0));
}

void FrameScorer::check_dim(std::span<const double> o) const
{
    if (o.size() != input_dim_)
        throw DimensionMismatch("scorer expects input dimension " + std::to_string(input_dim_) + ", got " +
                                std::to_string(o.size()));
}

double FrameScorer::score(std::span<const double> o) const
{
    check_dim(o);
    const std::size_t d = input_dim_;
    if (kind_ == ScorerKind::linear) {
        double c = params_[d];
        for (std::size_t i = 0; i < d; ++i)
            c += params_[i] * o[i];
        return c;
    }
    const std::size_t h = hidden_;
    const double* w1 = params_.data();
    const double* b1 = w1 + h * d;
    const double* w2 = b1 + h;
    double c = w2[h];
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1[j];
        for (std::size_t i = 0; i < d; ++i)
            a += w1[j * d + i] * o[i];
        c += w2[j] * std::tanh(a);
    }
    return c;
}

double FrameScorer::accumulate_gradient(std::span<const double> o, double coeff, std::span<double> grad) const
{
    check_dim(o);
    const std::size_t d = input_dim_;
    if (kind_ == ScorerKind::linear) {
        double c = params_[d];
        for (std::size_t i = 0; i < d; ++i) {
            c += params_[i] * o[i];
            grad[i] += coeff * o[i];
        }
        grad[d] += coeff;
        return c;
    }
    const std::size_t h = hidden_;
    const double* w1 = params_.data();
    const double* b1 = w1 + h * d;
    const double* w2 = b1 + h;
    double* g_w1 = grad.data();
    double* g_b1 = g_w1 + h * d;
    double* g_w2 = g_b1 + h;
    double c = w2[h];
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1[j];
        for (std::size_t i = 0; i < d; ++i)
            a += w1[j * d + i] * o[i];
        const double z = std::tanh(a);
        c += w2[j] * z;
        g_w2[j] += coeff * z;
        const double back = coeff * w2[j] * (1.0 - z * z);
        g_b1[j] += back;
        for (std::size_t i = 0; i < d; ++i)
            g_w1[j * d + i] += back * o[i];
    }
    g_w2[h] += coeff;
    return c;
}

std::vector<int> detect_alarms(std::span<const double> scores, const AlarmPolicy& policy)
{
    std::vector<int> starts;
    bool above = false;  // c_0 = -inf
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool now = scores[i] >= policy.threshold;
        if (now && !above)
            starts.push_back(static_cast<int>(i) + 1);
        above = now;
    }
    return starts;
}

void DetectorModel::validate() const
{
    if (d_visual == 0 || d_audio == 0)
        throw ValidationError("model feature dimensions must be positive");
    if (!std::isfinite(threshold))
        throw ValidationError("model threshold must be finite");
    if (fusion == FusionKind::score_average) {
        if (scorers.size() != 2)
            throw ValidationError("score_average needs a visual and an audio scorer");
        if (scorers[0].input_dim() != d_visual || scorers[1].input_dim() != d_audio)
            throw DimensionMismatch("score_average scorer dimensions disagree with the model");
        return;
    }
    if (scorers.size() != 1)
        throw ValidationError("model needs exactly one scorer for " + std::string(to_string(fusion)));
    if (scorers[0].input_dim() != representation_dim(fusion, d_visual, d_audio))
        throw DimensionMismatch("scorer dimension disagrees with fusion strategy");
}

void DetectorModel::check_stream(const FeatureStream& stream) const
{
    if (stream.visual_dim() != d_visual || stream.audio_dim() != d_audio)
        throw DimensionMismatch("stream '" + stream.video_id() + "' has dimensions (" +
                                std::to_string(stream.visual_dim()) + ", " + std::to_string(stream.audio_dim()) +
                                "), model expects (" + std::to_string(d_visual) + ", " + std::to_string(d_audio) +
                                ")");
}

double DetectorModel::score(const FrameFeature& frame) const
{
    if (frame.visual.size() != d_visual || frame.audio.size() != d_audio)
        throw DimensionMismatch("frame " + std::to_string(frame.index) + " dimensions disagree with the model");
    if (fusion == FusionKind::score_average)
        return 0.5 * (scorers[0].score(frame.visual) + scorers[1].score(frame.audio));
    return scorers[0].score(build_representation(frame, fusion));
}

using nlohmann::json;

void write_model(std::ostream& out, const DetectorModel& model)
{
    json scorers = json::array();
    for (const auto& s : model.scorers)
        scorers.push_back({{"kind", to_string(s.kind())},
                           {"input_dim", s.input_dim()},
                           {"hidden", s.hidden()},
                           {"params", std::vector<double>(s.params().begin(), s.params().end())}});
    json record = {{"format", "mdls-model/1"},
                   {"fusion", to_string(model.fusion)},
                   {"d_visual", model.d_visual},
                   {"d_audio", model.d_audio},
                   {"threshold", model.threshold},
                   {"scorers", scorers}};
    out << record.dump(1) << '\n';
}

DetectorModel read_model(std::istream& in)
{
    json record;
    try {
        record = json::parse(in);
        DetectorModel m;
        if (record.at("format").get<std::string>() != "mdls-model/1")
            throw ValidationError("unsupported model format");
        m.fusion = parse_fusion(record.at("fusion").get<std::string>());
        m.d_visual = record.at("d_visual").get<std::size_t>();
        m.d_audio = record.at("d_audio").get<std::size_t>();
        m.threshold = record.at("threshold").get<double>();
        for (const auto& s : record.at("scorers"))
            m.scorers.emplace_back(parse_scorer_kind(s.at("kind").get<std::string>()),
                                   s.at("input_dim").get<std::size_t>(), s.at("hidden").get<std::size_t>(),
                                   s.at("params").get<std::vector<double>>());
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what(), 0);
    }
}

void save_model(const std::filesystem::path& path, const DetectorModel& model)
{
    auto out = open_output(path);
    write_model(out, model);
}

DetectorModel load_model(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_model(in);
}

double OracleDetector::observe(const FrameFeature& frame)
{
    for (const auto& s : spans_)
        if (s.contains(frame.index))
            return 1.0;
    return 0.0;
}

DetectionTrace run_detector(const std::string& video_id, StreamPlayer& source, OnlineDetector& detector,
                            const AlarmPolicy& policy)
{
    DetectionTrace trace;
    trace.video_id = video_id;
    trace.scores.reserve(static_cast<std::size_t>(source.length()));
    detector.reset();
    while (auto frame = source.next())
        trace.scores.push_back(detector.observe(*frame));
    trace.alarm_starts = detect_alarms(trace.scores, policy);
    trace.verdict = video_verdict(trace.alarm_starts);
    return trace;
}

DetectionTrace run_detector(const FeatureStream& stream, const DetectorModel& model)
{
    model.check_stream(stream);
    StreamPlayer player(stream);
    ModelDetector detector(model);
    return run_detector(stream.video_id(), player, detector, AlarmPolicy{model.threshold});
}

}  // namespace mdls
