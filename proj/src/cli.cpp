#include "mdls/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdls/annotation.hpp"
#include "mdls/dataset_io.hpp"
#include "mdls/metrics.hpp"

namespace mdls::cli {

namespace {

constexpr std::uint64_t synthetic_seed_offset = 11;
constexpr std::uint64_t train_seed_offset = 23;

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        std::size_t used = 0;
        try {
            out = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty())
            throw ConfigError(key, "expected a number, got '" + value + "'");
    } else {
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
    return out;
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t global)
{
    seed = global;
    synthetic.seed = global + synthetic_seed_offset;
    train.seed = global + train_seed_offset;
}

int RunConfig::train_count() const
{
    return num_train >= 0 ? num_train : (synthetic.num_videos * 2) / 3;
}

void RunConfig::validate() const
{
    synthetic.validate();
    train.validate();
    timeliness.validate();
    if (num_train > synthetic.num_videos)
        throw ConfigError("num_train", "exceeds num_videos");
    if (num_train < -1)
        throw ConfigError("num_train", "must be -1 (default split) or a video count");
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        grid.push_back(parse_number<double>("grid", trim(item)));
    if (grid.empty())
        throw ConfigError("grid", "no values");
    for (double g : grid)
        if (!std::isfinite(g))
            throw ConfigError("grid", "non-finite value");
    return grid;
}

RunConfig parse_run_config(std::istream& in)
{
    RunConfig c;
    std::optional<std::uint64_t> seed;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto integer = [](int& field) -> Setter {
        return [&field](const std::string& k, const std::string& v) { field = parse_number<int>(k, v); };
    };
    auto real = [](double& field) -> Setter {
        return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
    };
    const std::map<std::string, Setter> setters = {
        {"seed", [&](const std::string& k, const std::string& v) { seed = parse_number<std::uint64_t>(k, v); }},
        {"num_videos", integer(c.synthetic.num_videos)},
        {"num_train", integer(c.num_train)},
        {"length_min", integer(c.synthetic.length_range.min)},
        {"length_max", integer(c.synthetic.length_range.max)},
        {"misinfo_fraction", real(c.synthetic.misinfo_fraction)},
        {"spans_min", integer(c.synthetic.spans_per_video_range.min)},
        {"spans_max", integer(c.synthetic.spans_per_video_range.max)},
        {"span_length_min", integer(c.synthetic.span_length_range.min)},
        {"span_length_max", integer(c.synthetic.span_length_range.max)},
        {"d_visual", integer(c.synthetic.d_visual)},
        {"d_audio", integer(c.synthetic.d_audio)},
        {"delta", real(c.synthetic.delta)},
        {"objective", [&](const std::string&, const std::string& v) { c.train.objective = parse_objective(v); }},
        {"scorer", [&](const std::string&, const std::string& v) { c.train.scorer = parse_scorer_kind(v); }},
        {"hidden", [&](const std::string& k, const std::string& v) { c.train.hidden = parse_number<std::size_t>(k, v); }},
        {"ramp_len", integer(c.train.ramp_len)},
        {"learning_rate", real(c.train.learning_rate)},
        {"epochs", integer(c.train.epochs)},
        {"batch_size", integer(c.train.batch_size)},
        {"margin", real(c.train.margin)},
        {"monotonicity_weight", real(c.train.monotonicity_weight)},
        {"fusion", [&](const std::string&, const std::string& v) { c.fusion = parse_fusion(v); }},
        {"alpha", integer(c.timeliness.alpha)},
        {"beta", real(c.timeliness.beta)},
        {"gamma", real(c.timeliness.gamma)},
        {"grid", [&](const std::string&, const std::string& v) { c.grid = parse_grid(v); }},
        {"data", [&](const std::string&, const std::string& v) { c.data_dir = v; }},
        {"model", [&](const std::string&, const std::string& v) { c.model_path = v; }},
        {"out", [&](const std::string&, const std::string& v) { c.out_dir = v; }},
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", line_no);
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(key, "unknown configuration key");
        it->second(key, value);
    }
    c.apply_seed(seed.value_or(0));
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return parse_run_config(in);
}

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> alpha;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::string grid;
    std::string out;
    std::string data;
    std::string model;
    bool oracle = false;
    bool never_alarm = false;
    double threshold = default_consistency_threshold;
    std::vector<std::string> files;
};

RunConfig resolve(const Options& o)
{
    RunConfig c;
    if (!o.config.empty())
        c = load_run_config(o.config);
    if (o.seed)
        c.apply_seed(*o.seed);
    if (o.alpha)
        c.timeliness.alpha = *o.alpha;
    if (o.beta)
        c.timeliness.beta = *o.beta;
    if (o.gamma)
        c.timeliness.gamma = *o.gamma;
    if (!o.grid.empty())
        c.grid = parse_grid(o.grid);
    if (!o.out.empty())
        c.out_dir = o.out;
    if (!o.data.empty())
        c.data_dir = o.data;
    if (!o.model.empty())
        c.model_path = o.model;
    c.validate();
    return c;
}

const std::filesystem::path& need(const std::optional<std::filesystem::path>& p, const char* key)
{
    if (!p)
        throw ConfigError(key, "path not set (use --" + std::string(key) + " or the config file)");
    return *p;
}

void ensure_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    auto out = open_output(path);
    out << text;
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

int cmd_generate(const RunConfig& c, std::ostream& out)
{
    const auto& dir = need(c.out_dir, "out");
    const auto data = generate_synthetic(c.synthetic);
    const auto manifest = make_manifest(data, c.train_count());
    save_dataset(dir, data, manifest);
    const auto misinfo = std::count_if(data.annotations.begin(), data.annotations.end(),
                                       [](const auto& a) { return a.label == Label::misinformation; });
    const auto train = std::count_if(manifest.begin(), manifest.end(), [](const auto& e) { return e.split == Split::train; });
    out << "generated " << data.streams.size() << " videos (" << misinfo << " misinformation, "
        << data.streams.size() - static_cast<std::size_t>(misinfo) << " neutral); train " << train << ", test "
        << manifest.size() - static_cast<std::size_t>(train) << "\n";
    return ok;
}

int cmd_train(const RunConfig& c, std::ostream& out)
{
    const auto data = load_split(need(c.data_dir, "data"), Split::train);
    const auto& dir = need(c.out_dir, "out");
    const auto trained = train_detector(data.streams, data.annotations, c.fusion, c.train);
    ensure_dir(dir);
    save_model(dir / "model.json", trained.model);

    std::ostringstream log;
    log << "# objective " << to_string(c.train.objective) << " scorer " << to_string(c.train.scorer) << " fusion "
        << to_string(c.fusion) << " seed " << c.train.seed << "\n";
    log << "scorer\tepoch\tloss\n";
    for (std::size_t s = 0; s < trained.loss_history.size(); ++s)
        for (std::size_t e = 0; e < trained.loss_history[s].size(); ++e)
            log << s << '\t' << e << '\t' << format_double(trained.loss_history[s][e]) << '\n';
    write_text(dir / "train_log.txt", log.str());

    out << "trained " << trained.model.scorers.size() << " scorer(s) on " << data.streams.size() << " videos";
    for (const auto& h : trained.loss_history)
        out << "; loss " << h.front() << " -> " << h.back();
    out << "\n";
    return ok;
}

int cmd_calibrate(const RunConfig& c, std::ostream& out)
{
    const auto data = load_split(need(c.data_dir, "data"), Split::train);
    if (data.streams.empty())
        throw TrainingError("empty train split");
    auto model = load_model(need(c.model_path, "model"));
    for (const auto& s : data.streams)
        model.check_stream(s);
    const auto scores = score_streams(model, data.streams);
    const auto grid = c.grid.empty() ? default_grid(scores) : c.grid;
    const auto cal = grid_search_threshold(scores, data.annotations, grid);
    model.threshold = cal.threshold;

    const auto& dir = need(c.out_dir, "out");
    ensure_dir(dir);
    save_model(dir / "model.json", model);
    std::ostringstream log;
    log << "theta\tmacro_f1\n";
    for (const auto& [theta, f1] : cal.objective)
        log << format_double(theta) << '\t' << format_double(f1) << '\n';
    log << "# selected theta " << format_double(cal.threshold) << " macro_f1 " << format_double(cal.macro_f1) << '\n';
    write_text(dir / "calibration_log.txt", log.str());
    out << "calibrated theta = " << format_double(cal.threshold) << " (train macro_f1 " << cal.macro_f1 << ")\n";
    return ok;
}

// Scores every stream on its own player; work is split across threads but
// each result lands at its stream's index.
std::vector<DetectionTrace> detect_all(const SyntheticDataset& data, const Options& o,
                                       const std::optional<DetectorModel>& model)
{
    std::vector<DetectionTrace> traces(data.streams.size());
    auto work = [&](std::size_t i) {
        const auto& s = data.streams[i];
        if (model)
            return run_detector(s, *model);
        StreamPlayer player(s);
        if (o.oracle) {
            OracleDetector oracle(data.annotations[i].spans);
            return run_detector(s.video_id(), player, oracle, AlarmPolicy{0.5});
        }
        ConstantDetector never(0.0);
        return run_detector(s.video_id(), player, never, AlarmPolicy{0.5});
    };
    const std::size_t n = traces.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers)
                        traces[i] = work(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return traces;
}

int cmd_evaluate(const RunConfig& c, const Options& o, std::ostream& out)
{
    if (o.oracle && o.never_alarm)
        throw ConfigError("evaluate", "--oracle and --never-alarm are exclusive");
    const auto data = load_split(need(c.data_dir, "data"), Split::test);
    if (data.streams.empty())
        throw ValidationError("empty test split");
    std::optional<DetectorModel> model;
    if (!o.oracle && !o.never_alarm) {
        model = load_model(need(c.model_path, "model"));
        for (const auto& s : data.streams)
            model->check_stream(s);
    }
    auto traces = detect_all(data, o, model);
    std::sort(traces.begin(), traces.end(), [](const auto& a, const auto& b) { return a.video_id < b.video_id; });

    std::vector<VideoPrediction> preds;
    preds.reserve(traces.size());
    for (const auto& t : traces)
        preds.push_back(t.to_prediction());
    const auto report = evaluate(preds, data.annotations, c.timeliness);

    const auto& dir = need(c.out_dir, "out");
    ensure_dir(dir);
    write_text(dir / "report.json", report_json(report));
    const auto table = report_table(report);
    write_text(dir / "report.txt", table);
    {
        auto f = open_output(dir / "predictions.jsonl");
        for (const auto& p : preds) {
            nlohmann::ordered_json r = {{"video_id", p.video_id},
                                        {"verdict", to_string(p.verdict)},
                                        {"alarm_starts", p.alarm_starts}};
            f << r.dump() << '\n';
        }
    }
    out << table;
    return ok;
}

int cmd_kappa(const Options& o, std::ostream& out)
{
    if (o.files.size() != 2)
        throw ConfigError("kappa", "expects exactly two label files");
    const auto a = load_annotator_labels(o.files[0]);
    const auto b = load_annotator_labels(o.files[1]);
    out << "kappa = " << format_double(cohen_kappa(a, b)) << "\n";
    return ok;
}

int cmd_vote(const Options& o, std::ostream& out)
{
    std::vector<AnnotatorLabels> raters;
    for (const auto& f : o.files)
        raters.push_back(load_annotator_labels(f));
    const auto resolved = vote_labels(raters);
    if (raters.size() >= 2)
        out << "# mean pairwise kappa (non-canonical) = " << format_double(mean_pairwise_kappa(raters)) << "\n";
    if (o.out.empty()) {
        write_annotator_labels(out, resolved);
    } else {
        auto f = open_output(o.out);
        write_annotator_labels(f, resolved);
        out << "wrote " << resolved.labels.size() << " resolved labels to " << o.out << "\n";
    }
    return ok;
}

int cmd_consistency(const Options& o, std::ostream& out)
{
    if (o.files.size() != 2)
        throw ConfigError("consistency", "expects two pass files");
    const auto p1 = load_annotations(o.files[0]);
    const auto p2 = load_annotations(o.files[1]);
    std::map<std::string, const VideoAnnotation*> second;
    for (const auto& a : p2)
        second.emplace(a.video_id, &a);
    if (second.size() != p2.size() || p1.size() != p2.size())
        throw ValidationError("pass files cover different video sets");

    std::vector<const VideoAnnotation*> first;
    for (const auto& a : p1)
        first.push_back(&a);
    std::sort(first.begin(), first.end(), [](auto* a, auto* b) { return a->video_id < b->video_id; });

    std::ostringstream records;
    int warnings = 0;
    for (const auto* a : first) {
        auto it = second.find(a->video_id);
        if (it == second.end())
            throw ValidationError("video '" + a->video_id + "' missing from the second pass");
        for (const auto* pass : {a, it->second}) {
            const auto v = validate_annotation(*pass, std::numeric_limits<int>::max());
            for (const auto& bad : v)
                if (bad.kind != ViolationKind::label_spans_inconsistent)
                    throw ValidationError("video '" + pass->video_id + "': " + bad.message);
        }
        const auto report = pass_consistency(a->spans, it->second->spans, o.threshold);
        warnings += report.warning;
        records << consistency_json(a->video_id, report) << '\n';
    }
    if (o.out.empty())
        out << records.str();
    else
        write_text(o.out, records.str());
    out << "videos " << first.size() << ", warnings " << warnings << "\n";
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Online misinformation detection over feature streams", "mdls"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "flat key = value config file");
        sub->add_option("--seed", o.seed, "global seed (overrides config)");
        sub->add_option("--out", o.out, "output directory");
    };
    auto data_opts = [&](CLI::App* sub) {
        sub->add_option("--data", o.data, "dataset directory");
        sub->add_option("--model", o.model, "model file");
    };
    auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
    common(gen);
    auto* train = app.add_subcommand("train", "train a frame scorer on the train split");
    common(train);
    data_opts(train);
    auto* cal = app.add_subcommand("calibrate", "grid-search the alarm threshold on the train split");
    common(cal);
    data_opts(cal);
    cal->add_option("--grid", o.grid, "comma-separated threshold candidates");
    auto* eval = app.add_subcommand("evaluate", "replay the test split and write reports");
    common(eval);
    data_opts(eval);
    eval->add_option("--alpha", o.alpha, "offset tolerance in frames");
    eval->add_option("--beta", o.beta, "late-detection factor");
    eval->add_option("--gamma", o.gamma, "per-span discount");
    eval->add_flag("--oracle", o.oracle, "alarm exactly at annotated span starts");
    eval->add_flag("--never-alarm", o.never_alarm, "never raise an alarm");
    auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two label files");
    kappa->add_option("files", o.files, "label files")->required();
    auto* vote = app.add_subcommand("vote", "majority vote over label files");
    vote->add_option("files", o.files, "label files")->required();
    vote->add_option("--out", o.out, "resolved label file");
    auto* cons = app.add_subcommand("consistency", "two-pass span consistency");
    cons->add_option("files", o.files, "pass 1 and pass 2 annotation files")->required();
    cons->add_option("--threshold", o.threshold, "warning threshold on mean IoU");
    cons->add_option("--out", o.out, "report file");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return invalid;
    }

    try {
        if (gen->parsed())
            return cmd_generate(resolve(o), out);
        if (train->parsed())
            return cmd_train(resolve(o), out);
        if (cal->parsed())
            return cmd_calibrate(resolve(o), out);
        if (eval->parsed())
            return cmd_evaluate(resolve(o), o, out);
        if (kappa->parsed())
            return cmd_kappa(o, out);
        if (vote->parsed())
            return cmd_vote(o, out);
        if (cons->parsed())
            return cmd_consistency(o, out);
    } catch (const DimensionMismatch& e) {
        err << "error: " << e.what() << "\n";
        return mismatch;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return invalid;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return invalid;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return invalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return unexpected;
    }
    return unexpected;
}

}  // namespace mdls::cli
