#include "mdls/dataset_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mdls {

using nlohmann::json;

std::string_view to_string(Split split)
{
    return split == Split::train ? "train" : "test";
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

namespace {

// Calls fn(record, line_no) for every non-blank line. JSON and schema errors
// surface as ParseError carrying the line number.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
        if (!record.is_object())
            throw ParseError("record is not an object", line_no);
        try {
            fn(record, line_no);
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

std::vector<double> number_array(const json& record, const char* key, std::size_t line_no)
{
    const json& arr = record.at(key);
    if (!arr.is_array())
        throw ParseError(std::string("'") + key + "' is not an array", line_no);
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number())
            throw ParseError(std::string("non-numeric entry in '") + key + "'", line_no);
        out.push_back(v.get<double>());
    }
    return out;
}

std::string string_field(const json& record, const char* key, std::size_t line_no)
{
    const json& v = record.at(key);
    if (!v.is_string())
        throw ParseError(std::string("'") + key + "' is not a string", line_no);
    return v.get<std::string>();
}

int int_field(const json& record, const char* key, std::size_t line_no)
{
    const json& v = record.at(key);
    if (!v.is_number_integer())
        throw ParseError(std::string("'") + key + "' is not an integer", line_no);
    return v.get<int>();
}

std::vector<Span> parse_spans(const json& record, std::size_t line_no)
{
    std::vector<Span> spans;
    if (!record.contains("spans"))
        return spans;
    const json& arr = record.at("spans");
    if (!arr.is_array())
        throw ParseError("'spans' is not an array", line_no);
    for (const auto& s : arr)
        spans.push_back({int_field(s, "start", line_no), int_field(s, "end", line_no)});
    return spans;
}

json spans_json(std::span<const Span> spans)
{
    json arr = json::array();
    for (const auto& s : spans)
        arr.push_back({{"start", s.start}, {"end", s.end}});
    return arr;
}

}  // namespace

void write_streams(std::ostream& out, std::span<const FeatureStream> streams)
{
    for (const auto& s : streams)
        for (const auto& f : s.frames()) {
            json record = {{"video_id", s.video_id()}, {"t", f.index}, {"visual", f.visual}, {"audio", f.audio}};
            out << record.dump() << '\n';
        }
}

std::vector<FeatureStream> read_streams(std::istream& in)
{
    std::vector<std::string> order;
    std::map<std::string, std::vector<FrameFeature>> frames;
    for_each_record(in, [&](const json& r, std::size_t line_no) {
        auto id = string_field(r, "video_id", line_no);
        FrameFeature f{int_field(r, "t", line_no), number_array(r, "visual", line_no),
                       number_array(r, "audio", line_no)};
        auto [it, inserted] = frames.try_emplace(id);
        if (inserted)
            order.push_back(id);
        it->second.push_back(std::move(f));
    });
    std::vector<FeatureStream> out;
    out.reserve(order.size());
    for (const auto& id : order)
        out.emplace_back(id, std::move(frames[id]));
    return out;
}

std::vector<FeatureStream> load_streams(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_streams(in);
}

FeatureStream load_stream(const std::filesystem::path& path)
{
    auto streams = load_streams(path);
    if (streams.size() != 1)
        throw ValidationError("'" + path.string() + "' holds " + std::to_string(streams.size()) +
                              " videos, expected exactly one");
    return std::move(streams.front());
}

void write_annotations(std::ostream& out, std::span<const VideoAnnotation> anns)
{
    for (const auto& a : anns) {
        json record = {{"video_id", a.video_id}, {"label", to_string(a.label)}, {"spans", spans_json(a.spans)}};
        out << record.dump() << '\n';
    }
}

std::vector<VideoAnnotation> read_annotations(std::istream& in)
{
    std::vector<VideoAnnotation> out;
    for_each_record(in, [&](const json& r, std::size_t line_no) {
        VideoAnnotation a;
        a.video_id = string_field(r, "video_id", line_no);
        try {
            a.label = parse_label(string_field(r, "label", line_no));
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
        a.spans = parse_spans(r, line_no);
        out.push_back(std::move(a));
    });
    return out;
}

std::vector<VideoAnnotation> load_annotations(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_annotations(in);
}

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries)
{
    for (const auto& e : entries) {
        json record = {{"video_id", e.video_id}, {"split", to_string(e.split)}};
        out << record.dump() << '\n';
    }
}

std::vector<ManifestEntry> read_manifest(std::istream& in)
{
    std::vector<ManifestEntry> out;
    for_each_record(in, [&](const json& r, std::size_t line_no) {
        const auto split = string_field(r, "split", line_no);
        if (split != "train" && split != "test")
            throw ParseError("unknown split '" + split + "'", line_no);
        out.push_back({string_field(r, "video_id", line_no), split == "train" ? Split::train : Split::test});
    });
    return out;
}

std::vector<ManifestEntry> make_manifest(const SyntheticDataset& data, int num_train)
{
    std::vector<ManifestEntry> out;
    out.reserve(data.streams.size());
    for (std::size_t i = 0; i < data.streams.size(); ++i)
        out.push_back({data.streams[i].video_id(),
                       static_cast<int>(i) < num_train ? Split::train : Split::test});
    return out;
}

void save_dataset(const std::filesystem::path& dir, const SyntheticDataset& data,
                  std::span<const ManifestEntry> manifest)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    {
        auto out = open_output(dir / streams_file);
        write_streams(out, data.streams);
    }
    {
        auto out = open_output(dir / annotations_file);
        write_annotations(out, data.annotations);
    }
    auto out = open_output(dir / manifest_file);
    write_manifest(out, manifest);
}

void check_aligned(const SyntheticDataset& data)
{
    if (data.streams.size() != data.annotations.size())
        throw ValidationError("stream and annotation counts differ");
    for (std::size_t i = 0; i < data.streams.size(); ++i) {
        if (data.streams[i].video_id() != data.annotations[i].video_id)
            throw ValidationError("stream '" + data.streams[i].video_id() + "' has no aligned annotation");
        require_valid(data.annotations[i], data.streams[i].length());
    }
}

SyntheticDataset load_split(const std::filesystem::path& dir, Split split)
{
    auto in = open_input(dir / manifest_file);
    const auto manifest = read_manifest(in);

    std::map<std::string, FeatureStream> streams;
    for (auto& s : load_streams(dir / streams_file))
        streams.emplace(s.video_id(), std::move(s));
    std::map<std::string, VideoAnnotation> anns;
    for (auto& a : load_annotations(dir / annotations_file)) {
        if (anns.count(a.video_id))
            throw ValidationError("duplicate annotation for '" + a.video_id + "'");
        anns.emplace(a.video_id, std::move(a));
    }

    SyntheticDataset out;
    for (const auto& e : manifest) {
        if (e.split != split)
            continue;
        auto s = streams.find(e.video_id);
        auto a = anns.find(e.video_id);
        if (s == streams.end() || a == anns.end())
            throw ValidationError("manifest lists '" + e.video_id + "' without stream or annotation");
        out.streams.push_back(s->second);
        out.annotations.push_back(a->second);
    }
    check_aligned(out);
    return out;
}

}  // namespace mdls
