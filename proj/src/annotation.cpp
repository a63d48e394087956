#include "mdls/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "json.hpp"
#include "mdls/dataset_io.hpp"

namespace mdls {

Label majority_vote(std::span<const Label> labels)
{
    if (labels.size() < 3 || labels.size() % 2 == 0)
        throw ValidationError("majority vote needs an odd number (>= 3) of labels, got " +
                              std::to_string(labels.size()));
    const auto misinfo = std::count(labels.begin(), labels.end(), Label::misinformation);
    return 2 * static_cast<std::size_t>(misinfo) > labels.size() ? Label::misinformation : Label::neutral;
}

double cohen_kappa(const AnnotatorLabels& a, const AnnotatorLabels& b)
{
    if (a.labels.empty())
        throw ValidationError("kappa needs at least one item");
    if (a.labels.size() != b.labels.size())
        throw ValidationError("annotators '" + a.annotator_id + "' and '" + b.annotator_id +
                              "' label different video sets");
    int agree = 0;
    int a_pos = 0;
    int b_pos = 0;
    // both maps are sorted by id, so a lockstep walk aligns items
    for (auto ia = a.labels.begin(), ib = b.labels.begin(); ia != a.labels.end(); ++ia, ++ib) {
        if (ia->first != ib->first)
            throw ValidationError("video '" + ia->first + "' is not labeled by both annotators");
        agree += ia->second == ib->second;
        a_pos += ia->second == Label::misinformation;
        b_pos += ib->second == Label::misinformation;
    }
    const double n = static_cast<double>(a.labels.size());
    const double p_o = agree / n;
    const double pa = a_pos / n;
    const double pb = b_pos / n;
    const double p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (p_e == 1.0)
        return p_o == 1.0 ? 1.0 : 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

double mean_pairwise_kappa(std::span<const AnnotatorLabels> raters)
{
    if (raters.size() < 2)
        throw ValidationError("pairwise kappa needs at least two annotators");
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < raters.size(); ++i)
        for (std::size_t j = i + 1; j < raters.size(); ++j, ++pairs)
            sum += cohen_kappa(raters[i], raters[j]);
    return sum / pairs;
}

AnnotatorLabels vote_labels(std::span<const AnnotatorLabels> raters)
{
    if (raters.empty())
        throw ValidationError("no annotators to vote over");
    AnnotatorLabels out{"majority", {}};
    std::vector<Label> votes(raters.size());
    for (const auto& [id, first_label] : raters.front().labels) {
        for (std::size_t r = 0; r < raters.size(); ++r) {
            auto it = raters[r].labels.find(id);
            if (it == raters[r].labels.end())
                throw ValidationError("video '" + id + "' missing from annotator '" + raters[r].annotator_id + "'");
            votes[r] = it->second;
        }
        out.labels.emplace(id, majority_vote(votes));
    }
    for (const auto& r : raters)
        if (r.labels.size() != out.labels.size())
            throw ValidationError("annotator '" + r.annotator_id + "' labels a different video set");
    return out;
}

double temporal_iou(const Span& a, const Span& b)
{
    const int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
    if (inter <= 0)
        return 0.0;
    const int uni = a.length() + b.length() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

ConsistencyReport pass_consistency(std::span<const Span> pass1, std::span<const Span> pass2, double threshold)
{
    ConsistencyReport r;
    r.threshold = threshold;
    const std::size_t total = std::max(pass1.size(), pass2.size());
    if (total == 0) {
        r.mean_iou = 1.0;
        r.warning = r.mean_iou < threshold;
        return r;
    }

    struct Candidate {
        double iou;
        std::size_t i, j;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < pass1.size(); ++i)
        for (std::size_t j = 0; j < pass2.size(); ++j)
            if (double iou = temporal_iou(pass1[i], pass2[j]); iou > 0.0)
                candidates.push_back({iou, i, j});
    // order by IoU, then by a key that does not depend on which pass is which
    auto key = [&](const Candidate& c) {
        const Span& a = pass1[c.i];
        const Span& b = pass2[c.j];
        return std::make_tuple(-c.iou, std::min(a.start, b.start), std::max(a.start, b.start),
                               std::min(a.end, b.end), std::max(a.end, b.end));
    };
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const Candidate& x, const Candidate& y) { return key(x) < key(y); });

    std::vector<bool> used1(pass1.size(), false), used2(pass2.size(), false);
    double sum = 0.0;
    for (const auto& c : candidates) {
        if (used1[c.i] || used2[c.j])
            continue;
        used1[c.i] = used2[c.j] = true;
        r.matches.push_back({static_cast<int>(c.i), static_cast<int>(c.j), c.iou});
        sum += c.iou;
    }
    for (std::size_t i = 0; i < pass1.size(); ++i)
        if (!used1[i])
            r.matches.push_back({static_cast<int>(i), -1, 0.0});
    for (std::size_t j = 0; j < pass2.size(); ++j)
        if (!used2[j])
            r.matches.push_back({-1, static_cast<int>(j), 0.0});
    r.mean_iou = sum / static_cast<double>(total);
    r.warning = r.mean_iou < threshold;
    return r;
}

using nlohmann::json;

AnnotatorLabels read_annotator_labels(std::istream& in)
{
    AnnotatorLabels out;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const json r = json::parse(line);
            const auto annotator = r.at("annotator_id").get<std::string>();
            if (first)
                out.annotator_id = annotator;
            else if (annotator != out.annotator_id)
                throw ParseError("mixed annotator ids in one label file", line_no);
            first = false;
            const auto id = r.at("video_id").get<std::string>();
            const Label label = parse_label(r.at("label").get<std::string>());
            if (!out.labels.emplace(id, label).second)
                throw ValidationError("duplicate video id '" + id + "' for annotator '" + annotator + "'");
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return out;
}

AnnotatorLabels load_annotator_labels(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_annotator_labels(in);
}

void write_annotator_labels(std::ostream& out, const AnnotatorLabels& labels)
{
    for (const auto& [id, label] : labels.labels) {
        json r = {{"annotator_id", labels.annotator_id}, {"video_id", id}, {"label", to_string(label)}};
        out << r.dump() << '\n';
    }
}

std::string consistency_json(const std::string& video_id, const ConsistencyReport& report)
{
    json matches = json::array();
    for (const auto& m : report.matches)
        matches.push_back({{"pass1", m.first}, {"pass2", m.second}, {"iou", m.iou}});
    nlohmann::ordered_json r = {{"video_id", video_id},
                                {"mean_iou", report.mean_iou},
                                {"threshold", report.threshold},
                                {"warning", report.warning},
                                {"matches", matches}};
    return r.dump();
}

}  // namespace mdls
