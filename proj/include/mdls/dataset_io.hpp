#pragma once

// Line-delimited JSON file formats for streams, annotations and split
// manifests. One record per line, UTF-8.
//
//   streams:      {"video_id": "...", "t": 1, "visual": [...], "audio": [...]}
//   annotations:  {"video_id": "...", "label": "neutral"|"misinformation",
//                  "spans": [{"start": s, "end": e}, ...]}
//   manifest:     {"video_id": "...", "split": "train"|"test"}

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdls/core.hpp"
#include "mdls/stream_sim.hpp"

namespace mdls {

enum class Split { train, test };

struct ManifestEntry {
    std::string video_id;
    Split split = Split::train;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::string_view to_string(Split split);

void write_streams(std::ostream& out, std::span<const FeatureStream> streams);
/// Streams in order of first appearance of each video_id.
std::vector<FeatureStream> read_streams(std::istream& in);
std::vector<FeatureStream> load_streams(const std::filesystem::path& path);
/// Exactly one video; throws ValidationError when the file holds several.
FeatureStream load_stream(const std::filesystem::path& path);

void write_annotations(std::ostream& out, std::span<const VideoAnnotation> anns);
std::vector<VideoAnnotation> read_annotations(std::istream& in);
std::vector<VideoAnnotation> load_annotations(const std::filesystem::path& path);

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(std::istream& in);

// Dataset directory layout used by the CLI.
inline constexpr const char* streams_file = "streams.jsonl";
inline constexpr const char* annotations_file = "annotations.jsonl";
inline constexpr const char* manifest_file = "manifest.jsonl";

/// Assigns the first `num_train` videos to train and the rest to test.
std::vector<ManifestEntry> make_manifest(const SyntheticDataset& data, int num_train);

void save_dataset(const std::filesystem::path& dir, const SyntheticDataset& data,
                  std::span<const ManifestEntry> manifest);

/// Streams and annotations of one split, aligned by position and checked
/// against each other (ids, span bounds).
SyntheticDataset load_split(const std::filesystem::path& dir, Split split);

/// Cross-checks stream/annotation alignment; throws ValidationError.
void check_aligned(const SyntheticDataset& data);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace mdls
