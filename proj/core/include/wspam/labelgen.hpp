#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wspam/classifier.hpp"
#include "wspam/manifest.hpp"
#include "wspam/random.hpp"
#include "wspam/scores.hpp"
#include "wspam/trec.hpp"
#include "wspam/warc.hpp"

namespace wspam {

/// Lowercases scheme and host, drops the fragment, keeps the query.
/// A missing path becomes "/".
std::string normalize_url(std::string_view url);

/// Lowercased host of an absolute URL (no port, no user info); empty when
/// the URL has no authority.
std::string url_host(std::string_view url);

/// host -> label, hosts lowercase and unique.
using HostLabelSet = std::unordered_map<std::string, Label>;

/// "<host> <spam|nonspam>" per line.
HostLabelSet parse_host_labels(std::istream& in, const std::string& source_name = "<host labels>");
HostLabelSet read_host_labels(const std::filesystem::path& path);

/// Normalized URLs, one per input line.
using UrlList = std::set<std::string>;

UrlList parse_url_list(std::istream& in);
UrlList read_url_list(const std::filesystem::path& path);

/// normalized url -> doc id, from "<url>\t<doc_id>" lines.
using CorpusIndex = std::unordered_map<std::string, std::string>;

CorpusIndex parse_corpus_index(std::istream& in, const std::string& source_name = "<corpus index>");
CorpusIndex read_corpus_index(const std::filesystem::path& path);

/// A label without page bytes; the bytes are attached later by a corpus
/// scan (see attach_references).
struct LabeledDoc {
    std::string doc_id;
    Label label = Label::nonspam;
    ExampleSource source = ExampleSource::other;

    friend bool operator==(const LabeledDoc&, const LabeledDoc&) = default;
};

/// For each labeled host, the first page in stream order whose byte length
/// is at least `min_size`, carrying the host's label. Hosts without such a
/// page are absent. Output follows stream order.
std::vector<TrainingExample> select_host_examples(const HostLabelSet& labels, const PageSource& pages,
                                                  std::size_t min_size = 5000);

/// The top `top_n` documents of every topic, labeled spam. A document
/// retrieved for several topics is emitted once (first occurrence).
std::vector<LabeledDoc> honeypot_spam_labels(const RankedRun& run, std::size_t top_n = 10);

/// Directory URLs intersected with the corpus, then a seeded uniform
/// sample (without replacement) of `sample` documents labeled nonspam.
/// Throws InvalidArgument when the intersection is empty.
std::vector<LabeledDoc> directory_nonspam_labels(const UrlList& directory, const CorpusIndex& corpus_index,
                                                 std::size_t sample = 10000, std::uint64_t seed = 1);

/// Effective labels from an adjudication log: the last judgment per
/// (task, assessor), "unknown" dropped. Malformed lines throw DataError.
std::vector<LabeledDoc> import_manual_labels(std::istream& log, const std::string& source_name = "<adjudication log>");
std::vector<LabeledDoc> import_manual_labels(const std::filesystem::path& log);

/// Drops every document that appears with both labels (warning once per
/// document) and repeated identical (doc, label) pairs from different
/// generators, keeping the first.
std::vector<LabeledDoc> resolve_conflicts(std::span<const LabeledDoc> docs);

/// Scans archives for the labeled documents and returns manifest entries
/// pointing at them, in label order. Ids not found warn and are dropped.
std::vector<ManifestEntry> attach_references(std::span<const LabeledDoc> docs,
                                             std::span<const std::filesystem::path> archives);

}  // namespace wspam
