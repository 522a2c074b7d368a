#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wspam/classifier.hpp"
#include "wspam/warc.hpp"

namespace wspam {

/// One line of a training-example manifest:
///   label \t source \t doc_id \t ref
/// where ref locates the page bytes:
///   inline:<escaped text>          bytes given in place (\\ \t \n \r \xHH escapes)
///   warc:<archive>@<phys>,<dec>    a response record inside a WARC archive
///   file:<path> or a bare path     the whole file
/// Relative paths are resolved against the manifest's directory.
struct ManifestEntry {
    Label label = Label::nonspam;
    ExampleSource source = ExampleSource::other;
    std::string doc_id;
    std::string ref;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::string& source_name = "<manifest>");
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

std::string inline_ref(std::string_view bytes);
std::string warc_ref(const std::filesystem::path& archive, ResumePoint where);

/// Loads the bytes a ref points at.
std::string resolve_ref(std::string_view ref, std::string_view doc_id, const std::filesystem::path& base_dir = {});

/// Streams the manifest's examples in file order, loading one page at a time.
void for_each_example(const std::filesystem::path& manifest,
                      const std::function<void(const TrainingExample&)>& fn);

std::vector<TrainingExample> load_examples(const std::filesystem::path& manifest);

}  // namespace wspam
