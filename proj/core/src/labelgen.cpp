#include "wspam/labelgen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <unordered_set>

#include "wspam/adjudication_log.hpp"
#include "wspam/diagnostics.hpp"
#include "wspam/error.hpp"
#include "wspam/io.hpp"

namespace wspam {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct UrlParts {
    std::string_view scheme;
    std::string_view userinfo;
    std::string_view host;
    std::string_view port;  // including ':'
    std::string_view rest;  // path and query, fragment removed
    bool has_authority = false;
};

UrlParts split_url(std::string_view url) {
    UrlParts p;
    url = trim(url);
    if (auto hash = url.find('#'); hash != std::string_view::npos) url = url.substr(0, hash);
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) {
        p.rest = url;
        return p;
    }
    p.scheme = url.substr(0, sep);
    p.has_authority = true;
    std::string_view tail = url.substr(sep + 3);
    const auto slash = tail.find_first_of("/?");
    std::string_view authority = tail.substr(0, slash);
    p.rest = slash == std::string_view::npos ? std::string_view{} : tail.substr(slash);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
        p.userinfo = authority.substr(0, at + 1);
        authority = authority.substr(at + 1);
    }
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']', colon) == std::string_view::npos) {
        p.port = authority.substr(colon);
        authority = authority.substr(0, colon);
    }
    p.host = authority;
    return p;
}

}  // namespace

std::string normalize_url(std::string_view url) {
    const UrlParts p = split_url(url);
    if (!p.has_authority) return std::string(p.rest);
    std::string out = lower(p.scheme);
    out += "://";
    out += p.userinfo;
    out += lower(p.host);
    out += p.port;
    if (p.rest.empty() || p.rest.front() == '?') out += '/';
    out += p.rest;
    return out;
}

std::string url_host(std::string_view url) {
    const UrlParts p = split_url(url);
    return p.has_authority ? lower(p.host) : std::string{};
}

HostLabelSet parse_host_labels(std::istream& in, const std::string& source_name) {
    HostLabelSet out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto f = split_whitespace(chomp(raw));
        if (f.empty() || f.front().starts_with('#')) continue;
        Label label{};
        if (f.size() != 2 || !parse_label(f[1], label)) {
            throw DataError("expected '<host> <spam|nonspam>'", source_name, line_no);
        }
        if (!out.emplace(lower(f[0]), label).second) {
            throw DataError("host " + lower(f[0]) + " labeled twice", source_name, line_no);
        }
    }
    return out;
}

HostLabelSet read_host_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_host_labels(in, path.string());
}

UrlList parse_url_list(std::istream& in) {
    UrlList out;
    std::string raw;
    while (std::getline(in, raw)) {
        const auto line = trim(raw);
        if (!line.empty()) out.insert(normalize_url(line));
    }
    return out;
}

UrlList read_url_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_url_list(in);
}

CorpusIndex parse_corpus_index(std::istream& in, const std::string& source_name) {
    CorpusIndex out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = chomp(raw);
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 2 || f[0].empty() || f[1].empty()) {
            throw DataError("expected '<url>\\t<doc_id>'", source_name, line_no);
        }
        out.insert_or_assign(normalize_url(f[0]), std::string(f[1]));
    }
    return out;
}

CorpusIndex read_corpus_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_corpus_index(in, path.string());
}

std::vector<TrainingExample> select_host_examples(const HostLabelSet& labels, const PageSource& pages,
                                                  std::size_t min_size) {
    std::vector<TrainingExample> out;
    std::unordered_set<std::string> done;
    while (done.size() < labels.size()) {
        auto page = pages();
        if (!page) break;
        if (page->bytes.size() < min_size) continue;
        std::string host = url_host(page->target_uri);
        auto it = labels.find(host);
        if (it == labels.end() || !done.insert(std::move(host)).second) continue;
        out.push_back({page->doc_id, std::move(page->bytes), it->second, ExampleSource::uk2006});
    }
    return out;
}

std::vector<LabeledDoc> honeypot_spam_labels(const RankedRun& run, std::size_t top_n) {
    std::vector<LabeledDoc> out;
    std::unordered_set<std::string> seen;
    for (const auto& topic : run.topics) {
        if (topic.docs.size() < top_n) {
            warn("topic " + topic.topic + " has only " + std::to_string(topic.docs.size()) + " results; taking all");
        }
        const std::size_t n = std::min(top_n, topic.docs.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (seen.insert(topic.docs[i].doc_id).second) {
                out.push_back({topic.docs[i].doc_id, Label::spam, ExampleSource::britney});
            }
        }
    }
    return out;
}

std::vector<LabeledDoc> directory_nonspam_labels(const UrlList& directory, const CorpusIndex& corpus_index,
                                                 std::size_t sample, std::uint64_t seed) {
    std::vector<std::string> pool;
    std::unordered_set<std::string> seen;
    for (const auto& url : directory) {
        auto it = corpus_index.find(normalize_url(url));
        if (it != corpus_index.end() && seen.insert(it->second).second) pool.push_back(it->second);
    }
    if (pool.empty()) throw InvalidArgument("directory URLs do not intersect the corpus index");
    const std::size_t n = std::min(sample, pool.size());
    SeededRandom rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<LabeledDoc> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({std::move(pool[i]), Label::nonspam, ExampleSource::britney});
    return out;
}

std::vector<LabeledDoc> import_manual_labels(std::istream& log, const std::string& source_name) {
    std::vector<AdjudicationRecord> effective;
    std::map<std::pair<std::string, std::string>, std::size_t> slot;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(log, raw)) {
        ++line_no;
        if (chomp(raw).empty()) continue;
        auto rec = parse_log_line(raw);
        if (!rec) throw DataError("malformed adjudication record", source_name, line_no);
        auto [it, inserted] = slot.try_emplace({rec->task_id, rec->assessor}, effective.size());
        if (inserted) {
            effective.push_back(std::move(*rec));
        } else {
            effective[it->second] = std::move(*rec);
        }
    }
    std::vector<LabeledDoc> out;
    for (auto& r : effective) {
        if (r.label == Verdict::unknown) continue;
        out.push_back({std::move(r.doc_id), r.label == Verdict::spam ? Label::spam : Label::nonspam,
                       ExampleSource::manual});
    }
    return out;
}

std::vector<LabeledDoc> import_manual_labels(const std::filesystem::path& log) {
    std::ifstream in(log, std::ios::binary);
    if (!in) throw IoError("cannot open " + log.string());
    return import_manual_labels(in, log.string());
}

std::vector<LabeledDoc> resolve_conflicts(std::span<const LabeledDoc> docs) {
    std::unordered_map<std::string, unsigned> labels_seen;  // bit per label
    for (const auto& d : docs) labels_seen[d.doc_id] |= 1u << static_cast<unsigned>(d.label);
    std::vector<LabeledDoc> out;
    std::unordered_set<std::string> emitted;
    for (const auto& d : docs) {
        if (labels_seen[d.doc_id] == 3u) {
            if (emitted.insert(d.doc_id).second) {
                warn("document " + d.doc_id + " is labeled both spam and nonspam; dropping it");
            }
            continue;
        }
        if (emitted.insert(d.doc_id).second) out.push_back(d);
    }
    return out;
}

std::vector<ManifestEntry> attach_references(std::span<const LabeledDoc> docs,
                                             std::span<const std::filesystem::path> archives) {
    std::unordered_map<std::string, std::string> refs;
    for (const auto& d : docs) refs.emplace(d.doc_id, std::string{});
    std::size_t found = 0;
    for (const auto& archive : archives) {
        if (found == refs.size()) break;
        WarcReader reader(archive);
        while (found < refs.size()) {
            auto rec = reader.next();
            if (!rec) break;
            auto it = refs.find(rec->doc_id);
            if (it == refs.end() || !it->second.empty()) continue;
            it->second = warc_ref(archive, rec->resume);
            ++found;
        }
    }
    std::vector<ManifestEntry> out;
    for (const auto& d : docs) {
        const std::string& ref = refs[d.doc_id];
        if (ref.empty()) {
            warn("labeled document " + d.doc_id + " not found in the corpus; dropping it");
            continue;
        }
        out.push_back({d.label, d.source, d.doc_id, ref});
    }
    return out;
}

}  // namespace wspam
