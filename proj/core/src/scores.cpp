#include "wspam/scores.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include "external_sort.hpp"
#include "wspam/error.hpp"
#include "wspam/io.hpp"

namespace wspam {

namespace {

bool by_id(const ScoreEntry& a, const ScoreEntry& b) { return a.doc_id < b.doc_id; }

int percentile_of(std::uint64_t at_least, std::uint64_t n) {
    return static_cast<int>((100 * at_least) / n);
}

}  // namespace

ScoreTable::ScoreTable(std::vector<ScoreEntry> entries, std::string model_id)
    : entries_(std::move(entries)), model_id_(std::move(model_id)) {
    std::sort(entries_.begin(), entries_.end(), by_id);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!std::isfinite(entries_[i].score)) {
            throw InvalidArgument("non-finite score for " + entries_[i].doc_id);
        }
        if (i > 0 && entries_[i].doc_id == entries_[i - 1].doc_id) {
            throw DataError("duplicate doc id " + entries_[i].doc_id);
        }
    }
}

std::optional<double> ScoreTable::find(std::string_view doc_id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), doc_id,
                               [](const ScoreEntry& e, std::string_view id) { return e.doc_id < id; });
    if (it == entries_.end() || it->doc_id != doc_id) return std::nullopt;
    return it->score;
}

PercentileTable::PercentileTable(std::vector<PercentileEntry> entries, std::uint64_t corpus_size)
    : entries_(std::move(entries)), corpus_size_(corpus_size) {
    std::sort(entries_.begin(), entries_.end(),
              [](const PercentileEntry& a, const PercentileEntry& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].percentile < 0 || entries_[i].percentile > 100) {
            throw InvalidArgument("percentile out of range for " + entries_[i].doc_id);
        }
        if (i > 0 && entries_[i].doc_id == entries_[i - 1].doc_id) {
            throw DataError("duplicate doc id " + entries_[i].doc_id);
        }
    }
}

std::optional<int> PercentileTable::find(std::string_view doc_id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), doc_id,
                               [](const PercentileEntry& e, std::string_view id) { return e.doc_id < id; });
    if (it == entries_.end() || it->doc_id != doc_id) return std::nullopt;
    return it->percentile;
}

ScoreTable score_corpus(const WeightVector& w, const PageSource& pages, const ScoreOptions& options) {
    const unsigned threads = std::max(1u, options.threads);
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size) * threads;
    std::vector<ScoreEntry> out;
    std::vector<PageRecord> round;
    for (;;) {
        round.clear();
        while (round.size() < batch) {
            auto rec = pages();
            if (!rec) break;
            round.push_back(std::move(*rec));
        }
        if (round.empty()) break;
        const std::size_t base = out.size();
        out.resize(base + round.size());
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                out[base + i] = {round[i].doc_id, w.spamminess(as_bytes(round[i].bytes))};
            }
        };
        if (threads == 1 || round.size() < 2) {
            work(0, round.size());
        } else {
            const std::size_t per = (round.size() + threads - 1) / threads;
            std::vector<std::jthread> pool;
            for (std::size_t begin = 0; begin < round.size(); begin += per) {
                pool.emplace_back(work, begin, std::min(round.size(), begin + per));
            }
        }
    }
    return ScoreTable(std::move(out), options.model_id);
}

ScoreTable score_corpus(const WeightVector& w, std::span<const PageRecord> pages, const ScoreOptions& options) {
    std::size_t i = 0;
    return score_corpus(
        w,
        [&]() -> std::optional<PageRecord> {
            if (i == pages.size()) return std::nullopt;
            return pages[i++];
        },
        options);
}

PercentileTable percentile_rank(const ScoreTable& scores) {
    const auto& entries = scores.entries();
    if (entries.empty()) throw InvalidArgument("cannot rank an empty score table");
    std::vector<std::size_t> order(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return entries[a].score > entries[b].score; });

    const std::uint64_t n = entries.size();
    std::vector<PercentileEntry> out(entries.size());
    std::size_t group = 0;
    while (group < order.size()) {
        std::size_t end = group;
        while (end < order.size() && entries[order[end]].score == entries[order[group]].score) ++end;
        const int pct = percentile_of(end, n);
        for (std::size_t i = group; i < end; ++i) out[order[i]] = {entries[order[i]].doc_id, pct};
        group = end;
    }
    return PercentileTable(std::move(out), n);
}

ScoreTable fuse(std::span<const ScoreTable> tables) {
    if (tables.size() < 2) throw InvalidArgument("fusion needs at least two score tables");
    const std::size_t n = tables.front().size();
    bool aligned = true;
    for (const auto& t : tables) {
        if (t.size() != n) {
            aligned = false;
            break;
        }
    }
    for (std::size_t i = 0; aligned && i < n; ++i) {
        for (const auto& t : tables) {
            if (t.entries()[i].doc_id != tables.front().entries()[i].doc_id) {
                aligned = false;
                break;
            }
        }
    }
    if (!aligned) {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : tables) {
            for (const auto& e : t.entries()) ++counts[e.doc_id];
        }
        std::string sample;
        std::size_t missing = 0;
        for (const auto& [id, c] : counts) {
            if (c == tables.size()) continue;
            if (++missing <= 5) sample += (sample.empty() ? "" : ", ") + id;
        }
        throw DataError("score tables cover different documents; " + std::to_string(missing) +
                        " ids are missing from some table, e.g. " + sample);
    }

    std::vector<ScoreEntry> out(n);
    std::vector<double> values(tables.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < tables.size(); ++k) values[k] = tables[k].entries()[i].score;
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        out[i] = {tables.front().entries()[i].doc_id, sum / static_cast<double>(values.size())};
    }
    std::vector<std::string> ids;
    for (const auto& t : tables) ids.push_back(t.model_id().empty() ? std::string("?") : t.model_id());
    std::sort(ids.begin(), ids.end());
    std::string model_id = "fusion(";
    for (std::size_t k = 0; k < ids.size(); ++k) model_id += (k ? "," : "") + ids[k];
    model_id += ")";
    return ScoreTable(std::move(out), std::move(model_id));
}

void write_scores(std::ostream& out, const ScoreTable& table) {
    for (const auto& e : table.entries()) out << e.doc_id << ' ' << format_double_sig(e.score, 6) << '\n';
}

void write_scores(const std::filesystem::path& path, const ScoreTable& table) {
    AtomicFile file(path);
    write_scores(file.stream(), table);
    file.commit();
}

namespace {

bool parse_score_line(std::string_view line, ScoreEntry& e) {
    const auto fields = split_whitespace(line);
    if (fields.size() != 2) return false;
    e.doc_id = fields[0];
    return parse_double(fields[1], e.score);
}

bool parse_percentile_line(std::string_view line, PercentileEntry& e) {
    const auto fields = split_whitespace(line);
    long long pct = 0;
    if (fields.size() != 2 || !parse_int(fields[0], pct) || pct < 0 || pct > 100) return false;
    e.percentile = static_cast<int>(pct);
    e.doc_id = fields[1];
    return true;
}

}  // namespace

ScoreTable parse_scores(std::istream& in, const std::string& source_name) {
    std::vector<ScoreEntry> entries;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = chomp(raw);
        if (line.empty()) continue;
        ScoreEntry e;
        if (!parse_score_line(line, e)) throw DataError("expected '<doc_id> <score>'", source_name, line_no);
        entries.push_back(std::move(e));
    }
    try {
        return ScoreTable(std::move(entries));
    } catch (const DataError& err) {
        throw DataError(err.what(), source_name);
    }
}

ScoreTable read_scores(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    ScoreTable t = parse_scores(in, path.string());
    return ScoreTable(std::vector<ScoreEntry>(t.entries()), path.stem().string());
}

void write_percentiles(std::ostream& out, const PercentileTable& table) {
    for (const auto& e : table.entries()) out << e.percentile << ' ' << e.doc_id << '\n';
}

void write_percentiles(const std::filesystem::path& path, const PercentileTable& table) {
    AtomicFile file(path);
    write_percentiles(file.stream(), table);
    file.commit();
}

PercentileTable parse_percentiles(std::istream& in, const std::string& source_name,
                                  const std::unordered_set<std::string>* wanted) {
    std::vector<PercentileEntry> entries;
    std::string raw;
    std::size_t line_no = 0;
    std::uint64_t total = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = chomp(raw);
        if (line.empty()) continue;
        PercentileEntry e;
        if (!parse_percentile_line(line, e)) {
            throw DataError("expected '<percentile> <doc_id>' with percentile in [0, 100]", source_name, line_no);
        }
        ++total;
        if (wanted && !wanted->contains(e.doc_id)) continue;
        entries.push_back(std::move(e));
    }
    try {
        return PercentileTable(std::move(entries), total);
    } catch (const DataError& err) {
        throw DataError(err.what(), source_name);
    }
}

PercentileTable read_percentiles(const std::filesystem::path& path, const std::unordered_set<std::string>* wanted) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_percentiles(in, path.string(), wanted);
}

namespace {

struct ScoreCodec {
    static void write(std::ostream& out, const ScoreEntry& e) {
        out.write(reinterpret_cast<const char*>(&e.score), sizeof e.score);
        detail::write_string(out, e.doc_id);
    }
    static bool read(std::istream& in, ScoreEntry& e) {
        if (!in.read(reinterpret_cast<char*>(&e.score), sizeof e.score)) return false;
        return detail::read_string(in, e.doc_id);
    }
};

struct SpamFirst {
    bool operator()(const ScoreEntry& a, const ScoreEntry& b) const {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    }
};

struct PercentileCodec {
    static void write(std::ostream& out, const PercentileEntry& e) {
        out.put(static_cast<char>(e.percentile));
        detail::write_string(out, e.doc_id);
    }
    static bool read(std::istream& in, PercentileEntry& e) {
        char c = 0;
        if (!in.get(c)) return false;
        e.percentile = static_cast<unsigned char>(c);
        return detail::read_string(in, e.doc_id);
    }
};

struct ById {
    bool operator()(const PercentileEntry& a, const PercentileEntry& b) const { return a.doc_id < b.doc_id; }
};

}  // namespace

std::uint64_t percentile_rank_file(const std::filesystem::path& scores, const std::filesystem::path& output,
                                   const ExternalSortOptions& options) {
    std::ifstream in(scores, std::ios::binary);
    if (!in) throw IoError("cannot open " + scores.string());
    detail::TempDir tmp(options.temp_dir);

    detail::ExternalSorter<ScoreEntry, ScoreCodec, SpamFirst> by_score(options.max_in_memory, tmp.path(), "score");
    std::string raw;
    std::size_t line_no = 0;
    std::uint64_t n = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = chomp(raw);
        if (line.empty()) continue;
        ScoreEntry e;
        if (!parse_score_line(line, e)) throw DataError("expected '<doc_id> <score>'", scores.string(), line_no);
        by_score.add(std::move(e));
        ++n;
    }
    if (n == 0) throw InvalidArgument("cannot rank an empty score file");
    by_score.finish();

    // Walk descending scores; a tie group's percentile is known only when
    // the group ends, so its ids are buffered (and spilled if huge).
    detail::ExternalSorter<PercentileEntry, PercentileCodec, ById> by_id_sorter(options.max_in_memory, tmp.path(),
                                                                             "pct");
    std::vector<std::string> group;
    const auto group_file = tmp.path() / "group.spill";
    std::ofstream group_spill;
    std::uint64_t spilled = 0;
    std::uint64_t seen = 0;
    double group_score = 0.0;

    auto flush_group = [&]() {
        const int pct = percentile_of(seen, n);
        if (spilled > 0) {
            group_spill.close();
            std::ifstream back(group_file, std::ios::binary);
            std::string id;
            while (detail::read_string(back, id)) by_id_sorter.add({id, pct});
            back.close();
            group_spill.open(group_file, std::ios::binary | std::ios::trunc);
            spilled = 0;
        }
        for (auto& id : group) by_id_sorter.add({std::move(id), pct});
        group.clear();
    };

    ScoreEntry e;
    while (by_score.next(e)) {
        if (seen > 0 && e.score != group_score) flush_group();
        group_score = e.score;
        ++seen;
        group.push_back(std::move(e.doc_id));
        if (group.size() >= options.max_in_memory) {
            if (!group_spill.is_open()) group_spill.open(group_file, std::ios::binary | std::ios::trunc);
            for (const auto& id : group) detail::write_string(group_spill, id);
            spilled += group.size();
            group.clear();
        }
    }
    flush_group();
    by_id_sorter.finish();

    AtomicFile file(output);
    PercentileEntry p;
    std::string previous;
    bool first = true;
    while (by_id_sorter.next(p)) {
        if (!first && p.doc_id == previous) throw DataError("duplicate doc id " + p.doc_id, scores.string());
        file.stream() << p.percentile << ' ' << p.doc_id << '\n';
        previous = p.doc_id;
        first = false;
    }
    file.commit();
    return n;
}

}  // namespace wspam
