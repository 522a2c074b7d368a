#include "wspam/adjudicator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wspam/diagnostics.hpp"
#include "wspam/io.hpp"
#include "wspam/random.hpp"

namespace wspam {

using json = nlohmann::json;
using TimePoint = std::chrono::system_clock::time_point;

// ---------------------------------------------------------------------------
// Page stores

void MemoryPageStore::add(std::string doc_id, std::string block) {
    pages_.insert_or_assign(std::move(doc_id), std::move(block));
}

std::vector<std::string> MemoryPageStore::doc_ids() const {
    std::vector<std::string> out;
    out.reserve(pages_.size());
    for (const auto& [id, _] : pages_) out.push_back(id);
    return out;
}

bool MemoryPageStore::contains(std::string_view doc_id) const { return pages_.find(doc_id) != pages_.end(); }

std::string MemoryPageStore::block(std::string_view doc_id) const {
    auto it = pages_.find(doc_id);
    if (it == pages_.end()) throw NotFoundError("no page for document " + std::string(doc_id));
    return it->second;
}

WarcPageStore::WarcPageStore(std::vector<std::filesystem::path> archives) {
    for (const auto& path : archives) {
        WarcReader reader(path);
        while (auto rec = reader.next()) {
            index_.try_emplace(rec->doc_id, Location{path, rec->resume});
        }
    }
}

std::vector<std::string> WarcPageStore::doc_ids() const {
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [id, _] : index_) out.push_back(id);
    return out;
}

bool WarcPageStore::contains(std::string_view doc_id) const { return index_.find(doc_id) != index_.end(); }

std::string WarcPageStore::block(std::string_view doc_id) const {
    auto it = index_.find(doc_id);
    if (it == index_.end()) throw NotFoundError("no page for document " + std::string(doc_id));
    const PageRecord rec = fetch_record(it->second.archive, it->second.resume, doc_id);
    return std::string(rec.block());
}

// ---------------------------------------------------------------------------
// Sanitizing

std::string_view http_body(std::string_view block) noexcept {
    if (!block.starts_with("HTTP/")) return block;
    const auto crlf = block.find("\r\n\r\n");
    const auto lf = block.find("\n\n");
    if (crlf != std::string_view::npos && (lf == std::string_view::npos || crlf < lf)) return block.substr(crlf + 4);
    if (lf != std::string_view::npos) return block.substr(lf + 2);
    return {};
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_name_char(char c) noexcept {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == ':';
}

// Position just past the '>' closing the tag that starts at `from`,
// honouring quoted attribute values; npos when unterminated.
std::size_t tag_end(std::string_view html, std::size_t from) noexcept {
    char quote = 0;
    for (std::size_t i = from; i < html.size(); ++i) {
        const char c = html[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            return i + 1;
        }
    }
    return std::string_view::npos;
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
    const std::string h = lower(hay.substr(std::min(from, hay.size())));
    const auto pos = h.find(needle);
    return pos == std::string::npos ? std::string_view::npos : pos + from;
}

bool dangerous_url(std::string_view value) {
    std::string compact;
    for (char c : value) {
        if (static_cast<unsigned char>(c) > 0x20 && c != '"' && c != '\'') {
            compact.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return compact.starts_with("javascript:") || compact.starts_with("vbscript:") ||
           compact.starts_with("data:text/html");
}

// Rebuilds the inside of a tag (between the name and the closing '>')
// without event handlers or script URLs.
std::string filter_attributes(std::string_view attrs) {
    std::string out;
    std::size_t i = 0;
    while (i < attrs.size()) {
        if (is_space(attrs[i]) || attrs[i] == '/') {
            out.push_back(attrs[i++]);
            continue;
        }
        const std::size_t name_start = i;
        while (i < attrs.size() && !is_space(attrs[i]) && attrs[i] != '=' && attrs[i] != '/') ++i;
        if (i == name_start) {
            ++i;
            continue;
        }
        const std::string_view name = attrs.substr(name_start, i - name_start);
        std::size_t j = i;
        while (j < attrs.size() && is_space(attrs[j])) ++j;
        std::string_view value;
        if (j < attrs.size() && attrs[j] == '=') {
            ++j;
            while (j < attrs.size() && is_space(attrs[j])) ++j;
            const std::size_t value_start = j;
            if (j < attrs.size() && (attrs[j] == '"' || attrs[j] == '\'')) {
                const char q = attrs[j++];
                while (j < attrs.size() && attrs[j] != q) ++j;
                if (j < attrs.size()) ++j;
            } else {
                while (j < attrs.size() && !is_space(attrs[j])) ++j;
            }
            value = attrs.substr(value_start, j - value_start);
            i = j;
        }
        const std::string lname = lower(name);
        if (lname.starts_with("on") || lname == "formaction" || dangerous_url(value)) continue;
        out.append(attrs.substr(name_start, i - name_start));
    }
    return out;
}

bool dropped_tag(const std::string& name) {
    static const char* const kDropped[] = {"iframe", "frame", "frameset", "object", "embed", "applet", "base"};
    return std::any_of(std::begin(kDropped), std::end(kDropped), [&](const char* t) { return name == t; });
}

}  // namespace

std::string sanitize_html(std::string_view html) {
    std::string out;
    out.reserve(html.size());
    std::size_t i = 0;
    while (i < html.size()) {
        const char c = html[i];
        if (c != '<') {
            out.push_back(c);
            ++i;
            continue;
        }
        if (html.substr(i).starts_with("<!--")) {
            const auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        std::size_t j = i + 1;
        const bool closing = j < html.size() && html[j] == '/';
        if (closing) ++j;
        const std::size_t name_start = j;
        while (j < html.size() && is_name_char(html[j])) ++j;
        if (j == name_start || !std::isalpha(static_cast<unsigned char>(html[name_start]))) {
            if (j < html.size() && (html[name_start] == '!' || html[name_start] == '?')) {
                // doctype or processing instruction: keep doctype, drop others
                const auto end = tag_end(html, i);
                if (html[name_start] == '!') out.append(html.substr(i, end == std::string_view::npos ? html.size() - i : end - i));
                i = end == std::string_view::npos ? html.size() : end;
                continue;
            }
            out.append("&lt;");
            ++i;
            continue;
        }
        const std::string name = lower(html.substr(name_start, j - name_start));
        const auto end = tag_end(html, j);
        if (end == std::string_view::npos) break;  // unterminated tag: drop the tail
        if (name == "script") {
            if (closing) {
                i = end;
                continue;
            }
            const auto close = find_ci(html, "</script", end);
            if (close == std::string_view::npos) break;
            const auto close_end = tag_end(html, close);
            i = close_end == std::string_view::npos ? html.size() : close_end;
            continue;
        }
        if (dropped_tag(name)) {
            i = end;
            continue;
        }
        const std::string_view inside = html.substr(j, end - 1 - j);
        if (name == "meta" && find_ci(inside, "http-equiv", 0) != std::string_view::npos) {
            i = end;
            continue;
        }
        out.push_back('<');
        if (closing) out.push_back('/');
        out.append(html.substr(name_start, j - name_start));
        if (!closing) out.append(filter_attributes(inside));
        out.push_back('>');
        i = end;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Service

std::string format_timestamp(TimePoint t) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
    auto secs = static_cast<std::time_t>(ms / 1000);
    long long frac = ms % 1000;
    if (frac < 0) {
        frac += 1000;
        --secs;
    }
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, frac);
    return buf;
}

double Progress::fraction(Verdict v) const noexcept {
    const std::size_t n = judgments();
    if (n == 0) return 0.0;
    const std::size_t count = v == Verdict::spam ? spam : v == Verdict::nonspam ? nonspam : unknown;
    return static_cast<double>(count) / static_cast<double>(n);
}

struct Adjudicator::TaskState {
    std::string doc_id;
    std::string topic;
    std::optional<std::string> lease_holder;
    TimePoint lease_expires{};
    std::map<std::string, std::pair<Verdict, std::int64_t>> judgments;  // by assessor, last wins
};

struct Adjudicator::Session {
    std::string id;
    std::vector<TaskState> tasks;
};

namespace {

const char* const kSessionsFile = "sessions.jsonl";
const char* const kLogFile = "judgments.log";

std::vector<std::size_t> draw_sample(std::size_t population, const SampleSpec& spec) {
    SeededRandom rng(spec.seed);
    std::vector<std::size_t> out;
    out.reserve(spec.size);
    if (spec.with_replacement) {
        for (std::size_t i = 0; i < spec.size; ++i) out.push_back(static_cast<std::size_t>(rng.below(population)));
        return out;
    }
    std::vector<std::size_t> perm(population);
    for (std::size_t i = 0; i < population; ++i) perm[i] = i;
    for (std::size_t i = 0; i < spec.size; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(population - i));
        std::swap(perm[i], perm[j]);
        out.push_back(perm[i]);
    }
    return out;
}

json spec_to_json(const std::string& id, const SampleSpec& spec) {
    json candidates = json::array();
    for (const auto& c : spec.candidates) candidates.push_back({{"doc_id", c.doc_id}, {"topic", c.topic}});
    return {{"session_id", id},
            {"size", spec.size},
            {"seed", spec.seed},
            {"with_replacement", spec.with_replacement},
            {"candidates", std::move(candidates)}};
}

bool ends_with_newline(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) return true;
    const auto size = static_cast<std::streamoff>(in.tellg());
    if (size == 0) return true;
    in.seekg(size - 1);
    return in.get() == '\n';
}

std::unique_ptr<std::ofstream> open_append(const std::filesystem::path& path) {
    auto out = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app);
    if (!*out) throw IoError("cannot open " + path.string() + " for appending");
    return out;
}

void append_line(std::ofstream& out, const std::string& line, const std::filesystem::path& path) {
    out << line << '\n';
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace

Adjudicator::Adjudicator(std::shared_ptr<const PageStore> pages, AdjudicatorOptions options)
    : pages_(std::move(pages)), options_(std::move(options)) {
    if (!pages_) throw InvalidArgument("adjudicator needs a page store");
    if (options_.data_dir.empty()) throw InvalidArgument("adjudicator needs a data directory");
    if (options_.lease_timeout.count() <= 0) throw InvalidArgument("lease timeout must be positive");
    std::error_code ec;
    std::filesystem::create_directories(options_.data_dir, ec);
    if (ec) throw IoError("cannot create " + options_.data_dir.string() + ": " + ec.message());

    const auto sessions_path = options_.data_dir / kSessionsFile;
    if (std::filesystem::exists(sessions_path)) {
        if (!ends_with_newline(sessions_path)) throw DataError("truncated final line", sessions_path.string(), 0);
        std::ifstream in(sessions_path, std::ios::binary);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (chomp(line).empty()) continue;
            try {
                const json j = json::parse(line);
                SampleSpec spec;
                spec.size = j.at("size").get<std::size_t>();
                spec.seed = j.at("seed").get<std::uint64_t>();
                spec.with_replacement = j.at("with_replacement").get<bool>();
                for (const auto& c : j.at("candidates")) {
                    spec.candidates.push_back({c.at("doc_id").get<std::string>(), c.at("topic").get<std::string>()});
                }
                materialize_locked(j.at("session_id").get<std::string>(), spec);
            } catch (const json::exception& e) {
                throw DataError(std::string("bad session record: ") + e.what(), sessions_path.string(), line_no);
            }
        }
    }

    const auto log = log_path();
    if (std::filesystem::exists(log)) {
        if (!ends_with_newline(log)) throw DataError("truncated final line", log.string(), 0);
        std::ifstream in(log, std::ios::binary);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (chomp(line).empty()) continue;
            auto rec = parse_log_line(chomp(line));
            if (!rec) throw DataError("malformed adjudication record", log.string(), line_no);
            if (!locate_locked(rec->task_id).first) {
                warn("adjudication log names unknown task " + rec->task_id + "; ignoring it");
                continue;
            }
            apply_locked(*rec);
        }
    }
    session_log_ = open_append(sessions_path);
    log_ = open_append(log);
}

Adjudicator::~Adjudicator() = default;

std::filesystem::path Adjudicator::log_path() const { return options_.data_dir / kLogFile; }

TimePoint Adjudicator::now() const {
    return options_.clock ? options_.clock() : std::chrono::system_clock::now();
}

std::string Adjudicator::materialize_locked(std::string id, const SampleSpec& spec) {
    if (session_index_.count(id)) throw DataError("duplicate session " + id, kSessionsFile, 0);
    auto session = std::make_unique<Session>();
    session->id = id;
    const auto indices = draw_sample(spec.candidates.size(), spec);
    session->tasks.reserve(indices.size());
    for (auto i : indices) session->tasks.push_back({spec.candidates[i].doc_id, spec.candidates[i].topic, {}, {}, {}});
    session_index_.emplace(id, sessions_.size());
    sessions_.push_back(std::move(session));
    return id;
}

std::string Adjudicator::create_session(const SampleSpec& spec_in) {
    SampleSpec spec = spec_in;
    if (spec.candidates.empty()) {
        for (auto& id : pages_->doc_ids()) spec.candidates.push_back({std::move(id), {}});
    } else {
        for (const auto& c : spec.candidates) {
            if (!pages_->contains(c.doc_id)) throw InvalidArgument("document " + c.doc_id + " is not in the page store");
        }
    }
    if (spec.candidates.empty()) throw InvalidArgument("cannot sample from an empty page source");
    if (!spec.with_replacement && spec.size > spec.candidates.size()) {
        throw InvalidArgument("sample of " + std::to_string(spec.size) + " without replacement exceeds the " +
                              std::to_string(spec.candidates.size()) + " candidate pages");
    }
    std::lock_guard lock(mutex_);
    std::string id = "s" + std::to_string(sessions_.size() + 1);
    append_line(*session_log_, spec_to_json(id, spec).dump(), options_.data_dir / kSessionsFile);
    return materialize_locked(std::move(id), spec);
}

Adjudicator::Session& Adjudicator::session_locked(std::string_view id) {
    auto it = session_index_.find(std::string(id));
    if (it == session_index_.end()) throw NotFoundError("unknown session " + std::string(id));
    return *sessions_[it->second];
}

const Adjudicator::Session& Adjudicator::session_locked(std::string_view id) const {
    return const_cast<Adjudicator*>(this)->session_locked(id);
}

std::pair<Adjudicator::Session*, std::size_t> Adjudicator::locate_locked(std::string_view task_id) {
    const auto dash = task_id.rfind('-');
    if (dash == std::string_view::npos) return {nullptr, 0};
    auto it = session_index_.find(std::string(task_id.substr(0, dash)));
    long long index = 0;
    if (it == session_index_.end() || !parse_int(task_id.substr(dash + 1), index) || index < 1) return {nullptr, 0};
    Session* s = sessions_[it->second].get();
    if (static_cast<std::size_t>(index) > s->tasks.size()) return {nullptr, 0};
    return {s, static_cast<std::size_t>(index - 1)};
}

std::pair<const Adjudicator::Session*, std::size_t> Adjudicator::locate_locked(std::string_view task_id) const {
    return const_cast<Adjudicator*>(this)->locate_locked(task_id);
}

AdjudicationTask Adjudicator::describe_locked(const Session& s, std::size_t index) const {
    const TaskState& t = s.tasks[index];
    AdjudicationTask out;
    out.task_id = s.id + "-" + std::to_string(index + 1);
    out.doc_id = t.doc_id;
    out.page_url = "/api/page/" + out.task_id;
    out.topic = t.topic;
    if (t.lease_holder && t.lease_expires > now()) {
        out.assigned_to = t.lease_holder;
        out.lease_expires = t.lease_expires;
    }
    return out;
}

std::optional<AdjudicationTask> Adjudicator::next_task(std::string_view session_id, std::string_view assessor) {
    if (assessor.empty() || !valid_log_field(assessor)) throw InvalidArgument("invalid assessor name");
    std::lock_guard lock(mutex_);
    Session& s = session_locked(session_id);
    const TimePoint t = now();
    std::size_t pick = s.tasks.size();
    for (std::size_t i = 0; i < s.tasks.size(); ++i) {
        const TaskState& task = s.tasks[i];
        if (task.judgments.empty() && task.lease_holder == assessor && task.lease_expires > t) {
            pick = i;
            break;
        }
    }
    if (pick == s.tasks.size()) {
        for (std::size_t i = 0; i < s.tasks.size(); ++i) {
            const TaskState& task = s.tasks[i];
            if (task.judgments.empty() && (!task.lease_holder || task.lease_expires <= t)) {
                pick = i;
                break;
            }
        }
    }
    if (pick == s.tasks.size()) return std::nullopt;
    TaskState& task = s.tasks[pick];
    task.lease_holder = std::string(assessor);
    task.lease_expires = t + options_.lease_timeout;
    return describe_locked(s, pick);
}

AdjudicationTask Adjudicator::task(std::string_view task_id) const {
    std::lock_guard lock(mutex_);
    auto [s, index] = locate_locked(task_id);
    if (!s) throw NotFoundError("unknown task " + std::string(task_id));
    return describe_locked(*s, index);
}

std::vector<AdjudicationTask> Adjudicator::tasks(std::string_view session_id) const {
    std::lock_guard lock(mutex_);
    const Session& s = session_locked(session_id);
    std::vector<AdjudicationTask> out;
    out.reserve(s.tasks.size());
    for (std::size_t i = 0; i < s.tasks.size(); ++i) out.push_back(describe_locked(s, i));
    return out;
}

std::string Adjudicator::page(std::string_view task_id) const {
    std::string doc_id;
    {
        std::lock_guard lock(mutex_);
        auto [s, index] = locate_locked(task_id);
        if (!s) throw NotFoundError("unknown task " + std::string(task_id));
        doc_id = s->tasks[index].doc_id;
    }
    const std::string block = pages_->block(doc_id);
    return sanitize_html(http_body(block));
}

void Adjudicator::apply_locked(const AdjudicationRecord& record) {
    auto [s, index] = locate_locked(record.task_id);
    TaskState& task = s->tasks[index];
    task.judgments[record.assessor] = {record.label, record.elapsed_ms};
    if (task.lease_holder == record.assessor) task.lease_holder.reset();
    auto [it, inserted] = effective_slot_.try_emplace({record.task_id, record.assessor}, effective_.size());
    if (inserted) {
        effective_.push_back(record);
    } else {
        effective_[it->second] = record;
    }
}

SubmitResult Adjudicator::submit(const SubmitRequest& request) {
    if (request.assessor.empty() || !valid_log_field(request.assessor)) throw InvalidArgument("invalid assessor name");
    if (request.elapsed_ms < 0) throw InvalidArgument("elapsed_ms must be non-negative");
    std::lock_guard lock(mutex_);
    auto [s, index] = locate_locked(request.task_id);
    if (!s) throw NotFoundError("unknown task " + request.task_id);
    TaskState& task = s->tasks[index];
    const TimePoint t = now();
    const bool duplicate = task.judgments.count(request.assessor) > 0;
    if (!duplicate && !request.override_lease) {
        if (task.lease_holder != request.assessor) {
            throw ConflictError("task " + request.task_id + " is not leased to " + request.assessor);
        }
        if (task.lease_expires <= t) throw ConflictError("lease on task " + request.task_id + " has expired");
    }
    AdjudicationRecord record{format_timestamp(t), request.task_id, task.doc_id, request.assessor, request.label,
                              request.elapsed_ms};
    append_line(*log_, format_log_line(record), log_path());
    apply_locked(record);
    if (duplicate) {
        warn("repeated judgment of " + request.task_id + " by " + request.assessor + "; the latest label wins");
    }
    return {std::move(record), duplicate};
}

Progress Adjudicator::progress(std::string_view session_id) const {
    std::lock_guard lock(mutex_);
    const Session& s = session_locked(session_id);
    Progress p;
    p.session_id = s.id;
    p.total = s.tasks.size();
    double elapsed = 0.0;
    for (const auto& task : s.tasks) {
        if (!task.judgments.empty()) ++p.judged;
        for (const auto& [_, j] : task.judgments) {
            switch (j.first) {
                case Verdict::spam: ++p.spam; break;
                case Verdict::nonspam: ++p.nonspam; break;
                case Verdict::unknown: ++p.unknown; break;
            }
            elapsed += static_cast<double>(j.second);
        }
    }
    p.remaining = p.total - p.judged;
    if (p.judgments() > 0) p.mean_elapsed_ms = elapsed / static_cast<double>(p.judgments());
    return p;
}

std::vector<LabeledDoc> Adjudicator::effective_labels() const {
    std::lock_guard lock(mutex_);
    std::vector<LabeledDoc> out;
    for (const auto& r : effective_) {
        if (r.label == Verdict::unknown) continue;
        out.push_back({r.doc_id, r.label == Verdict::spam ? Label::spam : Label::nonspam, ExampleSource::manual});
    }
    return out;
}

}  // namespace wspam
