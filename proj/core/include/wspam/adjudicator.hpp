#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wspam/adjudication_log.hpp"
#include "wspam/error.hpp"
#include "wspam/labelgen.hpp"
#include "wspam/warc.hpp"

namespace wspam {

/// Unknown session or task.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Submission without a valid lease.
class ConflictError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Page stores

class PageStore {
public:
    virtual ~PageStore() = default;

    /// All doc ids, sorted.
    virtual std::vector<std::string> doc_ids() const = 0;
    virtual bool contains(std::string_view doc_id) const = 0;
    /// The record's content block (an HTTP response). Throws NotFoundError.
    virtual std::string block(std::string_view doc_id) const = 0;
};

class MemoryPageStore : public PageStore {
public:
    void add(std::string doc_id, std::string block);

    std::vector<std::string> doc_ids() const override;
    bool contains(std::string_view doc_id) const override;
    std::string block(std::string_view doc_id) const override;

private:
    std::map<std::string, std::string, std::less<>> pages_;
};

/// Indexes response records of the given archives once; page bytes are
/// re-read from disk on request. The first record wins for repeated ids.
class WarcPageStore : public PageStore {
public:
    explicit WarcPageStore(std::vector<std::filesystem::path> archives);

    std::vector<std::string> doc_ids() const override;
    bool contains(std::string_view doc_id) const override;
    std::string block(std::string_view doc_id) const override;

private:
    struct Location {
        std::filesystem::path archive;
        ResumePoint resume;
    };
    std::map<std::string, Location, std::less<>> index_;
};

/// Strips script-capable content from an HTML page: script, iframe,
/// frame, object, embed, and refresh meta elements, event-handler
/// attributes, and javascript: URLs.
std::string sanitize_html(std::string_view html);

/// Body of an HTTP response block (everything after the blank line), or
/// the whole block when it has no header section.
std::string_view http_body(std::string_view block) noexcept;

// ---------------------------------------------------------------------------
// Service

struct SampleCandidate {
    std::string doc_id;
    std::string topic;  // empty when not tied to a topic
};

struct SampleSpec {
    std::size_t size = 0;
    std::uint64_t seed = 1;
    bool with_replacement = true;
    /// Empty: every page in the store, in doc id order.
    std::vector<SampleCandidate> candidates;
};

struct AdjudicationTask {
    std::string task_id;  // "<session>-<index>", index from 1
    std::string doc_id;
    std::string page_url;
    std::string topic;
    std::optional<std::string> assigned_to;
    std::optional<std::chrono::system_clock::time_point> lease_expires;
};

struct SubmitRequest {
    std::string task_id;
    std::string assessor;
    Verdict label = Verdict::unknown;
    std::int64_t elapsed_ms = 0;
    bool override_lease = false;
};

struct SubmitResult {
    AdjudicationRecord record;
    bool duplicate = false;
};

struct Progress {
    std::string session_id;
    std::size_t total = 0;
    std::size_t judged = 0;  // tasks with at least one judgment
    std::size_t remaining = 0;
    std::size_t spam = 0;  // tallies over effective (task, assessor) judgments
    std::size_t nonspam = 0;
    std::size_t unknown = 0;
    double mean_elapsed_ms = 0.0;

    std::size_t judgments() const noexcept { return spam + nonspam + unknown; }
    double fraction(Verdict v) const noexcept;
};

using Clock = std::function<std::chrono::system_clock::time_point()>;

struct AdjudicatorOptions {
    std::filesystem::path data_dir;
    std::chrono::milliseconds lease_timeout = std::chrono::minutes(10);
    Clock clock;  // defaults to the system clock
};

/// Thread-safe adjudication service. State lives in `data_dir`:
/// sessions.jsonl holds one session spec per line and judgments.log the
/// append-only adjudication log. Reopening a directory replays both.
class Adjudicator {
public:
    Adjudicator(std::shared_ptr<const PageStore> pages, AdjudicatorOptions options);
    ~Adjudicator();

    Adjudicator(const Adjudicator&) = delete;
    Adjudicator& operator=(const Adjudicator&) = delete;

    /// Throws InvalidArgument for an empty source, unknown candidates, or a
    /// sample without replacement larger than the source.
    std::string create_session(const SampleSpec& spec);

    /// The assessor's current lease if it has one, else the earliest task
    /// neither judged nor leased, now leased to the assessor; nullopt when
    /// nothing is left to hand out.
    std::optional<AdjudicationTask> next_task(std::string_view session_id, std::string_view assessor);

    AdjudicationTask task(std::string_view task_id) const;
    std::vector<AdjudicationTask> tasks(std::string_view session_id) const;

    /// Sanitized HTML body of the task's page.
    std::string page(std::string_view task_id) const;

    /// Appends to the log. A repeat by the same assessor is accepted with a
    /// warning and supersedes the earlier label. Otherwise the assessor
    /// must hold an unexpired lease unless override_lease is set.
    SubmitResult submit(const SubmitRequest& request);

    Progress progress(std::string_view session_id) const;

    /// Effective non-unknown labels in first-judgment order, matching
    /// import_manual_labels over the log.
    std::vector<LabeledDoc> effective_labels() const;

    std::filesystem::path log_path() const;

private:
    struct Session;
    struct TaskState;

    Session& session_locked(std::string_view id);
    const Session& session_locked(std::string_view id) const;
    std::pair<Session*, std::size_t> locate_locked(std::string_view task_id);
    std::pair<const Session*, std::size_t> locate_locked(std::string_view task_id) const;
    std::string materialize_locked(std::string id, const SampleSpec& spec);
    void apply_locked(const AdjudicationRecord& record);
    AdjudicationTask describe_locked(const Session& s, std::size_t index) const;
    std::chrono::system_clock::time_point now() const;

    std::shared_ptr<const PageStore> pages_;
    AdjudicatorOptions options_;
    mutable std::mutex mutex_;
    std::vector<std::unique_ptr<Session>> sessions_;
    std::unordered_map<std::string, std::size_t> session_index_;
    std::vector<AdjudicationRecord> effective_;
    std::map<std::pair<std::string, std::string>, std::size_t> effective_slot_;
    std::unique_ptr<std::ofstream> log_;
    std::unique_ptr<std::ofstream> session_log_;
};

// ---------------------------------------------------------------------------
// HTTP front end

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds an ephemeral port
    std::filesystem::path ui_dir;  // optional static files mounted at /
};

/// JSON API over an Adjudicator:
///   POST /api/session                      -> {session_id, tasks}
///   GET  /api/session/{id}/next?assessor=  -> {done, task}
///   GET  /api/page/{task_id}               -> sanitized HTML
///   POST /api/judgment                     -> record
///   GET  /api/session/{id}/progress        -> counts
class AdjudicatorServer {
public:
    AdjudicatorServer(Adjudicator& service, ServerOptions options);
    ~AdjudicatorServer();

    /// Binds and returns the bound port. Throws IoError on failure.
    int bind();
    /// Serves until stop(); call bind() first.
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string format_timestamp(std::chrono::system_clock::time_point t);

}  // namespace wspam
