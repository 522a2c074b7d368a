#include <atomic>

#include "httplib.h"
#include "json.hpp"
#include "wspam/adjudicator.hpp"
#include "wspam/diagnostics.hpp"

namespace wspam {

using json = nlohmann::json;

namespace {

const char* const kPagePolicy =
    "default-src 'none'; img-src data:; style-src 'unsafe-inline'; font-src data:; form-action 'none'; sandbox";

json task_json(const AdjudicationTask& t) {
    json j{{"task_id", t.task_id},
           {"doc_id", t.doc_id},
           {"page_url", t.page_url},
           {"topic", t.topic.empty() ? json(nullptr) : json(t.topic)},
           {"assigned_to", t.assigned_to ? json(*t.assigned_to) : json(nullptr)}};
    j["lease_expires"] = t.lease_expires ? json(format_timestamp(*t.lease_expires)) : json(nullptr);
    return j;
}

json record_json(const AdjudicationRecord& r) {
    return {{"timestamp", r.timestamp}, {"task_id", r.task_id},       {"doc_id", r.doc_id},
            {"assessor", r.assessor},   {"label", to_string(r.label)}, {"elapsed_ms", r.elapsed_ms}};
}

json progress_json(const Progress& p) {
    return {{"session_id", p.session_id},
            {"total", p.total},
            {"judged", p.judged},
            {"remaining", p.remaining},
            {"spam", p.spam},
            {"nonspam", p.nonspam},
            {"unknown", p.unknown},
            {"judgments", p.judgments()},
            {"spam_fraction", p.fraction(Verdict::spam)},
            {"nonspam_fraction", p.fraction(Verdict::nonspam)},
            {"unknown_fraction", p.fraction(Verdict::unknown)},
            {"mean_elapsed_ms", p.mean_elapsed_ms}};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw InvalidArgument("request body must be a JSON object");
    return body;
}

template <typename T>
T field(const json& body, const char* name, T fallback) {
    auto it = body.find(name);
    if (it == body.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(std::string("field '") + name + "' has the wrong type");
    }
}

SampleSpec parse_sample_spec(const json& body) {
    SampleSpec spec;
    const auto size = field<long long>(body, "size", -1);
    if (size < 0) throw InvalidArgument("field 'size' must be a non-negative integer");
    spec.size = static_cast<std::size_t>(size);
    spec.seed = field<std::uint64_t>(body, "seed", 1);
    spec.with_replacement = field<bool>(body, "with_replacement", true);
    if (auto it = body.find("candidates"); it != body.end() && !it->is_null()) {
        if (!it->is_array()) throw InvalidArgument("field 'candidates' must be an array");
        for (const auto& c : *it) {
            if (!c.is_object()) throw InvalidArgument("candidates must be objects");
            const auto doc = field<std::string>(c, "doc_id", "");
            if (doc.empty()) throw InvalidArgument("candidate without doc_id");
            spec.candidates.push_back({doc, field<std::string>(c, "topic", "")});
        }
    }
    if (auto it = body.find("doc_ids"); it != body.end() && !it->is_null()) {
        if (!it->is_array()) throw InvalidArgument("field 'doc_ids' must be an array");
        for (const auto& d : *it) {
            if (!d.is_string()) throw InvalidArgument("doc_ids must be strings");
            spec.candidates.push_back({d.get<std::string>(), {}});
        }
    }
    return spec;
}

SubmitRequest parse_submit(const json& body, const Adjudicator& service) {
    SubmitRequest r;
    r.task_id = field<std::string>(body, "task_id", "");
    r.assessor = field<std::string>(body, "assessor", "");
    const auto label = field<std::string>(body, "label", "");
    const auto verdict = parse_verdict(label);
    if (!verdict) throw InvalidArgument("label must be spam, nonspam, or unknown");
    r.label = *verdict;
    r.elapsed_ms = field<std::int64_t>(body, "elapsed_ms", 0);
    r.override_lease = field<bool>(body, "override", false);
    if (r.task_id.empty()) throw InvalidArgument("missing task_id");
    const auto doc_id = field<std::string>(body, "doc_id", "");
    if (!doc_id.empty() && doc_id != service.task(r.task_id).doc_id) {
        throw InvalidArgument("doc_id does not match task " + r.task_id);
    }
    return r;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const NotFoundError& e) {
            send_json(res, 404, {{"error", e.what()}});
        } catch (const ConflictError& e) {
            send_json(res, 409, {{"error", e.what()}});
        } catch (const InvalidArgument& e) {
            send_json(res, 400, {{"error", e.what()}});
        } catch (const std::exception& e) {
            warn(std::string("request failed: ") + e.what());
            send_json(res, 500, {{"error", e.what()}});
        }
    };
}

}  // namespace

struct AdjudicatorServer::Impl {
    Adjudicator& service;
    ServerOptions options;
    httplib::Server server;
    std::atomic<bool> bound{false};

    Impl(Adjudicator& s, ServerOptions o) : service(s), options(std::move(o)) {}

    void routes() {
        server.Post("/api/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = service.create_session(parse_sample_spec(parse_body(req)));
                        send_json(res, 201, {{"session_id", id}, {"tasks", service.tasks(id).size()}});
                    }));
        server.Get(R"(/api/session/([^/]+)/next)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string assessor = req.get_param_value("assessor");
                       if (assessor.empty()) throw InvalidArgument("missing assessor parameter");
                       auto task = service.next_task(req.matches[1].str(), assessor);
                       if (!task) {
                           send_json(res, 200, {{"done", true}, {"task", nullptr}});
                       } else {
                           send_json(res, 200, {{"done", false}, {"task", task_json(*task)}});
                       }
                   }));
        server.Get(R"(/api/session/([^/]+)/progress)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, progress_json(service.progress(req.matches[1].str())));
                   }));
        server.Get(R"(/api/page/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string body = service.page(req.matches[1].str());
                       res.set_header("Content-Security-Policy", kPagePolicy);
                       res.set_header("X-Content-Type-Options", "nosniff");
                       res.set_header("Referrer-Policy", "no-referrer");
                       res.set_content(body, "text/html");
                   }));
        server.Post("/api/judgment", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const SubmitResult r = service.submit(parse_submit(parse_body(req), service));
                        json body = record_json(r.record);
                        body["duplicate"] = r.duplicate;
                        send_json(res, 200, body);
                    }));
        if (!options.ui_dir.empty() && !server.set_mount_point("/", options.ui_dir.string())) {
            throw IoError("cannot serve static files from " + options.ui_dir.string());
        }
    }
};

AdjudicatorServer::AdjudicatorServer(Adjudicator& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    impl_->routes();
}

AdjudicatorServer::~AdjudicatorServer() { stop(); }

int AdjudicatorServer::bind() {
    int port = impl_->options.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->options.host);
        if (port < 0) port = 0;
    } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
        port = 0;
    }
    if (port <= 0) {
        throw IoError("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    }
    impl_->bound = true;
    return port;
}

void AdjudicatorServer::serve() {
    if (!impl_->bound) throw InvalidArgument("serve() before bind()");
    impl_->server.listen_after_bind();
}

void AdjudicatorServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace wspam
