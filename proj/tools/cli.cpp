#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <pthread.h>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "wspam/adjudicator.hpp"
#include "wspam/classifier.hpp"
#include "wspam/diagnostics.hpp"
#include "wspam/error.hpp"
#include "wspam/io.hpp"
#include "wspam/labelgen.hpp"
#include "wspam/manifest.hpp"
#include "wspam/rank_transform.hpp"
#include "wspam/scores.hpp"
#include "wspam/trec.hpp"
#include "wspam/warc.hpp"

namespace wspam {
namespace {

namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

unsigned default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Pages of several archives as one stream, with the running statistics.
class ArchiveStream {
public:
    explicit ArchiveStream(std::vector<fs::path> paths) : paths_(std::move(paths)) {}

    std::optional<PageRecord> next() {
        for (;;) {
            if (!reader_) {
                if (index_ == paths_.size()) return std::nullopt;
                reader_ = std::make_unique<WarcReader>(paths_[index_++]);
            }
            if (auto rec = reader_->next()) return rec;
            stats_ += reader_->stats();
            reader_.reset();
        }
    }

    PageSource source() {
        return [this] { return next(); };
    }

    const CorpusStats& stats() const noexcept { return stats_; }

private:
    std::vector<fs::path> paths_;
    std::size_t index_ = 0;
    std::unique_ptr<WarcReader> reader_;
    CorpusStats stats_;
};

void report_stats(std::ostream& err, const CorpusStats& s) {
    err << "pages " << s.pages << ", bytes " << s.bytes_read << ", malformed records " << s.malformed_records
        << ", skipped records " << s.skipped_records << '\n';
}

// Writes to `path`, or to `out` when the path is empty or "-".
template <typename F>
void emit(const std::string& path, std::ostream& out, F&& write) {
    if (path.empty() || path == "-") {
        write(out);
        return;
    }
    AtomicFile file{fs::path(path)};
    write(file.stream());
    file.commit();
}

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> grid;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const auto colon = item.find(':');
        long long a = 0;
        if (colon == std::string_view::npos) {
            if (!parse_int(item, a)) throw CLI::ValidationError("--grid", "bad grid item '" + std::string(item) + "'");
            grid.push_back(static_cast<int>(a));
        } else {
            // start:stop:step, stop inclusive
            const auto parts = item.substr(colon + 1);
            const auto colon2 = parts.find(':');
            long long b = 0;
            long long step = 0;
            if (colon2 == std::string_view::npos || !parse_int(item.substr(0, colon), a) ||
                !parse_int(parts.substr(0, colon2), b) || !parse_int(parts.substr(colon2 + 1), step) || step <= 0) {
                throw CLI::ValidationError("--grid", "bad grid range '" + std::string(item) + "'");
            }
            for (long long t = a; t <= b; t += step) grid.push_back(static_cast<int>(t));
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    for (int t : grid) {
        if (t < 0 || t > 100) throw CLI::ValidationError("--grid", "thresholds must lie in [0, 100]");
    }
    if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
    return grid;
}

PercentileTable percentiles_for(const std::string& path, std::span<const RankedRun> runs) {
    const auto wanted = retrieved_ids(runs);
    return read_percentiles(path, &wanted);
}

// ---------------------------------------------------------------------------
// Subcommands

struct TrainArgs {
    std::string examples;
    std::string model;
    std::string init;
    double delta = kDefaultLearningRate;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    WeightVector w = a.init.empty() ? WeightVector(a.delta) : load_model(a.init);
    const std::uint64_t before = w.trained_examples();
    for_each_example(a.examples, [&](const TrainingExample& ex) { train_update(w, ex); });
    if (w.trained_examples() == before) throw InvalidArgument("no training data in " + a.examples);
    save_model(w, a.model);
    out << "trained on " << (w.trained_examples() - before) << " examples\n";
    return 0;
}

struct ScoreArgs {
    std::string model;
    std::vector<std::string> corpus;
    std::string output;
    unsigned threads = default_threads();
    std::size_t batch = 512;
    std::string model_id;
};

int cmd_score(const ScoreArgs& a, std::ostream& err) {
    const WeightVector w = load_model(a.model);
    ArchiveStream pages({a.corpus.begin(), a.corpus.end()});
    ScoreOptions opts;
    opts.threads = a.threads;
    opts.batch_size = a.batch;
    opts.model_id = a.model_id.empty() ? fs::path(a.model).stem().string() : a.model_id;
    const ScoreTable table = score_corpus(w, pages.source(), opts);
    write_scores(fs::path(a.output), table);
    report_stats(err, pages.stats());
    return 0;
}

struct PercentileArgs {
    std::string scores;
    std::string output;
    std::size_t max_in_memory = std::size_t{1} << 22;
    std::string tmpdir = env_or("WSPAM_TMPDIR", "");
};

int cmd_percentile(const PercentileArgs& a, std::ostream& out) {
    ExternalSortOptions opts;
    opts.max_in_memory = a.max_in_memory;
    opts.temp_dir = a.tmpdir;
    const auto n = percentile_rank_file(a.scores, a.output, opts);
    out << "ranked " << n << " documents\n";
    return 0;
}

struct FuseArgs {
    std::vector<std::string> scores;
    std::string output;
};

int cmd_fuse(const FuseArgs& a) {
    std::vector<ScoreTable> tables;
    for (const auto& s : a.scores) tables.push_back(read_scores(s));
    write_scores(fs::path(a.output), fuse(tables));
    return 0;
}

struct LabelgenArgs {
    std::vector<std::string> archives;
    std::string output;
    std::string host_labels;
    std::size_t min_size = 5000;
    std::string honeypot_run;
    std::size_t top_n = 10;
    std::string directory;
    std::string corpus_index;
    std::size_t sample = 10000;
    std::uint64_t seed = 1;
    std::vector<std::string> adjudication;
};

int cmd_labelgen(const LabelgenArgs& a, std::ostream& out) {
    std::vector<LabeledDoc> labels;
    if (!a.host_labels.empty()) {
        const HostLabelSet hosts = read_host_labels(a.host_labels);
        ArchiveStream pages({a.archives.begin(), a.archives.end()});
        for (const auto& ex : select_host_examples(hosts, pages.source(), a.min_size)) {
            labels.push_back({ex.doc_id, ex.label, ex.source});
        }
    }
    if (!a.honeypot_run.empty()) {
        for (auto& d : honeypot_spam_labels(read_run(a.honeypot_run), a.top_n)) labels.push_back(std::move(d));
    }
    if (!a.directory.empty()) {
        auto nonspam =
            directory_nonspam_labels(read_url_list(a.directory), read_corpus_index(a.corpus_index), a.sample, a.seed);
        for (auto& d : nonspam) labels.push_back(std::move(d));
    }
    for (const auto& log : a.adjudication) {
        for (auto& d : import_manual_labels(fs::path(log))) labels.push_back(std::move(d));
    }
    const auto resolved = resolve_conflicts(labels);
    const std::vector<fs::path> archives(a.archives.begin(), a.archives.end());
    const auto entries = attach_references(resolved, archives);
    write_manifest(fs::path(a.output), entries);
    out << "wrote " << entries.size() << " examples\n";
    return 0;
}

struct FilterArgs {
    std::string run;
    std::string percentiles;
    std::string output;
    int threshold = 0;
    int missing = kDefaultMissingPercentile;
    bool random = false;
    std::uint64_t seed = 1;
    std::string tag;
};

int cmd_filter(const FilterArgs& a, std::ostream& out) {
    const RankedRun run = read_run(a.run);
    RankedRun result;
    if (a.random) {
        result = random_control(run, a.threshold, a.seed);
    } else {
        const auto pct = percentiles_for(a.percentiles, std::span(&run, 1));
        result = filter_run(annotate(run, pct, a.missing), a.threshold);
    }
    emit(a.output, out, [&](std::ostream& s) { write_run(s, result, a.tag); });
    return 0;
}

struct RerankArgs {
    std::string run;
    std::string percentiles;
    std::string qrels;
    std::string profile;
    std::string profile_out;
    std::string output;
    int depth = 1000;
    int missing = kDefaultMissingPercentile;
    std::string tag;
};

int cmd_rerank(const RerankArgs& a, std::ostream& out) {
    const RankedRun run = read_run(a.run);
    const auto annotated = annotate(run, percentiles_for(a.percentiles, std::span(&run, 1)), a.missing);
    ThresholdProfile profile;
    if (!a.profile.empty()) {
        profile = read_profile(a.profile);
    } else {
        const JudgmentSet judgments = read_judgments(a.qrels);
        std::vector<TrainingTopic> training;
        for (const auto& topic : judgments.topics()) {
            training.push_back({annotated.find(topic), judgments.find(topic)});
        }
        profile = optimize_thresholds(training, a.depth);
    }
    if (!a.profile_out.empty()) write_profile(fs::path(a.profile_out), profile);
    const RankedRun result = rerank(annotated, profile);
    emit(a.output, out, [&](std::ostream& s) { write_run(s, result, a.tag); });
    return 0;
}

struct SweepArgs {
    std::vector<std::string> runs;
    std::string percentiles;
    std::string qrels;
    std::string output;
    std::string grid = "0:90:10";
    int cutoff = 10;
    std::uint64_t seed = 1;
    int missing = kDefaultMissingPercentile;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    SweepOptions opts;
    opts.grid = parse_grid(a.grid);
    opts.cutoff = a.cutoff;
    opts.seed = a.seed;
    std::vector<RankedRun> runs;
    for (const auto& r : a.runs) runs.push_back(read_run(r));
    const JudgmentSet judgments = read_judgments(a.qrels);
    const auto pct = percentiles_for(a.percentiles, runs);
    std::vector<SpamAnnotatedRun> annotated;
    for (const auto& r : runs) annotated.push_back(annotate(r, pct, a.missing));
    const auto rows = threshold_sweep(annotated, judgments, opts);
    emit(a.output, out, [&](std::ostream& s) { write_sweep(s, rows, a.cutoff); });
    return 0;
}

struct EvalArgs {
    std::string run;
    std::string qrels;
    std::string output;
    std::string metric;
    std::vector<int> cutoffs{10};
    int depth = 1000;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    EvalOptions opts;
    opts.cutoffs = a.cutoffs;
    opts.depth = a.depth;
    const EvalReport report = evaluate(read_run(a.run), read_judgments(a.qrels), opts);
    if (!a.metric.empty() && !report.mean(a.metric) && !report.topics.empty()) {
        throw InvalidArgument("unknown metric " + a.metric);
    }
    emit(a.output, out, [&](std::ostream& s) {
        if (a.metric.empty()) {
            write_report(s, report);
            return;
        }
        for (const auto& t : report.topics) {
            for (const auto& v : t.values) {
                if (v.name == a.metric) {
                    s << report.run_id << '\t' << v.name << '\t' << t.topic << '\t' << format_fixed(v.value, 4) << '\n';
                }
            }
        }
        if (const MetricValue* m = report.mean(a.metric)) {
            s << report.run_id << '\t' << m->name << "\tall\t" << format_fixed(m->value, 4) << '\n';
        }
    });
    return 0;
}

struct CrossvalArgs {
    std::string run;
    std::string percentiles;
    std::string qrels;
    std::string output;
    std::string reranked;
    std::vector<int> cutoffs{10, 30, 300};
    int depth = 1000;
    int missing = kDefaultMissingPercentile;
    std::string tag;
};

int cmd_crossval(const CrossvalArgs& a, std::ostream& out) {
    const RankedRun run = read_run(a.run);
    const auto annotated = annotate(run, percentiles_for(a.percentiles, std::span(&run, 1)), a.missing);
    CrossValidationOptions opts;
    opts.depth = a.depth;
    opts.cutoffs = a.cutoffs;
    const auto result = cross_validate(annotated, read_judgments(a.qrels), opts);
    if (!a.reranked.empty()) write_run(fs::path(a.reranked), result.reranked, a.tag);
    emit(a.output, out, [&](std::ostream& s) { write_cross_validation(s, result); });
    return 0;
}

struct ServeArgs {
    std::vector<std::string> corpus;
    std::string data_dir = env_or("WSPAM_DATA_DIR", "");
    std::string host = "127.0.0.1";
    int port = 8080;
    double lease_seconds = 600;
    std::string ui_dir;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    // Block the termination signals before any thread starts so that only
    // the waiter below receives them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto pages = std::make_shared<WarcPageStore>(std::vector<fs::path>(a.corpus.begin(), a.corpus.end()));
    AdjudicatorOptions opts;
    opts.data_dir = a.data_dir;
    opts.lease_timeout = std::chrono::milliseconds(static_cast<long long>(a.lease_seconds * 1000.0));
    Adjudicator service(pages, opts);
    AdjudicatorServer server(service, {a.host, a.port, a.ui_dir});
    const int port = server.bind();
    out << "serving " << pages->doc_ids().size() << " pages on http://" << a.host << ':' << port << '\n' << std::flush;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.serve();
    if (waiter.joinable()) {
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Content-based web spam scoring, filtering, and evaluation", "wspam"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "wspam 1.0.0");

    TrainArgs train;
    auto* sc_train = app.add_subcommand("train", "Train a classifier in one online pass over a manifest");
    sc_train->add_option("--examples", train.examples, "Training manifest (label, source, doc id, ref)")->required();
    sc_train->add_option("--model", train.model, "Output model file")->required();
    auto* init_opt = sc_train->add_option("--init", train.init, "Continue training from this model");
    sc_train->add_option("--delta", train.delta, "Learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str()
        ->excludes(init_opt);

    ScoreArgs score;
    auto* sc_score = app.add_subcommand("score", "Score every response record of WARC archives");
    sc_score->add_option("--model", score.model, "Model file")->required();
    sc_score->add_option("--corpus", score.corpus, "WARC archive (repeatable; gzip detected)")->required();
    sc_score->add_option("--output", score.output, "Output score file")->required();
    sc_score->add_option("--threads", score.threads, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    sc_score->add_option("--batch", score.batch, "Pages per worker per round")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20))
        ->capture_default_str();
    sc_score->add_option("--model-id", score.model_id, "Identifier recorded for the scores (default: model stem)");

    PercentileArgs pct;
    auto* sc_pct = app.add_subcommand("percentile", "Convert a score file into percentile spam ranks");
    sc_pct->add_option("--scores", pct.scores, "Input score file")->required();
    sc_pct->add_option("--output", pct.output, "Output percentile file")->required();
    sc_pct->add_option("--max-in-memory", pct.max_in_memory, "Entries sorted in memory before spilling to disk")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()))
        ->capture_default_str();
    sc_pct->add_option("--tmpdir", pct.tmpdir, "Spill directory (default: $WSPAM_TMPDIR or the system temp dir)");

    FuseArgs fuse_args;
    auto* sc_fuse = app.add_subcommand("fuse", "Average two or more score files over the same documents");
    sc_fuse->add_option("--scores", fuse_args.scores, "Score file (repeat at least twice)")->required()->expected(2, -1);
    sc_fuse->add_option("--output", fuse_args.output, "Output score file")->required();

    LabelgenArgs lg;
    auto* sc_lg = app.add_subcommand("labelgen", "Build a training manifest from label sources");
    sc_lg->add_option("--archive", lg.archives, "WARC archive holding the labeled pages (repeatable)")->required();
    sc_lg->add_option("--output", lg.output, "Output manifest")->required();
    sc_lg->add_option("--host-labels", lg.host_labels, "Host label file: <host> <spam|nonspam>");
    sc_lg->add_option("--min-size", lg.min_size, "Minimum page size for host examples")->capture_default_str();
    sc_lg->add_option("--honeypot-run", lg.honeypot_run, "Run whose top results are labeled spam");
    sc_lg->add_option("--top-n", lg.top_n, "Results per topic taken from the honeypot run")->capture_default_str();
    auto* dir_opt = sc_lg->add_option("--directory", lg.directory, "Directory URL list for nonspam labels");
    auto* idx_opt = sc_lg->add_option("--corpus-index", lg.corpus_index, "Corpus index: <url> TAB <doc_id>");
    dir_opt->needs(idx_opt);
    idx_opt->needs(dir_opt);
    sc_lg->add_option("--sample", lg.sample, "Nonspam directory sample size")->capture_default_str();
    sc_lg->add_option("--seed", lg.seed, "Directory sample seed")->capture_default_str();
    sc_lg->add_option("--adjudication", lg.adjudication, "Adjudication log (repeatable)");

    FilterArgs filter;
    auto* sc_filter = app.add_subcommand("filter", "Drop results whose spam percentile is below a threshold");
    sc_filter->add_option("--run", filter.run, "TREC run file")->required();
    auto* filter_pct = sc_filter->add_option("--percentiles", filter.percentiles, "Percentile file");
    sc_filter->add_option("--threshold,-t", filter.threshold, "Percentile threshold; 100 drops everything")
        ->required()
        ->check(CLI::Range(0, 100));
    sc_filter->add_option("--output", filter.output, "Output run (default: standard output)");
    sc_filter->add_option("--missing", filter.missing, "Percentile assumed for unscored documents")
        ->check(CLI::Range(0, 100))
        ->capture_default_str();
    auto* random_flag =
        sc_filter->add_flag("--random-control", filter.random, "Drop a seeded random t% of documents instead");
    sc_filter->add_option("--seed", filter.seed, "Random control seed")->capture_default_str();
    sc_filter->add_option("--tag", filter.tag, "Run tag written to the output (default: run id + .filtered.t<t>)");
    random_flag->excludes(filter_pct);

    RerankArgs rr;
    auto* sc_rr = app.add_subcommand("rerank", "Rerank a run with a per-rank threshold profile");
    sc_rr->add_option("--run", rr.run, "TREC run file")->required();
    sc_rr->add_option("--percentiles", rr.percentiles, "Percentile file")->required();
    auto* rr_qrels = sc_rr->add_option("--qrels", rr.qrels, "Judgments used to learn the profile");
    auto* rr_profile = sc_rr->add_option("--profile", rr.profile, "Use this profile instead of learning one");
    rr_qrels->excludes(rr_profile);
    sc_rr->add_option("--profile-out", rr.profile_out, "Write the profile used");
    sc_rr->add_option("--output", rr.output, "Output run (default: standard output)");
    sc_rr->add_option("--depth", rr.depth, "Profile depth")->check(CLI::Range(1, 100000))->capture_default_str();
    sc_rr->add_option("--missing", rr.missing, "Percentile assumed for unscored documents")
        ->check(CLI::Range(0, 100))
        ->capture_default_str();
    sc_rr->add_option("--tag", rr.tag, "Run tag written to the output (default: run id + .reranked)");

    SweepArgs sw;
    auto* sc_sw = app.add_subcommand("sweep", "estP@k of filtered runs over a threshold grid");
    sc_sw->add_option("--run", sw.runs, "TREC run file (repeatable)")->required();
    sc_sw->add_option("--percentiles", sw.percentiles, "Percentile file")->required();
    sc_sw->add_option("--qrels", sw.qrels, "Judgments")->required();
    sc_sw->add_option("--output", sw.output, "Report file (default: standard output)");
    sc_sw->add_option("--grid", sw.grid, "Thresholds: comma list of values or start:stop:step ranges")
        ->capture_default_str();
    sc_sw->add_option("--cutoff,-k", sw.cutoff, "Rank cutoff k")->check(CLI::Range(1, 100000))->capture_default_str();
    sc_sw->add_option("--seed", sw.seed, "Random control seed")->capture_default_str();
    sc_sw->add_option("--missing", sw.missing, "Percentile assumed for unscored documents")
        ->check(CLI::Range(0, 100))
        ->capture_default_str();

    EvalArgs ev;
    auto* sc_ev = app.add_subcommand("eval", "Evaluate a run against full or sampled judgments");
    sc_ev->add_option("--run", ev.run, "TREC run file")->required();
    sc_ev->add_option("--qrels", ev.qrels, "Judgments (qrels or probabilistic format)")->required();
    sc_ev->add_option("--output", ev.output, "Report file (default: standard output)");
    sc_ev->add_option("--metric", ev.metric, "Print only this metric, e.g. estP10");
    sc_ev->add_option("--cutoffs", ev.cutoffs, "Rank cutoffs")->delimiter(',')->check(CLI::Range(1, 100000));
    sc_ev->add_option("--depth", ev.depth, "Evaluation depth")->check(CLI::Range(1, 10000000))->capture_default_str();

    CrossvalArgs cv;
    auto* sc_cv = app.add_subcommand("crossval", "Leave-one-topic-out reranking with sign tests");
    sc_cv->add_option("--run", cv.run, "TREC run file")->required();
    sc_cv->add_option("--percentiles", cv.percentiles, "Percentile file")->required();
    sc_cv->add_option("--qrels", cv.qrels, "Judgments")->required();
    sc_cv->add_option("--output", cv.output, "Report file (default: standard output)");
    sc_cv->add_option("--reranked", cv.reranked, "Write the cross-validated reranked run");
    sc_cv->add_option("--cutoffs", cv.cutoffs, "Rank cutoffs")->delimiter(',')->check(CLI::Range(1, 100000));
    sc_cv->add_option("--depth", cv.depth, "Profile and evaluation depth")
        ->check(CLI::Range(1, 100000))
        ->capture_default_str();
    sc_cv->add_option("--missing", cv.missing, "Percentile assumed for unscored documents")
        ->check(CLI::Range(0, 100))
        ->capture_default_str();
    sc_cv->add_option("--tag", cv.tag, "Run tag for --reranked");

    ServeArgs sv;
    auto* sc_sv = app.add_subcommand("serve", "Run the adjudication HTTP service");
    sc_sv->add_option("--corpus", sv.corpus, "WARC archive with the pages to adjudicate (repeatable)")->required();
    sc_sv->add_option("--data-dir", sv.data_dir, "Session and judgment store (default: $WSPAM_DATA_DIR)");
    sc_sv->add_option("--host", sv.host, "Listen address")->capture_default_str();
    sc_sv->add_option("--port", sv.port, "Listen port; 0 picks a free one")->check(CLI::Range(0, 65535))->capture_default_str();
    sc_sv->add_option("--lease-seconds", sv.lease_seconds, "Task lease timeout")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sc_sv->add_option("--ui-dir", sv.ui_dir, "Static files served at /");

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    try {
        app.parse(args);
        if (sc_lg->parsed() && lg.host_labels.empty() && lg.honeypot_run.empty() && lg.directory.empty() &&
            lg.adjudication.empty()) {
            throw CLI::ValidationError("labelgen", "give at least one label source");
        }
        if (sc_filter->parsed() && !filter.random && filter.percentiles.empty()) {
            throw CLI::RequiredError("--percentiles (or --random-control)");
        }
        if (sc_rr->parsed() && rr.qrels.empty() && rr.profile.empty()) {
            throw CLI::RequiredError("--qrels or --profile");
        }
        if (sc_sw->parsed()) parse_grid(sw.grid);
        if (sc_sv->parsed() && sv.data_dir.empty()) throw CLI::RequiredError("--data-dir (or WSPAM_DATA_DIR)");
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : kExitUsage;
    }

    ScopedWarningHandler warnings([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
    try {
        if (sc_train->parsed()) return cmd_train(train, out);
        if (sc_score->parsed()) return cmd_score(score, err);
        if (sc_pct->parsed()) return cmd_percentile(pct, out);
        if (sc_fuse->parsed()) return cmd_fuse(fuse_args);
        if (sc_lg->parsed()) return cmd_labelgen(lg, out);
        if (sc_filter->parsed()) return cmd_filter(filter, out);
        if (sc_rr->parsed()) return cmd_rerank(rr, out);
        if (sc_sw->parsed()) return cmd_sweep(sw, out);
        if (sc_ev->parsed()) return cmd_eval(ev, out);
        if (sc_cv->parsed()) return cmd_crossval(cv, out);
        if (sc_sv->parsed()) return cmd_serve(sv, out);
    } catch (const Error& e) {
        err << "wspam: error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "wspam: error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace wspam
