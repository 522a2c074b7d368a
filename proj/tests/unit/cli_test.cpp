#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"
#include "wspam/manifest.hpp"
#include "wspam/rank_transform.hpp"

namespace wspam {
namespace {

using testing::ScratchDir;

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "wspam");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::size_t file_count(const std::filesystem::path& dir) {
    return static_cast<std::size_t>(std::distance(std::filesystem::directory_iterator(dir), {}));
}

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({}).code, 1);
    ScratchDir dir;
    const auto bad = run({"train", "--examples", (dir / "m.tsv").string(), "--model", (dir / "o.wspm").string(),
                          "--bogus"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(file_count(dir.path()), 0u);
    EXPECT_EQ(run({"filter", "--run", "x"}).code, 1);
    EXPECT_EQ(run({"filter", "--run", "x", "--percentiles", "p", "-t", "101"}).code, 1);
    EXPECT_EQ(run({"rerank", "--run", "x", "--percentiles", "p"}).code, 1);
}

TEST(Cli, DataErrorsExitTwoWithoutPartialOutput) {
    ScratchDir dir;
    const auto r = run({"eval", "--run", (dir / "none.txt").string(), "--qrels", (dir / "q.txt").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);

    testing::write_text(dir / "scores.txt", "a 1\nb oops\n");
    const auto p = run({"percentile", "--scores", (dir / "scores.txt").string(), "--output", (dir / "p.txt").string()});
    EXPECT_EQ(p.code, 2);
    EXPECT_FALSE(std::filesystem::exists(dir / "p.txt"));
    EXPECT_EQ(file_count(dir.path()), 1u);
}

TEST(Cli, TrainMatchesLibrary) {
    ScratchDir dir;
    const std::vector<ManifestEntry> entries{
        {Label::spam, ExampleSource::britney, "s", inline_ref("buy cheap pills online now")},
        {Label::nonspam, ExampleSource::uk2006, "h", inline_ref("the committee met on tuesday to discuss")},
    };
    write_manifest(dir / "m.tsv", entries);
    const auto r = run({"train", "--examples", (dir / "m.tsv").string(), "--model", (dir / "m.wspm").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto model = load_model(dir / "m.wspm");
    const auto expect = train_pass(load_examples(dir / "m.tsv"));
    ASSERT_EQ(model.weights().size(), expect.weights().size());
    EXPECT_TRUE(std::equal(model.weights().begin(), model.weights().end(), expect.weights().begin()));
    EXPECT_EQ(model.trained_examples(), 2u);

    // Continuing from the saved model equals two passes in one go.
    ASSERT_EQ(run({"train", "--examples", (dir / "m.tsv").string(), "--model", (dir / "m2.wspm").string(), "--init",
                   (dir / "m.wspm").string()})
                  .code,
              0);
    auto twice = expect;
    for (const auto& ex : load_examples(dir / "m.tsv")) train_update(twice, ex);
    const auto m2 = load_model(dir / "m2.wspm");
    EXPECT_TRUE(std::equal(m2.weights().begin(), m2.weights().end(), twice.weights().begin()));

    testing::write_text(dir / "empty.tsv", "");
    EXPECT_EQ(run({"train", "--examples", (dir / "empty.tsv").string(), "--model", (dir / "e.wspm").string()}).code, 2);
    EXPECT_FALSE(std::filesystem::exists(dir / "e.wspm"));
}

TEST(Cli, EvalSingleMetric) {
    ScratchDir dir;
    std::string run_text;
    std::string qrels;
    for (int i = 0; i < 10; ++i) {
        run_text += "301 Q0 d" + std::to_string(i) + " " + std::to_string(i + 1) + " " + std::to_string(10 - i) + " r\n";
        qrels += "301 0 d" + std::to_string(i) + (i < 7 ? " 1\n" : " 0\n");
    }
    testing::write_text(dir / "r.txt", run_text);
    testing::write_text(dir / "q.txt", qrels);
    const auto r = run({"eval", "--run", (dir / "r.txt").string(), "--qrels", (dir / "q.txt").string(), "--metric",
                        "estP10"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "r\testP10\t301\t0.7000\nr\testP10\tall\t0.7000\n");
    EXPECT_EQ(run({"eval", "--run", (dir / "r.txt").string(), "--qrels", (dir / "q.txt").string(), "--metric", "nope"})
                  .code,
              2);
}

TEST(Cli, ScorePercentileFilterEvalComposes) {
    ScratchDir dir;
    std::mt19937_64 rng(41);
    testing::TextSampler text(2000, 41);
    std::vector<WarcDocument> docs;
    std::vector<TrainingExample> examples;
    for (int i = 0; i < 300; ++i) {
        docs.push_back(i % 3 == 0 ? testing::spam_document(rng, text, i) : testing::ham_document(rng, text, i));
        if (i < 100) examples.push_back({docs.back().doc_id, docs.back().block, i % 3 == 0 ? Label::spam : Label::nonspam,
                                         ExampleSource::other});
    }
    write_warc(std::span<const WarcDocument>(docs).first(150), dir / "a.warc.gz",
               {WarcCompression::per_record, "1.0", true});
    write_warc(std::span<const WarcDocument>(docs).subspan(150), dir / "b.warc");
    save_model(train_pass(examples), dir / "m.wspm");

    // A run over the corpus and judgments that favour the ham pages.
    RankedRun runs{"base", {}};
    JudgmentSet judgments;
    for (int t = 0; t < 5; ++t) {
        TopicRanking tr{std::to_string(t + 1), {}};
        for (int i = 0; i < 40; ++i) {
            const auto& d = docs[(t * 37 + i * 7) % docs.size()];
            if (std::any_of(tr.docs.begin(), tr.docs.end(), [&](const RankedDoc& x) { return x.doc_id == d.doc_id; })) continue;
            tr.docs.push_back({d.doc_id, 100.0 - i});
            judgments.set(tr.topic, d.doc_id, {d.doc_id.starts_with("ham") ? 1 : 0, 1.0});
        }
        runs.topics.push_back(std::move(tr));
    }
    write_run(dir / "run.txt", runs);
    {
        std::ofstream q(dir / "q.txt");
        write_judgments(q, judgments, JudgmentFormat::qrels);
    }

    ASSERT_EQ(run({"score", "--model", (dir / "m.wspm").string(), "--corpus", (dir / "a.warc.gz").string(), "--corpus",
                   (dir / "b.warc").string(), "--output", (dir / "s.txt").string(), "--threads", "3"})
                  .code,
              0);
    ASSERT_EQ(run({"percentile", "--scores", (dir / "s.txt").string(), "--output", (dir / "p.txt").string(),
                   "--max-in-memory", "17", "--tmpdir", dir.path().string()})
                  .code,
              0);
    ASSERT_EQ(run({"filter", "--run", (dir / "run.txt").string(), "--percentiles", (dir / "p.txt").string(), "-t", "40",
                   "--output", (dir / "f.txt").string()})
                  .code,
              0);
    const auto ev = run({"eval", "--run", (dir / "f.txt").string(), "--qrels", (dir / "q.txt").string()});
    ASSERT_EQ(ev.code, 0) << ev.err;

    // The same chain through the library on the parsed score file.
    const ScoreTable scores = read_scores(dir / "s.txt");
    EXPECT_EQ(scores.size(), 300u);
    const auto pct = percentile_rank(scores);
    const auto filtered = filter_run(annotate(runs, pct), 40);
    std::ostringstream expect;
    write_report(expect, evaluate(filtered, judgments));
    EXPECT_EQ(ev.out, expect.str());
    EXPECT_NE(ev.out.find("base.filtered.t40"), std::string::npos);

    // The binary behaves like the in-process entry point.
    const std::string cmd = std::string(WSPAM_BINARY) + " eval --run " + (dir / "f.txt").string() + " --qrels " +
                            (dir / "q.txt").string() + " --output " + (dir / "bin.txt").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_EQ(testing::read_text(dir / "bin.txt"), expect.str());
}

TEST(Cli, RerankAndCrossvalProduceFiles) {
    ScratchDir dir;
    testing::BenchmarkSpec spec;
    spec.runs = 1;
    spec.topics = 6;
    spec.depth = 60;
    spec.judged_depth = 60;
    const auto fx = testing::make_benchmark(spec);
    write_run(dir / "run.txt", testing::plain_run(fx.runs[0]));
    {
        std::ofstream q(dir / "q.txt");
        write_judgments(q, fx.judgments[0], JudgmentFormat::probabilistic);
        std::ofstream p(dir / "p.txt");
        std::vector<PercentileEntry> entries;
        for (const auto& t : fx.runs[0].topics) {
            for (const auto& d : t.docs) entries.push_back({d.doc_id, d.percentile});
        }
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
        write_percentiles(p, PercentileTable(entries, entries.size()));
    }
    const auto rr = run({"rerank", "--run", (dir / "run.txt").string(), "--percentiles", (dir / "p.txt").string(),
                         "--qrels", (dir / "q.txt").string(), "--depth", "60", "--profile-out",
                         (dir / "prof.tsv").string(), "--output", (dir / "rr.txt").string()});
    ASSERT_EQ(rr.code, 0) << rr.err;
    EXPECT_EQ(read_profile(dir / "prof.tsv").depth(), 60u);
    EXPECT_EQ(read_run(dir / "rr.txt").topics.size(), 6u);
    const auto again = run({"rerank", "--run", (dir / "run.txt").string(), "--percentiles", (dir / "p.txt").string(),
                            "--profile", (dir / "prof.tsv").string()});
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(again.out, testing::read_text(dir / "rr.txt"));

    const auto cv = run({"crossval", "--run", (dir / "run.txt").string(), "--percentiles", (dir / "p.txt").string(),
                         "--qrels", (dir / "q.txt").string(), "--depth", "60", "--cutoffs", "10,30", "--reranked",
                         (dir / "cv.txt").string()});
    ASSERT_EQ(cv.code, 0) << cv.err;
    EXPECT_NE(cv.out.find("estP10\tall"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "cv.txt"));

    const auto sw = run({"sweep", "--run", (dir / "run.txt").string(), "--percentiles", (dir / "p.txt").string(),
                         "--qrels", (dir / "q.txt").string(), "--grid", "0,20:40:10"});
    ASSERT_EQ(sw.code, 0) << sw.err;
    EXPECT_EQ(std::count(sw.out.begin(), sw.out.end(), '\n'), 5);
}

}  // namespace
}  // namespace wspam
