// Acceptance suite. Each TEST is one criterion; a listener prints one
// "ACCEPTANCE <name>: PASS|FAIL|SKIPPED" line per criterion after it runs.

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "reference_filter.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"
#include "wspam/classifier.hpp"
#include "wspam/rank_transform.hpp"
#include "wspam/scores.hpp"
#include "wspam/trec.hpp"
#include "wspam/warc.hpp"

namespace wspam {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const unsigned char* raw(const std::string& s) { return reinterpret_cast<const unsigned char*>(s.data()); }

// A page mixing natural text, markup and arbitrary bytes.
std::string random_page(std::mt19937_64& rng, const testing::TextSampler& text, std::size_t max_len) {
    const std::size_t len = static_cast<std::size_t>(rng() % (max_len + 1));
    std::string page;
    switch (rng() % 3) {
        case 0: page = testing::random_bytes(rng, len); break;
        case 1: page = text.paragraphs(rng, len); break;
        default:
            page = testing::http_response("<html><body>" + text.paragraphs(rng, len) + "</body></html>");
            break;
    }
    page.resize(std::min(page.size(), len));
    return page;
}

// Float summation of n terms can drift by about n * 2^-24 times the sum of
// magnitudes; that bound is the absolute floor for score comparisons.
double summation_floor(const WeightVector& w, const std::string& page) {
    double magnitude = 0.0;
    const auto features = feature_hash(as_bytes(page));
    for (auto h : features) magnitude += std::fabs(w.weights()[h]);
    return std::max(1e-6, static_cast<double>(features.size()) * 0x1.0p-24 * magnitude);
}

TEST(Acceptance, ClassifierMatchesReferenceTransliteration) {
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    testing::TextSampler text(4000, 101);

    // Training sequences: weights and in-sequence scores agree.
    std::size_t weight_checks = 0;
    for (int seq = 0; seq < 200; ++seq) {
        WeightVector w;
        testing::ReferenceFilter ref;
        const int n = 5 + static_cast<int>(rng() % 26);
        for (int i = 0; i < n; ++i) {
            const std::string page = random_page(rng, text, 6000);
            const bool spam = rng() % 2;
            ASSERT_TRUE(testing::near_relative(w.spamminess(as_bytes(page)),
                                               ref.spamminess(raw(page), static_cast<int>(page.size())), 1e-3,
                                               summation_floor(w, page)))
                << "sequence " << seq << " step " << i;
            w.train(as_bytes(page), spam ? Label::spam : Label::nonspam);
            ref.train(raw(page), static_cast<int>(page.size()), spam ? 1 : 0);
        }
        for (std::size_t i = 0; i < ref.w.size(); ++i) {
            if (w.weights()[i] == 0.0f && ref.w[i] == 0.0f) continue;
            ++weight_checks;
            ASSERT_TRUE(testing::near_relative(w.weights()[i], ref.w[i], 1e-3, 1e-7))
                << "sequence " << seq << " weight " << i;
        }
    }

    // Scoring of long pages with a model trained on a realistic mix.
    WeightVector w;
    testing::ReferenceFilter ref;
    for (int i = 0; i < 400; ++i) {
        WarcDocument d = i % 2 ? testing::spam_document(rng, text, i) : testing::ham_document(rng, text, i);
        w.train(as_bytes(d.block), i % 2 ? Label::spam : Label::nonspam);
        ref.train(raw(d.block), static_cast<int>(d.block.size()), i % 2);
    }
    for (int i = 0; i < 1000; ++i) {
        const std::string page = random_page(rng, text, 40000);
        ASSERT_TRUE(testing::near_relative(w.spamminess(as_bytes(page)),
                                           ref.spamminess(raw(page), static_cast<int>(page.size())), 1e-3,
                                           summation_floor(w, page)))
            << "page " << i << " of length " << page.size();
    }
    const double elapsed = seconds_since(start);
    std::cout << "  weights compared: " << weight_checks << ", elapsed " << elapsed << " s\n";
    EXPECT_LT(elapsed, 30.0);
}

TEST(Acceptance, SingleThreadThroughput) {
    std::mt19937_64 rng(102);
    testing::TextSampler text(5000, 102);
    std::vector<std::string> pool;
    for (int i = 0; i < 2000; ++i) pool.push_back(testing::page_of_size(rng, text, 10 * 1024));
    WeightVector w;
    for (int i = 0; i < 200; ++i) w.train(as_bytes(pool[static_cast<std::size_t>(i)]), i % 2 ? Label::spam : Label::nonspam);

    const std::size_t total = 100000;
    std::size_t served = 0;
    const PageSource source = [&]() -> std::optional<PageRecord> {
        if (served == total) return std::nullopt;
        PageRecord r;
        r.doc_id = "page-" + std::to_string(served);
        r.bytes = pool[served % pool.size()];
        ++served;
        return r;
    };
    const auto start = Clock::now();
    const ScoreTable scores = score_corpus(w, source, {1, 512, "throughput"});
    const double elapsed = seconds_since(start);
    const double rate = static_cast<double>(total) / elapsed;
    std::cout << "  scored " << scores.size() << " pages of 10 KB in " << elapsed << " s: " << rate << " pages/s\n";
    EXPECT_EQ(scores.size(), total);
    EXPECT_GE(rate, 2000.0);
}

TEST(Acceptance, SyntheticHoneypotAuc) {
    const auto start = Clock::now();
    testing::ScratchDir dir;
    std::mt19937_64 rng(103);
    testing::TextSampler text(5000, 103);
    std::vector<WarcDocument> docs;
    for (int i = 0; i < 2000; ++i) {
        docs.push_back(testing::spam_document(rng, text, static_cast<std::size_t>(i)));
        docs.push_back(testing::ham_document(rng, text, static_cast<std::size_t>(i)));
    }
    write_warc(docs, dir / "honeypot.warc.gz", {WarcCompression::per_record, "1.0", true});

    std::vector<PageRecord> spam;
    std::vector<PageRecord> ham;
    WarcReader reader(dir / "honeypot.warc.gz");
    while (auto r = reader.next()) (r->doc_id.starts_with("spam") ? spam : ham).push_back(std::move(*r));
    ASSERT_EQ(spam.size(), 2000u);
    ASSERT_EQ(ham.size(), 2000u);

    std::vector<TrainingExample> training;
    for (std::size_t i = 0; i < 500; ++i) {
        training.push_back({spam[i].doc_id, spam[i].bytes, Label::spam, ExampleSource::britney});
        training.push_back({ham[i].doc_id, ham[i].bytes, Label::nonspam, ExampleSource::britney});
    }
    const WeightVector w = train_pass(training);

    std::vector<PageRecord> held_out(spam.begin() + 500, spam.end());
    held_out.insert(held_out.end(), ham.begin() + 500, ham.end());
    const ScoreTable scores = score_corpus(w, held_out, {2, 256, "honeypot"});
    ASSERT_EQ(scores.size(), 3000u);
    std::vector<LabeledScore> labeled;
    for (const auto& e : scores.entries()) labeled.push_back({e.score, e.doc_id.starts_with("spam")});
    const double auc = roc_auc(labeled);
    const double elapsed = seconds_since(start);
    std::cout << "  AUC " << auc << " over 3000 held-out pages, elapsed " << elapsed << " s\n";
    EXPECT_GE(auc, 0.95);
    EXPECT_LT(elapsed, 60.0);
}

TEST(Acceptance, EstimatorExactnessAndComplementSymmetry) {
    std::mt19937_64 rng(104);
    int symmetric_cases = 0;
    for (int topic = 0; topic < 500; ++topic) {
        const int n = 10 + static_cast<int>(rng() % 90);
        std::vector<RankedDoc> ranking;
        TopicJudgments full;
        TopicJudgments sampled;
        std::vector<int> rel;
        for (int i = 0; i < n; ++i) {
            const std::string id = "d" + std::to_string(i);
            ranking.push_back({id, static_cast<double>(n - i)});
            const int r = rng() % 3 == 0 ? 1 : 0;
            rel.push_back(r);
            full.set(id, {r, 1.0});
            if (rng() % 4 == 0) sampled.set(id, {r, (rng() % 2) ? 1.0 : 0.25});
        }
        // Exact P@10 and R-precision by counting.
        const int hits10 = static_cast<int>(std::count(rel.begin(), rel.begin() + 10, 1));
        const int R = static_cast<int>(std::count(rel.begin(), rel.end(), 1));
        ASSERT_EQ(est_precision(ranking, full, 10), hits10 / 10.0) << topic;
        if (R > 0) {
            const int hitsR = static_cast<int>(std::count(rel.begin(), rel.begin() + R, 1));
            ASSERT_EQ(est_r_precision(ranking, full), static_cast<double>(hitsR) / R) << topic;
        }
        // Complement symmetry on full and sampled judgments.
        for (const TopicJudgments* j : {&full, &sampled}) {
            const auto stat = statrel(ranking, *j, 10);
            if (stat.rel + stat.nrel == 0) continue;
            TopicJudgments flipped;
            for (const auto& [id, jj] : j->docs()) flipped.set(id, {jj.relevant() ? 0 : 1, jj.probability});
            ++symmetric_cases;
            ASSERT_NEAR(est_precision(ranking, *j, 10), 1.0 - est_precision(ranking, flipped, 10), 1e-12) << topic;
        }
    }
    std::cout << "  500 exact topics, " << symmetric_cases << " complement cases\n";
}

TEST(Acceptance, AucMatchesPairCountingAndTrapezoid) {
    std::mt19937_64 rng(105);
    double worst_pair = 0.0;
    double worst_area = 0.0;
    for (int set = 0; set < 200; ++set) {
        std::vector<LabeledScore> data;
        std::vector<double> pos;
        std::vector<double> neg;
        const int n = 2 + static_cast<int>(rng() % 400);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            const bool positive = i == 0 || (i != 1 && rng() % 2);
            double s = noise(rng) + (positive ? 0.8 : 0.0);
            if (set % 3 == 0) s = std::round(s * 4.0) / 4.0;  // heavy ties
            data.push_back({s, positive});
            (positive ? pos : neg).push_back(s);
        }
        const double auc = roc_auc(data);
        worst_pair = std::max(worst_pair, std::fabs(auc - testing::oracle_auc(pos, neg)));
        worst_area = std::max(worst_area, std::fabs(auc - trapezoid_area(roc_curve(data))));
    }
    std::cout << "  max |AUC - pairs| " << worst_pair << ", max |AUC - trapezoid| " << worst_area << '\n';
    EXPECT_LE(worst_pair, 1e-9);
    EXPECT_LE(worst_area, 1e-9);
}

const testing::BenchmarkFixture& benchmark() {
    static const testing::BenchmarkFixture fx = testing::make_benchmark({});
    return fx;
}

TEST(Acceptance, FilterSweepRisesWhileRandomControlStaysFlat) {
    const auto& fx = benchmark();
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < fx.runs.size(); ++i) {
        const auto part = threshold_sweep(std::span(&fx.runs[i], 1), fx.judgments[i]);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    std::map<int, double> filtered;
    std::map<int, double> control;
    std::map<std::string, std::map<int, double>> per_run;
    for (const auto& r : rows) {
        filtered[r.threshold] += r.filtered / static_cast<double>(fx.runs.size());
        control[r.threshold] += r.random_control / static_cast<double>(fx.runs.size());
        per_run[r.run_id][r.threshold] = r.filtered;
    }
    double best_gain = -1.0;
    int best_t = 0;
    double control_gain = -1.0;
    for (const auto& [t, v] : filtered) {
        if (v - filtered[0] > best_gain) {
            best_gain = v - filtered[0];
            best_t = t;
        }
        if (t > 0) control_gain = std::max(control_gain, control[t] - control[0]);
    }
    const double v = 0.42 * 0.58;
    const double n = static_cast<double>(fx.runs.size()) * 50.0;
    std::cout << "  mean estP10 at t=0: " << filtered[0] << ", best t=" << best_t << ": " << filtered[best_t]
              << " (gain " << best_gain << ")\n";
    std::cout << "  random control best gain " << control_gain << "; analytic sd at 90% deletion "
              << std::sqrt(0.9 * v / 5.0 / n) << '\n';
    EXPECT_GE(best_gain, 0.10);
    EXPECT_LE(control_gain, 0.02);
    for (const auto& [run, series] : per_run) {
        double gain = 0.0;
        for (const auto& [t, value] : series) gain = std::max(gain, value - series.at(0));
        EXPECT_GE(gain, 0.10) << run;
    }
}

// Per-topic values are averaged over the runs before the paired sign test
// across topics; per-run significance is reported for information.
TEST(Acceptance, CrossValidatedRerankingImproves) {
    const auto& fx = benchmark();
    const std::vector<std::string> metrics{"estP10", "estP30", "estRP"};
    std::map<std::string, std::vector<double>> original;
    std::map<std::string, std::vector<double>> reranked;
    std::map<std::string, int> significant_runs;
    const auto runs = static_cast<double>(fx.runs.size());
    for (std::size_t i = 0; i < fx.runs.size(); ++i) {
        const auto& run = fx.runs[i];
        const auto result = cross_validate(run, fx.judgments[i], {1000, {10, 30}});
        for (const auto& metric : metrics) {
            const auto m = result.metric_index(metric);
            auto& before = original[metric];
            auto& after = reranked[metric];
            before.resize(result.topics.size(), 0.0);
            after.resize(result.topics.size(), 0.0);
            for (std::size_t t = 0; t < result.topics.size(); ++t) {
                before[t] += result.topics[t].original[m] / runs;
                after[t] += result.topics[t].reranked[m] / runs;
            }
            significant_runs[metric] += result.p_values[m] < 0.01;
        }
        ASSERT_EQ(result.reranked.topics.size(), run.topics.size());
        for (const auto& topic : run.topics) {
            const auto* rr = result.reranked.find(topic.topic);
            ASSERT_NE(rr, nullptr);
            std::vector<std::string> a;
            std::vector<std::string> b;
            for (const auto& d : topic.docs) a.push_back(d.doc_id);
            for (const auto& d : rr->docs) b.push_back(d.doc_id);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            ASSERT_EQ(a, b) << run.run_id << " topic " << topic.topic << " is not a permutation";
        }
    }
    for (const auto& metric : metrics) {
        const auto& before = original[metric];
        const auto& after = reranked[metric];
        double mean_before = 0.0;
        double mean_after = 0.0;
        for (std::size_t t = 0; t < before.size(); ++t) {
            mean_before += before[t] / static_cast<double>(before.size());
            mean_after += after[t] / static_cast<double>(after.size());
        }
        const double p = sign_test_one_tailed(before, after);
        std::cout << "  " << metric << ": " << mean_before << " -> " << mean_after << ", sign test p " << p << " over "
                  << before.size() << " topics; runs individually at p < 0.01: " << significant_runs[metric] << '/'
                  << fx.runs.size() << '\n';
        EXPECT_EQ(before.size(), 50u);
        EXPECT_GT(mean_after, mean_before) << metric;
        EXPECT_LT(p, 0.01) << metric;
    }
}

TEST(Acceptance, PercentilesMatchDirectCounting) {
    std::mt19937_64 rng(106);
    const int n = 10000;
    std::vector<ScoreEntry> entries;
    std::vector<double> raw_scores;
    std::vector<ScoreEntry> distinct;
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(static_cast<int>(rng() % 5000)) / 100.0 - 25.0;
        entries.push_back({"doc" + std::to_string(i), s});
        raw_scores.push_back(s);
        distinct.push_back({"doc" + std::to_string(i), static_cast<double>(i) + 0.5 * std::sin(i)});
    }
    const auto pct = percentile_rank(ScoreTable(entries));
    const auto expect = testing::oracle_percentiles(raw_scores);
    int mismatches = 0;
    for (int i = 0; i < n; ++i) mismatches += pct.find("doc" + std::to_string(i)) != expect[static_cast<std::size_t>(i)];
    EXPECT_EQ(mismatches, 0);

    // Spammiest t%: exactly ceil(t * n / 100) - 1 pages when scores are distinct.
    const auto balanced = percentile_rank(ScoreTable(distinct));
    std::vector<int> count(101, 0);
    for (const auto& e : balanced.entries()) ++count[static_cast<std::size_t>(e.percentile)];
    int below = 0;
    int bad_buckets = 0;
    for (int t = 1; t <= 100; ++t) {
        below += count[static_cast<std::size_t>(t - 1)];
        bad_buckets += below != (t * n + 99) / 100 - 1;
    }
    EXPECT_EQ(bad_buckets, 0);
    std::cout << "  " << n << " percentiles checked, " << mismatches << " mismatches\n";
}

// estP10 of TREC 2009 Category A runs with the fusion filter at 0%, 50%, 70%.
struct ReferenceRow {
    const char* run;
    double at0, at50, at70;
};

const ReferenceRow kFusionReference[] = {
    {"MS1", 0.3540, 0.4042, 0.4273},          {"MS2", 0.4060, 0.4241, 0.4414},
    {"MSRAAF", 0.3540, 0.4195, 0.4522},       {"MSRAC", 0.4000, 0.4368, 0.4710},
    {"MSRANORM", 0.3700, 0.4286, 0.4652},     {"Sab9wtBase", 0.2260, 0.3147, 0.3720},
    {"Sab9wtBf1", 0.2880, 0.3572, 0.4277},    {"Sab9wtBf2", 0.2620, 0.3562, 0.3878},
    {"THUIR09An", 0.3740, 0.4191, 0.4372},    {"THUIR09LuTA", 0.2100, 0.3270, 0.3688},
    {"THUIR09TxAn", 0.3640, 0.4699, 0.4873},  {"UMHOObm25GS", 0.1420, 0.3918, 0.4073},
    {"UMHOObm25IF", 0.1640, 0.3084, 0.3359},  {"UMHOOqlGS", 0.1180, 0.3832, 0.4024},
    {"UMHOOqlIF", 0.1080, 0.3994, 0.3849},    {"WatSdmm3", 0.1180, 0.3916, 0.4490},
    {"WatSdmm3we", 0.1640, 0.5913, 0.5725},   {"WatSql", 0.0840, 0.4207, 0.4416},
    {"muadanchor", 0.3519, 0.4313, 0.4678},   {"muadibm5", 0.2788, 0.3737, 0.3864},
    {"muadimp", 0.3006, 0.3760, 0.3988},      {"pkuLink", 0.1160, 0.4786, 0.5330},
    {"pkuSewmTp", 0.1480, 0.3771, 0.3704},    {"pkuStruct", 0.1460, 0.3753, 0.3710},
    {"twCSrs9N", 0.2080, 0.3821, 0.4104},     {"twCSrsR", 0.1800, 0.4428, 0.4403},
    {"twJ48rsU", 0.2380, 0.3296, 0.3323},     {"uogTrdphP", 0.1680, 0.4369, 0.4075},
    {"uvaee", 0.1100, 0.4444, 0.4499},        {"uvamrf", 0.0940, 0.4113, 0.4420},
    {"uvamrftop", 0.4100, 0.4903, 0.4935},    {"watprf", 0.3360, 0.3342, 0.3553},
    {"watrrfw", 0.3760, 0.3774, 0.3813},      {"watwp", 0.3516, 0.3476, 0.3396},
    {"yhooumd09BFM", 0.1640, 0.3984, 0.3933}, {"yhooumd09BGC", 0.3840, 0.5049, 0.4472},
    {"yhooumd09BGM", 0.4040, 0.4819, 0.4198},
};

// Uses real ClueWeb09 data when the environment provides it:
//   WSPAM_CLUEWEB_PERCENTILES  fusion percentile file
//   WSPAM_TREC_RUNS_DIR        directory of Category A run files named after their run ids
//   WSPAM_TREC_QRELS           probabilistic judgments for the 50 topics
TEST(Acceptance, ClueWebRunsReproduceReferenceValues) {
    const char* pct = std::getenv("WSPAM_CLUEWEB_PERCENTILES");
    const char* runs_dir = std::getenv("WSPAM_TREC_RUNS_DIR");
    const char* qrels = std::getenv("WSPAM_TREC_QRELS");
    if (!pct || !runs_dir || !qrels) GTEST_SKIP() << "ClueWeb09 data not configured";
    std::vector<std::pair<const ReferenceRow*, RankedRun>> runs;
    for (const auto& row : kFusionReference) {
        for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
            const auto name = entry.path().filename().string();
            if (name == row.run || name.starts_with(std::string(row.run) + ".")) {
                runs.emplace_back(&row, read_run(entry.path()));
                break;
            }
        }
    }
    if (runs.empty()) GTEST_SKIP() << "no known run files in " << runs_dir;
    std::vector<RankedRun> plain;
    for (const auto& r : runs) plain.push_back(r.second);
    const auto wanted = retrieved_ids(plain);
    const PercentileTable percentiles = read_percentiles(pct, &wanted);
    const JudgmentSet judgments = read_judgments(qrels);
    int checked = 0;
    for (const auto& [row, run] : runs) {
        const SpamAnnotatedRun annotated = annotate(run, percentiles);
        const std::pair<int, double> points[] = {{0, row->at0}, {50, row->at50}, {70, row->at70}};
        for (const auto& [t, expected] : points) {
            const EvalReport report = evaluate(filter_run(annotated, t), judgments);
            const double got = report.mean("estP10")->value;
            EXPECT_NEAR(got, expected, 0.005) << row->run << " at " << t << "%";
            ++checked;
        }
    }
    if (checked == 0) GTEST_SKIP() << "no known run files in " << runs_dir;
    std::cout << "  " << checked << " run/threshold values compared\n";
}

class AcceptanceLines : public ::testing::EmptyTestEventListener {
    void OnTestEnd(const ::testing::TestInfo& info) override {
        const auto* r = info.result();
        const char* status = r->Skipped() ? "SKIPPED" : r->Passed() ? "PASS" : "FAIL";
        std::cout << "ACCEPTANCE " << info.name() << ": " << status << " ("
                  << static_cast<double>(r->elapsed_time()) / 1000.0 << " s)" << std::endl;
    }
};

}  // namespace
}  // namespace wspam

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new wspam::AcceptanceLines);
    return RUN_ALL_TESTS();
}
