#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wspam {

// ---------------------------------------------------------------------------
// Runs and judgments

struct RankedDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const RankedDoc&, const RankedDoc&) = default;
};

/// One topic's result list; docs[i] has rank i + 1.
struct TopicRanking {
    std::string topic;
    std::vector<RankedDoc> docs;

    friend bool operator==(const TopicRanking&, const TopicRanking&) = default;
};

struct RankedRun {
    std::string run_id;
    std::vector<TopicRanking> topics;  // in order of first appearance

    const TopicRanking* find(std::string_view topic) const;

    friend bool operator==(const RankedRun&, const RankedRun&) = default;
};

/// Numeric topics compare numerically, everything else lexically.
bool topic_less(std::string_view a, std::string_view b);

/// Parses "topic Q0 doc_id rank score tag" lines. Each topic is re-sorted
/// by descending score (ties keep input order) and re-ranked 1..n.
RankedRun parse_run(std::istream& in, const std::string& source_name = "<run>");
RankedRun read_run(const std::filesystem::path& path);

/// Writes TREC run lines using `tag` (the run id when empty). Scores are
/// printed in shortest round-trip form.
void write_run(std::ostream& out, const RankedRun& run, std::string_view tag = {});
void write_run(const std::filesystem::path& path, const RankedRun& run, std::string_view tag = {});

struct Judgment {
    int grade = 0;             // > 0 relevant; grades above 1 collapse to relevant
    double probability = 1.0;  // inclusion probability, in (0, 1]

    bool relevant() const noexcept { return grade > 0; }
    double weight() const noexcept { return 1.0 / probability; }
};

class TopicJudgments {
public:
    void set(const std::string& doc_id, Judgment j);
    const Judgment* find(std::string_view doc_id) const;

    std::size_t size() const noexcept { return docs_.size(); }
    std::size_t relevant_count() const noexcept;
    /// Horvitz-Thompson estimate of the number of relevant documents.
    double relevant_weight() const noexcept;

    const std::unordered_map<std::string, Judgment>& docs() const noexcept { return docs_; }

private:
    std::unordered_map<std::string, Judgment> docs_;
};

class JudgmentSet {
public:
    /// Inserts or replaces; returns false when a judgment was replaced.
    bool set(const std::string& topic, const std::string& doc_id, Judgment j);
    const TopicJudgments* find(std::string_view topic) const;

    /// Topics in topic_less order.
    std::vector<std::string> topics() const;
    std::size_t size() const noexcept { return topics_.size(); }

    /// Copy with every judged grade flipped between relevant and nonrelevant.
    JudgmentSet complemented() const;

private:
    std::unordered_map<std::string, TopicJudgments> topics_;
};

enum class JudgmentFormat {
    automatic,      // decided from the first data line
    qrels,          // topic iteration doc_id grade
    probabilistic,  // topic doc_id grade probability
};

/// Duplicate (topic, doc) lines: last wins, with a warning.
JudgmentSet parse_judgments(std::istream& in, const std::string& source_name = "<qrels>",
                            JudgmentFormat format = JudgmentFormat::automatic);
JudgmentSet read_judgments(const std::filesystem::path& path, JudgmentFormat format = JudgmentFormat::automatic);

void write_judgments(std::ostream& out, const JudgmentSet& judgments, JudgmentFormat format);

// ---------------------------------------------------------------------------
// Measures over one topic's list

/// A ranked document reduced to what the measures need.
struct JudgedDoc {
    enum class Status : std::int8_t { unjudged = -1, nonrelevant = 0, relevant = 1 };
    Status status = Status::unjudged;
    double weight = 0.0;  // 1 / inclusion probability when judged
};

std::vector<JudgedDoc> judge(std::span<const RankedDoc> ranking, const TopicJudgments& judgments);

struct StatRel {
    double statrel = 0.0;   // sum of 1/p over judged-relevant docs in the top k
    double statnrel = 0.0;  // sum of 1/p over judged-nonrelevant docs in the top k
    int rel = 0;
    int nrel = 0;
};

StatRel statrel(std::span<const JudgedDoc> list, int k);

/// Sparse set-based precision estimate at k. Equals P@k when the top k are
/// fully judged with probability 1; zero when none of them is judged.
double est_precision(std::span<const JudgedDoc> list, int k);

/// statrel_k / k; can exceed 1 under sampled judgments.
double stat_precision(std::span<const JudgedDoc> list, int k);

struct PrecisionVariants {
    double unjudged_nonrelevant = 0.0;
    double unjudged_elided = 0.0;
};

PrecisionVariants precision_variants(std::span<const JudgedDoc> list, int k);

struct AveragePrecisionVariants {
    double unjudged_nonrelevant = 0.0;
    double unjudged_elided = 0.0;
};

/// AP to `depth` with R = judged-relevant count of the topic. A topic with
/// no relevant judgments scores 0 (with a warning).
AveragePrecisionVariants average_precision_variants(std::span<const JudgedDoc> list, std::size_t relevant_count,
                                                    int depth = 1000);

/// round(sum of 1/p over judged-relevant docs), at least 1; 0 when the
/// topic has no relevant judgments.
int estimated_r(const TopicJudgments& judgments);

/// est_precision at the estimated R; 0 (with a warning) when it is 0.
double est_r_precision(std::span<const JudgedDoc> list, const TopicJudgments& judgments);

// Convenience overloads on a raw ranking.
StatRel statrel(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k);
double est_precision(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k);
double stat_precision(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k);
PrecisionVariants precision_variants(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k);
AveragePrecisionVariants average_precision_variants(std::span<const RankedDoc> ranking,
                                                    const TopicJudgments& judgments, int depth = 1000);
double est_r_precision(std::span<const RankedDoc> ranking, const TopicJudgments& judgments);

// ---------------------------------------------------------------------------
// ROC

struct LabeledScore {
    double score = 0.0;
    bool positive = false;
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Throws InvalidArgument without both classes.
double roc_auc(std::span<const LabeledScore> data);

struct RocPoint {
    double false_positive_rate = 0.0;
    double true_positive_rate = 0.0;
};

/// ROC curve from (0,0) to (1,1), one vertex per distinct score threshold.
std::vector<RocPoint> roc_curve(std::span<const LabeledScore> data);
double trapezoid_area(std::span<const RocPoint> curve);

// ---------------------------------------------------------------------------
// Run evaluation

struct EvalOptions {
    std::vector<int> cutoffs{10};
    int depth = 1000;
};

struct MetricValue {
    std::string name;
    double value = 0.0;
};

struct TopicMetrics {
    std::string topic;
    std::vector<MetricValue> values;
};

struct EvalReport {
    std::string run_id;
    std::vector<TopicMetrics> topics;  // judged topics, topic_less order
    std::vector<MetricValue> means;    // arithmetic mean over those topics

    const MetricValue* mean(std::string_view name) const;
};

/// Metric names, in report order:
///   estP<k> statPC<k> P<k>.unj_nrel P<k>.unj_elided   (per cutoff)
///   AP.unj_nrel AP.unj_elided estRP
/// Topics without judgments are excluded; judged topics missing from the
/// run score 0.
EvalReport evaluate(const RankedRun& run, const JudgmentSet& judgments, const EvalOptions& options = {});

TopicMetrics evaluate_topic(std::string topic, std::span<const RankedDoc> ranking, const TopicJudgments& judgments,
                            const EvalOptions& options);

/// "run_id \t metric \t topic \t value" with 4 decimals; topic "all" for means.
void write_report(std::ostream& out, const EvalReport& report);

/// One-tailed paired sign test: probability of at least this many
/// improvements among untied pairs if improvement and decline were
/// equally likely. Returns 1 when every pair ties.
double sign_test_one_tailed(std::span<const double> baseline, std::span<const double> treatment);

}  // namespace wspam
