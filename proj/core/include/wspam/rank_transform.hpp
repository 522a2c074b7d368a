#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "wspam/scores.hpp"
#include "wspam/trec.hpp"

namespace wspam {

inline constexpr int kDefaultMissingPercentile = 50;

struct AnnotatedDoc {
    std::string doc_id;
    double score = 0.0;  // retrieval score
    int percentile = kDefaultMissingPercentile;

    friend bool operator==(const AnnotatedDoc&, const AnnotatedDoc&) = default;
};

struct AnnotatedTopic {
    std::string topic;
    std::vector<AnnotatedDoc> docs;  // original rank order
};

/// A run whose entries carry their spam percentile.
struct SpamAnnotatedRun {
    std::string run_id;
    std::vector<AnnotatedTopic> topics;

    const AnnotatedTopic* find(std::string_view topic) const;
};

/// Documents absent from the table get `missing_percentile`.
SpamAnnotatedRun annotate(const RankedRun& run, const PercentileTable& percentiles,
                          int missing_percentile = kDefaultMissingPercentile);

/// Every doc id retrieved by the runs, for streaming a corpus-wide
/// percentile file (see read_percentiles).
std::unordered_set<std::string> retrieved_ids(std::span<const RankedRun> runs);

/// Drops documents with percentile < t; t = 100 drops everything.
/// Survivors keep their order; the run id gains ".filtered.t<t>".
/// Throws InvalidArgument unless 0 <= t <= 100.
RankedRun filter_run(const SpamAnnotatedRun& run, int t);

/// Whether the seeded random control labels this document as spam: a
/// fixed pseudo-random t% of the id space, independent of any run.
bool random_control_drops(std::string_view doc_id, int t, std::uint64_t seed) noexcept;

/// Drops the documents random_control_drops selects; the run id gains
/// ".random.t<t>".
RankedRun random_control(const RankedRun& run, int t, std::uint64_t seed);

/// Percentile threshold per result position; positions past the profile
/// use threshold 0.
struct ThresholdProfile {
    std::vector<int> thresholds;  // thresholds[k - 1] applies at rank k

    std::size_t depth() const noexcept { return thresholds.size(); }
    int at(std::size_t rank) const noexcept {
        return rank >= 1 && rank <= thresholds.size() ? thresholds[rank - 1] : 0;
    }

    friend bool operator==(const ThresholdProfile&, const ThresholdProfile&) = default;
};

/// "k \t t_k" per line.
void write_profile(std::ostream& out, const ThresholdProfile& profile);
void write_profile(const std::filesystem::path& path, const ThresholdProfile& profile);
ThresholdProfile read_profile(const std::filesystem::path& path);

struct TrainingTopic {
    const AnnotatedTopic* topic = nullptr;  // null: the run has no results for it
    const TopicJudgments* judgments = nullptr;
};

/// For each k in 1..depth, the smallest t in 0..100 maximizing the mean
/// over training topics of estP@k of the list filtered at t.
/// Throws InvalidArgument without training topics.
ThresholdProfile optimize_thresholds(std::span<const TrainingTopic> training, int depth);

/// Greedy rebuild: position i takes the earliest unplaced document whose
/// percentile is at least t_i, else the earliest unplaced document. The
/// result is a permutation of the input.
std::vector<AnnotatedDoc> rerank(std::span<const AnnotatedDoc> docs, const ThresholdProfile& profile);

/// Reranks every topic. Output scores are rewritten as n - rank + 1 so
/// the new order survives re-sorting by score; the run id gains ".reranked".
RankedRun rerank(const SpamAnnotatedRun& run, const ThresholdProfile& profile);

/// The profile used for `held_out` in leave-one-topic-out validation:
/// learned on every other judged topic.
ThresholdProfile learn_profile_excluding(const SpamAnnotatedRun& run, const JudgmentSet& judgments,
                                        std::string_view held_out, int depth);

struct CrossValidationOptions {
    int depth = 1000;
    std::vector<int> cutoffs{10, 30, 300};
};

struct CrossValidationResult {
    std::string run_id;
    std::vector<std::string> metrics;
    struct TopicRow {
        std::string topic;
        std::vector<double> original;
        std::vector<double> reranked;
    };
    std::vector<TopicRow> topics;  // judged topics, topic_less order
    std::vector<double> mean_original;
    std::vector<double> mean_reranked;
    std::vector<double> p_values;  // one-tailed sign test, reranked > original
    RankedRun reranked;

    std::size_t metric_index(std::string_view name) const;
};

/// Leave-one-topic-out: each judged topic is reranked with a profile
/// learned on the others and evaluated. Needs at least two judged topics.
CrossValidationResult cross_validate(const SpamAnnotatedRun& run, const JudgmentSet& judgments,
                                     const CrossValidationOptions& options = {});

/// Per-topic rows "run_id metric topic original reranked", then mean rows
/// with topic "all" and the p-value as a sixth column.
void write_cross_validation(std::ostream& out, const CrossValidationResult& result);

struct SweepOptions {
    std::vector<int> grid{0, 10, 20, 30, 40, 50, 60, 70, 80, 90};
    int cutoff = 10;
    std::uint64_t seed = 1;
};

struct SweepRow {
    std::string run_id;
    int threshold = 0;
    double filtered = 0.0;        // mean estP@cutoff after filter_run
    double random_control = 0.0;  // mean estP@cutoff after random_control
};

/// Mean estP@cutoff over judged topics for every run and grid threshold,
/// with the seeded random control alongside.
std::vector<SweepRow> threshold_sweep(std::span<const SpamAnnotatedRun> runs, const JudgmentSet& judgments,
                                      const SweepOptions& options = {});

void write_sweep(std::ostream& out, std::span<const SweepRow> rows, int cutoff = 10);

}  // namespace wspam
