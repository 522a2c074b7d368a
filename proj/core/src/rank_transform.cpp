#include "wspam/rank_transform.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "wspam/error.hpp"
#include "wspam/io.hpp"
#include "wspam/random.hpp"

namespace wspam {

namespace {

constexpr int kThresholdCount = 101;
constexpr double kTieTolerance = 1e-9;

void check_threshold(int t) {
    if (t < 0 || t > 100) throw InvalidArgument("threshold must be in [0, 100], got " + std::to_string(t));
}

bool survives(int percentile, int t) noexcept { return t < 100 && percentile >= t; }

// estP@k of the list filtered at every t, for k = 1..depth, laid out as
// table[t * depth + k - 1].
std::vector<double> threshold_table(const TrainingTopic& topic, int depth) {
    std::vector<JudgedDoc> judged;
    std::vector<int> pct;
    if (topic.topic) {
        for (const auto& d : topic.topic->docs) {
            const Judgment* j = topic.judgments->find(d.doc_id);
            judged.push_back(j ? JudgedDoc{j->relevant() ? JudgedDoc::Status::relevant : JudgedDoc::Status::nonrelevant,
                                           j->weight()}
                               : JudgedDoc{});
            pct.push_back(d.percentile);
        }
    }
    const auto d = static_cast<std::size_t>(depth);
    std::vector<double> table(kThresholdCount * d);
    std::vector<JudgedDoc> filtered;
    for (int t = 0; t < kThresholdCount; ++t) {
        filtered.clear();
        for (std::size_t i = 0; i < judged.size(); ++i) {
            if (survives(pct[i], t)) filtered.push_back(judged[i]);
        }
        double statrel = 0.0;
        double statnrel = 0.0;
        int rel = 0;
        int nrel = 0;
        std::size_t taken = 0;
        for (int k = 1; k <= depth; ++k) {
            if (taken < filtered.size()) {
                const JudgedDoc& doc = filtered[taken++];
                if (doc.status == JudgedDoc::Status::relevant) {
                    statrel += doc.weight;
                    ++rel;
                } else if (doc.status == JudgedDoc::Status::nonrelevant) {
                    statnrel += doc.weight;
                    ++nrel;
                }
            }
            const double estrel = std::min(statrel, static_cast<double>(k - nrel));
            const double estnrel = std::min(statnrel, static_cast<double>(k - rel));
            table[static_cast<std::size_t>(t) * d + static_cast<std::size_t>(k - 1)] =
                estrel / std::max(estrel + estnrel, 1.0);
        }
    }
    return table;
}

ThresholdProfile best_thresholds(std::span<const std::vector<double>* const> tables, int depth) {
    const auto d = static_cast<std::size_t>(depth);
    std::vector<double> sums(kThresholdCount * d, 0.0);
    for (const auto* table : tables) {
        for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += (*table)[i];
    }
    ThresholdProfile profile;
    profile.thresholds.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        // Sums within kTieTolerance count as equal so that rounding in the
        // summation order cannot displace the smallest maximizer.
        int best = 0;
        for (int t = 1; t < kThresholdCount; ++t) {
            if (sums[static_cast<std::size_t>(t) * d + k] >
                sums[static_cast<std::size_t>(best) * d + k] + kTieTolerance) {
                best = t;
            }
        }
        profile.thresholds[k] = best;
    }
    return profile;
}

void check_depth(int depth) {
    if (depth < 1) throw InvalidArgument("profile depth must be at least 1");
}

std::vector<RankedDoc> plain(std::span<const AnnotatedDoc> docs) {
    std::vector<RankedDoc> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back({d.doc_id, d.score});
    return out;
}

std::vector<RankedDoc> rescored(std::span<const AnnotatedDoc> docs) {
    std::vector<RankedDoc> out;
    out.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out.push_back({docs[i].doc_id, static_cast<double>(docs.size() - i)});
    }
    return out;
}

}  // namespace

const AnnotatedTopic* SpamAnnotatedRun::find(std::string_view topic) const {
    for (const auto& t : topics) {
        if (t.topic == topic) return &t;
    }
    return nullptr;
}

SpamAnnotatedRun annotate(const RankedRun& run, const PercentileTable& percentiles, int missing_percentile) {
    check_threshold(missing_percentile);
    SpamAnnotatedRun out;
    out.run_id = run.run_id;
    for (const auto& t : run.topics) {
        AnnotatedTopic at{t.topic, {}};
        at.docs.reserve(t.docs.size());
        for (const auto& d : t.docs) {
            at.docs.push_back({d.doc_id, d.score, percentiles.find(d.doc_id).value_or(missing_percentile)});
        }
        out.topics.push_back(std::move(at));
    }
    return out;
}

std::unordered_set<std::string> retrieved_ids(std::span<const RankedRun> runs) {
    std::unordered_set<std::string> out;
    for (const auto& run : runs) {
        for (const auto& t : run.topics) {
            for (const auto& d : t.docs) out.insert(d.doc_id);
        }
    }
    return out;
}

RankedRun filter_run(const SpamAnnotatedRun& run, int t) {
    check_threshold(t);
    RankedRun out;
    out.run_id = run.run_id + ".filtered.t" + std::to_string(t);
    for (const auto& topic : run.topics) {
        TopicRanking tr{topic.topic, {}};
        for (const auto& d : topic.docs) {
            if (survives(d.percentile, t)) tr.docs.push_back({d.doc_id, d.score});
        }
        out.topics.push_back(std::move(tr));
    }
    return out;
}

bool random_control_drops(std::string_view doc_id, int t, std::uint64_t seed) noexcept {
    return static_cast<int>(seeded_hash(doc_id, seed) % 100) < t;
}

RankedRun random_control(const RankedRun& run, int t, std::uint64_t seed) {
    check_threshold(t);
    RankedRun out;
    out.run_id = run.run_id + ".random.t" + std::to_string(t);
    for (const auto& topic : run.topics) {
        TopicRanking tr{topic.topic, {}};
        for (const auto& d : topic.docs) {
            if (!random_control_drops(d.doc_id, t, seed)) tr.docs.push_back(d);
        }
        out.topics.push_back(std::move(tr));
    }
    return out;
}

void write_profile(std::ostream& out, const ThresholdProfile& profile) {
    for (std::size_t k = 0; k < profile.thresholds.size(); ++k) {
        out << (k + 1) << '\t' << profile.thresholds[k] << '\n';
    }
}

void write_profile(const std::filesystem::path& path, const ThresholdProfile& profile) {
    AtomicFile file(path);
    write_profile(file.stream(), profile);
    file.commit();
}

ThresholdProfile read_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    ThresholdProfile profile;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto f = split_whitespace(chomp(raw));
        if (f.empty()) continue;
        long long k = 0;
        long long t = 0;
        if (f.size() != 2 || !parse_int(f[0], k) || !parse_int(f[1], t) ||
            k != static_cast<long long>(profile.thresholds.size()) + 1 || t < 0 || t > 100) {
            throw DataError("expected '<k> <threshold>' with consecutive k and threshold in [0, 100]", path.string(),
                            line_no);
        }
        profile.thresholds.push_back(static_cast<int>(t));
    }
    return profile;
}

ThresholdProfile optimize_thresholds(std::span<const TrainingTopic> training, int depth) {
    check_depth(depth);
    if (training.empty()) throw InvalidArgument("threshold optimization needs at least one judged topic");
    std::vector<std::vector<double>> tables;
    tables.reserve(training.size());
    for (const auto& t : training) {
        if (!t.judgments) throw InvalidArgument("training topic without judgments");
        tables.push_back(threshold_table(t, depth));
    }
    std::vector<const std::vector<double>*> refs;
    for (const auto& t : tables) refs.push_back(&t);
    return best_thresholds(refs, depth);
}

std::vector<AnnotatedDoc> rerank(std::span<const AnnotatedDoc> docs, const ThresholdProfile& profile) {
    std::vector<AnnotatedDoc> out;
    out.reserve(docs.size());
    std::vector<bool> placed(docs.size(), false);
    std::size_t first_unplaced = 0;
    for (std::size_t position = 1; position <= docs.size(); ++position) {
        const int t = profile.at(position);
        while (placed[first_unplaced]) ++first_unplaced;
        std::size_t pick = docs.size();
        for (std::size_t i = first_unplaced; i < docs.size(); ++i) {
            if (!placed[i] && docs[i].percentile >= t) {
                pick = i;
                break;
            }
        }
        if (pick == docs.size()) pick = first_unplaced;
        placed[pick] = true;
        out.push_back(docs[pick]);
    }
    return out;
}

RankedRun rerank(const SpamAnnotatedRun& run, const ThresholdProfile& profile) {
    RankedRun out;
    out.run_id = run.run_id + ".reranked";
    for (const auto& topic : run.topics) out.topics.push_back({topic.topic, rescored(rerank(topic.docs, profile))});
    return out;
}

namespace {

std::vector<TrainingTopic> judged_topics(const SpamAnnotatedRun& run, const JudgmentSet& judgments,
                                         std::vector<std::string>& names) {
    names = judgments.topics();
    std::vector<TrainingTopic> out;
    for (const auto& name : names) out.push_back({run.find(name), judgments.find(name)});
    return out;
}

}  // namespace

ThresholdProfile learn_profile_excluding(const SpamAnnotatedRun& run, const JudgmentSet& judgments,
                                        std::string_view held_out, int depth) {
    std::vector<std::string> names;
    const auto all = judged_topics(run, judgments, names);
    std::vector<TrainingTopic> training;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (names[i] != held_out) training.push_back(all[i]);
    }
    return optimize_thresholds(training, depth);
}

std::size_t CrossValidationResult::metric_index(std::string_view name) const {
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (metrics[i] == name) return i;
    }
    throw InvalidArgument("no metric named " + std::string(name));
}

CrossValidationResult cross_validate(const SpamAnnotatedRun& run, const JudgmentSet& judgments,
                                     const CrossValidationOptions& options) {
    check_depth(options.depth);
    std::vector<std::string> names;
    const auto topics = judged_topics(run, judgments, names);
    if (topics.size() < 2) throw InvalidArgument("cross-validation needs at least two judged topics");

    std::vector<std::vector<double>> tables;
    tables.reserve(topics.size());
    for (const auto& t : topics) tables.push_back(threshold_table(t, options.depth));

    const EvalOptions eval{options.cutoffs, options.depth};
    CrossValidationResult result;
    result.run_id = run.run_id;
    std::vector<const std::vector<double>*> training;
    for (std::size_t held = 0; held < topics.size(); ++held) {
        training.clear();
        for (std::size_t i = 0; i < topics.size(); ++i) {
            if (i != held) training.push_back(&tables[i]);
        }
        const ThresholdProfile profile = best_thresholds(training, options.depth);
        const std::span<const AnnotatedDoc> docs =
            topics[held].topic ? std::span<const AnnotatedDoc>(topics[held].topic->docs) : std::span<const AnnotatedDoc>{};
        const auto original = plain(docs);
        const auto reranked = rescored(rerank(docs, profile));
        const auto before = evaluate_topic(names[held], original, *topics[held].judgments, eval);
        const auto after = evaluate_topic(names[held], reranked, *topics[held].judgments, eval);
        if (result.metrics.empty()) {
            for (const auto& v : before.values) result.metrics.push_back(v.name);
        }
        CrossValidationResult::TopicRow row{names[held], {}, {}};
        for (std::size_t m = 0; m < before.values.size(); ++m) {
            row.original.push_back(before.values[m].value);
            row.reranked.push_back(after.values[m].value);
        }
        result.topics.push_back(std::move(row));
    }

    const std::size_t metric_count = result.metrics.size();
    const auto n = static_cast<double>(result.topics.size());
    for (std::size_t m = 0; m < metric_count; ++m) {
        std::vector<double> a;
        std::vector<double> b;
        for (const auto& row : result.topics) {
            a.push_back(row.original[m]);
            b.push_back(row.reranked[m]);
        }
        double sa = 0.0;
        double sb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sa += a[i];
            sb += b[i];
        }
        result.mean_original.push_back(sa / n);
        result.mean_reranked.push_back(sb / n);
        result.p_values.push_back(sign_test_one_tailed(a, b));
    }

    // Output run: judged topics use their held-out profile; topics without
    // judgments use a profile learned on every judged topic.
    const ThresholdProfile full = [&] {
        std::vector<const std::vector<double>*> all;
        for (const auto& t : tables) all.push_back(&t);
        return best_thresholds(all, options.depth);
    }();
    result.reranked.run_id = run.run_id + ".reranked";
    for (const auto& topic : run.topics) {
        const auto it = std::find(names.begin(), names.end(), topic.topic);
        ThresholdProfile profile = full;
        if (it != names.end()) {
            const auto held = static_cast<std::size_t>(it - names.begin());
            training.clear();
            for (std::size_t i = 0; i < tables.size(); ++i) {
                if (i != held) training.push_back(&tables[i]);
            }
            profile = best_thresholds(training, options.depth);
        }
        result.reranked.topics.push_back({topic.topic, rescored(rerank(topic.docs, profile))});
    }
    return result;
}

void write_cross_validation(std::ostream& out, const CrossValidationResult& result) {
    for (const auto& row : result.topics) {
        for (std::size_t m = 0; m < result.metrics.size(); ++m) {
            out << result.run_id << '\t' << result.metrics[m] << '\t' << row.topic << '\t'
                << format_fixed(row.original[m], 4) << '\t' << format_fixed(row.reranked[m], 4) << '\n';
        }
    }
    for (std::size_t m = 0; m < result.metrics.size(); ++m) {
        out << result.run_id << '\t' << result.metrics[m] << "\tall\t" << format_fixed(result.mean_original[m], 4)
            << '\t' << format_fixed(result.mean_reranked[m], 4) << '\t' << format_double_sig(result.p_values[m], 4)
            << '\n';
    }
}

std::vector<SweepRow> threshold_sweep(std::span<const SpamAnnotatedRun> runs, const JudgmentSet& judgments,
                                      const SweepOptions& options) {
    if (options.grid.empty()) throw InvalidArgument("threshold grid is empty");
    for (int t : options.grid) check_threshold(t);
    const EvalOptions eval{{options.cutoff}, 1000};
    const std::string metric = "estP" + std::to_string(options.cutoff);
    auto mean_estp = [&](const RankedRun& r) {
        const EvalReport report = evaluate(r, judgments, eval);
        const MetricValue* m = report.mean(metric);
        return m ? m->value : 0.0;
    };
    std::vector<SweepRow> rows;
    for (const auto& run : runs) {
        RankedRun original;
        original.run_id = run.run_id;
        for (const auto& t : run.topics) original.topics.push_back({t.topic, plain(t.docs)});
        for (int t : options.grid) {
            rows.push_back({run.run_id, t, mean_estp(filter_run(run, t)),
                            mean_estp(random_control(original, t, options.seed))});
        }
    }
    return rows;
}

void write_sweep(std::ostream& out, std::span<const SweepRow> rows, int cutoff) {
    const std::string k = std::to_string(cutoff);
    out << "run_id\tthreshold\testP" << k << "\trandom_estP" << k << '\n';
    for (const auto& r : rows) {
        out << r.run_id << '\t' << r.threshold << '\t' << format_fixed(r.filtered, 4) << '\t'
            << format_fixed(r.random_control, 4) << '\n';
    }
}

}  // namespace wspam
