#include "wspam/trec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "wspam/diagnostics.hpp"
#include "wspam/error.hpp"
#include "wspam/io.hpp"

namespace wspam {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

bool topic_less(std::string_view a, std::string_view b) {
    if (all_digits(a) && all_digits(b)) {
        while (a.size() > 1 && a.front() == '0') a.remove_prefix(1);
        while (b.size() > 1 && b.front() == '0') b.remove_prefix(1);
        if (a.size() != b.size()) return a.size() < b.size();
    }
    return a < b;
}

const TopicRanking* RankedRun::find(std::string_view topic) const {
    for (const auto& t : topics) {
        if (t.topic == topic) return &t;
    }
    return nullptr;
}

RankedRun parse_run(std::istream& in, const std::string& source_name) {
    RankedRun run;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::unordered_set<std::string>> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = chomp(raw);
        const auto f = split_whitespace(line);
        if (f.empty()) continue;
        long long rank = 0;
        double score = 0.0;
        if (f.size() != 6) throw DataError("expected 'topic Q0 doc_id rank score tag'", source_name, line_no);
        if (!parse_int(f[3], rank)) throw DataError("bad rank '" + std::string(f[3]) + "'", source_name, line_no);
        if (!parse_double(f[4], score)) throw DataError("bad score '" + std::string(f[4]) + "'", source_name, line_no);
        if (run.run_id.empty()) run.run_id = f[5];
        const std::string topic(f[0]);
        auto [it, inserted] = index.try_emplace(topic, run.topics.size());
        if (inserted) {
            run.topics.push_back({topic, {}});
            seen.emplace_back();
        }
        std::string doc(f[2]);
        if (!seen[it->second].insert(doc).second) {
            throw DataError("document " + doc + " listed twice for topic " + topic, source_name, line_no);
        }
        run.topics[it->second].docs.push_back({std::move(doc), score});
    }
    for (auto& t : run.topics) {
        std::stable_sort(t.docs.begin(), t.docs.end(),
                         [](const RankedDoc& a, const RankedDoc& b) { return a.score > b.score; });
    }
    return run;
}

RankedRun read_run(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_run(in, path.string());
}

void write_run(std::ostream& out, const RankedRun& run, std::string_view tag) {
    const std::string_view name = tag.empty() ? std::string_view(run.run_id) : tag;
    for (const auto& t : run.topics) {
        for (std::size_t i = 0; i < t.docs.size(); ++i) {
            out << t.topic << " Q0 " << t.docs[i].doc_id << ' ' << (i + 1) << ' '
                << format_double_exact(t.docs[i].score) << ' ' << name << '\n';
        }
    }
}

void write_run(const std::filesystem::path& path, const RankedRun& run, std::string_view tag) {
    AtomicFile file(path);
    write_run(file.stream(), run, tag);
    file.commit();
}

void TopicJudgments::set(const std::string& doc_id, Judgment j) { docs_[doc_id] = j; }

const Judgment* TopicJudgments::find(std::string_view doc_id) const {
    auto it = docs_.find(std::string(doc_id));
    return it == docs_.end() ? nullptr : &it->second;
}

std::size_t TopicJudgments::relevant_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [id, j] : docs_) n += j.relevant() ? 1 : 0;
    return n;
}

double TopicJudgments::relevant_weight() const noexcept {
    // Sum in a fixed order so the estimate does not depend on hashing.
    std::vector<double> w;
    for (const auto& [id, j] : docs_) {
        if (j.relevant()) w.push_back(j.weight());
    }
    std::sort(w.begin(), w.end());
    double sum = 0.0;
    for (double x : w) sum += x;
    return sum;
}

bool JudgmentSet::set(const std::string& topic, const std::string& doc_id, Judgment j) {
    auto& t = topics_[topic];
    const bool fresh = t.find(doc_id) == nullptr;
    t.set(doc_id, j);
    return fresh;
}

const TopicJudgments* JudgmentSet::find(std::string_view topic) const {
    auto it = topics_.find(std::string(topic));
    return it == topics_.end() ? nullptr : &it->second;
}

std::vector<std::string> JudgmentSet::topics() const {
    std::vector<std::string> out;
    for (const auto& [t, j] : topics_) out.push_back(t);
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) { return topic_less(a, b); });
    return out;
}

JudgmentSet JudgmentSet::complemented() const {
    JudgmentSet out;
    for (const auto& [topic, tj] : topics_) {
        for (const auto& [doc, j] : tj.docs()) {
            out.set(topic, doc, {j.relevant() ? 0 : 1, j.probability});
        }
    }
    return out;
}

JudgmentSet parse_judgments(std::istream& in, const std::string& source_name, JudgmentFormat format) {
    JudgmentSet out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto f = split_whitespace(chomp(raw));
        if (f.empty()) continue;
        if (f.size() != 4) throw DataError("expected 4 whitespace-separated fields", source_name, line_no);
        long long grade = 0;
        double prob = 1.0;
        if (format == JudgmentFormat::automatic) {
            long long a = 0;
            long long b = 0;
            format = parse_int(f[1], a) && parse_int(f[3], b) ? JudgmentFormat::qrels : JudgmentFormat::probabilistic;
        }
        std::string_view doc;
        if (format == JudgmentFormat::qrels) {
            doc = f[2];
            if (!parse_int(f[3], grade)) throw DataError("bad grade '" + std::string(f[3]) + "'", source_name, line_no);
        } else {
            doc = f[1];
            if (!parse_int(f[2], grade)) throw DataError("bad grade '" + std::string(f[2]) + "'", source_name, line_no);
            if (!parse_double(f[3], prob)) {
                throw DataError("bad probability '" + std::string(f[3]) + "'", source_name, line_no);
            }
            if (!(prob > 0.0) || prob > 1.0) {
                throw DataError("inclusion probability must be in (0, 1]", source_name, line_no);
            }
        }
        if (!out.set(std::string(f[0]), std::string(doc), {static_cast<int>(grade), prob})) {
            warn(source_name + ":" + std::to_string(line_no) + ": duplicate judgment for topic " + std::string(f[0]) +
                 " document " + std::string(doc) + "; keeping the last");
        }
    }
    return out;
}

JudgmentSet read_judgments(const std::filesystem::path& path, JudgmentFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_judgments(in, path.string(), format);
}

void write_judgments(std::ostream& out, const JudgmentSet& judgments, JudgmentFormat format) {
    for (const auto& topic : judgments.topics()) {
        const auto* tj = judgments.find(topic);
        std::vector<std::pair<std::string, Judgment>> docs(tj->docs().begin(), tj->docs().end());
        std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [doc, j] : docs) {
            if (format == JudgmentFormat::probabilistic) {
                out << topic << ' ' << doc << ' ' << j.grade << ' ' << format_double_exact(j.probability) << '\n';
            } else {
                out << topic << " 0 " << doc << ' ' << j.grade << '\n';
            }
        }
    }
}

std::vector<JudgedDoc> judge(std::span<const RankedDoc> ranking, const TopicJudgments& judgments) {
    std::vector<JudgedDoc> out;
    out.reserve(ranking.size());
    for (const auto& d : ranking) {
        const Judgment* j = judgments.find(d.doc_id);
        if (!j) {
            out.push_back({});
        } else {
            out.push_back({j->relevant() ? JudgedDoc::Status::relevant : JudgedDoc::Status::nonrelevant, j->weight()});
        }
    }
    return out;
}

StatRel statrel(std::span<const JudgedDoc> list, int k) {
    StatRel s;
    const std::size_t n = std::min(list.size(), static_cast<std::size_t>(std::max(k, 0)));
    for (std::size_t i = 0; i < n; ++i) {
        if (list[i].status == JudgedDoc::Status::relevant) {
            s.statrel += list[i].weight;
            ++s.rel;
        } else if (list[i].status == JudgedDoc::Status::nonrelevant) {
            s.statnrel += list[i].weight;
            ++s.nrel;
        }
    }
    return s;
}

double est_precision(std::span<const JudgedDoc> list, int k) {
    const StatRel s = statrel(list, k);
    const double estrel = std::min(s.statrel, static_cast<double>(k - s.nrel));
    const double estnrel = std::min(s.statnrel, static_cast<double>(k - s.rel));
    return estrel / std::max(estrel + estnrel, 1.0);
}

double stat_precision(std::span<const JudgedDoc> list, int k) {
    return statrel(list, k).statrel / static_cast<double>(k);
}

PrecisionVariants precision_variants(std::span<const JudgedDoc> list, int k) {
    PrecisionVariants v;
    v.unjudged_nonrelevant = static_cast<double>(statrel(list, k).rel) / k;
    int judged = 0;
    int relevant = 0;
    for (const auto& d : list) {
        if (judged == k) break;
        if (d.status == JudgedDoc::Status::unjudged) continue;
        ++judged;
        relevant += d.status == JudgedDoc::Status::relevant ? 1 : 0;
    }
    v.unjudged_elided = static_cast<double>(relevant) / k;
    return v;
}

namespace {

double average_precision(std::span<const JudgedDoc> list, std::size_t relevant_count, bool elide) {
    double sum = 0.0;
    std::size_t position = 0;
    std::size_t hits = 0;
    for (const auto& d : list) {
        if (elide && d.status == JudgedDoc::Status::unjudged) continue;
        ++position;
        if (d.status == JudgedDoc::Status::relevant) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(position);
        }
    }
    return sum / static_cast<double>(relevant_count);
}

}  // namespace

AveragePrecisionVariants average_precision_variants(std::span<const JudgedDoc> list, std::size_t relevant_count,
                                                    int depth) {
    if (relevant_count == 0) {
        warn("average precision requested for a topic with no relevant judgments; scoring 0");
        return {};
    }
    const auto top = list.first(std::min(list.size(), static_cast<std::size_t>(std::max(depth, 0))));
    return {average_precision(top, relevant_count, false), average_precision(top, relevant_count, true)};
}

int estimated_r(const TopicJudgments& judgments) {
    const double w = judgments.relevant_weight();
    if (w <= 0.0) return 0;
    return std::max(1, static_cast<int>(std::lround(w)));
}

double est_r_precision(std::span<const JudgedDoc> list, const TopicJudgments& judgments) {
    const int r = estimated_r(judgments);
    if (r == 0) {
        warn("estimated R is 0 for a topic; estRP scored 0");
        return 0.0;
    }
    return est_precision(list, r);
}

StatRel statrel(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k) {
    return statrel(judge(ranking, judgments), k);
}

double est_precision(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k) {
    return est_precision(judge(ranking, judgments), k);
}

double stat_precision(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k) {
    return stat_precision(judge(ranking, judgments), k);
}

PrecisionVariants precision_variants(std::span<const RankedDoc> ranking, const TopicJudgments& judgments, int k) {
    return precision_variants(judge(ranking, judgments), k);
}

AveragePrecisionVariants average_precision_variants(std::span<const RankedDoc> ranking,
                                                    const TopicJudgments& judgments, int depth) {
    return average_precision_variants(judge(ranking, judgments), judgments.relevant_count(), depth);
}

double est_r_precision(std::span<const RankedDoc> ranking, const TopicJudgments& judgments) {
    return est_r_precision(judge(ranking, judgments), judgments);
}

double roc_auc(std::span<const LabeledScore> data) {
    std::vector<LabeledScore> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
    double wins = 0.0;
    double negatives_below = 0.0;
    double positives = 0.0;
    double negatives = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        double pos = 0.0;
        double neg = 0.0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].positive ? pos : neg) += 1.0;
            ++j;
        }
        wins += pos * negatives_below + 0.5 * pos * neg;
        negatives_below += neg;
        positives += pos;
        negatives += neg;
        i = j;
    }
    if (positives == 0.0 || negatives == 0.0) {
        throw InvalidArgument("AUC needs at least one positive and one negative example");
    }
    return wins / (positives * negatives);
}

std::vector<RocPoint> roc_curve(std::span<const LabeledScore> data) {
    std::vector<LabeledScore> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    double positives = 0.0;
    double negatives = 0.0;
    for (const auto& d : sorted) (d.positive ? positives : negatives) += 1.0;
    if (positives == 0.0 || negatives == 0.0) {
        throw InvalidArgument("ROC curve needs at least one positive and one negative example");
    }
    std::vector<RocPoint> curve{{0.0, 0.0}};
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].positive ? tp : fp) += 1.0;
            ++j;
        }
        curve.push_back({fp / negatives, tp / positives});
        i = j;
    }
    return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const double dx = curve[i].false_positive_rate - curve[i - 1].false_positive_rate;
        area += dx * (curve[i].true_positive_rate + curve[i - 1].true_positive_rate) / 2.0;
    }
    return area;
}

const MetricValue* EvalReport::mean(std::string_view name) const {
    for (const auto& m : means) {
        if (m.name == name) return &m;
    }
    return nullptr;
}

TopicMetrics evaluate_topic(std::string topic, std::span<const RankedDoc> ranking, const TopicJudgments& judgments,
                            const EvalOptions& options) {
    TopicMetrics tm{std::move(topic), {}};
    const auto top = ranking.first(std::min(ranking.size(), static_cast<std::size_t>(std::max(options.depth, 0))));
    const auto list = judge(top, judgments);
    for (int k : options.cutoffs) {
        const auto ks = std::to_string(k);
        const auto pv = precision_variants(list, k);
        tm.values.push_back({"estP" + ks, est_precision(list, k)});
        tm.values.push_back({"statPC" + ks, stat_precision(list, k)});
        tm.values.push_back({"P" + ks + ".unj_nrel", pv.unjudged_nonrelevant});
        tm.values.push_back({"P" + ks + ".unj_elided", pv.unjudged_elided});
    }
    const auto ap = average_precision_variants(list, judgments.relevant_count(), options.depth);
    tm.values.push_back({"AP.unj_nrel", ap.unjudged_nonrelevant});
    tm.values.push_back({"AP.unj_elided", ap.unjudged_elided});
    tm.values.push_back({"estRP", est_r_precision(list, judgments)});
    return tm;
}

EvalReport evaluate(const RankedRun& run, const JudgmentSet& judgments, const EvalOptions& options) {
    for (int k : options.cutoffs) {
        if (k < 1) throw InvalidArgument("cutoffs must be at least 1");
    }
    EvalReport report;
    report.run_id = run.run_id;
    for (const auto& topic : judgments.topics()) {
        const TopicRanking* ranking = run.find(topic);
        const std::span<const RankedDoc> docs = ranking ? std::span<const RankedDoc>(ranking->docs)
                                                        : std::span<const RankedDoc>{};
        report.topics.push_back(evaluate_topic(topic, docs, *judgments.find(topic), options));
    }
    if (!report.topics.empty()) {
        report.means = report.topics.front().values;
        for (std::size_t m = 0; m < report.means.size(); ++m) {
            double sum = 0.0;
            for (const auto& t : report.topics) sum += t.values[m].value;
            report.means[m].value = sum / static_cast<double>(report.topics.size());
        }
    }
    return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
    for (const auto& t : report.topics) {
        for (const auto& v : t.values) {
            out << report.run_id << '\t' << v.name << '\t' << t.topic << '\t' << format_fixed(v.value, 4) << '\n';
        }
    }
    for (const auto& v : report.means) {
        out << report.run_id << '\t' << v.name << "\tall\t" << format_fixed(v.value, 4) << '\n';
    }
}

double sign_test_one_tailed(std::span<const double> baseline, std::span<const double> treatment) {
    if (baseline.size() != treatment.size()) throw InvalidArgument("sign test needs paired samples");
    int wins = 0;
    int losses = 0;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (treatment[i] > baseline[i]) ++wins;
        else if (treatment[i] < baseline[i]) ++losses;
    }
    const int n = wins + losses;
    if (n == 0) return 1.0;
    // P(X >= wins), X ~ Binomial(n, 1/2), summed in log space.
    double p = 0.0;
    for (int x = wins; x <= n; ++x) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) -
                                n * std::log(2.0);
        p += std::exp(log_term);
    }
    return std::min(1.0, p);
}

}  // namespace wspam
