#pragma once

// Brute-force restatements of the measures, written from their
// definitions without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace wspam::testing {

// One ranked document: status -1 unjudged, 0 nonrelevant, 1 relevant;
// prob is the inclusion probability of a judged document.
struct OracleDoc {
    int status = -1;
    double prob = 1.0;
};

struct OracleStat {
    double statrel = 0, statnrel = 0;
    int rel = 0, nrel = 0;
};

inline OracleStat oracle_statrel(const std::vector<OracleDoc>& list, int k) {
    OracleStat s;
    for (int i = 0; i < k && i < static_cast<int>(list.size()); ++i) {
        if (list[i].status == 1) {
            s.statrel += 1.0 / list[i].prob;
            s.rel += 1;
        } else if (list[i].status == 0) {
            s.statnrel += 1.0 / list[i].prob;
            s.nrel += 1;
        }
    }
    return s;
}

inline double oracle_estp(const std::vector<OracleDoc>& list, int k) {
    const OracleStat s = oracle_statrel(list, k);
    double estrel = s.statrel;
    if (k - s.nrel < estrel) estrel = k - s.nrel;
    double estnrel = s.statnrel;
    if (k - s.rel < estnrel) estnrel = k - s.rel;
    double denom = estrel + estnrel;
    if (denom < 1) denom = 1;
    return estrel / denom;
}

// Exact P@k counting unjudged documents as nonrelevant.
inline double oracle_precision(const std::vector<OracleDoc>& list, int k) {
    int hits = 0;
    for (int i = 0; i < k && i < static_cast<int>(list.size()); ++i) hits += list[i].status == 1;
    return static_cast<double>(hits) / k;
}

inline std::vector<OracleDoc> oracle_elide(const std::vector<OracleDoc>& list) {
    std::vector<OracleDoc> out;
    for (const auto& d : list) {
        if (d.status != -1) out.push_back(d);
    }
    return out;
}

inline double oracle_ap(const std::vector<OracleDoc>& list, std::size_t R, std::size_t depth) {
    if (R == 0) return 0.0;
    double sum = 0;
    for (std::size_t k = 1; k <= depth && k <= list.size(); ++k) {
        if (list[k - 1].status == 1) sum += oracle_precision(list, static_cast<int>(k));
    }
    return sum / static_cast<double>(R);
}

// Area under the curve by enumerating every positive/negative pair.
inline double oracle_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0;
    for (double p : pos) {
        for (double n : neg) wins += p > n ? 1.0 : p == n ? 0.5 : 0.0;
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// floor(100 * |{s' >= s}| / N) for every score, by direct counting.
inline std::vector<int> oracle_percentiles(const std::vector<double>& scores) {
    std::vector<int> out;
    out.reserve(scores.size());
    const auto n = static_cast<long long>(scores.size());
    for (double s : scores) {
        long long ge = 0;
        for (double t : scores) ge += t >= s;
        out.push_back(static_cast<int>((100 * ge) / n));
    }
    return out;
}

// P(X >= successes) for X ~ Binomial(trials, 1/2), by exact summation of
// binomial coefficients in long double.
inline double oracle_sign_tail(int successes, int trials) {
    long double total = 0;
    long double coef = 1;  // C(trials, 0)
    for (int i = 0; i <= trials; ++i) {
        if (i >= successes) total += coef;
        coef = coef * (trials - i) / (i + 1);
    }
    return static_cast<double>(total / std::pow(2.0L, trials));
}

}  // namespace wspam::testing
