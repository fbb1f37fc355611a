#include "uad/detect.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace uad {

Verdict classify(const Model& model, const SymbolSequence& seq, const ClassifierConfig& cfg) {
    Verdict v;
    v.score = model.sequence_log_probability(seq);
    v.subsequence_scores = {v.score};
    v.label = v.score >= cfg.threshold ? VerdictLabel::normal : VerdictLabel::anomalous;
    return v;
}

std::vector<double> subsequence_scores(const Model& model, const SymbolSequence& seq,
                                       std::size_t subseq_length) {
    if (subseq_length < 1)
        throw Error(ErrorCode::invalid_spec, "subsequence length must be at least 1");
    std::vector<double> scores;
    scores.reserve(seq.size() / subseq_length);
    for (std::size_t start = 0; start + subseq_length <= seq.size(); start += subseq_length) {
        Scorer scorer(model);
        for (std::size_t i = 0; i < subseq_length; ++i) scorer.push(seq[start + i]);
        scores.push_back(scorer.total());
    }
    return scores;
}

Verdict majority_classify(const Model& model, const SymbolSequence& seq,
                          const ClassifierConfig& cfg) {
    if (seq.size() < cfg.subseq_length)
        throw Error(ErrorCode::too_short, "sequence of length " + std::to_string(seq.size()) +
                                              " is shorter than one subsequence of " +
                                              std::to_string(cfg.subseq_length));
    Verdict v;
    v.subsequence_scores = subsequence_scores(model, seq, cfg.subseq_length);
    if (v.subsequence_scores.size() < std::max<std::size_t>(cfg.min_subsequences, 1))
        throw Error(ErrorCode::too_short,
                    "sequence yields " + std::to_string(v.subsequence_scores.size()) +
                        " subsequences, fewer than the required " +
                        std::to_string(cfg.min_subsequences));
    std::size_t normal_votes = 0;
    for (double s : v.subsequence_scores)
        if (s >= cfg.threshold) ++normal_votes;
    const std::size_t anomalous_votes = v.subsequence_scores.size() - normal_votes;
    v.score = static_cast<double>(normal_votes);
    v.label = normal_votes > anomalous_votes ? VerdictLabel::normal : VerdictLabel::anomalous;
    return v;
}

double majority_pivot_score(std::span<const double> scores) {
    if (scores.empty())
        throw Error(ErrorCode::insufficient_data, "no subsequence scores to vote over");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t rank = (sorted.size() + 1) / 2;  // ceil(m/2), 1-indexed
    return sorted[rank - 1];
}

RocReport roc_curve(std::span<const double> normal_scores,
                    std::span<const double> anomalous_scores) {
    if (normal_scores.empty() || anomalous_scores.empty())
        throw Error(ErrorCode::insufficient_data,
                    "ROC needs scores from both classes");

    std::set<double> distinct(normal_scores.begin(), normal_scores.end());
    distinct.insert(anomalous_scores.begin(), anomalous_scores.end());
    std::vector<double> thresholds;
    thresholds.reserve(distinct.size() + 2);
    thresholds.push_back(*distinct.begin() - 1.0);
    thresholds.insert(thresholds.end(), distinct.begin(), distinct.end());
    thresholds.push_back(*distinct.rbegin() + 1.0);

    std::vector<double> normal_sorted(normal_scores.begin(), normal_scores.end());
    std::vector<double> anomalous_sorted(anomalous_scores.begin(), anomalous_scores.end());
    std::sort(normal_sorted.begin(), normal_sorted.end());
    std::sort(anomalous_sorted.begin(), anomalous_sorted.end());

    auto below = [](const std::vector<double>& sorted, double t) {
        return static_cast<std::uint64_t>(
            std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    };

    RocReport report;
    report.points.reserve(thresholds.size());
    const auto n_normal = static_cast<std::uint64_t>(normal_sorted.size());
    const auto n_anomalous = static_cast<std::uint64_t>(anomalous_sorted.size());
    for (double t : thresholds) {
        RocPoint p;
        p.threshold = t;
        p.fp = below(normal_sorted, t);           // normal flagged anomalous
        p.tn = n_normal - p.fp;
        p.tp = below(anomalous_sorted, t);        // anomalous flagged anomalous
        p.fn = n_anomalous - p.tp;
        p.fpr = static_cast<double>(p.fp) / static_cast<double>(n_normal);
        p.tpr = static_cast<double>(p.tp) / static_cast<double>(n_anomalous);
        report.points.push_back(p);
    }

    // Collapse equal-FPR runs to their best TPR, then trapezoid.
    std::vector<std::pair<double, double>> curve;  // (fpr, tpr), fpr ascending
    for (const RocPoint& p : report.points) {
        if (!curve.empty() && curve.back().first == p.fpr)
            curve.back().second = std::max(curve.back().second, p.tpr);
        else
            curve.emplace_back(p.fpr, p.tpr);
    }
    double auc = 0.0;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        auc += 0.5 * (curve[i].second + curve[i + 1].second) *
               (curve[i + 1].first - curve[i].first);
    report.auc = auc;
    return report;
}

double threshold_for_fpr(std::span<const double> normal_scores, double target_fpr) {
    if (normal_scores.empty())
        throw Error(ErrorCode::insufficient_data, "no normal scores to calibrate on");
    if (target_fpr < 0.0 || target_fpr > 1.0)
        throw Error(ErrorCode::invalid_spec, "target FPR must lie in [0, 1]");
    std::vector<double> sorted(normal_scores.begin(), normal_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    // Largest allowed count of normal scores strictly below the threshold.
    const auto allowed = static_cast<std::size_t>(
        std::floor(target_fpr * static_cast<double>(n) + 1e-9));
    if (allowed >= n) return sorted.back() + 1.0;
    return sorted[allowed];
}

}  // namespace uad
