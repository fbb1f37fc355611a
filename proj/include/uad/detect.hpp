#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uad/error.hpp"
#include "uad/model.hpp"

namespace uad {

struct ClassifierConfig {
    double threshold = 0.0;            // log2 domain
    std::size_t subseq_length = 10;
    std::size_t min_subsequences = 1;
};

enum class VerdictLabel { normal, anomalous };

struct Verdict {
    VerdictLabel label = VerdictLabel::normal;
    // Whole-input log2 probability for classify; count of normal votes
    // for majority_classify.
    double score = 0.0;
    std::vector<double> subsequence_scores;
};

// Normal iff the sequence's log2 probability is >= threshold (inclusive).
Verdict classify(const Model& model, const SymbolSequence& seq, const ClassifierConfig& cfg);

// log2 score of each consecutive non-overlapping length-L subsequence;
// a trailing remainder shorter than L is dropped.
std::vector<double> subsequence_scores(const Model& model, const SymbolSequence& seq,
                                       std::size_t subseq_length);

// Thresholds each length-L subsequence and takes the majority; an exact
// tie counts as anomalous.
Verdict majority_classify(const Model& model, const SymbolSequence& seq,
                          const ClassifierConfig& cfg);

// Scalar reduction of the majority vote: the ceil(m/2)-th smallest
// subsequence score. Comparing it to a threshold reproduces the majority
// decision at that threshold (tie -> anomalous), which makes majority
// classification ROC-sweepable like any score.
double majority_pivot_score(std::span<const double> scores);

struct RocPoint {
    double threshold = 0.0;  // log2 domain
    double fpr = 0.0;
    double tpr = 0.0;
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct RocReport {
    std::vector<RocPoint> points;  // sorted by threshold
    double auc = 0.0;
};

// Sweeps thresholds over the union of both score lists (plus sentinels
// past both ends). Anomalous is the positive class and a sequence is
// flagged when its score falls below the threshold. AUC is the
// trapezoidal integral over points sorted by FPR, keeping the maximum
// TPR among equal FPRs.
RocReport roc_curve(std::span<const double> normal_scores, std::span<const double> anomalous_scores);

// Largest threshold whose false positive rate on the given normal scores
// stays within the target.
double threshold_for_fpr(std::span<const double> normal_scores, double target_fpr);

}  // namespace uad
