#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uad/detect.hpp"
#include "uad/preprocess.hpp"
#include "uad/profile.hpp"

namespace uad {

// File formats exchanged between commands. All writers emit byte-stable
// output for identical inputs; doubles are printed with round-trip
// precision.

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// --- symbol sequence CSV: "seq_id,label,symbols" rows, symbols space
// separated; '#' lines are comments ---
struct LabeledSequence {
    std::string id;
    Label label = Label::good;
    SymbolSequence symbols;
};

std::string format_sequences_csv(std::span<const LabeledSequence> sequences,
                                 std::span<const std::string> header_comments);
std::vector<LabeledSequence> parse_sequences_csv(std::string_view text);

// --- transaction CSV in the ingestion schema; each sequence becomes one
// flow whose consecutive event times differ by exactly the symbol value ---
std::string format_flows_csv(std::span<const LabeledSequence> sequences,
                             std::span<const std::string> header_comments);

// --- window histogram CSV: support descriptor in the header comments,
// then (key, probability) rows ---
std::string format_histogram_csv(const WindowHistogram& hist);
WindowHistogram parse_histogram_csv(std::string_view text);

// --- tuple distribution CSV ---
std::string format_distribution_csv(const TupleDistribution& dist);
TupleDistribution parse_distribution_csv(std::string_view text);

// --- ROC CSV: threshold_log2,fpr,tpr,tp,fp,tn,fn rows plus an AUC
// summary line ---
std::string format_roc_csv(const RocReport& report, std::span<const std::string> header_comments);

}  // namespace uad
