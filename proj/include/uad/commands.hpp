#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uad/preprocess.hpp"
#include "uad/synth.hpp"

namespace uad {

// Which labeled flows feed training.
enum class TrainingMode { negative_only, positive_only, unsupervised };

// Seeded 50/50 train/test partition by flow identity.
enum class SplitHalf { none, train, test };

struct RunConfig {
    std::string input_path;
    std::string model_path;
    std::string out_path;
    std::string reference_path;        // compare/hist: reference histogram file
    std::string map_path;              // category mapping for call-trace input
    std::vector<std::string> against;  // compare: models for tuple-mode distances

    FeatureKind feature = FeatureKind::TD;
    int levels = 7;
    bool lenient = false;

    std::size_t subseq_length = 10;
    std::optional<double> threshold_log2;
    std::optional<double> threshold_linear;
    std::optional<double> target_fpr;
    std::vector<std::size_t> subseq_sweep = {1};

    TrainingMode mode = TrainingMode::negative_only;
    SplitHalf split = SplitHalf::none;

    SourceSpec source;                  // synth
    std::string synth_format = "symbols";
    Label synth_label = Label::good;

    int window_length = 20;
    int bins = 64;
    int stride = 1;
    std::optional<int> tuple_length;
    std::uint64_t enumeration_cap = 1'000'000;
    std::uint64_t sample_count = 200'000;

    std::uint64_t seed = 0;
};

// Splits flows into two halves by a seeded hash of (client, host, label),
// so no flow can land in both.
std::pair<std::vector<Flow>, std::vector<Flow>> split_flows_half(const std::vector<Flow>& flows,
                                                                 std::uint64_t seed);

void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_score(const RunConfig& cfg, std::ostream& log);
void cmd_eval(const RunConfig& cfg, std::ostream& log);
void cmd_synth(const RunConfig& cfg, std::ostream& log);
void cmd_hist(const RunConfig& cfg, std::ostream& log);
void cmd_compare(const RunConfig& cfg, std::ostream& log);

}  // namespace uad
