#include "uad/cli_app.hpp"

#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uad/commands.hpp"

namespace uad {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_spec:
        case ErrorCode::invalid_alphabet:
            return 2;
        case ErrorCode::corrupt_model:
        case ErrorCode::incompatible_model:
            return 4;
        default:
            return 3;
    }
}

namespace {

std::vector<double> parse_number_list(const std::string& text, char sep) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_spec, "bad number '" + item + "' in list");
        }
    }
    return out;
}

std::vector<std::vector<double>> parse_matrix(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_number_list(row, ','));
    return rows;
}

std::vector<std::size_t> parse_sweep(const std::string& text) {
    std::vector<std::size_t> out;
    for (double v : parse_number_list(text, ',')) {
        if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw Error(ErrorCode::invalid_spec, "--sweep entries must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;

    // string staging for values that need parsing or presence tracking
    std::string feature = "td", mode = "neg", split = "none", kind, probs, trans, sweep,
                synth_label = "good";
    double threshold_linear = 0.0, threshold_log2 = 0.0, target_fpr = 0.0;
    long tuple_length = 0;

    const std::map<std::string, std::string> no_alias{};

    CLI::App app{"uad - sequence anomaly detection toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "config file mirroring the flags; command-line flags win");
    app.get_config_formatter_base()->comment('#');

    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", cfg.seed, "random seed"); };
    auto add_feature = [&](CLI::App* sub) {
        sub->add_option("--feature", feature, "feature to extract")
            ->check(CLI::IsMember({"td", "tt", "csb", "scb"}));
    };
    auto add_split = [&](CLI::App* sub) {
        sub->add_option("--split", split, "seeded half split applied to input flows")
            ->check(CLI::IsMember({"none", "train", "test"}));
    };
    auto add_lenient = [&](CLI::App* sub) {
        sub->add_flag("--lenient", cfg.lenient, "skip unparsable rows instead of failing");
    };

    CLI::App* train = app.add_subcommand("train", "fit a quantizer and build a model");
    train->add_option("--input", cfg.input_path, "transaction, sequence or call-trace input")
        ->required();
    train->add_option("--map", cfg.map_path,
                      "category mapping CSV; input is then a call-name trace");
    train->add_option("--out", cfg.out_path, "model file to write")->required();
    train->add_option("--levels", cfg.levels, "alphabet size / quantization levels");
    train->add_option("--mode", mode, "which labels feed training")
        ->check(CLI::IsMember({"neg", "pos", "unsup"}));
    add_feature(train);
    add_split(train);
    add_seed(train);
    add_lenient(train);

    CLI::App* score = app.add_subcommand("score", "per-flow verdicts under a model");
    score->add_option("--input", cfg.input_path, "transaction or sequence CSV")->required();
    score->add_option("--model", cfg.model_path, "model file")->required();
    score->add_option("--out", cfg.out_path, "verdict CSV to write")->required();
    score->add_option("--subseq", cfg.subseq_length, "subsequence length for the majority vote");
    auto* opt_thr = score->add_option("--threshold", threshold_linear,
                                      "decision threshold as a linear probability");
    auto* opt_thr_log = score->add_option("--threshold-log2", threshold_log2,
                                          "decision threshold in log2 probability");
    auto* opt_fpr = score->add_option("--target-fpr", target_fpr,
                                      "calibrate the threshold to this false positive rate");
    add_feature(score);
    add_split(score);
    add_seed(score);
    add_lenient(score);

    CLI::App* eval = app.add_subcommand("eval", "ROC/AUC over labeled input");
    eval->add_option("--input", cfg.input_path, "labeled transaction or sequence CSV")->required();
    eval->add_option("--model", cfg.model_path, "model file")->required();
    eval->add_option("--out", cfg.out_path, "ROC CSV to write")->required();
    eval->add_option("--subseq", cfg.subseq_length, "subsequence length");
    eval->add_option("--sweep", sweep, "majority sizes, e.g. 1,3,5,7,9");
    add_feature(eval);
    add_split(eval);
    add_seed(eval);
    add_lenient(eval);

    CLI::App* synth = app.add_subcommand("synth", "generate seeded synthetic sequences");
    synth->add_option("--kind", kind, "source kind")
        ->check(CLI::IsMember({"iid", "markov1", "model"}))
        ->required();
    synth->add_option("--probs", probs, "iid probabilities, e.g. 0.5,0.5");
    synth->add_option("--trans", trans, "markov1 rows, e.g. 0.9,0.1;0.2,0.8");
    synth->add_option("--model", cfg.source.model_path, "model file to sample from");
    synth->add_option("--length", cfg.source.length, "sequence length");
    synth->add_option("--count", cfg.source.count, "number of sequences");
    synth->add_option("--label", synth_label, "label attached to the output")
        ->check(CLI::IsMember({"good", "hostile"}));
    synth->add_option("--format", cfg.synth_format, "output schema")
        ->check(CLI::IsMember({"symbols", "flows"}));
    synth->add_option("--out", cfg.out_path, "output CSV")->required();
    add_seed(synth);

    CLI::App* hist = app.add_subcommand("hist", "window histograms of segments under a model");
    hist->add_option("--model", cfg.model_path, "model file")->required();
    hist->add_option("--input", cfg.input_path, "segment sequence CSV")->required();
    hist->add_option("--out", cfg.out_path, "histogram CSV (suffixed per segment)")->required();
    hist->add_option("--window", cfg.window_length, "window length");
    hist->add_option("--bins", cfg.bins, "interior bin count when fitting edges");
    hist->add_option("--stride", cfg.stride, "window stride");
    hist->add_option("--ref", cfg.reference_path, "histogram file whose edges are reused");
    hist->add_option("--map", cfg.map_path,
                     "category mapping CSV; input is then a call-name trace");

    CLI::App* compare = app.add_subcommand("compare", "KL/MSE distances against a reference");
    compare->add_option("--model", cfg.model_path, "model file")->required();
    compare->add_option("--out", cfg.out_path, "distance CSV")->required();
    compare->add_option("--input", cfg.input_path, "segment sequence CSV (window mode)");
    compare->add_option("--reference", cfg.reference_path, "reference histogram (window mode)");
    auto* opt_tuple = compare->add_option("--tuple-length", tuple_length,
                                          "compare tuple distributions of models instead");
    compare->add_option("--against", cfg.against, "model files to compare to the reference");
    compare->add_option("--map", cfg.map_path,
                        "category mapping CSV; input is then a call-name trace");
    compare->add_option("--cap", cfg.enumeration_cap, "dense enumeration cap");
    compare->add_option("--samples", cfg.sample_count, "sparse estimation sample count");
    add_seed(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        cfg.feature = feature_from_name(feature);
        cfg.mode = mode == "neg"     ? TrainingMode::negative_only
                   : mode == "pos"   ? TrainingMode::positive_only
                                     : TrainingMode::unsupervised;
        cfg.split = split == "none"    ? SplitHalf::none
                    : split == "train" ? SplitHalf::train
                                       : SplitHalf::test;
        cfg.synth_label = synth_label == "hostile" ? Label::hostile : Label::good;
        if (opt_thr->count()) cfg.threshold_linear = threshold_linear;
        if (opt_thr_log->count()) cfg.threshold_log2 = threshold_log2;
        if (opt_fpr->count()) cfg.target_fpr = target_fpr;
        if (opt_tuple->count()) cfg.tuple_length = static_cast<int>(tuple_length);
        if (!sweep.empty()) cfg.subseq_sweep = parse_sweep(sweep);
        if (!probs.empty()) cfg.source.probs = parse_number_list(probs, ',');
        if (!trans.empty()) cfg.source.transition = parse_matrix(trans);
        if (!kind.empty())
            cfg.source.kind = kind == "iid"       ? SourceKind::iid
                              : kind == "markov1" ? SourceKind::markov1
                                                  : SourceKind::model;

        if (train->parsed()) cmd_train(cfg, out);
        if (score->parsed()) cmd_score(cfg, out);
        if (eval->parsed()) cmd_eval(cfg, out);
        if (synth->parsed()) cmd_synth(cfg, out);
        if (hist->parsed()) cmd_hist(cfg, out);
        if (compare->parsed()) cmd_compare(cfg, out);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << " [" << error_code_name(e.code()) << "]\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace uad
