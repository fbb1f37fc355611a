#include "uad/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "uad/detect.hpp"
#include "uad/formats.hpp"
#include "uad/model.hpp"
#include "uad/profile.hpp"

namespace uad {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t flow_hash(const Flow& f, std::uint64_t seed) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(f.client_id));
    h = mix64(h ^ static_cast<std::uint64_t>(f.host_id));
    h = mix64(h ^ static_cast<std::uint64_t>(f.label == Label::hostile));
    return h;
}

const char* mode_name(TrainingMode m) {
    switch (m) {
        case TrainingMode::negative_only: return "neg";
        case TrainingMode::positive_only: return "pos";
        case TrainingMode::unsupervised: return "unsup";
    }
    return "?";
}

bool wanted_by_mode(Label label, TrainingMode mode) {
    switch (mode) {
        case TrainingMode::negative_only: return label == Label::good;
        case TrainingMode::positive_only: return label == Label::hostile;
        case TrainingMode::unsupervised: return true;
    }
    return true;
}

// First non-comment line decides which reader applies.
bool is_sequences_csv(std::string_view text) {
    bool result = false;
    bool decided = false;
    csv::for_each_line(text, [&](std::string_view line) {
        if (decided || line.empty() || line.front() == '#') return;
        result = line.rfind("seq_id,", 0) == 0;
        decided = true;
    });
    return result;
}

struct ModelFile {
    Model model;
    std::optional<Quantizer> quantizer;
};

ModelFile load_model_file(const std::string& path) {
    auto [model, centroids] = Model::deserialize(read_file(path));
    std::optional<Quantizer> q;
    if (centroids) q = Quantizer::from_centroids(*centroids);
    return {std::move(model), std::move(q)};
}

struct FlowFeature {
    std::string id;
    Label label;
    std::vector<double> values;
};

// Feature sequences of every flow long enough to yield one.
std::pair<std::vector<FlowFeature>, std::size_t> flow_features(const std::vector<Flow>& flows,
                                                               FeatureKind kind) {
    std::vector<FlowFeature> out;
    std::size_t skipped = 0;
    for (const Flow& f : flows) {
        try {
            out.push_back({f.id(), f.label, extract_feature(f, kind)});
        } catch (const Error& e) {
            if (e.code() == ErrorCode::too_short)
                ++skipped;
            else
                throw;
        }
    }
    return {std::move(out), skipped};
}

std::vector<Flow> apply_split(std::vector<Flow> flows, SplitHalf split, std::uint64_t seed) {
    if (split == SplitHalf::none) return flows;
    auto [train_half, test_half] = split_flows_half(flows, seed);
    return split == SplitHalf::train ? std::move(train_half) : std::move(test_half);
}

// Labeled sequences from either input schema. Transaction input needs
// the model's quantizer; pre-quantized input is validated against the
// model alphabet. Sequences shorter than min_length are dropped and
// counted.
struct LoadedSequences {
    std::vector<LabeledSequence> sequences;
    std::size_t skipped_short = 0;
};

LoadedSequences load_scorable_sequences(const RunConfig& cfg, const ModelFile& mf,
                                        const std::string& text) {
    LoadedSequences out;
    if (is_sequences_csv(text)) {
        out.sequences = parse_sequences_csv(text);
        for (const auto& seq : out.sequences)
            for (Symbol s : seq.symbols)
                if (s < 0 || s >= mf.model.alphabet_size())
                    throw Error(ErrorCode::incompatible_model,
                                "sequence " + seq.id + " uses symbol " + std::to_string(s) +
                                    " outside the model's alphabet of " +
                                    std::to_string(mf.model.alphabet_size()));
        return out;
    }
    if (!mf.quantizer)
        throw Error(ErrorCode::incompatible_model,
                    "model file carries no centroids; cannot score raw transaction input");
    if (mf.quantizer->levels() > mf.model.alphabet_size())
        throw Error(ErrorCode::incompatible_model,
                    "model centroids exceed its alphabet");
    ParseReport report;
    auto events = parse_records(text, cfg.lenient ? ParseMode::lenient : ParseMode::strict,
                                &report);
    auto flows = apply_split(build_flows(events), cfg.split, cfg.seed);
    auto [features, skipped] = flow_features(flows, cfg.feature);
    out.skipped_short = skipped;
    out.sequences.reserve(features.size());
    for (const auto& ff : features)
        out.sequences.push_back({ff.id, ff.label, mf.quantizer->quantize(ff.values)});
    return out;
}

double resolve_threshold(const RunConfig& cfg, const std::vector<double>& calibration_scores) {
    if (cfg.threshold_log2) return *cfg.threshold_log2;
    if (cfg.threshold_linear) {
        if (*cfg.threshold_linear <= 0.0)
            throw Error(ErrorCode::invalid_spec, "linear threshold must be positive");
        return std::log2(*cfg.threshold_linear);
    }
    if (cfg.target_fpr) return threshold_for_fpr(calibration_scores, *cfg.target_fpr);
    throw Error(ErrorCode::invalid_spec,
                "scoring needs --threshold, --threshold-log2 or --target-fpr");
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    const std::size_t dot = path.rfind('.');
    const std::size_t slash = path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

// Segments for hist/compare: pre-quantized rows, or a call-name trace
// run through the category mapping.
std::vector<LabeledSequence> load_segments(const RunConfig& cfg) {
    const std::string text = read_file(cfg.input_path);
    if (cfg.map_path.empty()) return parse_sequences_csv(text);
    const CategoryMap map = parse_category_mapping(read_file(cfg.map_path));
    std::vector<LabeledSequence> segments;
    std::size_t i = 0;
    for (auto& symbols : map_call_trace(text, map))
        segments.push_back({"seg" + std::to_string(++i), Label::good, std::move(symbols)});
    return segments;
}

}  // namespace

std::pair<std::vector<Flow>, std::vector<Flow>> split_flows_half(const std::vector<Flow>& flows,
                                                                 std::uint64_t seed) {
    std::vector<Flow> train_half, test_half;
    for (const Flow& f : flows)
        (flow_hash(f, seed) & 1 ? test_half : train_half).push_back(f);
    return {std::move(train_half), std::move(test_half)};
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
    if (cfg.levels < 2) throw Error(ErrorCode::invalid_alphabet, "--levels must be at least 2");
    const std::string text = read_file(cfg.input_path);

    std::vector<SymbolSequence> sequences;
    std::optional<std::vector<double>> centroids;
    std::size_t skipped_short = 0;
    std::size_t used = 0;
    int levels = cfg.levels;

    if (!cfg.map_path.empty()) {
        // recorded call names, grouped through the category mapping
        const CategoryMap map = parse_category_mapping(read_file(cfg.map_path));
        sequences = map_call_trace(text, map);
        levels = map.alphabet_size();
        if (levels < 2)
            throw Error(ErrorCode::invalid_alphabet, "mapping defines fewer than 2 categories");
        log << "mapped " << map.call_to_symbol.size() << " call names onto " << levels
            << " categories\n";
    } else if (is_sequences_csv(text)) {
        // pre-quantized input trains as-is, without a quantizer
        for (const auto& seq : parse_sequences_csv(text)) {
            if (!wanted_by_mode(seq.label, cfg.mode)) continue;
            if (seq.symbols.empty()) continue;
            sequences.push_back(seq.symbols);
        }
    } else {
        ParseReport report;
        auto events = parse_records(text, cfg.lenient ? ParseMode::lenient : ParseMode::strict,
                                    &report);
        if (report.rows_skipped)
            log << "skipped " << report.rows_skipped << " unparsable rows\n";
        auto flows = build_flows(events);
        std::erase_if(flows, [&](const Flow& f) { return !wanted_by_mode(f.label, cfg.mode); });
        flows = apply_split(std::move(flows), cfg.split, cfg.seed);

        auto [features, skipped] = flow_features(flows, cfg.feature);
        skipped_short = skipped;
        std::vector<double> pool;
        for (const auto& ff : features) pool.insert(pool.end(), ff.values.begin(), ff.values.end());
        if (pool.empty())
            throw Error(ErrorCode::empty_training, "no feature values survive the training filter");
        const Quantizer q = Quantizer::fit_uniform(pool, cfg.levels);
        centroids = q.centroids();
        for (const auto& ff : features) sequences.push_back(q.quantize(ff.values));
    }

    if (sequences.empty())
        throw Error(ErrorCode::empty_training, "no training sequences survive the filter");
    used = sequences.size();

    Model model(levels);
    const std::uint64_t phrases =
        model.train(std::span<const SymbolSequence>(sequences.data(), sequences.size()));
    write_file(cfg.out_path, model.serialize(centroids));

    log << "trained on " << used << " sequences (" << model.trained_symbol_count()
        << " symbols, mode=" << mode_name(cfg.mode) << ", seed=" << cfg.seed << ")\n";
    if (skipped_short) log << "skipped " << skipped_short << " flows too short for the feature\n";
    log << "phrases=" << phrases << " leaves=" << model.leaf_count() << " written to "
        << cfg.out_path << "\n";
}

void cmd_score(const RunConfig& cfg, std::ostream& log) {
    const ModelFile mf = load_model_file(cfg.model_path);
    const LoadedSequences loaded = load_scorable_sequences(cfg, mf, read_file(cfg.input_path));

    struct Row {
        const LabeledSequence* seq;
        std::vector<double> scores;  // empty = too short
    };
    std::vector<Row> rows;
    rows.reserve(loaded.sequences.size());
    std::vector<double> calibration;
    for (const auto& seq : loaded.sequences) {
        Row row{&seq, {}};
        if (seq.symbols.size() >= cfg.subseq_length)
            row.scores = subsequence_scores(mf.model, seq.symbols, cfg.subseq_length);
        if (!row.scores.empty() && (seq.label == Label::good || !cfg.target_fpr))
            for (double s : row.scores) calibration.push_back(s);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::insufficient_data, "no sequences to score");
    if (cfg.target_fpr && calibration.empty())
        throw Error(ErrorCode::insufficient_data, "no scores available to calibrate a threshold");
    const double threshold = resolve_threshold(cfg, calibration);

    std::ostringstream out;
    out << "# uad-scores v1\n";
    out << "# model=" << cfg.model_path << " subseq=" << cfg.subseq_length
        << " threshold_log2=" << csv::format_double(threshold) << " seed=" << cfg.seed << "\n";
    out << "flow,label,score,subsequences,verdict\n";
    std::size_t flagged = 0, too_short = 0;
    for (const Row& row : rows) {
        out << row.seq->id << ',' << label_name(row.seq->label) << ',';
        if (row.scores.empty()) {
            out << ",0,too-short\n";
            ++too_short;
            continue;
        }
        double mean = 0.0;
        std::size_t normal_votes = 0;
        for (double s : row.scores) {
            mean += s;
            if (s >= threshold) ++normal_votes;
        }
        mean /= static_cast<double>(row.scores.size());
        const bool normal = normal_votes > row.scores.size() - normal_votes;
        if (!normal) ++flagged;
        out << csv::format_double(mean) << ',' << row.scores.size() << ','
            << (normal ? "normal" : "anomalous") << '\n';
    }
    write_file(cfg.out_path, out.str());
    log << "scored " << rows.size() << " sequences, " << flagged << " anomalous, " << too_short
        << " too short (threshold_log2=" << csv::format_double(threshold) << ")\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& log) {
    const ModelFile mf = load_model_file(cfg.model_path);
    const LoadedSequences loaded = load_scorable_sequences(cfg, mf, read_file(cfg.input_path));
    if (cfg.subseq_sweep.empty())
        throw Error(ErrorCode::invalid_spec, "evaluation needs at least one subsequence count");

    struct Scored {
        Label label;
        std::vector<double> scores;
    };
    std::vector<Scored> scored;
    for (const auto& seq : loaded.sequences) {
        if (seq.symbols.size() < cfg.subseq_length) continue;
        scored.push_back({seq.label, subsequence_scores(mf.model, seq.symbols, cfg.subseq_length)});
    }

    const bool multi = cfg.subseq_sweep.size() > 1;
    for (std::size_t m : cfg.subseq_sweep) {
        if (m < 1) throw Error(ErrorCode::invalid_spec, "subsequence counts must be positive");
        std::vector<double> normal_scores, anomalous_scores;
        std::size_t skipped = 0;
        for (const Scored& s : scored) {
            if (s.scores.size() < m) {
                ++skipped;
                continue;
            }
            const double pivot =
                majority_pivot_score(std::span<const double>(s.scores.data(), m));
            (s.label == Label::good ? normal_scores : anomalous_scores).push_back(pivot);
        }
        if (normal_scores.empty() || anomalous_scores.empty())
            throw Error(ErrorCode::insufficient_data,
                        "evaluation needs both labels present (m=" + std::to_string(m) + ")");
        const RocReport report = roc_curve(normal_scores, anomalous_scores);

        std::vector<std::string> comments = {
            "uad-roc v1",
            "model=" + cfg.model_path + " subseq=" + std::to_string(cfg.subseq_length) +
                " majority_m=" + std::to_string(m) + " seed=" + std::to_string(cfg.seed),
            "normal=" + std::to_string(normal_scores.size()) +
                " anomalous=" + std::to_string(anomalous_scores.size()) +
                " skipped=" + std::to_string(skipped + loaded.skipped_short)};
        const std::string path =
            multi ? with_suffix(cfg.out_path, "_m" + std::to_string(m)) : cfg.out_path;
        write_file(path, format_roc_csv(report, comments));
        log << "m=" << m << " auc=" << csv::format_double(report.auc) << " normal="
            << normal_scores.size() << " anomalous=" << anomalous_scores.size() << " -> " << path
            << "\n";
    }
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
    SourceSpec spec = cfg.source;
    spec.seed = cfg.seed;
    const auto sequences = synthesize(spec);

    std::vector<LabeledSequence> labeled;
    labeled.reserve(sequences.size());
    for (std::size_t i = 0; i < sequences.size(); ++i)
        labeled.push_back({"s" + std::to_string(i + 1), cfg.synth_label, sequences[i]});

    const char* kind = spec.kind == SourceKind::iid      ? "iid"
                       : spec.kind == SourceKind::markov1 ? "markov1"
                                                          : "model";
    std::vector<std::string> comments = {std::string("uad-synth v1 kind=") + kind +
                                         " seed=" + std::to_string(cfg.seed) +
                                         " length=" + std::to_string(spec.length) +
                                         " count=" + std::to_string(spec.count)};
    std::string body;
    if (cfg.synth_format == "symbols")
        body = format_sequences_csv(labeled, comments);
    else if (cfg.synth_format == "flows")
        body = format_flows_csv(labeled, comments);
    else
        throw Error(ErrorCode::invalid_spec, "--format must be symbols or flows");
    write_file(cfg.out_path, body);
    log << "wrote " << sequences.size() << " sequences to " << cfg.out_path << "\n";
}

void cmd_hist(const RunConfig& cfg, std::ostream& log) {
    const ModelFile mf = load_model_file(cfg.model_path);
    const auto segments = load_segments(cfg);
    if (segments.empty()) throw Error(ErrorCode::insufficient_data, "no segments in input");

    HistogramSpec spec;
    int window = cfg.window_length;
    int stride = cfg.stride;
    if (!cfg.reference_path.empty()) {
        const WindowHistogram ref = parse_histogram_csv(read_file(cfg.reference_path));
        spec.edges = ref.edges;
        window = ref.window_length;
        stride = ref.stride;
    } else {
        spec = fit_histogram_spec(mf.model, segments.front().symbols, window, cfg.bins, stride);
    }

    for (std::size_t i = 0; i < segments.size(); ++i) {
        const WindowHistogram h =
            window_histogram(mf.model, segments[i].symbols, window, spec, stride);
        const std::string path =
            segments.size() == 1 ? cfg.out_path
                                 : with_suffix(cfg.out_path, "_seg" + std::to_string(i + 1));
        write_file(path, format_histogram_csv(h));
        log << segments[i].id << " -> " << path << "\n";
    }
}

void cmd_compare(const RunConfig& cfg, std::ostream& log) {
    std::ostringstream out;
    if (cfg.tuple_length) {
        // model-to-model tuple distribution distances
        const ModelFile ref = load_model_file(cfg.model_path);
        const TupleDistribution ref_dist = tuple_distribution(
            ref.model, *cfg.tuple_length, cfg.enumeration_cap, cfg.sample_count, cfg.seed);
        out << "# uad-compare v1 mode=tuples reference=" << cfg.model_path
            << " tuple_length=" << *cfg.tuple_length << " seed=" << cfg.seed << "\n";
        out << "model,kl_bits,mse\n";
        for (const std::string& path : cfg.against) {
            const ModelFile other = load_model_file(path);
            const TupleDistribution d = tuple_distribution(
                other.model, *cfg.tuple_length, cfg.enumeration_cap, cfg.sample_count, cfg.seed);
            out << path << ',' << csv::format_double(kl_divergence(d, ref_dist)) << ','
                << csv::format_double(mse_distance(d, ref_dist)) << '\n';
        }
    } else {
        // segment histograms against a reference histogram
        if (cfg.reference_path.empty())
            throw Error(ErrorCode::invalid_spec,
                        "compare needs --reference (or --tuple-length for tuple mode)");
        const ModelFile mf = load_model_file(cfg.model_path);
        const WindowHistogram ref = parse_histogram_csv(read_file(cfg.reference_path));
        const HistogramSpec spec{ref.edges};
        const auto segments = load_segments(cfg);
        if (segments.empty()) throw Error(ErrorCode::insufficient_data, "no segments in input");
        out << "# uad-compare v1 mode=window reference=" << cfg.reference_path << "\n";
        out << "segment,kl_bits,mse\n";
        for (const auto& seg : segments) {
            const WindowHistogram h =
                window_histogram(mf.model, seg.symbols, ref.window_length, spec, ref.stride);
            out << seg.id << ',' << csv::format_double(kl_divergence(h, ref)) << ','
                << csv::format_double(mse_distance(h, ref)) << '\n';
        }
    }
    write_file(cfg.out_path, out.str());
    log << "wrote distances to " << cfg.out_path << "\n";
}

}  // namespace uad
