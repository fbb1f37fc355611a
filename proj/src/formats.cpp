#include "uad/formats.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "csv_util.hpp"

namespace uad {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

namespace {

Label parse_label(std::string_view s) {
    if (s == "good") return Label::good;
    if (s == "hostile") return Label::hostile;
    throw Error(ErrorCode::bad_row, "unknown label '" + std::string(s) + "'");
}

SymbolSequence parse_symbols_field(std::string_view text) {
    SymbolSequence symbols;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        std::size_t end = pos;
        while (end < text.size() && text[end] != ' ') ++end;
        if (end > pos) {
            long v = 0;
            if (!csv::parse_long(text.substr(pos, end - pos), v))
                throw Error(ErrorCode::bad_row,
                            "bad symbol '" + std::string(text.substr(pos, end - pos)) + "'");
            symbols.push_back(static_cast<Symbol>(v));
        }
        pos = end;
    }
    return symbols;
}

// "a=b c=d" comment payloads
bool comment_value(std::string_view line, std::string_view key, std::string& out) {
    const std::string token = std::string(key) + "=";
    const std::size_t at = line.find(token);
    if (at == std::string_view::npos) return false;
    std::size_t end = at + token.size();
    while (end < line.size() && line[end] != ' ') ++end;
    out = std::string(line.substr(at + token.size(), end - at - token.size()));
    return true;
}

std::string format_seconds(int seconds_of_day) {
    char buf[16];
    snprintf(buf, sizeof(buf), "%02d:%02d:%02d", seconds_of_day / 3600,
             (seconds_of_day / 60) % 60, seconds_of_day % 60);
    return buf;
}

}  // namespace

std::string format_sequences_csv(std::span<const LabeledSequence> sequences,
                                 std::span<const std::string> header_comments) {
    std::ostringstream out;
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << "seq_id,label,symbols\n";
    for (const auto& seq : sequences) {
        out << seq.id << ',' << label_name(seq.label) << ',';
        for (std::size_t i = 0; i < seq.symbols.size(); ++i) {
            if (i) out << ' ';
            out << seq.symbols[i];
        }
        out << '\n';
    }
    return out.str();
}

std::vector<LabeledSequence> parse_sequences_csv(std::string_view text) {
    std::vector<LabeledSequence> sequences;
    bool saw_header = false;
    std::size_t row = 0;
    csv::for_each_line(text, [&](std::string_view line) {
        if (line.empty() || line.front() == '#') return;
        auto fields = csv::split_line(line);
        if (!saw_header) {
            if (fields.size() < 3 || csv::trim(fields[0]) != "seq_id" ||
                csv::trim(fields[1]) != "label" || csv::trim(fields[2]) != "symbols")
                throw Error(ErrorCode::schema, "expected header 'seq_id,label,symbols'");
            saw_header = true;
            return;
        }
        ++row;
        if (fields.size() < 3)
            throw Error(ErrorCode::bad_row, "row " + std::to_string(row) + ": missing fields");
        LabeledSequence seq;
        seq.id = std::string(csv::trim(fields[0]));
        seq.label = parse_label(csv::trim(fields[1]));
        seq.symbols = parse_symbols_field(fields[2]);
        sequences.push_back(std::move(seq));
    });
    if (!saw_header) throw Error(ErrorCode::schema, "input has no header row");
    return sequences;
}

std::string format_flows_csv(std::span<const LabeledSequence> sequences,
                             std::span<const std::string> header_comments) {
    std::ostringstream out;
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << "time,time-taken,cs-bytes,sc-bytes,mime-type,cat,hid,cid\n";
    long cid = 0;
    for (const auto& seq : sequences) {
        ++cid;
        // event times reproduce the symbols as consecutive differences
        int t = 0;
        out << format_seconds(t) << ",0,0,0,synthetic," << label_name(seq.label) << ",1," << cid
            << "\n";
        for (Symbol s : seq.symbols) {
            t += static_cast<int>(s);
            if (t > 86399)
                throw Error(ErrorCode::invalid_spec,
                            "sequence too long to render as one within-day flow");
            out << format_seconds(t) << ",0,0,0,synthetic," << label_name(seq.label) << ",1,"
                << cid << "\n";
        }
    }
    return out.str();
}

std::string format_histogram_csv(const WindowHistogram& hist) {
    std::ostringstream out;
    out << "# uad-histogram v1\n";
    out << "# window_length=" << hist.window_length << " stride=" << hist.stride << "\n";
    out << "# edges=";
    for (std::size_t i = 0; i < hist.edges.size(); ++i) {
        if (i) out << ';';
        out << csv::format_double(hist.edges[i]);
    }
    out << "\nkey,probability\n";
    for (std::size_t i = 0; i < hist.mass.size(); ++i)
        out << "bin" << i << ',' << csv::format_double(hist.mass[i]) << '\n';
    return out.str();
}

WindowHistogram parse_histogram_csv(std::string_view text) {
    WindowHistogram hist;
    bool saw_marker = false, saw_header = false;
    std::vector<double> mass;
    csv::for_each_line(text, [&](std::string_view line) {
        if (line.empty()) return;
        if (line.front() == '#') {
            if (line.find("uad-histogram") != std::string_view::npos) saw_marker = true;
            std::string value;
            if (comment_value(line, "window_length", value)) {
                long v = 0;
                if (!csv::parse_long(value, v))
                    throw Error(ErrorCode::schema, "bad window_length in histogram header");
                hist.window_length = static_cast<int>(v);
            }
            if (comment_value(line, "stride", value)) {
                long v = 0;
                if (!csv::parse_long(value, v))
                    throw Error(ErrorCode::schema, "bad stride in histogram header");
                hist.stride = static_cast<int>(v);
            }
            if (comment_value(line, "edges", value)) {
                std::size_t pos = 0;
                while (pos <= value.size()) {
                    std::size_t semi = value.find(';', pos);
                    if (semi == std::string::npos) semi = value.size();
                    double e = 0.0;
                    if (!csv::parse_double(std::string_view(value).substr(pos, semi - pos), e))
                        throw Error(ErrorCode::schema, "bad edge value in histogram header");
                    hist.edges.push_back(e);
                    pos = semi + 1;
                }
            }
            return;
        }
        if (!saw_header) {
            saw_header = true;  // key,probability
            return;
        }
        auto fields = csv::split_line(line);
        if (fields.size() != 2)
            throw Error(ErrorCode::schema, "histogram rows must be key,probability");
        double p = 0.0;
        if (!csv::parse_double(fields[1], p))
            throw Error(ErrorCode::schema, "bad probability value '" + fields[1] + "'");
        mass.push_back(p);
    });
    if (!saw_marker || !saw_header || hist.edges.empty())
        throw Error(ErrorCode::schema, "not a histogram file");
    if (mass.size() != hist.edges.size() + 1)
        throw Error(ErrorCode::schema, "histogram cell count does not match its edges");
    hist.mass = std::move(mass);
    return hist;
}

std::string format_distribution_csv(const TupleDistribution& dist) {
    std::ostringstream out;
    out << "# uad-distribution v1\n";
    out << "# tuple_length=" << dist.tuple_length << " alphabet_size=" << dist.alphabet_size
        << " representation="
        << (dist.representation == TupleDistribution::Representation::dense ? "dense" : "sparse");
    if (dist.representation == TupleDistribution::Representation::sparse)
        out << " sample_count=" << dist.sample_count << " seed=" << dist.seed;
    out << "\nkey,probability\n";
    for (const auto& [key, p] : dist.cells) {
        const SymbolSequence tuple = TupleDistribution::decode_key(key);
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            if (i) out << '-';
            out << tuple[i];
        }
        out << ',' << csv::format_double(p) << '\n';
    }
    return out.str();
}

TupleDistribution parse_distribution_csv(std::string_view text) {
    TupleDistribution dist;
    bool saw_marker = false, saw_header = false;
    csv::for_each_line(text, [&](std::string_view line) {
        if (line.empty()) return;
        if (line.front() == '#') {
            if (line.find("uad-distribution") != std::string_view::npos) saw_marker = true;
            std::string value;
            long v = 0;
            if (comment_value(line, "tuple_length", value) && csv::parse_long(value, v))
                dist.tuple_length = static_cast<int>(v);
            if (comment_value(line, "alphabet_size", value) && csv::parse_long(value, v))
                dist.alphabet_size = static_cast<int>(v);
            if (comment_value(line, "representation", value))
                dist.representation = value == "sparse"
                                          ? TupleDistribution::Representation::sparse
                                          : TupleDistribution::Representation::dense;
            if (comment_value(line, "sample_count", value) && csv::parse_long(value, v))
                dist.sample_count = static_cast<std::uint64_t>(v);
            if (comment_value(line, "seed", value) && csv::parse_long(value, v))
                dist.seed = static_cast<std::uint64_t>(v);
            return;
        }
        if (!saw_header) {
            saw_header = true;
            return;
        }
        auto fields = csv::split_line(line);
        if (fields.size() != 2)
            throw Error(ErrorCode::schema, "distribution rows must be key,probability");
        SymbolSequence tuple;
        std::string_view key(fields[0]);
        std::size_t pos = 0;
        while (pos <= key.size()) {
            std::size_t dash = key.find('-', pos);
            if (dash == std::string_view::npos) dash = key.size();
            long sym = 0;
            if (!csv::parse_long(key.substr(pos, dash - pos), sym))
                throw Error(ErrorCode::schema, "bad tuple key '" + fields[0] + "'");
            tuple.push_back(static_cast<Symbol>(sym));
            pos = dash + 1;
        }
        double p = 0.0;
        if (!csv::parse_double(fields[1], p))
            throw Error(ErrorCode::schema, "bad probability value '" + fields[1] + "'");
        dist.cells.emplace_back(TupleDistribution::encode_tuple(tuple), p);
    });
    if (!saw_marker || !saw_header)
        throw Error(ErrorCode::schema, "not a distribution file");
    if (dist.tuple_length <= 0 || dist.alphabet_size <= 0)
        throw Error(ErrorCode::schema, "distribution file missing its support descriptor");
    std::sort(dist.cells.begin(), dist.cells.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return dist;
}

std::string format_roc_csv(const RocReport& report, std::span<const std::string> header_comments) {
    std::ostringstream out;
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << "threshold_log2,fpr,tpr,tp,fp,tn,fn\n";
    for (const RocPoint& p : report.points) {
        out << csv::format_double(p.threshold) << ',' << csv::format_double(p.fpr) << ','
            << csv::format_double(p.tpr) << ',' << p.tp << ',' << p.fp << ',' << p.tn << ','
            << p.fn << '\n';
    }
    out << "# auc=" << csv::format_double(report.auc) << '\n';
    return out.str();
}

}  // namespace uad
