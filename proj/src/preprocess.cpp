#include "uad/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "csv_util.hpp"

namespace uad {

const char* label_name(Label l) { return l == Label::good ? "good" : "hostile"; }

std::string Flow::id() const {
    return std::to_string(client_id) + "_" + std::to_string(host_id);
}

const char* feature_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::TD: return "td";
        case FeatureKind::TT: return "tt";
        case FeatureKind::CSB: return "csb";
        case FeatureKind::SCB: return "scb";
    }
    return "?";
}

FeatureKind feature_from_name(std::string_view name) {
    if (name == "td") return FeatureKind::TD;
    if (name == "tt") return FeatureKind::TT;
    if (name == "csb") return FeatureKind::CSB;
    if (name == "scb") return FeatureKind::SCB;
    throw Error(ErrorCode::invalid_spec, "unknown feature '" + std::string(name) + "'");
}

namespace {

using csv::parse_double;
using csv::parse_long;
using csv::trim;

// HH:MM:SS -> seconds of day
bool parse_time(std::string_view s, int& out) {
    s = trim(s);
    long h = 0, m = 0, sec = 0;
    const std::size_t c1 = s.find(':');
    if (c1 == std::string_view::npos) return false;
    const std::size_t c2 = s.find(':', c1 + 1);
    if (c2 == std::string_view::npos) return false;
    if (!parse_long(s.substr(0, c1), h) || !parse_long(s.substr(c1 + 1, c2 - c1 - 1), m) ||
        !parse_long(s.substr(c2 + 1), sec))
        return false;
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) return false;
    out = static_cast<int>(h * 3600 + m * 60 + sec);
    return true;
}

}  // namespace

std::vector<NetworkEvent> parse_records(std::string_view csv, ParseMode mode, ParseReport* report) {
    static constexpr const char* kColumns[8] = {"time",      "time-taken", "cs-bytes", "sc-bytes",
                                                "mime-type", "cat",        "hid",      "cid"};
    std::vector<NetworkEvent> events;
    ParseReport local;
    ParseReport& rep = report ? *report : local;

    std::size_t row_index = 0;  // 1 = first data row
    int column_index[8];
    bool saw_header = false;

    csv::for_each_line(csv, [&](std::string_view line) {
        if (line.empty() || line.front() == '#') return;

        auto fields = csv::split_line(line);
        if (!saw_header) {
            for (int i = 0; i < 8; ++i) {
                column_index[i] = -1;
                for (std::size_t j = 0; j < fields.size(); ++j)
                    if (trim(fields[j]) == kColumns[i]) column_index[i] = static_cast<int>(j);
                if (column_index[i] < 0)
                    throw Error(ErrorCode::schema,
                                std::string("input is missing required column '") + kColumns[i] + "'");
            }
            saw_header = true;
            return;
        }

        ++row_index;
        auto field = [&](int col) -> std::string_view {
            return std::string_view(fields[static_cast<std::size_t>(column_index[col])]);
        };

        std::string problem;
        NetworkEvent ev;
        std::size_t needed = 0;
        for (int i = 0; i < 8; ++i)
            needed = std::max(needed, static_cast<std::size_t>(column_index[i]) + 1);
        if (fields.size() < needed) {
            problem = "missing fields";
        } else if (!parse_time(field(0), ev.t)) {
            problem = "bad time";
        } else if (!parse_double(field(1), ev.tt) || ev.tt < 0) {
            problem = "bad time-taken";
        } else if (!parse_double(field(2), ev.csb) || ev.csb < 0) {
            problem = "bad cs-bytes";
        } else if (!parse_double(field(3), ev.scb) || ev.scb < 0) {
            problem = "bad sc-bytes";
        } else if (!parse_long(field(6), ev.host_id)) {
            problem = "bad hid";
        } else if (!parse_long(field(7), ev.client_id)) {
            problem = "bad cid";
        } else {
            const std::string_view cat = trim(field(5));
            if (cat == "good")
                ev.label = Label::good;
            else if (cat == "hostile")
                ev.label = Label::hostile;
            else
                problem = "bad cat";
        }

        if (!problem.empty()) {
            if (mode == ParseMode::strict)
                throw Error(ErrorCode::bad_row,
                            "row " + std::to_string(row_index) + ": " + problem);
            ++rep.rows_skipped;
            rep.row_errors.push_back("row " + std::to_string(row_index) + ": " + problem);
            return;
        }
        ev.mime_type = std::string(trim(field(4)));
        events.push_back(std::move(ev));
        ++rep.rows_parsed;
    });

    if (!saw_header) throw Error(ErrorCode::schema, "input has no header row");
    return events;
}

std::vector<Flow> build_flows(std::span<const NetworkEvent> events) {
    std::vector<Flow> flows;
    std::map<std::tuple<long, long, int>, std::size_t> index;
    for (const NetworkEvent& ev : events) {
        const auto key = std::make_tuple(ev.client_id, ev.host_id, static_cast<int>(ev.label));
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, flows.size()).first;
            flows.push_back(Flow{ev.client_id, ev.host_id, ev.label, {}});
        }
        flows[it->second].events.push_back(ev);
    }
    for (Flow& f : flows)
        std::stable_sort(f.events.begin(), f.events.end(),
                         [](const NetworkEvent& a, const NetworkEvent& b) { return a.t < b.t; });
    return flows;
}

std::vector<double> extract_feature(const Flow& flow, FeatureKind kind) {
    if (flow.events.empty()) throw Error(ErrorCode::empty_input, "flow has no events");
    std::vector<double> out;
    switch (kind) {
        case FeatureKind::TD: {
            if (flow.events.size() < 2)
                throw Error(ErrorCode::too_short,
                            "flow " + flow.id() + " needs at least 2 events for TD");
            out.reserve(flow.events.size() - 1);
            for (std::size_t i = 0; i + 1 < flow.events.size(); ++i) {
                double d = static_cast<double>(flow.events[i + 1].t - flow.events[i].t);
                if (d < 0) d += 86400.0;  // midnight wrap
                out.push_back(d);
            }
            break;
        }
        case FeatureKind::TT:
            for (const auto& ev : flow.events) out.push_back(ev.tt);
            break;
        case FeatureKind::CSB:
            for (const auto& ev : flow.events) out.push_back(ev.csb);
            break;
        case FeatureKind::SCB:
            for (const auto& ev : flow.events) out.push_back(ev.scb);
            break;
    }
    return out;
}

Quantizer Quantizer::fit_uniform(std::span<const double> training_values, int k) {
    if (training_values.empty())
        throw Error(ErrorCode::empty_training, "cannot fit a quantizer on no values");
    if (k < 2) throw Error(ErrorCode::invalid_alphabet, "quantizer needs at least 2 levels");
    const auto [lo_it, hi_it] = std::minmax_element(training_values.begin(), training_values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) return Quantizer({lo});  // degenerate: one centroid, everything -> symbol 0
    const double width = (hi - lo) / static_cast<double>(k);
    std::vector<double> centroids(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        centroids[static_cast<std::size_t>(j)] = lo + (static_cast<double>(j) + 0.5) * width;
    return Quantizer(std::move(centroids));
}

Quantizer Quantizer::from_centroids(std::vector<double> centroids) {
    if (centroids.empty())
        throw Error(ErrorCode::invalid_spec, "centroid list must be nonempty");
    for (std::size_t i = 0; i + 1 < centroids.size(); ++i)
        if (!(centroids[i] < centroids[i + 1]))
            throw Error(ErrorCode::invalid_spec, "centroids must be strictly ascending");
    return Quantizer(std::move(centroids));
}

Symbol Quantizer::quantize(double value) const {
    if (centroids_.size() == 1) return 0;
    const auto it = std::lower_bound(centroids_.begin(), centroids_.end(), value);
    if (it == centroids_.begin()) return 0;
    if (it == centroids_.end()) return static_cast<Symbol>(centroids_.size() - 1);
    const std::size_t hi = static_cast<std::size_t>(it - centroids_.begin());
    const std::size_t lo = hi - 1;
    // tie goes to the lower centroid
    return (value - centroids_[lo] <= centroids_[hi] - value) ? static_cast<Symbol>(lo)
                                                              : static_cast<Symbol>(hi);
}

SymbolSequence Quantizer::quantize(std::span<const double> values) const {
    SymbolSequence out;
    out.reserve(values.size());
    for (double v : values) out.push_back(quantize(v));
    return out;
}

}  // namespace uad
