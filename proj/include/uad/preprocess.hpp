#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uad/error.hpp"
#include "uad/model.hpp"

namespace uad {

enum class Label { good, hostile };

const char* label_name(Label l);

// One client<->host transaction from the capture. Timestamps have
// one-second resolution (seconds of day).
struct NetworkEvent {
    int t = 0;               // seconds of day
    double tt = 0.0;         // duration, milliseconds
    double csb = 0.0;        // bytes client -> server
    double scb = 0.0;        // bytes server -> client
    long client_id = 0;
    long host_id = 0;
    Label label = Label::good;
    std::string mime_type;   // carried through, unused by detection
};

// All transactions of one (client, host, label) triple, time sorted.
struct Flow {
    long client_id = 0;
    long host_id = 0;
    Label label = Label::good;
    std::vector<NetworkEvent> events;

    std::string id() const;  // "CID_HID"
};

enum class FeatureKind { TD, TT, CSB, SCB };

const char* feature_name(FeatureKind k);
FeatureKind feature_from_name(std::string_view name);

enum class ParseMode { strict, lenient };

struct ParseReport {
    std::size_t rows_parsed = 0;
    std::size_t rows_skipped = 0;
    std::vector<std::string> row_errors;  // filled in lenient mode
};

// Reads the eight-column transaction CSV (time, time-taken, cs-bytes,
// sc-bytes, mime-type, cat, hid, cid; any column order). Strict mode
// throws on the first bad row; lenient mode skips bad rows and counts
// them in the report.
std::vector<NetworkEvent> parse_records(std::string_view csv, ParseMode mode = ParseMode::strict,
                                        ParseReport* report = nullptr);

// Groups events by (client, host, label) and sorts each group by time,
// keeping input order on ties. Flows come out in first-appearance order.
std::vector<Flow> build_flows(std::span<const NetworkEvent> events);

// Single-feature sequence of a flow. TD is the difference between
// consecutive event times and needs at least two events; a negative
// difference is treated as a midnight wrap (+86400 s).
std::vector<double> extract_feature(const Flow& flow, FeatureKind kind);

// Maps real feature values onto a finite alphabet via nearest centroid.
// Fitting splits the training range into k equal-width bins and takes
// each bin's midpoint; a constant training set degenerates to a single
// centroid with every input mapping to symbol 0.
class Quantizer {
public:
    static Quantizer fit_uniform(std::span<const double> training_values, int k);
    static Quantizer from_centroids(std::vector<double> centroids);

    int levels() const { return static_cast<int>(centroids_.size()); }
    bool degenerate() const { return centroids_.size() == 1; }
    const std::vector<double>& centroids() const { return centroids_; }
    std::string_view method() const { return "uniform"; }

    // Nearest centroid; exact midpoint ties break to the lower index and
    // out-of-range values clamp to the extreme centroids.
    Symbol quantize(double value) const;
    SymbolSequence quantize(std::span<const double> values) const;

private:
    explicit Quantizer(std::vector<double> centroids) : centroids_(std::move(centroids)) {}

    std::vector<double> centroids_;  // strictly ascending
};

}  // namespace uad
