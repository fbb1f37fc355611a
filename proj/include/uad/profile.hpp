#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uad/error.hpp"
#include "uad/model.hpp"

namespace uad {

// Probability mass a model assigns to every length-L tuple. Dense mode
// enumerates the full alphabet^L support exactly; sparse mode estimates
// it from model samples and records how.
struct TupleDistribution {
    enum class Representation { dense, sparse };

    int tuple_length = 0;
    int alphabet_size = 0;
    Representation representation = Representation::dense;
    std::uint64_t sample_count = 0;  // sparse only
    std::uint64_t seed = 0;          // sparse only
    // key = tuple symbols as raw bytes, ascending; mass sums to 1
    std::vector<std::pair<std::string, double>> cells;

    static std::string encode_tuple(std::span<const Symbol> tuple);
    static SymbolSequence decode_key(const std::string& key);
    double mass_of(std::span<const Symbol> tuple) const;
};

TupleDistribution tuple_distribution(const Model& model, int tuple_length,
                                     std::uint64_t enumeration_cap = 1'000'000,
                                     std::uint64_t sample_count = 200'000,
                                     std::uint64_t seed = 0);

// Bin edges over the log2-probability axis, fixed once at learning time
// and reused for every tested segment. Cells = edges.size() + 1: the
// two outermost cells catch overflow past either end.
struct HistogramSpec {
    std::vector<double> edges;  // ascending
};

HistogramSpec fit_histogram_spec(const Model& model, const SymbolSequence& reference,
                                 int window_length, int bins = 64, int stride = 1);

// Distribution of binned sliding-window log2 probabilities of one
// sequence under a frozen model.
struct WindowHistogram {
    std::vector<double> edges;
    std::vector<double> mass;  // normalized, size edges.size() + 1
    int window_length = 0;
    int stride = 1;
};

WindowHistogram window_histogram(const Model& model, const SymbolSequence& seq,
                                 int window_length, const HistogramSpec& spec, int stride = 1);

// KL divergence in bits with epsilon smoothing over the union support:
// both sides get +epsilon per cell and are renormalized, so disjoint
// supports stay finite.
double kl_divergence(const WindowHistogram& p, const WindowHistogram& q, double epsilon = 1e-6);
double kl_divergence(const TupleDistribution& p, const TupleDistribution& q, double epsilon = 1e-6);

// Mean squared cell difference over the union support.
double mse_distance(const WindowHistogram& p, const WindowHistogram& q);
double mse_distance(const TupleDistribution& p, const TupleDistribution& q);

// Per-symbol relative frequencies of a sequence.
struct EmpiricalType {
    std::vector<double> freq;  // sums to 1, each a multiple of 1/n
    std::size_t n = 0;
};

EmpiricalType empirical_type(const SymbolSequence& seq, int alphabet_size);

// Probability that an i.i.d. source q emits a length-n sequence of
// exactly this type, with the standard exponential sandwich around it.
struct TypeClassProbability {
    double exact = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    double log2_exact = 0.0;   // log-domain forms stay useful once the
    double log2_lower = 0.0;   // linear values underflow
    double log2_upper = 0.0;
};

TypeClassProbability type_class_probability(const EmpiricalType& type, std::span<const double> q,
                                            std::size_t n);

// D(P||Q) in bits; terms with p = 0 contribute nothing, q must be
// strictly positive wherever p is not.
double kl_divergence_pointwise(std::span<const double> p, std::span<const double> q);

// Grouping of recorded call names into category symbols. The mapping is
// user supplied as a two-column CSV (call_name, category); category
// symbols are assigned by sorted category name so the alphabet does not
// depend on row order.
struct CategoryMap {
    std::vector<std::string> categories;            // index = symbol
    std::map<std::string, Symbol> call_to_symbol;

    int alphabet_size() const { return static_cast<int>(categories.size()); }
};

CategoryMap parse_category_mapping(std::string_view csv);

// Pre-recorded call-name text: one call per line, blank lines separate
// segments, '#' lines are comments. Unmapped names are an error.
std::vector<SymbolSequence> map_call_trace(std::string_view text, const CategoryMap& map);

}  // namespace uad
