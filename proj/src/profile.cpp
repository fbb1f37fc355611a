#include "uad/profile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "csv_util.hpp"
#include "uad/rng.hpp"

namespace uad {

std::string TupleDistribution::encode_tuple(std::span<const Symbol> tuple) {
    std::string key;
    key.reserve(tuple.size());
    for (Symbol s : tuple) key.push_back(static_cast<char>(static_cast<unsigned char>(s)));
    return key;
}

SymbolSequence TupleDistribution::decode_key(const std::string& key) {
    SymbolSequence tuple;
    tuple.reserve(key.size());
    for (char c : key) tuple.push_back(static_cast<Symbol>(static_cast<unsigned char>(c)));
    return tuple;
}

double TupleDistribution::mass_of(std::span<const Symbol> tuple) const {
    const std::string key = encode_tuple(tuple);
    const auto it = std::lower_bound(cells.begin(), cells.end(), key,
                                     [](const auto& cell, const std::string& k) { return cell.first < k; });
    if (it == cells.end() || it->first != key) return 0.0;
    return it->second;
}

TupleDistribution tuple_distribution(const Model& model, int tuple_length,
                                     std::uint64_t enumeration_cap, std::uint64_t sample_count,
                                     std::uint64_t seed) {
    if (tuple_length < 1)
        throw Error(ErrorCode::invalid_spec, "tuple length must be at least 1");
    const int k = model.alphabet_size();

    TupleDistribution dist;
    dist.tuple_length = tuple_length;
    dist.alphabet_size = k;

    // Does k^L fit under the cap?
    std::uint64_t support = 1;
    bool dense = true;
    for (int i = 0; i < tuple_length && dense; ++i) {
        if (support > enumeration_cap / static_cast<std::uint64_t>(k))
            dense = false;
        else
            support *= static_cast<std::uint64_t>(k);
    }
    dense = dense && support <= enumeration_cap;

    if (dense) {
        dist.representation = TupleDistribution::Representation::dense;
        dist.cells.reserve(support);
        // DFS in symbol order yields keys in ascending byte order. The
        // running product multiplies counter ratios directly; scoring the
        // same tuple through the log-domain path is an independent check.
        struct Frame {
            Model::NodeId node;
            double prob;
        };
        std::string key;
        std::vector<Frame> stack;
        auto descend = [&](auto&& self, Model::NodeId node, double prob) -> void {
            if (static_cast<int>(key.size()) == tuple_length) {
                dist.cells.emplace_back(key, prob);
                return;
            }
            for (Symbol s = 0; s < k; ++s) {
                const Model::NodeId next = model.child(node, s);
                const double step = static_cast<double>(model.counter(next)) /
                                    static_cast<double>(model.counter(node));
                key.push_back(static_cast<char>(s));
                self(self, model.is_leaf(next) ? Model::kRoot : next, prob * step);
                key.pop_back();
            }
        };
        descend(descend, Model::kRoot, 1.0);
    } else {
        dist.representation = TupleDistribution::Representation::sparse;
        dist.sample_count = sample_count;
        dist.seed = seed;
        if (sample_count == 0)
            throw Error(ErrorCode::invalid_spec, "sparse estimation needs a positive sample count");
        Rng rng(seed);
        std::map<std::string, std::uint64_t> counts;
        for (std::uint64_t i = 0; i < sample_count; ++i) {
            const SymbolSequence tuple = model.sample(static_cast<std::size_t>(tuple_length), rng);
            ++counts[TupleDistribution::encode_tuple(tuple)];
        }
        dist.cells.reserve(counts.size());
        for (const auto& [key, count] : counts)
            dist.cells.emplace_back(key,
                                    static_cast<double>(count) / static_cast<double>(sample_count));
    }
    return dist;
}

HistogramSpec fit_histogram_spec(const Model& model, const SymbolSequence& reference,
                                 int window_length, int bins, int stride) {
    if (bins < 1) throw Error(ErrorCode::invalid_spec, "histogram needs at least one bin");
    if (window_length < 1)
        throw Error(ErrorCode::invalid_spec, "window length must be at least 1");
    if (reference.size() < static_cast<std::size_t>(window_length))
        throw Error(ErrorCode::too_short, "reference sequence shorter than one window");
    if (stride < 1) throw Error(ErrorCode::invalid_spec, "stride must be at least 1");

    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t start = 0; start + static_cast<std::size_t>(window_length) <= reference.size();
         start += static_cast<std::size_t>(stride)) {
        Scorer scorer(model);
        for (int i = 0; i < window_length; ++i)
            scorer.push(reference[start + static_cast<std::size_t>(i)]);
        const double s = scorer.total();
        lo = first ? s : std::min(lo, s);
        hi = first ? s : std::max(hi, s);
        first = false;
    }
    if (lo == hi) {  // widen a point range so interior bins exist
        lo -= 0.5;
        hi += 0.5;
    }
    HistogramSpec spec;
    spec.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        spec.edges[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    return spec;
}

WindowHistogram window_histogram(const Model& model, const SymbolSequence& seq, int window_length,
                                 const HistogramSpec& spec, int stride) {
    if (window_length < 1)
        throw Error(ErrorCode::invalid_spec, "window length must be at least 1");
    if (stride < 1) throw Error(ErrorCode::invalid_spec, "stride must be at least 1");
    if (spec.edges.size() < 2)
        throw Error(ErrorCode::invalid_spec, "histogram spec needs at least two edges");
    if (seq.size() < static_cast<std::size_t>(window_length))
        throw Error(ErrorCode::too_short, "sequence of length " + std::to_string(seq.size()) +
                                              " is shorter than one window of " +
                                              std::to_string(window_length));

    WindowHistogram h;
    h.edges = spec.edges;
    h.mass.assign(spec.edges.size() + 1, 0.0);
    h.window_length = window_length;
    h.stride = stride;

    std::uint64_t windows = 0;
    for (std::size_t start = 0; start + static_cast<std::size_t>(window_length) <= seq.size();
         start += static_cast<std::size_t>(stride)) {
        Scorer scorer(model);
        for (int i = 0; i < window_length; ++i)
            scorer.push(seq[start + static_cast<std::size_t>(i)]);
        const double s = scorer.total();
        // cell 0 is (-inf, e0); cell i is [e_{i-1}, e_i); the last cell is
        // [e_last, +inf)
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), s);
        h.mass[static_cast<std::size_t>(it - h.edges.begin())] += 1.0;
        ++windows;
    }
    for (double& m : h.mass) m /= static_cast<double>(windows);
    return h;
}

namespace {

double smoothed_kl(std::span<const double> p, std::span<const double> q, double epsilon) {
    if (epsilon <= 0.0) throw Error(ErrorCode::invalid_spec, "smoothing epsilon must be positive");
    double p_total = 0.0, q_total = 0.0;
    for (double v : p) p_total += v;
    for (double v : q) q_total += v;
    const double cells = static_cast<double>(p.size());
    const double p_norm = p_total + cells * epsilon;
    const double q_norm = q_total + cells * epsilon;
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = (p[i] + epsilon) / p_norm;
        const double qi = (q[i] + epsilon) / q_norm;
        kl += pi * std::log2(pi / qi);
    }
    return kl;
}

double mean_squared_difference(std::span<const double> p, std::span<const double> q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        sum += d * d;
    }
    return p.empty() ? 0.0 : sum / static_cast<double>(p.size());
}

void require_same_support(const WindowHistogram& p, const WindowHistogram& q) {
    if (p.window_length != q.window_length || p.edges != q.edges)
        throw Error(ErrorCode::incompatible_support,
                    "window histograms were built over different bin edges");
}

// Align two sorted cell lists over their union support.
std::pair<std::vector<double>, std::vector<double>> align_union(const TupleDistribution& p,
                                                                const TupleDistribution& q) {
    if (p.tuple_length != q.tuple_length || p.alphabet_size != q.alphabet_size)
        throw Error(ErrorCode::incompatible_support,
                    "tuple distributions have different tuple length or alphabet");
    std::vector<double> pv, qv;
    pv.reserve(p.cells.size() + q.cells.size());
    qv.reserve(p.cells.size() + q.cells.size());
    std::size_t i = 0, j = 0;
    while (i < p.cells.size() || j < q.cells.size()) {
        if (j == q.cells.size() ||
            (i < p.cells.size() && p.cells[i].first < q.cells[j].first)) {
            pv.push_back(p.cells[i].second);
            qv.push_back(0.0);
            ++i;
        } else if (i == p.cells.size() || q.cells[j].first < p.cells[i].first) {
            pv.push_back(0.0);
            qv.push_back(q.cells[j].second);
            ++j;
        } else {
            pv.push_back(p.cells[i].second);
            qv.push_back(q.cells[j].second);
            ++i;
            ++j;
        }
    }
    return {std::move(pv), std::move(qv)};
}

}  // namespace

double kl_divergence(const WindowHistogram& p, const WindowHistogram& q, double epsilon) {
    require_same_support(p, q);
    return smoothed_kl(p.mass, q.mass, epsilon);
}

double kl_divergence(const TupleDistribution& p, const TupleDistribution& q, double epsilon) {
    const auto [pv, qv] = align_union(p, q);
    return smoothed_kl(pv, qv, epsilon);
}

double mse_distance(const WindowHistogram& p, const WindowHistogram& q) {
    require_same_support(p, q);
    return mean_squared_difference(p.mass, q.mass);
}

double mse_distance(const TupleDistribution& p, const TupleDistribution& q) {
    const auto [pv, qv] = align_union(p, q);
    return mean_squared_difference(pv, qv);
}

EmpiricalType empirical_type(const SymbolSequence& seq, int alphabet_size) {
    if (seq.empty()) throw Error(ErrorCode::empty_input, "empirical type of an empty sequence");
    if (alphabet_size < 1) throw Error(ErrorCode::invalid_alphabet, "alphabet size must be positive");
    EmpiricalType type;
    type.n = seq.size();
    type.freq.assign(static_cast<std::size_t>(alphabet_size), 0.0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Symbol s = seq[i];
        if (s < 0 || s >= alphabet_size)
            throw Error(ErrorCode::invalid_symbol,
                        "symbol " + std::to_string(s) + " at position " + std::to_string(i) +
                            " outside alphabet of size " + std::to_string(alphabet_size));
        type.freq[static_cast<std::size_t>(s)] += 1.0;
    }
    for (double& f : type.freq) f /= static_cast<double>(type.n);
    return type;
}

double kl_divergence_pointwise(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw Error(ErrorCode::incompatible_support, "distributions differ in support size");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] <= 0.0)
            throw Error(ErrorCode::invalid_spec, "q must be positive wherever p is");
        d += p[i] * std::log2(p[i] / q[i]);
    }
    return d;
}

TypeClassProbability type_class_probability(const EmpiricalType& type, std::span<const double> q,
                                            std::size_t n) {
    if (n == 0) throw Error(ErrorCode::invalid_spec, "sequence length must be positive");
    if (q.size() != type.freq.size())
        throw Error(ErrorCode::incompatible_support,
                    "type and q are over different alphabet sizes");
    double q_total = 0.0;
    for (double v : q) {
        if (v <= 0.0) throw Error(ErrorCode::invalid_spec, "q must be strictly positive");
        q_total += v;
    }
    if (std::abs(q_total - 1.0) > 1e-9)
        throw Error(ErrorCode::invalid_spec, "q must sum to 1");

    // Counts must be integral at this n.
    std::vector<std::uint64_t> counts(type.freq.size());
    std::uint64_t total = 0;
    for (std::size_t a = 0; a < type.freq.size(); ++a) {
        const double scaled = type.freq[a] * static_cast<double>(n);
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) > 1e-6)
            throw Error(ErrorCode::invalid_type,
                        "type frequencies are not multiples of 1/n at n = " + std::to_string(n));
        counts[a] = static_cast<std::uint64_t>(rounded);
        total += counts[a];
    }
    if (total != n)
        throw Error(ErrorCode::invalid_type, "type frequencies do not sum to 1");

    // Exact value in the log domain: log2 multinomial(n; counts) plus
    // sum of count * log2 q. The multinomial coefficient itself is exact
    // integer arithmetic.
    boost::multiprecision::cpp_int multinomial = 1;
    std::uint64_t consumed = 0;
    for (std::uint64_t c : counts) {
        for (std::uint64_t i = 1; i <= c; ++i) {
            ++consumed;
            multinomial = multinomial * consumed / i;  // binomial build-up stays integral
        }
    }
    double log2_exact = log2_value(Rational(multinomial));
    for (std::size_t a = 0; a < counts.size(); ++a)
        if (counts[a] > 0) log2_exact += static_cast<double>(counts[a]) * std::log2(q[a]);

    std::vector<double> p_fixed(type.freq.begin(), type.freq.end());
    std::vector<double> q_fixed(q.begin(), q.end());
    const double divergence = kl_divergence_pointwise(p_fixed, q_fixed);

    TypeClassProbability result;
    result.log2_exact = log2_exact;
    result.log2_upper = -static_cast<double>(n) * divergence;
    result.log2_lower = result.log2_upper - static_cast<double>(q.size()) *
                                                std::log2(static_cast<double>(n) + 1.0);
    result.exact = std::exp2(result.log2_exact);
    result.upper_bound = std::exp2(result.log2_upper);
    result.lower_bound = std::exp2(result.log2_lower);

    // The sandwich holds mathematically; allow floating-point slack only.
    const double slack = 1e-9;
    if (result.log2_exact > result.log2_upper + slack ||
        result.log2_exact < result.log2_lower - slack)
        throw Error(ErrorCode::invalid_type, "type class probability escaped its bounds");
    return result;
}

CategoryMap parse_category_mapping(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> rows;
    bool saw_header = false;
    std::size_t row_index = 0;
    csv::for_each_line(text, [&](std::string_view line) {
        if (line.empty() || line.front() == '#') return;
        auto fields = csv::split_line(line);
        if (!saw_header) {
            if (fields.size() < 2 || csv::trim(fields[0]) != "call_name" ||
                csv::trim(fields[1]) != "category")
                throw Error(ErrorCode::schema, "expected header 'call_name,category'");
            saw_header = true;
            return;
        }
        ++row_index;
        if (fields.size() < 2 || csv::trim(fields[0]).empty() || csv::trim(fields[1]).empty())
            throw Error(ErrorCode::bad_row,
                        "mapping row " + std::to_string(row_index) + " needs call_name,category");
        rows.emplace_back(std::string(csv::trim(fields[0])), std::string(csv::trim(fields[1])));
    });
    if (!saw_header) throw Error(ErrorCode::schema, "mapping file has no header row");
    if (rows.empty()) throw Error(ErrorCode::empty_training, "mapping file has no rows");

    CategoryMap map;
    std::set<std::string> distinct;
    for (const auto& [call, category] : rows) distinct.insert(category);
    map.categories.assign(distinct.begin(), distinct.end());
    auto symbol_of = [&](const std::string& category) {
        return static_cast<Symbol>(std::lower_bound(map.categories.begin(), map.categories.end(),
                                                    category) -
                                   map.categories.begin());
    };
    for (const auto& [call, category] : rows) {
        const Symbol s = symbol_of(category);
        const auto [it, inserted] = map.call_to_symbol.emplace(call, s);
        if (!inserted && it->second != s)
            throw Error(ErrorCode::bad_row, "call '" + call + "' mapped to two categories");
    }
    return map;
}

std::vector<SymbolSequence> map_call_trace(std::string_view text, const CategoryMap& map) {
    std::vector<SymbolSequence> segments;
    SymbolSequence cur;
    std::size_t line_no = 0;
    csv::for_each_line(text, [&](std::string_view line) {
        ++line_no;
        line = csv::trim(line);
        if (!line.empty() && line.front() == '#') return;
        if (line.empty()) {
            if (!cur.empty()) segments.push_back(std::move(cur));
            cur = {};
            return;
        }
        const auto it = map.call_to_symbol.find(std::string(line));
        if (it == map.call_to_symbol.end())
            throw Error(ErrorCode::bad_row, "line " + std::to_string(line_no) + ": call '" +
                                                std::string(line) + "' is not in the mapping");
        cur.push_back(it->second);
    });
    if (!cur.empty()) segments.push_back(std::move(cur));
    if (segments.empty()) throw Error(ErrorCode::empty_input, "call trace has no events");
    return segments;
}

}  // namespace uad
