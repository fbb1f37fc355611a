#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "uad/profile.hpp"
#include "uad/rng.hpp"
#include "uad/synth.hpp"

using namespace uad;

namespace {

SymbolSequence seq_of(const char* letters) {
    SymbolSequence s;
    for (const char* p = letters; *p; ++p) s.push_back(*p - 'a');
    return s;
}

Model fig1_model() {
    Model m(4);
    m.train(seq_of("aabdbbacbbda"));
    return m;
}

WindowHistogram two_cell(double a, double b) {
    WindowHistogram h;
    h.edges = {0.0};
    h.mass = {a, b};
    h.window_length = 1;
    return h;
}

// Trains a model on a structured order-1 source; used wherever a
// non-trivial tree is needed.
Model structured_model(int k, std::uint64_t seed, std::size_t symbols = 10000) {
    SourceSpec spec;
    spec.kind = SourceKind::markov1;
    spec.transition.assign(static_cast<std::size_t>(k), std::vector<double>());
    for (int s = 0; s < k; ++s) {
        std::vector<double> row(static_cast<std::size_t>(k), 0.1 / static_cast<double>(k - 2));
        row[static_cast<std::size_t>((s + 1) % k)] = 0.7;
        row[static_cast<std::size_t>(s)] = 0.2;
        spec.transition[static_cast<std::size_t>(s)] = row;
    }
    spec.seed = seed;
    spec.length = 500;
    spec.count = symbols / 500;
    Model m(k);
    for (const auto& seq : synthesize(spec)) m.train(seq);
    return m;
}

}  // namespace

TEST_CASE("tuple distributions") {
    SUBCASE("uniform memoryless model spreads mass evenly") {
        const Model m(2);
        const TupleDistribution d = tuple_distribution(m, 2);
        CHECK(d.representation == TupleDistribution::Representation::dense);
        REQUIRE(d.cells.size() == 4);
        for (const auto& [key, p] : d.cells) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("worked-example mass of 'ba'") {
        const TupleDistribution d = tuple_distribution(fig1_model(), 2);
        const SymbolSequence ba = seq_of("ba");
        CHECK(d.mass_of(ba) == doctest::Approx(4.0 / 28.0).epsilon(1e-12));
    }

    SUBCASE("dense mode sums to one and matches per-tuple rescoring") {
        Rng rng(2025);
        for (int trial = 0; trial < 4; ++trial) {
            Model m(4);
            for (int s = 0; s < 3; ++s) {
                SymbolSequence seq;
                for (int i = 0; i < 100; ++i) seq.push_back(static_cast<Symbol>(rng.below(4)));
                m.train(seq);
            }
            for (int L = 1; L <= 4; ++L) {
                const TupleDistribution d = tuple_distribution(m, L);
                double total = 0.0;
                for (const auto& [key, p] : d.cells) {
                    total += p;
                    // independent route: log-domain scoring of the tuple
                    const SymbolSequence tuple = TupleDistribution::decode_key(key);
                    CHECK(p == doctest::Approx(std::exp2(m.sequence_log_probability(tuple)))
                                   .epsilon(1e-9));
                }
                CHECK(std::abs(total - 1.0) < 1e-9);
            }
        }
    }

    SUBCASE("sparse estimation approximates the dense distribution") {
        const Model m = structured_model(4, 99, 4000);
        const TupleDistribution dense = tuple_distribution(m, 4);
        // force the sparse path with a tiny cap
        const TupleDistribution sparse = tuple_distribution(m, 4, 8, 200000, 31);
        CHECK(sparse.representation == TupleDistribution::Representation::sparse);
        CHECK(sparse.sample_count == 200000);
        CHECK(sparse.seed == 31);
        double total = 0.0;
        for (const auto& [key, p] : sparse.cells) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& [key, p] : dense.cells) {
            const SymbolSequence tuple = TupleDistribution::decode_key(key);
            CHECK(std::abs(sparse.mass_of(tuple) - p) < 0.01);
        }
    }

    SUBCASE("same seed, same estimate") {
        const Model m = structured_model(4, 99, 2000);
        const TupleDistribution a = tuple_distribution(m, 3, 1, 5000, 7);
        const TupleDistribution b = tuple_distribution(m, 3, 1, 5000, 7);
        CHECK(a.cells == b.cells);
    }
}

TEST_CASE("window histograms") {
    const Model m = fig1_model();

    SUBCASE("a sequence of exactly one window puts all mass in one bin") {
        const SymbolSequence seq = seq_of("badc");
        const HistogramSpec spec = fit_histogram_spec(m, seq_of("aabdbbacbbda"), 4, 8);
        const WindowHistogram h = window_histogram(m, seq, 4, spec);
        double total = 0.0;
        int hit = 0;
        for (double v : h.mass) {
            total += v;
            hit += v > 0;
        }
        CHECK(total == doctest::Approx(1.0));
        CHECK(hit == 1);
    }

    SUBCASE("identical inputs give identical histograms") {
        const SymbolSequence seq = m.sample(400, 5);
        const HistogramSpec spec = fit_histogram_spec(m, seq, 20, 64);
        const WindowHistogram a = window_histogram(m, seq, 20, spec);
        const WindowHistogram b = window_histogram(m, seq, 20, spec);
        CHECK(a.mass == b.mass);
        CHECK(a.edges == b.edges);
        CHECK(a.mass.size() == a.edges.size() + 1);
    }

    SUBCASE("an alphabet-permuted sample diverges from the model's own") {
        const Model structured = structured_model(4, 7);
        const SymbolSequence own = structured.sample(10000, 11);
        SymbolSequence permuted;
        permuted.reserve(own.size());
        for (Symbol s : own) permuted.push_back((s + 1) % 4);

        const HistogramSpec spec = fit_histogram_spec(structured, own, 20, 64);
        const WindowHistogram h_own = window_histogram(structured, own, 20, spec);
        const WindowHistogram h_perm = window_histogram(structured, permuted, 20, spec);
        CHECK(kl_divergence(h_perm, h_own) > 0.0);
        CHECK(kl_divergence(h_own, h_own) == 0.0);
    }

    SUBCASE("too-short sequences are rejected") {
        const HistogramSpec spec = fit_histogram_spec(m, seq_of("aabdbbacbbda"), 4, 8);
        try {
            window_histogram(m, seq_of("ab"), 4, spec);
            FAIL("expected too-short error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::too_short);
        }
    }
}

TEST_CASE("kl divergence over histograms") {
    SUBCASE("identity is zero") {
        const WindowHistogram h = two_cell(0.3, 0.7);
        CHECK(kl_divergence(h, h) == doctest::Approx(0.0));
    }

    SUBCASE("degenerate vs uniform is one bit up to smoothing") {
        const double eps = 1e-6;
        const double kl = kl_divergence(two_cell(1.0, 0.0), two_cell(0.5, 0.5), eps);
        // closed form of the smoothed value, computed independently
        const double p0 = (1.0 + eps) / (1.0 + 2 * eps), p1 = eps / (1.0 + 2 * eps);
        const double q0 = (0.5 + eps) / (1.0 + 2 * eps), q1 = q0;
        const double expected = p0 * std::log2(p0 / q0) + p1 * std::log2(p1 / q1);
        CHECK(kl == doctest::Approx(expected).epsilon(1e-12));
        CHECK(kl == doctest::Approx(1.0).epsilon(1e-3));
    }

    SUBCASE("nonnegative for arbitrary distributions") {
        Rng rng(88);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t cells = 2 + rng.below(10);
            WindowHistogram p, q;
            p.edges.assign(cells - 1, 0.0);
            q.edges = p.edges;
            double ps = 0, qs = 0;
            for (std::size_t i = 0; i < cells; ++i) {
                p.mass.push_back(rng.canonical());
                q.mass.push_back(rng.canonical());
                ps += p.mass.back();
                qs += q.mass.back();
            }
            for (double& v : p.mass) v /= ps;
            for (double& v : q.mass) v /= qs;
            CHECK(kl_divergence(p, q) >= -1e-12);
        }
    }

    SUBCASE("mismatched supports are rejected") {
        WindowHistogram a = two_cell(0.5, 0.5);
        WindowHistogram b = two_cell(0.5, 0.5);
        b.edges = {1.0};
        try {
            kl_divergence(a, b);
            FAIL("expected incompatible-support error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::incompatible_support);
        }
        const TupleDistribution d2 = tuple_distribution(Model(2), 2);
        const TupleDistribution d3 = tuple_distribution(Model(2), 3);
        CHECK_THROWS_AS(kl_divergence(d2, d3), Error);
    }
}

TEST_CASE("mse distance") {
    SUBCASE("identity and the crossed pair") {
        const WindowHistogram h = two_cell(0.25, 0.75);
        CHECK(mse_distance(h, h) == doctest::Approx(0.0));
        CHECK(mse_distance(two_cell(1, 0), two_cell(0, 1)) == doctest::Approx(1.0));
    }

    SUBCASE("symmetry") {
        Rng rng(89);
        for (int trial = 0; trial < 20; ++trial) {
            const WindowHistogram p = two_cell(rng.canonical(), rng.canonical());
            const WindowHistogram q = two_cell(rng.canonical(), rng.canonical());
            CHECK(mse_distance(p, q) == doctest::Approx(mse_distance(q, p)).epsilon(1e-15));
        }
    }

    SUBCASE("tuple distributions use the union support") {
        const Model m(2);
        const TupleDistribution d = tuple_distribution(m, 2);
        CHECK(mse_distance(d, d) == doctest::Approx(0.0));
    }
}

TEST_CASE("empirical types") {
    SUBCASE("worked example over a three-letter alphabet") {
        // symbols 1,2,3 mapped to 0,1,2
        const EmpiricalType t = empirical_type({0, 1, 0, 1, 2}, 3);
        REQUIRE(t.freq.size() == 3);
        CHECK(t.freq[0] == doctest::Approx(0.4));
        CHECK(t.freq[1] == doctest::Approx(0.4));
        CHECK(t.freq[2] == doctest::Approx(0.2));
        CHECK(t.n == 5);
    }

    SUBCASE("constant sequence is a point mass") {
        const EmpiricalType t = empirical_type({1, 1, 1, 1}, 2);
        CHECK(t.freq[0] == 0.0);
        CHECK(t.freq[1] == 1.0);
    }

    SUBCASE("alternating binary is uniform") {
        const EmpiricalType t = empirical_type({0, 1}, 2);
        CHECK(t.freq[0] == doctest::Approx(0.5));
        CHECK(t.freq[1] == doctest::Approx(0.5));
    }

    SUBCASE("errors") {
        try {
            empirical_type({}, 2);
            FAIL("expected empty-input error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::empty_input);
        }
        CHECK_THROWS_AS(empirical_type({0, 5}, 2), Error);
    }
}

TEST_CASE("type class probabilities") {
    SUBCASE("hand-computed uniform binary case at n = 2") {
        // type (1/2, 1/2) under Q = (1/2, 1/2): the class is {01, 10},
        // each sequence has probability 1/4, so exactly 1/2.
        EmpiricalType t;
        t.freq = {0.5, 0.5};
        t.n = 2;
        const std::vector<double> q = {0.5, 0.5};
        const TypeClassProbability r = type_class_probability(t, q, 2);
        CHECK(r.exact == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.upper_bound == doctest::Approx(1.0).epsilon(1e-12));   // D = 0
        CHECK(r.lower_bound == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
        CHECK(r.lower_bound <= r.exact);
        CHECK(r.exact <= r.upper_bound);
    }

    SUBCASE("D(P||P) = 0 makes the upper bound one") {
        EmpiricalType t;
        t.freq = {0.25, 0.75};
        t.n = 4;
        const std::vector<double> q = {0.25, 0.75};
        const TypeClassProbability r = type_class_probability(t, q, 4);
        CHECK(r.upper_bound == doctest::Approx(1.0));
        // exact = multinomial(4;1,3) * 0.25 * 0.75^3
        CHECK(r.exact == doctest::Approx(4.0 * 0.25 * 0.421875).epsilon(1e-12));
    }

    SUBCASE("exhaustive enumeration over all binary types up to n = 8") {
        const std::vector<double> q = {0.3, 0.7};
        for (std::size_t n = 1; n <= 8; ++n) {
            // oracle: walk all 2^n sequences, group their Q-probability
            // by type (count of ones)
            std::vector<double> class_mass(n + 1, 0.0);
            for (std::uint64_t bits = 0; bits < (1ULL << n); ++bits) {
                const auto ones = static_cast<std::size_t>(__builtin_popcountll(bits));
                class_mass[ones] += std::pow(0.3, static_cast<double>(n - ones)) *
                                    std::pow(0.7, static_cast<double>(ones));
            }
            double total = 0.0;
            for (std::size_t ones = 0; ones <= n; ++ones) {
                EmpiricalType t;
                t.n = n;
                const double f1 = static_cast<double>(ones) / static_cast<double>(n);
                t.freq = {1.0 - f1, f1};
                const TypeClassProbability r = type_class_probability(t, q, n);
                CHECK(r.exact == doctest::Approx(class_mass[ones]).epsilon(1e-12));
                CHECK(r.log2_lower <= r.log2_exact + 1e-9);
                CHECK(r.log2_exact <= r.log2_upper + 1e-9);
                total += r.exact;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("acceptance mass of a fixed type decays exponentially") {
        EmpiricalType t;
        t.freq = {0.5, 0.5};
        const std::vector<double> q = {0.3, 0.7};
        const double divergence =
            0.5 * std::log2(0.5 / 0.3) + 0.5 * std::log2(0.5 / 0.7);
        double prev = 1.0;
        for (std::size_t n = 4; n <= 40; n += 2) {
            t.n = n;
            const TypeClassProbability r = type_class_probability(t, q, n);
            CHECK(r.exact <= prev + 1e-12);  // non-increasing in n
            CHECK(r.log2_exact <=
                  -static_cast<double>(n) * divergence +
                      2.0 * std::log2(static_cast<double>(n) + 1.0));
            prev = r.exact;
        }
    }

    SUBCASE("errors") {
        EmpiricalType t;
        t.freq = {0.4, 0.6};
        t.n = 5;
        try {
            type_class_probability(t, std::vector<double>{0.5, 0.5}, 7);  // 0.4*7 not integral
            FAIL("expected invalid-type error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::invalid_type);
        }
        CHECK_THROWS_AS(type_class_probability(t, std::vector<double>{1.0, 0.0}, 5), Error);
        CHECK_THROWS_AS(type_class_probability(t, std::vector<double>{0.5}, 5), Error);
    }
}

TEST_CASE("category mapping turns call traces into symbol segments") {
    const char* mapping_csv =
        "call_name,category\n"
        "NtCreateFile,Files\n"
        "NtReadFile,Files\n"
        "NtAllocateVirtualMemory,Memory\n"
        "NtOpenProcess,Process\n"
        "NtOpenKey,Registry\n"
        "NtDeviceIoControlFile,Device\n"
        "NtOpenThreadToken,Security\n"
        "NtWaitForSingleObject,Synchronization\n";

    SUBCASE("categories get deterministic, sorted symbol ids") {
        const CategoryMap map = parse_category_mapping(mapping_csv);
        CHECK(map.alphabet_size() == 7);
        CHECK(map.categories == std::vector<std::string>{"Device", "Files", "Memory", "Process",
                                                         "Registry", "Security",
                                                         "Synchronization"});
        CHECK(map.call_to_symbol.at("NtCreateFile") == 1);
        CHECK(map.call_to_symbol.at("NtReadFile") == 1);
        CHECK(map.call_to_symbol.at("NtDeviceIoControlFile") == 0);
        CHECK(map.call_to_symbol.at("NtWaitForSingleObject") == 6);

        // row order does not change the alphabet
        const CategoryMap reversed = parse_category_mapping(
            "call_name,category\n"
            "NtWaitForSingleObject,Synchronization\n"
            "NtCreateFile,Files\n");
        CHECK(reversed.categories[0] == "Files");
    }

    SUBCASE("traces split into segments on blank lines") {
        const CategoryMap map = parse_category_mapping(mapping_csv);
        const auto segments = map_call_trace(
            "NtCreateFile\nNtReadFile\nNtAllocateVirtualMemory\n"
            "\n"
            "# comment inside\n"
            "NtOpenKey\nNtOpenProcess\n",
            map);
        REQUIRE(segments.size() == 2);
        CHECK(segments[0] == SymbolSequence{1, 1, 2});
        CHECK(segments[1] == SymbolSequence{4, 3});
    }

    SUBCASE("unknown calls and malformed mappings are rejected") {
        const CategoryMap map = parse_category_mapping(mapping_csv);
        try {
            map_call_trace("NtCreateFile\nNtTotallyUnknown\n", map);
            FAIL("expected bad-row error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::bad_row);
            CHECK(std::string(e.what()).find("NtTotallyUnknown") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_category_mapping("wrong,header\nx,y\n"), Error);
        CHECK_THROWS_AS(parse_category_mapping("call_name,category\n"), Error);
        CHECK_THROWS_AS(
            parse_category_mapping("call_name,category\nNtReadFile,Files\nNtReadFile,Memory\n"),
            Error);
        CHECK_THROWS_AS(map_call_trace("\n\n", parse_category_mapping(mapping_csv)), Error);
    }
}

TEST_CASE("periodic repetition of one dictionary phrase stands out") {
    // seeded experiment: same-model samples define the normal KL
    // variation; the periodic extension of a legitimate phrase must
    // exceed its 95th percentile
    const Model m = structured_model(4, 12345, 20000);

    const SymbolSequence reference = m.sample(4000, 1000);
    const HistogramSpec spec = fit_histogram_spec(m, reference, 20, 64);
    const WindowHistogram ref_hist = window_histogram(m, reference, 20, spec);

    std::vector<double> same_model_kls;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const SymbolSequence seg = m.sample(2000, 2000 + i);
        same_model_kls.push_back(kl_divergence(window_histogram(m, seg, 20, spec), ref_hist));
    }
    std::sort(same_model_kls.begin(), same_model_kls.end());
    const double pct95 = same_model_kls[18];  // 19th of 20

    // a legitimate length-3 phrase: a depth-3 internal path of the tree
    SymbolSequence phrase;
    for (Symbol a = 0; a < 4 && phrase.empty(); ++a)
        for (Symbol b = 0; b < 4 && phrase.empty(); ++b)
            for (Symbol c = 0; c < 4 && phrase.empty(); ++c) {
                Model::NodeId n = Model::kRoot;
                bool internal = true;
                for (Symbol s : {a, b, c}) {
                    n = m.child(n, s);
                    if (m.is_leaf(n)) {
                        internal = false;
                        break;
                    }
                }
                if (internal) phrase = {a, b, c};
            }
    REQUIRE(!phrase.empty());

    SymbolSequence periodic;
    while (periodic.size() < 2000) periodic.push_back(phrase[periodic.size() % 3]);
    const double periodic_kl =
        kl_divergence(window_histogram(m, periodic, 20, spec), ref_hist);
    CHECK(periodic_kl > pct95);
    CHECK(periodic_kl > 5.0 * same_model_kls[same_model_kls.size() / 2]);
}
