#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "uad/error.hpp"
#include "uad/rng.hpp"

namespace uad {

using Symbol = int;
using SymbolSequence = std::vector<Symbol>;

// Exact probability values (counter ratios multiply without rounding).
using Rational = boost::multiprecision::cpp_rational;

// log2 of a positive rational, usable far below double underflow.
double log2_value(const Rational& r);

// Statistical model of normal behavior: a k-ary phrase tree built by
// incremental parsing of training sequences. Every internal node has
// exactly k children; leaves carry an implicit count of 1 and an internal
// node's count equals the number of leaves below it. The count of the
// root is the total leaf count, which normalizes all node probabilities.
//
// Node handles are indices into a flat arena; 0 is the root.
class Model {
public:
    using NodeId = std::uint32_t;
    static constexpr NodeId kRoot = 0;

    // Fresh model: root plus one leaf child per alphabet symbol.
    explicit Model(int alphabet_size);

    int alphabet_size() const { return alphabet_size_; }
    std::uint64_t leaf_count() const { return nodes_[kRoot].counter; }
    std::uint64_t phrase_count() const { return phrase_count_; }
    std::uint64_t trained_symbol_count() const { return trained_symbols_; }

    // Incremental parsing: each completed phrase expands the leaf it ends
    // on into an internal node with k fresh leaf children. A partial
    // phrase at end of input is discarded and parsing restarts at the
    // root for every new sequence. Returns the number of phrases parsed
    // from this sequence. The sequence is validated before any mutation.
    std::uint64_t train(const SymbolSequence& seq);
    std::uint64_t train(std::span<const SymbolSequence> sequences);

    // Probability the model assigns to a whole sequence: product of
    // child/parent counter ratios along the traversal, restarting from
    // the root whenever a leaf is consumed.
    Rational sequence_probability(const SymbolSequence& seq) const;

    // Same rule; named for querying dictionary phrases. A phrase lying on
    // a single root path telescopes to counter(end)/leaf_count.
    Rational phrase_probability(const SymbolSequence& phrase) const;

    // log2 of sequence_probability, accumulated in the log domain.
    double sequence_log_probability(const SymbolSequence& seq) const;

    // sequence_log_probability divided by length, for comparing
    // sequences of different lengths.
    double per_symbol_log_probability(const SymbolSequence& seq) const;

    // P(next | context) after traversing the context with root-reset.
    double conditional_probability(const SymbolSequence& context, Symbol next) const;

    // Random walk over the tree: children drawn by counter ratio, reset
    // to root at leaves. Deterministic for a given seed.
    SymbolSequence sample(std::size_t length, std::uint64_t seed) const;
    SymbolSequence sample(std::size_t length, Rng& rng) const;

    // Versioned JSON document. Counters are not stored; they are
    // recomputed from the structure on load. An optional centroid list
    // (the quantizer that produced the training alphabet) rides along.
    std::string serialize(const std::optional<std::vector<double>>& centroids = std::nullopt) const;
    static std::pair<Model, std::optional<std::vector<double>>> deserialize(const std::string& text);

    // Read access to the tree, used by scoring and by invariant checks.
    std::size_t node_count() const { return nodes_.size(); }
    bool is_leaf(NodeId n) const { return nodes_[n].first_child == 0; }
    std::uint64_t counter(NodeId n) const { return nodes_[n].counter; }
    NodeId child(NodeId n, Symbol s) const { return nodes_[n].first_child + static_cast<NodeId>(s); }

private:
    struct TreeNode {
        std::uint64_t counter = 1;
        std::uint32_t first_child = 0;  // 0 = leaf (root is never a leaf)
    };

    Model() = default;  // deserialize builds in place

    void require_symbol(Symbol s, std::size_t position) const;
    void validate_sequence(const SymbolSequence& seq) const;

    int alphabet_size_ = 0;
    std::vector<TreeNode> nodes_;
    std::uint64_t phrase_count_ = 0;
    std::uint64_t trained_symbols_ = 0;
};

// Streaming scorer over a frozen model. Feeding the symbols of a
// sequence one by one accumulates exactly sequence_log_probability;
// state can be carried across arbitrary split points.
class Scorer {
public:
    explicit Scorer(const Model& model) : model_(&model), node_(Model::kRoot) {}

    // Consume one symbol, returning its log2 conditional probability.
    double push(Symbol s);

    double total() const { return total_; }
    std::size_t consumed() const { return consumed_; }

    void reset() {
        node_ = Model::kRoot;
        total_ = 0.0;
        consumed_ = 0;
    }

private:
    const Model* model_;
    Model::NodeId node_;
    double total_ = 0.0;
    std::size_t consumed_ = 0;
};

}  // namespace uad
