#include "uad/model.hpp"

#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

#include "uad/rng.hpp"

namespace uad {

using json = nlohmann::json;

double log2_value(const Rational& r) {
    using boost::multiprecision::cpp_int;
    if (r <= 0) throw Error(ErrorCode::invalid_spec, "log2 of non-positive rational");
    auto log2_int = [](const cpp_int& v) {
        // msb index plus the fractional part from the top 64 bits.
        const unsigned bits = boost::multiprecision::msb(v);
        cpp_int top = v;
        int shift = 0;
        if (bits > 52) {
            shift = static_cast<int>(bits) - 52;
            top >>= shift;
        }
        return std::log2(top.convert_to<double>()) + shift;
    };
    return log2_int(boost::multiprecision::numerator(r)) -
           log2_int(boost::multiprecision::denominator(r));
}

Model::Model(int alphabet_size) : alphabet_size_(alphabet_size) {
    if (alphabet_size < 2)
        throw Error(ErrorCode::invalid_alphabet,
                    "alphabet size must be at least 2, got " + std::to_string(alphabet_size));
    nodes_.resize(1 + static_cast<std::size_t>(alphabet_size));
    nodes_[kRoot].counter = static_cast<std::uint64_t>(alphabet_size);
    nodes_[kRoot].first_child = 1;
}

void Model::require_symbol(Symbol s, std::size_t position) const {
    if (s < 0 || s >= alphabet_size_)
        throw Error(ErrorCode::invalid_symbol,
                    "symbol " + std::to_string(s) + " at position " + std::to_string(position) +
                        " outside alphabet of size " + std::to_string(alphabet_size_));
}

void Model::validate_sequence(const SymbolSequence& seq) const {
    for (std::size_t i = 0; i < seq.size(); ++i) require_symbol(seq[i], i);
}

std::uint64_t Model::train(const SymbolSequence& seq) {
    validate_sequence(seq);  // no mutation on invalid input

    const std::uint64_t before = phrase_count_;
    std::vector<NodeId> path;  // nodes of the phrase in progress, root first
    path.push_back(kRoot);

    for (Symbol s : seq) {
        const NodeId next = child(path.back(), s);
        path.push_back(next);
        if (!is_leaf(next)) continue;

        // Phrase complete: the leaf becomes internal with k fresh leaves,
        // so it and every ancestor gain (k - 1) leaves below them.
        const std::uint64_t gained = static_cast<std::uint64_t>(alphabet_size_) - 1;
        for (NodeId n : path) nodes_[n].counter += gained;
        nodes_[next].first_child = static_cast<std::uint32_t>(nodes_.size());
        nodes_.insert(nodes_.end(), static_cast<std::size_t>(alphabet_size_), TreeNode{});
        ++phrase_count_;
        path.clear();
        path.push_back(kRoot);
    }
    trained_symbols_ += seq.size();
    return phrase_count_ - before;
}

std::uint64_t Model::train(std::span<const SymbolSequence> sequences) {
    for (const auto& seq : sequences) validate_sequence(seq);
    std::uint64_t phrases = 0;
    for (const auto& seq : sequences) phrases += train(seq);
    return phrases;
}

Rational Model::sequence_probability(const SymbolSequence& seq) const {
    if (seq.empty()) throw Error(ErrorCode::empty_input, "cannot score an empty sequence");
    Rational p = 1;
    NodeId cur = kRoot;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        require_symbol(seq[i], i);
        const NodeId next = child(cur, seq[i]);
        p *= Rational(counter(next), counter(cur));
        cur = is_leaf(next) ? kRoot : next;
    }
    return p;
}

Rational Model::phrase_probability(const SymbolSequence& phrase) const {
    return sequence_probability(phrase);
}

double Model::sequence_log_probability(const SymbolSequence& seq) const {
    if (seq.empty()) throw Error(ErrorCode::empty_input, "cannot score an empty sequence");
    Scorer scorer(*this);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        require_symbol(seq[i], i);
        scorer.push(seq[i]);
    }
    return scorer.total();
}

double Model::per_symbol_log_probability(const SymbolSequence& seq) const {
    return sequence_log_probability(seq) / static_cast<double>(seq.size());
}

double Model::conditional_probability(const SymbolSequence& context, Symbol next) const {
    NodeId cur = kRoot;
    for (std::size_t i = 0; i < context.size(); ++i) {
        require_symbol(context[i], i);
        const NodeId n = child(cur, context[i]);
        cur = is_leaf(n) ? kRoot : n;
    }
    require_symbol(next, context.size());
    const NodeId n = child(cur, next);
    return static_cast<double>(counter(n)) / static_cast<double>(counter(cur));
}

SymbolSequence Model::sample(std::size_t length, std::uint64_t seed) const {
    Rng rng(seed);
    return sample(length, rng);
}

SymbolSequence Model::sample(std::size_t length, Rng& rng) const {
    if (length == 0) throw Error(ErrorCode::empty_input, "sample length must be positive");
    SymbolSequence out;
    out.reserve(length);
    NodeId cur = kRoot;
    while (out.size() < length) {
        std::uint64_t r = rng.below(counter(cur));
        Symbol s = 0;
        NodeId next = child(cur, 0);
        while (r >= counter(next)) {
            r -= counter(next);
            ++s;
            next = child(cur, s);
        }
        out.push_back(s);
        cur = is_leaf(next) ? kRoot : next;
    }
    return out;
}

double Scorer::push(Symbol s) {
    if (s < 0 || s >= model_->alphabet_size())
        throw Error(ErrorCode::invalid_symbol,
                    "symbol " + std::to_string(s) + " outside alphabet of size " +
                        std::to_string(model_->alphabet_size()));
    const Model::NodeId next = model_->child(node_, s);
    const double step = std::log2(static_cast<double>(model_->counter(next)) /
                                  static_cast<double>(model_->counter(node_)));
    node_ = model_->is_leaf(next) ? Model::kRoot : next;
    total_ += step;
    ++consumed_;
    return step;
}

std::string Model::serialize(const std::optional<std::vector<double>>& centroids) const {
    json nodes = json::array();
    // Preorder walk with an explicit stack; symbol is the position among
    // siblings, null for the root.
    struct Frame {
        NodeId node;
        int symbol;  // -1 for root
    };
    std::vector<Frame> stack;
    stack.push_back({kRoot, -1});
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        json entry = json::array();
        if (f.symbol < 0)
            entry.push_back(nullptr);
        else
            entry.push_back(f.symbol);
        entry.push_back(is_leaf(f.node));
        nodes.push_back(std::move(entry));
        if (!is_leaf(f.node)) {
            for (int s = alphabet_size_ - 1; s >= 0; --s)
                stack.push_back({child(f.node, s), s});
        }
    }

    json doc;
    doc["version"] = 1;
    doc["alphabet_size"] = alphabet_size_;
    if (centroids)
        doc["centroids"] = *centroids;
    else
        doc["centroids"] = nullptr;
    doc["nodes"] = std::move(nodes);
    return doc.dump();
}

std::pair<Model, std::optional<std::vector<double>>> Model::deserialize(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::corrupt_model, std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("version") || !doc.contains("alphabet_size") ||
        !doc.contains("centroids") || !doc.contains("nodes"))
        throw Error(ErrorCode::corrupt_model, "model file missing required fields");
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != 1)
        throw Error(ErrorCode::corrupt_model, "unsupported model file version");
    if (!doc["alphabet_size"].is_number_integer())
        throw Error(ErrorCode::corrupt_model, "alphabet_size must be an integer");
    const int k = doc["alphabet_size"].get<int>();
    if (k < 2) throw Error(ErrorCode::corrupt_model, "alphabet_size below 2");

    std::optional<std::vector<double>> centroids;
    if (!doc["centroids"].is_null()) {
        if (!doc["centroids"].is_array())
            throw Error(ErrorCode::corrupt_model, "centroids must be null or an array");
        centroids = doc["centroids"].get<std::vector<double>>();
    }

    const json& entries = doc["nodes"];
    if (!entries.is_array() || entries.empty())
        throw Error(ErrorCode::corrupt_model, "nodes must be a nonempty array");

    auto entry_at = [&](std::size_t i) -> std::pair<int, bool> {
        const json& e = entries[i];
        if (!e.is_array() || e.size() != 2 || !e[1].is_boolean() ||
            !(e[0].is_null() || e[0].is_number_integer()))
            throw Error(ErrorCode::corrupt_model, "malformed node entry at index " + std::to_string(i));
        return {e[0].is_null() ? -1 : e[0].get<int>(), e[1].get<bool>()};
    };

    Model m;
    m.alphabet_size_ = k;

    auto [root_symbol, root_leaf] = entry_at(0);
    if (root_symbol != -1) throw Error(ErrorCode::corrupt_model, "first node must be the root");
    if (root_leaf) throw Error(ErrorCode::corrupt_model, "root cannot be a leaf");
    m.nodes_.push_back(TreeNode{});

    // Preorder reconstruction: each internal node owes k children; the
    // stack tracks (arena id, symbols still expected).
    struct Pending {
        NodeId node;
        int next_symbol;
    };
    std::vector<Pending> stack;
    m.nodes_[kRoot].first_child = 1;
    stack.push_back({kRoot, 0});

    std::size_t cursor = 1;
    while (!stack.empty()) {
        Pending& top = stack.back();
        if (top.next_symbol == k) {
            stack.pop_back();
            continue;
        }
        if (cursor >= entries.size())
            throw Error(ErrorCode::corrupt_model, "node array truncated");
        auto [symbol, leaf] = entry_at(cursor);
        if (symbol != top.next_symbol)
            throw Error(ErrorCode::corrupt_model,
                        "node " + std::to_string(cursor) + " out of symbol order");
        // Children of one parent must be contiguous in the arena, so a
        // parent's subtree cannot interleave with its siblings; preorder
        // with an id remap handles that.
        (void)leaf;
        ++top.next_symbol;
        ++cursor;
        // placeholder; ids assigned below in a second pass
        if (!leaf) stack.push_back({0, 0});
    }
    if (cursor != entries.size())
        throw Error(ErrorCode::corrupt_model, "trailing node entries after tree completed");

    // Structure is well formed; rebuild for real. Internal nodes reserve
    // their child block on discovery, which keeps sibling blocks
    // contiguous regardless of preorder interleaving.
    m.nodes_.clear();
    m.nodes_.push_back(TreeNode{});
    m.nodes_[kRoot].first_child = 1;
    m.nodes_.insert(m.nodes_.end(), static_cast<std::size_t>(k), TreeNode{});

    struct Fill {
        NodeId node;
        int next_symbol;
    };
    std::vector<Fill> fill;
    fill.push_back({kRoot, 0});
    cursor = 1;
    std::uint64_t internal_non_root = 0;
    while (!fill.empty()) {
        Fill& top = fill.back();
        if (top.next_symbol == k) {
            fill.pop_back();
            continue;
        }
        auto [symbol, leaf] = entry_at(cursor);
        const NodeId this_node = m.nodes_[top.node].first_child + static_cast<NodeId>(symbol);
        ++top.next_symbol;
        ++cursor;
        if (!leaf) {
            m.nodes_[this_node].first_child = static_cast<std::uint32_t>(m.nodes_.size());
            m.nodes_.insert(m.nodes_.end(), static_cast<std::size_t>(k), TreeNode{});
            fill.push_back({this_node, 0});
            ++internal_non_root;
        }
    }

    // Counters are derived state: leaf = 1, internal = sum of children.
    // Deepest children live at higher indices, so a reverse sweep works.
    for (std::size_t i = m.nodes_.size(); i-- > 0;) {
        if (m.nodes_[i].first_child == 0) {
            m.nodes_[i].counter = 1;
        } else {
            std::uint64_t sum = 0;
            for (int s = 0; s < k; ++s) sum += m.nodes_[m.nodes_[i].first_child + s].counter;
            m.nodes_[i].counter = sum;
        }
    }

    const std::uint64_t expected_leaves =
        static_cast<std::uint64_t>(k) + internal_non_root * (static_cast<std::uint64_t>(k) - 1);
    if (m.nodes_[kRoot].counter != expected_leaves)
        throw Error(ErrorCode::corrupt_model, "recomputed counters violate the leaf-count invariant");
    m.phrase_count_ = internal_non_root;
    return {std::move(m), std::move(centroids)};
}

}  // namespace uad
