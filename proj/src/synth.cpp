#include "uad/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "uad/rng.hpp"

namespace uad {

namespace {

void require_distribution(const std::vector<double>& row, const char* what) {
    if (row.empty()) throw Error(ErrorCode::invalid_spec, std::string(what) + " is empty");
    double total = 0.0;
    for (double p : row) {
        if (p < 0.0 || !std::isfinite(p))
            throw Error(ErrorCode::invalid_spec, std::string(what) + " has a negative or non-finite entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorCode::invalid_spec, std::string(what) + " does not sum to 1");
}

Symbol draw(Rng& rng, const std::vector<double>& dist) {
    return static_cast<Symbol>(rng.weighted(dist));
}

}  // namespace

void SourceSpec::validate() const {
    if (length < 1) throw Error(ErrorCode::invalid_spec, "sequence length must be positive");
    if (count < 1) throw Error(ErrorCode::invalid_spec, "sequence count must be positive");
    switch (kind) {
        case SourceKind::iid:
            require_distribution(probs, "probability vector");
            if (probs.size() < 2)
                throw Error(ErrorCode::invalid_spec, "iid source needs an alphabet of at least 2");
            break;
        case SourceKind::markov1: {
            if (transition.size() < 2)
                throw Error(ErrorCode::invalid_spec, "transition matrix needs at least 2 states");
            for (const auto& row : transition) {
                if (row.size() != transition.size())
                    throw Error(ErrorCode::invalid_spec, "transition matrix is not square");
                require_distribution(row, "transition row");
            }
            break;
        }
        case SourceKind::model:
            if (model_path.empty())
                throw Error(ErrorCode::invalid_spec, "model source needs a model path");
            break;
    }
}

std::vector<SymbolSequence> synthesize(const SourceSpec& spec) {
    return synthesize(spec, nullptr);
}

std::vector<SymbolSequence> synthesize(const SourceSpec& spec, const Model* model) {
    spec.validate();

    std::optional<Model> loaded;
    if (spec.kind == SourceKind::model && model == nullptr) {
        std::ifstream in(spec.model_path);
        if (!in) throw Error(ErrorCode::io, "cannot open model file " + spec.model_path);
        std::ostringstream text;
        text << in.rdbuf();
        loaded = Model::deserialize(text.str()).first;
        model = &*loaded;
    }

    Rng rng(spec.seed);
    std::vector<SymbolSequence> out;
    out.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        SymbolSequence seq;
        seq.reserve(spec.length);
        switch (spec.kind) {
            case SourceKind::iid:
                for (std::size_t t = 0; t < spec.length; ++t) seq.push_back(draw(rng, spec.probs));
                break;
            case SourceKind::markov1: {
                // initial state uniform over the alphabet
                Symbol state = static_cast<Symbol>(rng.below(spec.transition.size()));
                seq.push_back(state);
                while (seq.size() < spec.length) {
                    state = draw(rng, spec.transition[static_cast<std::size_t>(state)]);
                    seq.push_back(state);
                }
                break;
            }
            case SourceKind::model:
                seq = model->sample(spec.length, rng);
                break;
        }
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace uad
