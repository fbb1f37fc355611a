#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uad/error.hpp"
#include "uad/model.hpp"

namespace uad {

enum class SourceKind { iid, markov1, model };

// Description of a synthetic symbol source for experiments and demos.
// All randomness stems from the one seed.
struct SourceSpec {
    SourceKind kind = SourceKind::iid;
    std::vector<double> probs;                     // iid
    std::vector<std::vector<double>> transition;   // markov1, k x k row-stochastic
    std::string model_path;                        // model
    std::uint64_t seed = 0;
    std::size_t length = 100;
    std::size_t count = 1;

    void validate() const;  // probability rows must sum to 1 +- 1e-12
};

std::vector<SymbolSequence> synthesize(const SourceSpec& spec);

// Same generators with a caller-provided model (avoids a file round trip
// for kind == model).
std::vector<SymbolSequence> synthesize(const SourceSpec& spec, const Model* model);

}  // namespace uad
