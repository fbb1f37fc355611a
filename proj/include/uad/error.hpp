#pragma once

#include <stdexcept>
#include <string>

namespace uad {

// Failure categories surfaced by the library. The CLI maps these onto
// process exit codes; tests match on them directly.
enum class ErrorCode {
    invalid_alphabet,
    invalid_symbol,
    empty_input,
    corrupt_model,
    schema,
    bad_row,
    too_short,
    empty_training,
    insufficient_data,
    incompatible_support,
    incompatible_model,
    invalid_spec,
    invalid_type,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_alphabet: return "invalid-alphabet";
        case ErrorCode::invalid_symbol: return "invalid-symbol";
        case ErrorCode::empty_input: return "empty-input";
        case ErrorCode::corrupt_model: return "corrupt-model";
        case ErrorCode::schema: return "schema";
        case ErrorCode::bad_row: return "bad-row";
        case ErrorCode::too_short: return "too-short";
        case ErrorCode::empty_training: return "empty-training";
        case ErrorCode::insufficient_data: return "insufficient-data";
        case ErrorCode::incompatible_support: return "incompatible-support";
        case ErrorCode::incompatible_model: return "incompatible-model";
        case ErrorCode::invalid_spec: return "invalid-spec";
        case ErrorCode::invalid_type: return "invalid-type";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace uad
