#pragma once

#include <stdexcept>
#include <string>

namespace glyphid {

/// Error categories used across the library. Each value corresponds to a
/// documented failure mode of one or more operations.
enum class Errc {
    // ids
    EmptyInput,
    ArityError,
    TrailingInput,
    ParseError,
    IoError,
    EmptyDictError,
    // glyph data
    BlankImage,
    SchemaError,
    DuplicateId,
    MissingRadical,
    // segmentation
    IdMismatch,
    EmptyMaskError,
    // embedding
    ZeroVector,
    InsufficientData,
    // annotation
    NotEnoughNeighbors,
    NoKeys,
    EmptyDict,
    // reconstruction
    UnknownTarget,
    // prediction
    BadArity,
    UnknownToken,
    // evaluation
    TooFewCategories,
    UnknownGlyphId,
    // generic precondition violation
    InvalidArgument,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace glyphid
