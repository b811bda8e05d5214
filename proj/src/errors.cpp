#include "glyphid/errors.hpp"

namespace glyphid {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ArityError: return "ArityError";
    case Errc::TrailingInput: return "TrailingInput";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::EmptyDictError: return "EmptyDictError";
    case Errc::BlankImage: return "BlankImage";
    case Errc::SchemaError: return "SchemaError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MissingRadical: return "MissingRadical";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::EmptyMaskError: return "EmptyMaskError";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::NotEnoughNeighbors: return "NotEnoughNeighbors";
    case Errc::NoKeys: return "NoKeys";
    case Errc::EmptyDict: return "EmptyDict";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::BadArity: return "BadArity";
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::TooFewCategories: return "TooFewCategories";
    case Errc::UnknownGlyphId: return "UnknownGlyphId";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace glyphid
