#pragma once

#include "glyphid/annotate.hpp"
#include "glyphid/reconstruct.hpp"

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace glyphid {

/// A decipherment output: structure operators and radical labels in prefix
/// order, terminated by EOS. `valid` records whether the sequence parses;
/// invalid imported sequences are carried and count as failures downstream.
struct TokenSeq {
    std::string glyph_id;
    std::vector<Token> tokens;
    bool valid = true;
};

/// True when the sequence is one EOS-terminated prefix encoding of a tree.
bool tokens_parse(std::span<const Token> tokens);

/// Inner-box gap at or under this many pixels counts as touching the outer
/// box when classifying surround structures.
inline constexpr int kTouchTol = 4;

/// Decide the structure operator relating 2 or 3 component boxes:
/// one box ~contained in another (>= 90% of its area) picks the surround
/// family, the sub-case given by which outer sides the inner box touches;
/// otherwise horizontal overlap < 25% of the narrower box means left-right,
/// vertical overlap < 25% means top-bottom; anything else is overlaid.
/// Throws BadArity.
char32_t infer_structure(std::span<const Box> boxes);

/// Assemble labeled component boxes into an IdsTree: recursively split the
/// boxes along horizontal then vertical disjointness (the infer_structure
/// overlap rule), handing 2- and 3-way configurations to infer_structure.
/// Children are ordered left-to-right / top-to-bottom by box center, outer
/// before inner for surrounds.
IdsTree compose_structure(std::span<const Box> boxes, std::span<const std::string> labels);

struct PredictParams {
    double merge_dist = kDefaultMergeDist;
    long long max_piece_area = kDefaultMaxPieceArea;
    int k = kDefaultKnnK;
    WeightMode mode = WeightMode::Inverse;
};

/// KNN-composition baseline: segment (coarse; fine instead when coarse gives
/// one mask and fine gives 2-3), label each mask through the annotation
/// store, infer the structure from the boxes, linearize, append EOS.
TokenSeq predict_knn_compose(const Glyph& glyph, const AnnotationStore& store,
                             const Projection& proj, const PredictParams& params);

/// Prediction file: JSONL `{glyph_id, tokens:[...]}` with tokens drawn from
/// the 12 operators, the radical vocabulary, and "<EOS>".
void save_predictions(std::span<const TokenSeq> seqs, const std::filesystem::path& path);

/// Load predictions; tokens outside the vocabulary throw UnknownToken, while
/// structurally invalid sequences are carried with valid=false.
std::vector<TokenSeq> import_predictions(const std::filesystem::path& path,
                                         const std::set<std::string>& vocabulary);

/// One standalone radical training sample cut out of an accepted glyph.
struct AugmentSample {
    std::string id;
    Period period = Period::OBI;
    std::string label;
    Bitmap mask;
    TokenSeq seq; // [label, EOS]
};

/// Emit every labeled component of one filtered glyph as its own sample;
/// ids derive from the glyph id and component order.
std::vector<AugmentSample> augment_radicals(const std::string& glyph_id, Period period,
                                            const LabeledMaskSet& accepted);

} // namespace glyphid
