#pragma once

#include "glyphid/ids.hpp"
#include "glyphid/segment.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace glyphid {

/// Max normalized token edit distance a fuzzy match may have
/// (0.34 admits one edit in a three-token character).
inline constexpr double kDefaultFuzz = 0.34;

enum class MatchKind { ExactIds, ExactMultiset, Fuzzy };

std::string_view match_kind_name(MatchKind k);
std::optional<MatchKind> parse_match_kind(std::string_view name);

struct Candidate {
    char32_t ch = 0;
    double score = 0;
    MatchKind kind = MatchKind::ExactIds;

    bool operator==(const Candidate&) const = default;
};

struct ReconstructionResult {
    std::vector<Candidate> candidates; // score descending, then codepoint
    bool accepted = false;             // top candidate equals the given target
};

/// A reconstruction query: a structural token sequence, or just the bag of
/// radical labels when no structure is known. Exactly one form is set.
struct QueryForm {
    std::optional<std::vector<Token>> tokens;
    std::optional<std::map<std::string, int>> labels;

    /// Parses and validates; a trailing EOS token is allowed and dropped.
    static QueryForm from_tokens(std::vector<Token> tokens);
    static QueryForm from_ids(std::string_view text);
    static QueryForm from_multiset(std::map<std::string, int> labels);
};

/// Token-level edit distance (operators and radicals cost one edit each).
int token_levenshtein(std::span<const Token> a, std::span<const Token> b);

/// Match cascade: exact serialized-IDS equality (canonical and alias forms),
/// else exact radical-multiset equality against canonical decompositions,
/// else fuzzy ranking by 1 - normalized token Levenshtein against canonical
/// sequences, admitting scores >= 1 - fuzz. Multiset queries only reach the
/// multiset stage. An empty candidate list is a valid result.
ReconstructionResult match_sequence(const QueryForm& query, const CharDict& dict,
                                    double fuzz = kDefaultFuzz,
                                    std::optional<char32_t> target = std::nullopt);

/// True iff the labels equal the target's canonical radical multiset,
/// multiplicities included. Throws UnknownTarget.
bool verify_against(char32_t target, const std::map<std::string, int>& labels,
                    const CharDict& dict);

/// One mask set with a radical label per mask (parallel arrays).
struct LabeledMaskSet {
    MaskSet set;
    std::vector<std::string> labels;
};

struct FilterAttempt {
    MaskSource source = MaskSource::Coarse;
    std::map<std::string, int> labels; // the multiset that was tried
    bool verified = false;
};

/// Outcome of the segmentation filter for one glyph.
struct FilterOutcome {
    bool accepted = false;
    std::optional<size_t> chosen_index; // into the input list
    bool tie = false;                   // more than one candidate verified
    std::vector<FilterAttempt> attempts;
};

/// Keep the best mask set whose labels verify against the target: source
/// priority Imported > Coarse > Fine, then input order. Throws UnknownTarget.
FilterOutcome filter_masksets(std::span<const LabeledMaskSet> sets, char32_t target,
                              const CharDict& dict);

/// One candidate-output line: `{glyph_id, candidates:[{char, score, kind}]}`.
std::string candidates_line(const std::string& glyph_id, const ReconstructionResult& result);

} // namespace glyphid
