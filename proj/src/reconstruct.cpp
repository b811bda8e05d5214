#include "glyphid/reconstruct.hpp"

#include "glyphid/errors.hpp"
#include "glyphid/utf8.hpp"

#include <json.hpp>

#include <algorithm>

namespace glyphid {

std::string_view match_kind_name(MatchKind k) {
    switch (k) {
    case MatchKind::ExactIds: return "ExactIds";
    case MatchKind::ExactMultiset: return "ExactMultiset";
    case MatchKind::Fuzzy: return "Fuzzy";
    }
    return "?";
}

std::optional<MatchKind> parse_match_kind(std::string_view name) {
    if (name == "ExactIds") return MatchKind::ExactIds;
    if (name == "ExactMultiset") return MatchKind::ExactMultiset;
    if (name == "Fuzzy") return MatchKind::Fuzzy;
    return std::nullopt;
}

QueryForm QueryForm::from_tokens(std::vector<Token> tokens) {
    if (!tokens.empty() && tokens.back().kind == TokenKind::Eos) tokens.pop_back();
    for (const Token& t : tokens)
        if (t.kind == TokenKind::Eos)
            fail(Errc::ParseError, "EOS may only terminate a token sequence");
    parse_tokens(tokens); // validates arity
    QueryForm q;
    q.tokens = std::move(tokens);
    return q;
}

QueryForm QueryForm::from_ids(std::string_view text) {
    return from_tokens(tokenize_ids(text));
}

QueryForm QueryForm::from_multiset(std::map<std::string, int> labels) {
    if (labels.empty()) fail(Errc::EmptyInput, "label multiset is empty");
    for (const auto& [label, count] : labels)
        if (label.empty() || count < 1)
            fail(Errc::InvalidArgument, "multiset entries need a label and count >= 1");
    QueryForm q;
    q.labels = std::move(labels);
    return q;
}

int token_levenshtein(std::span<const Token> a, std::span<const Token> b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

void sort_candidates(std::vector<Candidate>& cands) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ch < b.ch;
    });
}

std::vector<Candidate> match_multiset(const std::map<std::string, int>& labels,
                                      const CharDict& dict) {
    std::vector<Candidate> cands;
    for (const auto& [ch, entry] : dict.entries())
        if (entry.radicals == labels) cands.push_back({ch, 1.0, MatchKind::ExactMultiset});
    sort_candidates(cands);
    return cands;
}

} // namespace

ReconstructionResult match_sequence(const QueryForm& query, const CharDict& dict, double fuzz,
                                    std::optional<char32_t> target) {
    if (query.tokens.has_value() == query.labels.has_value())
        fail(Errc::InvalidArgument, "query must hold exactly one form");
    if (fuzz < 0 || fuzz > 1) fail(Errc::InvalidArgument, "fuzz must be in [0, 1]");

    ReconstructionResult result;
    if (query.labels) {
        result.candidates = match_multiset(*query.labels, dict);
    } else {
        IdsTree tree = parse_tokens(*query.tokens);
        for (char32_t ch : dict.chars_for_ids(serialize_ids(tree)))
            result.candidates.push_back({ch, 1.0, MatchKind::ExactIds});

        if (result.candidates.empty())
            result.candidates = match_multiset(radical_multiset(tree), dict);

        if (result.candidates.empty()) {
            for (const auto& [ch, entry] : dict.entries()) {
                std::vector<Token> seq = tree_tokens(entry.ids);
                size_t longest = std::max(seq.size(), query.tokens->size());
                double nd = longest == 0
                                ? 0.0
                                : static_cast<double>(token_levenshtein(*query.tokens, seq)) /
                                      static_cast<double>(longest);
                if (nd <= fuzz) result.candidates.push_back({ch, 1.0 - nd, MatchKind::Fuzzy});
            }
            sort_candidates(result.candidates);
        }
    }

    result.accepted =
        target && !result.candidates.empty() && result.candidates.front().ch == *target;
    return result;
}

bool verify_against(char32_t target, const std::map<std::string, int>& labels,
                    const CharDict& dict) {
    return dict.at(target).radicals == labels;
}

FilterOutcome filter_masksets(std::span<const LabeledMaskSet> sets, char32_t target,
                              const CharDict& dict) {
    const CharEntry& entry = dict.at(target); // UnknownTarget
    FilterOutcome outcome;
    int verified_count = 0;
    for (const auto& lms : sets) {
        if (lms.labels.size() != lms.set.masks.size())
            fail(Errc::InvalidArgument, "labels and masks are not parallel");
        FilterAttempt attempt;
        attempt.source = lms.set.source;
        for (const auto& label : lms.labels) ++attempt.labels[label];
        attempt.verified = attempt.labels == entry.radicals;
        verified_count += attempt.verified;
        outcome.attempts.push_back(std::move(attempt));
    }

    auto priority = [](MaskSource s) {
        switch (s) {
        case MaskSource::Imported: return 0;
        case MaskSource::Coarse: return 1;
        case MaskSource::Fine: return 2;
        }
        return 3;
    };
    for (size_t i = 0; i < sets.size(); ++i) {
        if (!outcome.attempts[i].verified) continue;
        if (!outcome.chosen_index ||
            priority(sets[i].set.source) < priority(sets[*outcome.chosen_index].set.source)) {
            outcome.chosen_index = i;
        }
    }
    outcome.accepted = outcome.chosen_index.has_value();
    outcome.tie = verified_count > 1;
    return outcome;
}

std::string candidates_line(const std::string& glyph_id, const ReconstructionResult& result) {
    nlohmann::json j;
    j["glyph_id"] = glyph_id;
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : result.candidates) {
        nlohmann::json e;
        e["char"] = utf8::encode(c.ch);
        e["score"] = c.score;
        e["kind"] = std::string(match_kind_name(c.kind));
        j["candidates"].push_back(std::move(e));
    }
    j["accepted"] = result.accepted;
    return j.dump();
}

} // namespace glyphid
