#include "glyphid/errors.hpp"
#include "glyphid/ids.hpp"
#include "glyphid/reconstruct.hpp"
#include "glyphid/rng.hpp"
#include "glyphid/segment.hpp"
#include "glyphid/utf8.hpp"

#include <doctest.h>

#include "support.hpp"

#include <algorithm>
#include <json.hpp>

using namespace glyphid;

namespace {

CharDict small_dict() {
    auto loaded = load_dict(testsupport::data_dir() / "chardict_small.tsv");
    return std::move(loaded.dict);
}

std::vector<Token> toks(std::initializer_list<const char*> texts) {
    std::vector<Token> out;
    for (const char* t : texts) {
        std::string s(t);
        if (s == kEosText) {
            out.push_back(Token::eos());
            continue;
        }
        auto cps = utf8::decode(s);
        if (cps.size() == 1 && is_struct_op(cps[0])) out.push_back(Token::op(cps[0]));
        else out.push_back(Token::radical(s));
    }
    return out;
}

/// Plain recursive edit distance with memoization — independent of the
/// two-row DP in the library.
int oracle_lev(std::span<const Token> a, std::span<const Token> b,
               std::map<std::pair<size_t, size_t>, int>& memo, size_t i, size_t j) {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    int subst = oracle_lev(a, b, memo, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    int del = oracle_lev(a, b, memo, i + 1, j) + 1;
    int ins = oracle_lev(a, b, memo, i, j + 1) + 1;
    int best = std::min({subst, del, ins});
    memo[key] = best;
    return best;
}

int oracle_lev(std::span<const Token> a, std::span<const Token> b) {
    std::map<std::pair<size_t, size_t>, int> memo;
    return oracle_lev(a, b, memo, 0, 0);
}

} // namespace

TEST_CASE("token edit distance: hand cases") {
    CHECK(token_levenshtein(toks({"⿰", "木", "木"}), toks({"⿰", "木", "木"})) == 0);
    CHECK(token_levenshtein(toks({"⿰", "木", "木"}), toks({"⿱", "木", "木"})) == 1);
    CHECK(token_levenshtein(toks({"⿰", "木", "木"}), toks({"木"})) == 2);
    CHECK(token_levenshtein(toks({}), toks({"木", "木"})) == 2);
    // Operator and radical with the same text stay distinct token kinds.
    std::vector<Token> op{Token::op(U'⿰')};
    std::vector<Token> rad{Token::radical("⿰")};
    CHECK(token_levenshtein(op, rad) == 1);
}

TEST_CASE("token edit distance matches the recursive oracle") {
    Rng rng(51);
    const char* alphabet[] = {"⿰", "⿱", "木", "日", "口", "<EOS>"};
    for (int trial = 0; trial < 300; ++trial) {
        auto make = [&](int len) {
            std::vector<Token> out;
            for (int i = 0; i < len; ++i) {
                std::string t = alphabet[static_cast<size_t>(rng.range(0, 5))];
                if (t == "<EOS>") out.push_back(Token::eos());
                else if (t == "⿰" || t == "⿱") out.push_back(Token::op(utf8::decode(t)[0]));
                else out.push_back(Token::radical(t));
            }
            return out;
        };
        auto a = make(rng.range(0, 8));
        auto b = make(rng.range(0, 8));
        int got = token_levenshtein(a, b);
        CHECK(got == oracle_lev(a, b));
        CHECK(got == token_levenshtein(b, a)); // symmetric
    }
}

TEST_CASE("query forms validate their input") {
    // Trailing EOS is stripped.
    auto q = QueryForm::from_tokens(toks({"⿱", "宀", "女", "<EOS>"}));
    REQUIRE(q.tokens.has_value());
    CHECK(q.tokens->size() == 3);

    // Interior EOS is malformed.
    CHECK_THROWS_AS(QueryForm::from_tokens(toks({"⿱", "<EOS>", "女"})), Error);
    // Non-parsing prefix sequences are malformed.
    CHECK_THROWS_AS(QueryForm::from_tokens(toks({"⿱", "宀"})), Error);
    CHECK_THROWS_AS(QueryForm::from_tokens(toks({"宀", "女"})), Error);

    CHECK_NOTHROW(QueryForm::from_ids("⿱宀女"));
    CHECK_THROWS_AS(QueryForm::from_ids("⿱宀"), Error);

    CHECK_THROWS_AS(QueryForm::from_multiset({}), Error);
    CHECK_THROWS_AS(QueryForm::from_multiset({{"木", 0}}), Error);
}

TEST_CASE("exact ids match ranks the owner first with score 1") {
    CharDict dict = small_dict();
    auto r = match_sequence(QueryForm::from_ids("⿱宀女"), dict, kDefaultFuzz, U'安');
    REQUIRE(!r.candidates.empty());
    CHECK(r.candidates[0].ch == U'安');
    CHECK(r.candidates[0].score == doctest::Approx(1.0));
    CHECK(r.candidates[0].kind == MatchKind::ExactIds);
    CHECK(r.accepted);

    // Variant layouts hit ExactIds too.
    auto v = match_sequence(QueryForm::from_ids("⿱山夆"), dict, kDefaultFuzz, U'峰');
    CHECK(v.candidates[0].ch == U'峰');
    CHECK(v.candidates[0].kind == MatchKind::ExactIds);
}

TEST_CASE("multiset match catches permuted layouts") {
    CharDict dict = small_dict();
    // ⿰子女 is not 好's canonical layout, but the radicals match.
    auto r = match_sequence(QueryForm::from_ids("⿰子女"), dict, kDefaultFuzz, U'好');
    REQUIRE(!r.candidates.empty());
    CHECK(r.candidates[0].ch == U'好');
    CHECK(r.candidates[0].kind == MatchKind::ExactMultiset);
    CHECK(r.candidates[0].score == doctest::Approx(1.0));
    CHECK(r.accepted);

    // Pure multiset queries use the same path.
    auto m = match_sequence(QueryForm::from_multiset({{"女", 1}, {"子", 1}}), dict,
                            kDefaultFuzz, std::nullopt);
    REQUIRE(!m.candidates.empty());
    CHECK(m.candidates[0].ch == U'好');
    CHECK(!m.accepted); // no target given
}

TEST_CASE("fuzzy match scores by normalized edit distance") {
    CharDict dict = small_dict();
    // ⿱宀木: distance 1 from 安 (女→木) and from 字 (子→木), length 3 → nd = 1/3.
    auto r = match_sequence(QueryForm::from_ids("⿱宀木"), dict, 0.34, std::nullopt);
    REQUIRE(r.candidates.size() >= 2);
    CHECK(r.candidates[0].kind == MatchKind::Fuzzy);
    CHECK(r.candidates[0].score == doctest::Approx(1.0 - 1.0 / 3));
    // Equal scores sort by codepoint: 字 (U+5B57) before 安 (U+5B89).
    CHECK(r.candidates[0].ch == U'字');
    CHECK(r.candidates[1].ch == U'安');

    // Tighter fuzz excludes them.
    auto tight = match_sequence(QueryForm::from_ids("⿱宀木"), dict, 0.2, std::nullopt);
    for (const auto& c : tight.candidates) CHECK(c.ch != U'安');
}

TEST_CASE("match rejects ambiguous or empty query forms") {
    CharDict dict = small_dict();
    QueryForm both;
    both.tokens = toks({"木"});
    both.labels = std::map<std::string, int>{{"木", 1}};
    CHECK_THROWS_AS(match_sequence(both, dict, kDefaultFuzz, std::nullopt), Error);
    QueryForm neither;
    CHECK_THROWS_AS(match_sequence(neither, dict, kDefaultFuzz, std::nullopt), Error);
    CHECK_THROWS_AS(
        match_sequence(QueryForm::from_ids("⿱宀女"), dict, 1.5, std::nullopt), Error);
}

TEST_CASE("verification compares label multisets against the target entry") {
    CharDict dict = small_dict();
    CHECK(verify_against(U'安', {{"宀", 1}, {"女", 1}}, dict));
    CHECK(!verify_against(U'安', {{"宀", 1}}, dict));
    CHECK(!verify_against(U'安', {{"宀", 1}, {"女", 2}}, dict));
    CHECK(verify_against(U'森', {{"木", 3}}, dict));
    CHECK_THROWS_AS(verify_against(U'龘', {{"木", 1}}, dict), Error);
}

TEST_CASE("maskset filtering prefers imported, then coarse, then fine") {
    CharDict dict = small_dict();
    Bitmap blob;
    blob.width = kCanvas;
    blob.height = kCanvas;
    blob.pixels.assign(static_cast<size_t>(kCanvas) * kCanvas, 0);
    blob.set(1, 1, 1);
    auto one_mask_set = [&](MaskSource source) {
        LabeledMaskSet lms;
        lms.set.glyph_id = "g";
        lms.set.source = source;
        lms.set.masks.push_back(make_component(blob, source));
        return lms;
    };

    SUBCASE("priority order among verified sets") {
        auto coarse = one_mask_set(MaskSource::Coarse);
        coarse.labels = {"木"};
        auto fine = one_mask_set(MaskSource::Fine);
        fine.set.masks.push_back(make_component(blob, MaskSource::Fine));
        fine.set.masks.push_back(make_component(blob, MaskSource::Fine));
        fine.labels = {"木", "木", "木"};

        // Only fine verifies 森 {木×3}.
        std::vector<LabeledMaskSet> sets = {coarse, fine};
        FilterOutcome out = filter_masksets(sets, U'森', dict);
        CHECK(out.accepted);
        REQUIRE(out.chosen_index.has_value());
        CHECK(*out.chosen_index == 1);
        CHECK(!out.tie);
        REQUIRE(out.attempts.size() == 2);
        CHECK(!out.attempts[0].verified);
        CHECK(out.attempts[1].verified);
    }

    SUBCASE("imported wins when several verify, and the tie is flagged") {
        auto imported = one_mask_set(MaskSource::Imported);
        imported.labels = {"木"};
        imported.set.masks.push_back(make_component(blob, MaskSource::Imported));
        imported.labels.push_back("木");
        imported.set.masks.push_back(make_component(blob, MaskSource::Imported));
        imported.labels.push_back("木");

        auto fine = one_mask_set(MaskSource::Fine);
        fine.set.masks.push_back(make_component(blob, MaskSource::Fine));
        fine.set.masks.push_back(make_component(blob, MaskSource::Fine));
        fine.labels = {"木", "木", "木"};

        std::vector<LabeledMaskSet> sets = {fine, imported};
        FilterOutcome out = filter_masksets(sets, U'森', dict);
        CHECK(out.accepted);
        CHECK(*out.chosen_index == 1); // imported outranks fine
        CHECK(out.tie);
    }

    SUBCASE("nothing verifies: rejected with a full audit trail") {
        auto coarse = one_mask_set(MaskSource::Coarse);
        coarse.labels = {"日"};
        std::vector<LabeledMaskSet> sets = {coarse};
        FilterOutcome out = filter_masksets(sets, U'森', dict);
        CHECK(!out.accepted);
        CHECK(!out.chosen_index.has_value());
        REQUIRE(out.attempts.size() == 1);
        CHECK(out.attempts[0].labels.at("日") == 1);
    }
}

TEST_CASE("candidate lines are valid JSON") {
    CharDict dict = small_dict();
    auto r = match_sequence(QueryForm::from_ids("⿱宀女"), dict, kDefaultFuzz, U'安');
    std::string line = candidates_line("g-9", r);
    auto j = nlohmann::json::parse(line);
    CHECK(j.at("glyph_id") == "g-9");
    CHECK(j.at("accepted") == true);
    REQUIRE(!j.at("candidates").empty());
    CHECK(j.at("candidates")[0].at("char") == "安");
    CHECK(j.at("candidates")[0].at("score") == doctest::Approx(1.0));
}
