#include "glyphid/errors.hpp"
#include "glyphid/evaluate.hpp"
#include "glyphid/glyph.hpp"
#include "glyphid/ids.hpp"
#include "glyphid/image_io.hpp"
#include "glyphid/utf8.hpp"

#include <doctest.h>

#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

using namespace glyphid;
using testsupport::TempDir;

namespace {

/// Writes one shared tiny image and a manifest with `count` samples per
/// category per period.
struct CorpusFixture {
    TempDir tmp{"corpus"};
    std::filesystem::path manifest_path;

    CorpusFixture(const std::map<Period, std::vector<std::string>>& categories, int count) {
        Bitmap b(8, 8);
        b.set(3, 3, 1);
        write_pgm(tmp / "px.pgm", b);
        std::vector<ManifestRecord> rows;
        for (const auto& [period, cats] : categories) {
            for (const auto& cat : cats) {
                for (int i = 0; i < count; ++i) {
                    ManifestRecord r;
                    r.id = std::string(period_name(period)) + "-" + cat + "-" +
                           std::to_string(i);
                    r.period = period;
                    r.category = cat;
                    r.image_path = "px.pgm";
                    rows.push_back(std::move(r));
                }
            }
        }
        manifest_path = tmp / "m.jsonl";
        save_manifest(manifest_path, rows);
    }

    Manifest load() const { return load_manifest(manifest_path); }
};

std::vector<std::string> consecutive_cats(int n, char32_t base = 0x4E00) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(utf8::encode(base + static_cast<char32_t>(i)));
    return out;
}

TokenSeq seq_for(const std::string& glyph_id, const std::string& ids, bool valid = true) {
    TokenSeq s;
    s.glyph_id = glyph_id;
    s.tokens = tokenize_ids(ids);
    s.tokens.push_back(Token::eos());
    s.valid = valid;
    return s;
}

} // namespace

TEST_CASE("holdout draws from the period with the fewest samples") {
    // OBI: 2 categories x 1 sample. Kangxi: 3 categories x 3 samples.
    TempDir tmp("hold");
    Bitmap b(4, 4);
    b.pixels.assign(16, 1);
    write_pgm(tmp / "px.pgm", b);
    std::vector<ManifestRecord> rows;
    auto add = [&](Period p, const std::string& cat, int copies) {
        for (int i = 0; i < copies; ++i)
            rows.push_back({std::string(period_name(p)) + cat + std::to_string(i), p, cat,
                            "px.pgm"});
    };
    add(Period::OBI, "安", 1);
    add(Period::OBI, "好", 1);
    add(Period::Kangxi, "安", 3);
    add(Period::Kangxi, "好", 3);
    add(Period::Kangxi, "林", 3);
    save_manifest(tmp / "m.jsonl", rows);
    Manifest m = load_manifest(tmp / "m.jsonl");

    HoldoutPlan plan = build_holdout(m, 1, 7);
    CHECK(plan.source == Period::OBI);
    CHECK(plan.n_target == 1);
    REQUIRE(plan.undeciphered.at(Period::OBI).size() == 1);
    std::string held = *plan.undeciphered.at(Period::OBI).begin();

    // Held-out categories leave the train split of every period.
    for (const auto& [period, train] : plan.train) CHECK(!train.count(held));
    CHECK(plan.undeciphered.at(Period::Kangxi).count(held) == 1);
    // Untouched categories stay trainable.
    CHECK(plan.train.at(Period::Kangxi).count("林") == 1);

    // Deterministic per seed.
    HoldoutPlan again = build_holdout(m, 1, 7);
    CHECK(again.undeciphered.at(Period::OBI) == plan.undeciphered.at(Period::OBI));

    CHECK_THROWS_AS(build_holdout(m, 3, 7), Error); // only 2 categories in OBI
    CHECK_THROWS_AS(build_holdout(m, 0, 7), Error);
}

TEST_CASE("holdout plans round trip through JSON") {
    std::map<Period, std::vector<std::string>> layout;
    layout[Period::OBI] = consecutive_cats(6);
    layout[Period::Bronze] = consecutive_cats(8);
    CorpusFixture fx(layout, 2);
    Manifest m = fx.load();
    HoldoutPlan plan = build_holdout(m, 3, 11);
    CHECK(plan.source == Period::OBI);

    TempDir tmp("plan");
    save_holdout(plan, tmp / "p.json");
    HoldoutPlan back = load_holdout(tmp / "p.json");
    CHECK(back.seed == plan.seed);
    CHECK(back.n_target == plan.n_target);
    CHECK(back.source == plan.source);
    CHECK(back.undeciphered == plan.undeciphered);
    CHECK(back.train == plan.train);

    SUBCASE("overlapping plans are rejected") {
        nlohmann::json j;
        {
            std::ifstream in(tmp / "p.json");
            in >> j;
        }
        std::string source(period_name(plan.source));
        // Copy one held-out category into the same period's train set.
        j["train"][source].push_back(*plan.undeciphered.at(plan.source).begin());
        std::ofstream out(tmp / "bad.json");
        out << j.dump();
        out.close();
        CHECK_THROWS_AS(load_holdout(tmp / "bad.json"), Error);
    }
}

TEST_CASE("scoring bookkeeping: exact fractions and permutation invariance") {
    // 1000 single-sample categories in one period; predictions hit exactly
    // 394 of them. Entries pair distinct braced radicals so every IDS is
    // unique.
    CharDict dict;
    std::vector<std::string> categories;
    int made = 0;
    for (int a = 0; a < 200 && made < 1000; ++a) {
        for (int b = a + 1; b < 200 && made < 1000; ++b) {
            char32_t cp = static_cast<char32_t>(0x4E00 + made);
            std::string ids = "⿰{r" + std::to_string(a) + "}{r" + std::to_string(b) + "}";
            dict.add(make_entry(cp, parse_ids(ids), {}));
            categories.push_back(utf8::encode(cp));
            ++made;
        }
    }
    REQUIRE(made == 1000);

    std::map<Period, std::vector<std::string>> layout;
    layout[Period::OBI] = categories;
    CorpusFixture fx(layout, 1);
    Manifest m = fx.load();
    HoldoutPlan plan;
    plan.source = Period::OBI;
    plan.n_target = 1000;
    plan.undeciphered[Period::OBI] =
        std::set<std::string>(categories.begin(), categories.end());
    plan.train[Period::OBI] = {};

    // Correct IDS for the first 394 categories, a well-formed but wrong
    // sequence for the rest.
    std::vector<TokenSeq> preds;
    for (const auto& r : m.records()) {
        auto cps = utf8::decode(*r.category);
        int index = static_cast<int>(cps[0]) - 0x4E00;
        if (index < 394) {
            TokenSeq s;
            s.glyph_id = r.id;
            s.tokens = tree_tokens(dict.at(cps[0]).ids);
            s.tokens.push_back(Token::eos());
            s.valid = true;
            preds.push_back(std::move(s));
        } else {
            preds.push_back(seq_for(r.id, "⿳{x}{y}{z}"));
        }
    }

    DecipherReport report = score(preds, m, dict, plan);
    const PeriodScore& obi = report.per_period.at(Period::OBI);
    CHECK(obi.samples == 1000);
    CHECK(obi.correct_samples == 394);
    CHECK(obi.categories == 1000);
    CHECK(obi.success_categories == 394);
    CHECK(obi.category_acc() == doctest::Approx(0.394).epsilon(1e-12));
    CHECK(obi.category_acc() * 100 == doctest::Approx(39.4).epsilon(1e-9));

    // Permuting the prediction file changes nothing.
    std::reverse(preds.begin(), preds.end());
    DecipherReport permuted = score(preds, m, dict, plan);
    CHECK(permuted.per_period.at(Period::OBI).correct_samples == 394);
    CHECK(permuted.total.success_categories == 394);

    SUBCASE("missing predictions count as incorrect") {
        std::vector<TokenSeq> some(preds.begin(), preds.begin() + 10);
        DecipherReport partial = score(some, m, dict, plan);
        CHECK(partial.per_period.at(Period::OBI).samples == 1000);
        CHECK(partial.per_period.at(Period::OBI).correct_samples <= 10);
    }
    SUBCASE("sequences flagged invalid count as incorrect") {
        std::vector<TokenSeq> flagged = preds;
        for (auto& s : flagged) s.valid = false;
        DecipherReport none = score(flagged, m, dict, plan);
        CHECK(none.per_period.at(Period::OBI).correct_samples == 0);
    }
    SUBCASE("predictions outside the test set are rejected") {
        std::vector<TokenSeq> bad = {seq_for("no-such-glyph", "⿰木日")};
        CHECK_THROWS_AS(score(bad, m, dict, plan), Error);
    }
    SUBCASE("conflicting duplicates are rejected, identical ones tolerated") {
        std::vector<TokenSeq> dup = {preds[0], preds[0]};
        CHECK_NOTHROW(score(dup, m, dict, plan));
        std::vector<TokenSeq> conflict = {preds[0], preds[0]};
        conflict[1].tokens = tokenize_ids("⿱{q}{p}");
        CHECK_THROWS_AS(score(conflict, m, dict, plan), Error);
    }
}

TEST_CASE("sample-wise vs category-wise accuracy") {
    // One period, 2 categories x 3 samples. 安: 1 of 3 correct. 好: 0 of 3.
    // Sample accuracy 1/6, category accuracy 1/2.
    CharDict dict;
    dict.add(make_entry(U'安', parse_ids("⿱宀女"), {}));
    dict.add(make_entry(U'好', parse_ids("⿰女子"), {}));

    std::map<Period, std::vector<std::string>> layout;
    layout[Period::Bronze] = {"安", "好"};
    CorpusFixture fx(layout, 3);
    Manifest m = fx.load();

    HoldoutPlan plan;
    plan.source = Period::Bronze;
    plan.n_target = 2;
    plan.undeciphered[Period::Bronze] = {"安", "好"};
    plan.train[Period::Bronze] = {};

    std::vector<TokenSeq> preds;
    for (const auto& r : m.records()) {
        bool correct = r.id.find("安-0") != std::string::npos;
        preds.push_back(seq_for(r.id, correct ? "⿱宀女" : "⿲{a}{b}{c}"));
    }
    DecipherReport report = score(preds, m, dict, plan);
    const PeriodScore& s = report.per_period.at(Period::Bronze);
    CHECK(s.samples == 6);
    CHECK(s.correct_samples == 1);
    CHECK(s.sample_acc() == doctest::Approx(1.0 / 6));
    CHECK(s.categories == 2);
    CHECK(s.success_categories == 1);
    CHECK(s.category_acc() == doctest::Approx(0.5));

    SUBCASE("multiset-equivalent predictions still score") {
        // ⿰子女 reconstructs 好 through the multiset fallback.
        std::vector<TokenSeq> ms;
        for (const auto& r : m.records()) {
            bool is_hao = r.category == "好";
            ms.push_back(seq_for(r.id, is_hao ? "⿰子女" : "⿲{a}{b}{c}"));
        }
        DecipherReport rep = score(ms, m, dict, plan);
        CHECK(rep.per_period.at(Period::Bronze).correct_samples == 3);
    }

    SUBCASE("topk fills every rank column") {
        ScoreOptions opts;
        opts.topk = 3;
        DecipherReport rep = score(preds, m, dict, plan, opts);
        const PeriodScore& ps = rep.per_period.at(Period::Bronze);
        CHECK(ps.rank_hits.at(1) == 1);
        // A rank-1 hit counts for every deeper cutoff too.
        CHECK(ps.rank_hits.at(2) == 1);
        CHECK(ps.rank_hits.at(3) == 1);
    }
}

TEST_CASE("report serializations carry the per-period table") {
    CharDict dict;
    dict.add(make_entry(U'安', parse_ids("⿱宀女"), {}));
    std::map<Period, std::vector<std::string>> layout;
    layout[Period::Seal] = {"安"};
    CorpusFixture fx(layout, 2);
    Manifest m = fx.load();
    HoldoutPlan plan;
    plan.source = Period::Seal;
    plan.n_target = 1;
    plan.undeciphered[Period::Seal] = {"安"};
    plan.train[Period::Seal] = {};

    std::vector<TokenSeq> preds;
    for (const auto& r : m.records()) preds.push_back(seq_for(r.id, "⿱宀女"));
    DecipherReport report = score(preds, m, dict, plan);

    auto j = nlohmann::json::parse(report_json(report));
    CHECK(j.at("periods").at("Seal").at("samples") == 2);
    CHECK(j.at("periods").at("Seal").at("sample_acc") == doctest::Approx(1.0));
    CHECK(j.at("total").at("categories") == 1);
    CHECK(j.at("total").at("rank_hits").at("top1") == 2);

    std::string tsv = report_tsv(report);
    CHECK(tsv.rfind("period\t", 0) == 0);
    CHECK(tsv.find("Seal") != std::string::npos);
    CHECK(tsv.find("total") != std::string::npos);
}

TEST_CASE("ablation requires the target in every subset and reports one row per subset") {
    CharDict dict;
    dict.add(make_entry(U'安', parse_ids("⿱宀女"), {}));
    dict.add(make_entry(U'好', parse_ids("⿰女子"), {}));
    std::map<Period, std::vector<std::string>> layout;
    layout[Period::OBI] = {"安", "好"};
    layout[Period::Kangxi] = {"安", "好"};
    CorpusFixture fx(layout, 2);
    Manifest m = fx.load();

    HoldoutPlan plan;
    plan.source = Period::OBI;
    plan.n_target = 1;
    plan.undeciphered[Period::OBI] = {"安"};
    plan.undeciphered[Period::Kangxi] = {"安"};
    plan.train[Period::OBI] = {"好"};
    plan.train[Period::Kangxi] = {"好"};

    // Runner that answers correctly only when Kangxi is in the subset.
    PredictRunner runner = [&](const std::set<Period>& subset) {
        std::vector<TokenSeq> out;
        for (const auto& r : m.records()) {
            if (r.period != Period::OBI || *r.category != "安") continue;
            out.push_back(
                seq_for(r.id, subset.count(Period::Kangxi) ? "⿱宀女" : "⿲{a}{b}{c}"));
        }
        return out;
    };

    std::vector<std::set<Period>> subsets = {{Period::OBI},
                                             {Period::OBI, Period::Kangxi}};
    auto rows = ablation_matrix(m, dict, plan, Period::OBI, subsets, runner);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].result.category_acc() == doctest::Approx(0.0));
    CHECK(rows[1].result.category_acc() == doctest::Approx(1.0));
    CHECK(rows[0].result.category_acc() < rows[1].result.category_acc());

    std::vector<std::set<Period>> missing_target = {{Period::Kangxi}};
    CHECK_THROWS_AS(ablation_matrix(m, dict, plan, Period::OBI, missing_target, runner),
                    Error);

    // Serialized forms mark subset membership per period.
    std::string tsv = ablation_tsv(rows, Period::OBI);
    CHECK(tsv.find("OBI") != std::string::npos);
    CHECK(tsv.find("x\t") != std::string::npos);
    auto j = nlohmann::json::parse(ablation_json(rows, Period::OBI));
    REQUIRE(j.at("rows").size() == 2);
    CHECK(j.at("target") == "OBI");
    CHECK(j.at("rows")[1].at("result").at("category_acc") == doctest::Approx(1.0));
}
