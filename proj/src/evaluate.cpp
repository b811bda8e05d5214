#include "glyphid/evaluate.hpp"

#include "glyphid/errors.hpp"
#include "glyphid/rng.hpp"
#include "glyphid/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace glyphid {

HoldoutPlan build_holdout(const Manifest& manifest, int n_target, uint64_t seed) {
    if (n_target < 1) fail(Errc::InvalidArgument, "n_target must be >= 1");
    auto samples = manifest.samples_per_period();
    auto categories = manifest.categories_per_period();
    if (samples.empty()) fail(Errc::TooFewCategories, "manifest has no records");

    Period source = samples.begin()->first;
    for (const auto& [period, count] : samples) {
        auto key = std::tuple(count, static_cast<long long>(categories[period].size()),
                              static_cast<int>(period));
        auto best = std::tuple(samples[source],
                               static_cast<long long>(categories[source].size()),
                               static_cast<int>(source));
        if (key < best) source = period;
    }

    const auto& source_cats = categories[source];
    if (static_cast<size_t>(n_target) > source_cats.size())
        fail(Errc::TooFewCategories, "asked for " + std::to_string(n_target) +
                                         " categories, source period has " +
                                         std::to_string(source_cats.size()));

    std::vector<std::string> pool(source_cats.begin(), source_cats.end());
    Rng rng(seed);
    rng.shuffle(pool);
    std::set<std::string> selected(pool.begin(), pool.begin() + n_target);

    HoldoutPlan plan;
    plan.source = source;
    plan.n_target = n_target;
    plan.seed = seed;
    for (const auto& [period, cats] : categories) {
        for (const auto& c : cats) {
            if (selected.count(c)) plan.undeciphered[period].insert(c);
            else plan.train[period].insert(c);
        }
        plan.undeciphered.try_emplace(period);
        plan.train.try_emplace(period);
    }
    return plan;
}

void save_holdout(const HoldoutPlan& plan, const std::filesystem::path& path) {
    nlohmann::json j;
    j["seed"] = plan.seed;
    j["n_target"] = plan.n_target;
    j["source"] = std::string(period_name(plan.source));
    auto dump_sets = [](const std::map<Period, std::set<std::string>>& sets) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [period, cats] : sets)
            out[std::string(period_name(period))] = std::vector<std::string>(cats.begin(),
                                                                             cats.end());
        return out;
    };
    j["undeciphered"] = dump_sets(plan.undeciphered);
    j["train"] = dump_sets(plan.train);
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write holdout plan " + path.string());
    out << j.dump(2) << "\n";
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

HoldoutPlan load_holdout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open holdout plan " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(Errc::SchemaError, path.string() + " is not a JSON object");

    HoldoutPlan plan;
    try {
        plan.seed = j.at("seed").get<uint64_t>();
        plan.n_target = j.at("n_target").get<int>();
        std::string source = j.at("source").get<std::string>();
        auto p = parse_period(source);
        if (!p) fail(Errc::SchemaError, "unknown period \"" + source + "\"");
        plan.source = *p;
        auto read_sets = [&](const char* key) {
            std::map<Period, std::set<std::string>> sets;
            for (const auto& [name, cats] : j.at(key).items()) {
                auto period = parse_period(name);
                if (!period) fail(Errc::SchemaError, "unknown period \"" + name + "\"");
                auto list = cats.template get<std::vector<std::string>>();
                sets[*period] = std::set<std::string>(list.begin(), list.end());
            }
            return sets;
        };
        plan.undeciphered = read_sets("undeciphered");
        plan.train = read_sets("train");
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::SchemaError, path.string() + ": " + std::string(e.what()));
    }
    for (const auto& [period, cats] : plan.undeciphered)
        if (plan.train.count(period))
            for (const auto& c : cats)
                if (plan.train.at(period).count(c))
                    fail(Errc::SchemaError, "category \"" + c + "\" is both held out and trained");
    return plan;
}

DecipherReport score(std::span<const TokenSeq> predictions, const Manifest& manifest,
                     const CharDict& dict, const HoldoutPlan& plan, const ScoreOptions& opts) {
    if (opts.topk < 1) fail(Errc::InvalidArgument, "topk must be >= 1");

    // Test set: manifest records whose category is held out in their period.
    std::map<std::string, const ManifestRecord*> tests;
    for (const auto& r : manifest.records()) {
        if (!r.category) continue;
        auto it = plan.undeciphered.find(r.period);
        if (it != plan.undeciphered.end() && it->second.count(*r.category))
            tests.emplace(r.id, &r);
    }

    std::map<std::string, const TokenSeq*> by_id;
    for (const TokenSeq& seq : predictions) {
        if (!tests.count(seq.glyph_id))
            fail(Errc::UnknownGlyphId,
                 "prediction for \"" + seq.glyph_id + "\" is outside the test set");
        auto [it, inserted] = by_id.emplace(seq.glyph_id, &seq);
        if (!inserted && !(it->second->tokens == seq.tokens))
            fail(Errc::InvalidArgument,
                 "conflicting duplicate predictions for \"" + seq.glyph_id + "\"");
    }

    DecipherReport report;
    std::map<Period, std::map<std::string, bool>> category_hit;
    for (const auto& [id, record] : tests)
        category_hit[record->period].emplace(*record->category, false);

    for (const auto& [id, record] : tests) {
        PeriodScore& ps = report.per_period[record->period];
        ++ps.samples;

        int truth_rank = 0; // 0 = no hit within topk
        auto it = by_id.find(id);
        if (it != by_id.end() && it->second->valid) {
            std::vector<Token> tokens = it->second->tokens;
            if (!tokens.empty() && tokens.back().kind == TokenKind::Eos) tokens.pop_back();
            ReconstructionResult rec =
                match_sequence(QueryForm::from_tokens(std::move(tokens)), dict, opts.fuzz);
            int limit = std::min<int>(opts.topk, static_cast<int>(rec.candidates.size()));
            for (int rank = 1; rank <= limit; ++rank) {
                if (utf8::encode(rec.candidates[static_cast<size_t>(rank - 1)].ch) ==
                    *record->category) {
                    truth_rank = rank;
                    break;
                }
            }
        }
        if (truth_rank >= 1) {
            for (int k = truth_rank; k <= opts.topk; ++k) ++ps.rank_hits[k];
            if (truth_rank == 1) {
                ++ps.correct_samples;
                category_hit[record->period][*record->category] = true;
            }
        }
    }

    for (auto& [period, hits] : category_hit) {
        PeriodScore& ps = report.per_period[period];
        ps.categories = static_cast<long long>(hits.size());
        for (const auto& [cat, hit] : hits) ps.success_categories += hit;
    }
    for (auto& [period, ps] : report.per_period) {
        for (int k = 1; k <= opts.topk; ++k) ps.rank_hits.try_emplace(k, 0);
        report.total.samples += ps.samples;
        report.total.correct_samples += ps.correct_samples;
        report.total.categories += ps.categories;
        report.total.success_categories += ps.success_categories;
        for (const auto& [k, hits] : ps.rank_hits) report.total.rank_hits[k] += hits;
    }
    return report;
}

namespace {

nlohmann::json score_json(const PeriodScore& ps) {
    nlohmann::json j;
    j["samples"] = ps.samples;
    j["correct_samples"] = ps.correct_samples;
    j["sample_acc"] = ps.sample_acc();
    j["categories"] = ps.categories;
    j["success_categories"] = ps.success_categories;
    j["category_acc"] = ps.category_acc();
    nlohmann::json hits = nlohmann::json::object();
    for (const auto& [k, n] : ps.rank_hits) hits["top" + std::to_string(k)] = n;
    j["rank_hits"] = std::move(hits);
    return j;
}

void score_tsv_row(std::ostringstream& out, const std::string& name, const PeriodScore& ps) {
    out << name << "\t" << ps.samples << "\t" << ps.correct_samples << "\t" << ps.sample_acc()
        << "\t" << ps.categories << "\t" << ps.success_categories << "\t" << ps.category_acc();
    for (const auto& [k, n] : ps.rank_hits)
        out << "\t" << (ps.samples ? static_cast<double>(n) / ps.samples : 0.0);
    out << "\n";
}

} // namespace

std::string report_json(const DecipherReport& report) {
    nlohmann::json j;
    j["periods"] = nlohmann::json::object();
    for (const auto& [period, ps] : report.per_period)
        j["periods"][std::string(period_name(period))] = score_json(ps);
    j["total"] = score_json(report.total);
    return j.dump(2);
}

std::string report_tsv(const DecipherReport& report) {
    std::ostringstream out;
    out.precision(4);
    out << "period\tsamples\tcorrect\tsample_acc\tcategories\tsuccess\tcategory_acc";
    for (const auto& [k, n] : report.total.rank_hits) out << "\ttop" << k;
    out << "\n";
    for (const auto& [period, ps] : report.per_period)
        score_tsv_row(out, std::string(period_name(period)), ps);
    score_tsv_row(out, "total", report.total);
    return out.str();
}

std::vector<AblationRow> ablation_matrix(const Manifest& manifest, const CharDict& dict,
                                         const HoldoutPlan& plan, Period target,
                                         std::span<const std::set<Period>> subsets,
                                         const PredictRunner& runner, const ScoreOptions& opts) {
    std::vector<AblationRow> rows;
    for (const auto& subset : subsets) {
        if (!subset.count(target))
            fail(Errc::InvalidArgument, "every ablation subset must contain the target period");
        std::vector<TokenSeq> predictions = runner(subset);
        DecipherReport report = score(predictions, manifest, dict, plan, opts);
        AblationRow row;
        row.subset = subset;
        auto it = report.per_period.find(target);
        if (it != report.per_period.end()) row.result = it->second;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_json(std::span<const AblationRow> rows, Period target) {
    nlohmann::json j;
    j["target"] = std::string(period_name(target));
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json r;
        std::vector<std::string> names;
        for (Period p : row.subset) names.push_back(std::string(period_name(p)));
        r["subset"] = names;
        r["result"] = score_json(row.result);
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2);
}

std::string ablation_tsv(std::span<const AblationRow> rows, Period target) {
    std::ostringstream out;
    out.precision(4);
    for (Period p : all_periods()) out << period_name(p) << "\t";
    out << "sample_acc\tcategory_acc\t(target " << period_name(target) << ")\n";
    for (const auto& row : rows) {
        for (Period p : all_periods()) out << (row.subset.count(p) ? "x" : "-") << "\t";
        out << row.result.sample_acc() << "\t" << row.result.category_acc() << "\n";
    }
    return out.str();
}

} // namespace glyphid
