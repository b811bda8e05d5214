#pragma once

#include "glyphid/predict.hpp"

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>

namespace glyphid {

/// Which categories play undeciphered (test) vs deciphered (train), per
/// period. Categories are drawn once from the source period and mirrored
/// into every period where they occur; they never appear in any train set.
struct HoldoutPlan {
    std::map<Period, std::set<std::string>> undeciphered;
    std::map<Period, std::set<std::string>> train;
    Period source = Period::OBI;
    int n_target = 0;
    uint64_t seed = 0;
};

/// Draw n_target categories (seeded, uniform) from the period with the
/// fewest samples (ties: fewer categories, then era order). Throws
/// TooFewCategories.
HoldoutPlan build_holdout(const Manifest& manifest, int n_target, uint64_t seed);

void save_holdout(const HoldoutPlan& plan, const std::filesystem::path& path);
HoldoutPlan load_holdout(const std::filesystem::path& path);

struct PeriodScore {
    long long samples = 0;
    long long correct_samples = 0;
    long long categories = 0;         // undeciphered categories with samples
    long long success_categories = 0; // >= 1 correct sample
    std::map<int, long long> rank_hits; // rank k -> samples whose truth ranked <= k

    double sample_acc() const { return samples ? static_cast<double>(correct_samples) / samples : 0.0; }
    double category_acc() const {
        return categories ? static_cast<double>(success_categories) / categories : 0.0;
    }
};

struct DecipherReport {
    std::map<Period, PeriodScore> per_period;
    PeriodScore total;
};

struct ScoreOptions {
    double fuzz = kDefaultFuzz;
    int topk = 1; // ranks 1..topk reported as supplementary columns
};

/// A sample is correct iff the top reconstruction candidate of its predicted
/// sequence equals its category. Missing or invalid predictions count as
/// incorrect. Throws UnknownGlyphId for predictions outside the test set and
/// InvalidArgument for conflicting duplicates.
DecipherReport score(std::span<const TokenSeq> predictions, const Manifest& manifest,
                     const CharDict& dict, const HoldoutPlan& plan,
                     const ScoreOptions& opts = {});

std::string report_json(const DecipherReport& report);
std::string report_tsv(const DecipherReport& report);

/// Produces predictions for the target period's test samples, training only
/// on the given period subset.
using PredictRunner = std::function<std::vector<TokenSeq>(const std::set<Period>& subset)>;

struct AblationRow {
    std::set<Period> subset;
    PeriodScore result; // target-period score
};

/// One evaluation per subset; every subset must contain the target period.
std::vector<AblationRow> ablation_matrix(const Manifest& manifest, const CharDict& dict,
                                         const HoldoutPlan& plan, Period target,
                                         std::span<const std::set<Period>> subsets,
                                         const PredictRunner& runner,
                                         const ScoreOptions& opts = {});

std::string ablation_json(std::span<const AblationRow> rows, Period target);
std::string ablation_tsv(std::span<const AblationRow> rows, Period target);

} // namespace glyphid
