#pragma once

#include "glyphid/evaluate.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace glyphid {

/// Read the record's image and normalize it.
Glyph load_glyph(const Manifest& manifest, const ManifestRecord& record,
                 int threshold = kDefaultThreshold);

/// A record participates in training when it has a category, the category is
/// not held out anywhere (plan), and its period passes the filter.
bool is_trainable(const ManifestRecord& record, const HoldoutPlan* plan,
                  const std::set<Period>* periods);

/// Records whose category is held out in their period, id-sorted.
std::vector<const ManifestRecord*> test_records(const Manifest& manifest, const HoldoutPlan& plan,
                                                std::optional<Period> period = std::nullopt);

/// Run fn(0..n-1) across up to `jobs` threads; the first exception rethrows
/// after all workers finish.
void parallel_for(int jobs, size_t n, const std::function<void(size_t)>& fn);

struct SeedOptions {
    double merge_dist = kDefaultMergeDist;
    int threshold = kDefaultThreshold;
    const HoldoutPlan* plan = nullptr;         // restrict to train categories
    const std::set<Period>* periods = nullptr; // restrict periods
    int jobs = 1;
};

/// Segment every trainable glyph (coarse) and store one Seeded item per
/// component with the glyph's 1/n confidence dict. Component ids are
/// `<glyph_id>#<index>`.
AnnotationStore seed_store(const Manifest& manifest, const CharDict& dict,
                           const Projection& proj, const SeedOptions& opts);

struct FilterParams {
    double merge_dist = kDefaultMergeDist;
    long long max_piece_area = kDefaultMaxPieceArea;
    int k = kDefaultKnnK;
    WeightMode mode = WeightMode::Inverse;
    std::optional<std::filesystem::path> masks_dir; // optional <glyph_id>.json imports
};

/// Everything the segmentation filter decided for one training glyph,
/// including the chosen labeled masks (for augmentation) and every attempt.
struct FilterRecord {
    std::string glyph_id;
    Period period = Period::OBI;
    std::string target; // the glyph's character
    bool accepted = false;
    bool tie = false;
    std::optional<MaskSource> chosen_source;
    LabeledMaskSet chosen; // empty when rejected
    std::vector<FilterAttempt> attempts;
};

/// Label the glyph's candidate mask sets through the store and keep the one
/// that verifies against the target character.
FilterRecord run_filter(const Glyph& glyph, char32_t target, const CharDict& dict,
                        const AnnotationStore& store, const Projection& proj,
                        const FilterParams& params);

/// JSONL, one FilterRecord per line.
void save_filter_log(std::span<const FilterRecord> log, const std::filesystem::path& path);
std::vector<FilterRecord> load_filter_log(const std::filesystem::path& path);

/// Predict every record, in parallel, returning id-sorted sequences.
std::vector<TokenSeq> predict_corpus(const Manifest& manifest,
                                     std::span<const ManifestRecord* const> records,
                                     const AnnotationStore& store, const Projection& proj,
                                     const PredictParams& params, int threshold, int jobs);

struct AugmentOutput {
    std::vector<ManifestRecord> rows; // category = the radical label
    std::vector<TokenSeq> seqs;       // [label, EOS] targets
};

/// Emit each accepted labeled component as a standalone PGM sample under
/// out_dir, one row and one target sequence per component.
AugmentOutput write_augment_samples(std::span<const FilterRecord> log,
                                    const std::filesystem::path& out_dir);

struct SynthesisSpec {
    std::vector<Period> periods;
    int per_char = 3;
    JitterParams jitter{};
    uint64_t seed = 1;
};

struct SynthesisResult {
    std::filesystem::path manifest_path;
    long long images = 0;
};

/// Render every dictionary character in every requested period with a
/// period-styled procedural atlas. Writes images/, atlas-<period>/ and
/// manifest.jsonl under out_dir. Stamp geometry is shared across periods so
/// the same radical stays recognizable between styles.
SynthesisResult synthesize_corpus(const CharDict& dict, const std::filesystem::path& out_dir,
                                  const SynthesisSpec& spec);

/// Ablation runner: seeds a store from the subset's training glyphs, then
/// predicts the target period's test records.
PredictRunner make_knn_runner(const Manifest& manifest, const CharDict& dict,
                              const Projection& proj, const HoldoutPlan& plan, Period target,
                              const PredictParams& params, int threshold, int jobs);

} // namespace glyphid
