#pragma once

#include "glyphid/bitmap.hpp"
#include "glyphid/ids.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace glyphid {

/// Working resolution of normalized glyphs.
inline constexpr int kCanvas = 64;
/// Resolution of atlas stamps.
inline constexpr int kStamp = 32;
/// Default binarization threshold (foreground = gray < threshold).
inline constexpr int kDefaultThreshold = 128;

/// The seven script stages, ordered by era.
enum class Period { OBI, Bronze, WarringStates, Seal, Clerical, Kangxi, Regular };
inline constexpr int kPeriodCount = 7;

std::string_view period_name(Period p);
std::optional<Period> parse_period(std::string_view name);
std::span<const Period> all_periods();

/// One script sample. `category` absent means undeciphered.
struct Glyph {
    std::string id;
    Period period = Period::OBI;
    std::optional<std::string> category;
    Bitmap bitmap; // normalized kCanvas x kCanvas
};

/// Binarize at `threshold`, crop to the foreground box, scale the crop so its
/// longer side spans the canvas (aspect preserved), center it. Idempotent on
/// already-normalized bitmaps. Throws BlankImage.
Bitmap normalize_raster(const GrayImage& raw, int threshold = kDefaultThreshold);

/// Same pipeline for an already-binary raster.
Bitmap normalize_bitmap(const Bitmap& raw);

/// Copy of the box region (box must lie within the raster).
Bitmap crop_to(const Bitmap& src, const Box& box);

/// Nearest-neighbor rescale that always samples both source endpoints, so
/// content touching an edge keeps touching it.
Bitmap scale_nearest(const Bitmap& src, int w, int h);

struct ManifestRecord {
    std::string id;
    Period period = Period::OBI;
    std::optional<std::string> category;
    std::string image_path;
};

/// Immutable corpus index loaded from JSONL.
class Manifest {
public:
    Manifest() = default;
    Manifest(std::vector<ManifestRecord> records, std::filesystem::path base_dir);

    const std::vector<ManifestRecord>& records() const { return records_; }
    const ManifestRecord* find(const std::string& id) const;
    std::filesystem::path resolve_path(const ManifestRecord& r) const;

    std::map<Period, long long> samples_per_period() const;
    std::map<Period, std::set<std::string>> categories_per_period() const;

private:
    std::vector<ManifestRecord> records_;
    std::filesystem::path base_dir_;
    std::map<std::string, size_t> index_;
};

/// Errors: IoError, SchemaError (with line number), DuplicateId. Every
/// image_path must resolve to an existing file.
Manifest load_manifest(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, std::span<const ManifestRecord> records);

/// Per-period stamp set used by the synthetic composer.
struct RadicalAtlas {
    int stamp_width = kStamp;
    int stamp_height = kStamp;
    std::map<std::string, Bitmap> stamps;
};

/// Directory layout: index.tsv (`label<TAB>filename`) plus PGM stamps.
RadicalAtlas load_atlas(const std::filesystem::path& dir);
void save_atlas(const RadicalAtlas& atlas, const std::filesystem::path& dir);

/// Style knobs for the procedural stamp generator. Stamps for the same label
/// share stroke geometry across styles; the style shifts, thickens and
/// decorates them so periods look related but not identical.
struct AtlasStyle {
    uint64_t style_seed = 0;
    int thickness = 2;
    int dx = 0;
    int dy = 0;
    int ticks = 0;
};

RadicalAtlas make_synthetic_atlas(const std::set<std::string>& labels, uint64_t base_seed,
                                  const AtlasStyle& style = {});

struct JitterParams {
    int max_offset = 0; // uniform per-leaf placement offset in [-max, +max]
    int inset = 2;      // margin kept inside each layout box
};

/// Render a character from its IDS tree: the canvas splits per structure
/// operator and each leaf stamps its radical, uniformly scaled into the
/// assigned box. Deterministic given `seed`. Throws MissingRadical.
Bitmap compose_synthetic(const CharEntry& entry, const RadicalAtlas& atlas,
                         const JitterParams& jitter, uint64_t seed);

} // namespace glyphid
