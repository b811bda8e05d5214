#pragma once

#include "glyphid/glyph.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glyphid {

/// Components closer than this (pixels, exact Euclidean) merge in coarse mode.
inline constexpr double kDefaultMergeDist = 4.0;
/// Fine mode splits pieces until none exceeds this area.
inline constexpr long long kDefaultMaxPieceArea = 300;

enum class MaskSource { Coarse, Fine, Imported };

std::string_view mask_source_name(MaskSource s);
std::optional<MaskSource> parse_mask_source(std::string_view name);

/// One candidate radical region. The mask raster has the parent glyph's
/// dimensions; bbox is its tight foreground box.
struct ComponentMask {
    Bitmap mask;
    Box bbox;
    long long area = 0;
    MaskSource source = MaskSource::Coarse;
};

/// Derive bbox and area from the raster. Throws EmptyMaskError when blank.
ComponentMask make_component(Bitmap mask, MaskSource source);

/// A full segmentation of one glyph: masks are pairwise disjoint and their
/// union is exactly the glyph foreground.
struct MaskSet {
    std::string glyph_id;
    MaskSource source = MaskSource::Coarse;
    std::vector<ComponentMask> masks;
};

/// 8-connected components, then transitive merging of components whose
/// minimum pairwise pixel distance is <= merge_dist. merge_dist <= 0 keeps the
/// plain connected components. Throws BlankImage.
MaskSet segment_coarse(const Glyph& glyph, double merge_dist = kDefaultMergeDist);

/// Deliberate oversegmentation: each connected component is recursively split
/// along the row or column crossing the least ink (ties resolved toward the
/// bbox middle) until every piece area is <= max_piece_area. Throws BlankImage.
MaskSet segment_fine(const Glyph& glyph, long long max_piece_area = kDefaultMaxPieceArea);

/// Read externally produced masks for this glyph, clip them to the glyph
/// foreground, give contested pixels to the smaller mask, drop masks that end
/// up empty, and cover any leftover foreground with its own connected pieces
/// so the partition invariant holds. Throws IoError, SchemaError, IdMismatch,
/// EmptyMaskError.
MaskSet import_masks(const Glyph& glyph, const std::filesystem::path& path);

/// Row-major run-length encoding of the whole raster: alternating run
/// lengths starting with background (first run may be 0).
std::vector<long long> rle_encode(const Bitmap& mask);
Bitmap rle_decode(std::span<const long long> runs, int width, int height);

/// Mask file: JSON `{glyph_id, masks:[{rle:[...], bbox:[x0,y0,x1,y1]}]}`.
void save_maskset(const MaskSet& set, const std::filesystem::path& path);
/// Raw file contents decoded at canvas resolution, no glyph-specific fixups.
MaskSet load_maskset(const std::filesystem::path& path);

} // namespace glyphid
