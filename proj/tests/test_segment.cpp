#include "glyphid/errors.hpp"
#include "glyphid/glyph.hpp"
#include "glyphid/rng.hpp"
#include "glyphid/segment.hpp"

#include <doctest.h>

#include "support.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <vector>

using namespace glyphid;
using testsupport::TempDir;

namespace {

/// Independent 8-connected flood fill; returns per-pixel component labels
/// (-1 = background). Written directly from the definition, no shared code
/// with the library implementation.
std::vector<int> oracle_labels(const Bitmap& b) {
    std::vector<int> label(b.pixels.size(), -1);
    int next = 0;
    for (int sy = 0; sy < b.height; ++sy) {
        for (int sx = 0; sx < b.width; ++sx) {
            size_t start = static_cast<size_t>(sy) * b.width + sx;
            if (!b.pixels[start] || label[start] != -1) continue;
            std::deque<std::pair<int, int>> queue{{sx, sy}};
            label[start] = next;
            while (!queue.empty()) {
                auto [x, y] = queue.front();
                queue.pop_front();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= b.width || ny >= b.height) continue;
                        size_t ni = static_cast<size_t>(ny) * b.width + nx;
                        if (b.pixels[ni] && label[ni] == -1) {
                            label[ni] = next;
                            queue.emplace_back(nx, ny);
                        }
                    }
                }
            }
            ++next;
        }
    }
    return label;
}

/// Canonical form of a mask set for comparison: sorted sets of pixel indices.
std::set<std::set<size_t>> pixel_groups(const MaskSet& set) {
    std::set<std::set<size_t>> out;
    for (const auto& m : set.masks) {
        std::set<size_t> px;
        for (size_t i = 0; i < m.mask.pixels.size(); ++i)
            if (m.mask.pixels[i]) px.insert(i);
        out.insert(std::move(px));
    }
    return out;
}

std::set<std::set<size_t>> oracle_groups(const Bitmap& b) {
    auto labels = oracle_labels(b);
    std::map<int, std::set<size_t>> by_label;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) by_label[labels[i]].insert(i);
    std::set<std::set<size_t>> out;
    for (auto& [l, px] : by_label) out.insert(std::move(px));
    return out;
}

/// Disjointness + exact cover of the glyph foreground.
void check_partition(const MaskSet& set, const Bitmap& glyph) {
    std::vector<int> cover(glyph.pixels.size(), 0);
    for (const auto& m : set.masks) {
        REQUIRE(m.mask.width == glyph.width);
        REQUIRE(m.mask.height == glyph.height);
        CHECK(m.area == m.mask.foreground_count());
        auto box = m.mask.foreground_box();
        REQUIRE(box.has_value());
        CHECK(m.bbox == *box);
        for (size_t i = 0; i < cover.size(); ++i) cover[i] += m.mask.pixels[i] ? 1 : 0;
    }
    for (size_t i = 0; i < cover.size(); ++i) {
        CHECK(cover[i] == (glyph.pixels[i] ? 1 : 0));
        if (cover[i] != (glyph.pixels[i] ? 1 : 0)) return; // one failure is enough noise
    }
}

Glyph glyph_of(Bitmap b) {
    Glyph g;
    g.id = "t";
    g.bitmap = std::move(b);
    return g;
}

Bitmap canvas_with(const std::vector<Box>& blocks) {
    Bitmap b;
    b.width = kCanvas;
    b.height = kCanvas;
    b.pixels.assign(static_cast<size_t>(kCanvas) * kCanvas, 0);
    for (const Box& blk : blocks)
        for (int y = blk.y0; y <= blk.y1; ++y)
            for (int x = blk.x0; x <= blk.x1; ++x) b.set(x, y, 1);
    return b;
}

} // namespace

TEST_CASE("coarse segmentation with merge_dist 0 equals the flood-fill oracle") {
    Rng rng(21);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        Bitmap b = testsupport::random_bitmap(rng, 32, 32, 0.2 + 0.4 * rng.unit());
        if (b.foreground_count() == 0) continue;
        ++checked;
        MaskSet set = segment_coarse(glyph_of(b), 0.0);
        CHECK(pixel_groups(set) == oracle_groups(b));
        check_partition(set, b);
    }
    CHECK(checked > 450); // fill rates make blank images vanishingly rare
}

TEST_CASE("blank glyph cannot be segmented") {
    Bitmap b;
    b.width = 8;
    b.height = 8;
    b.pixels.assign(64, 0);
    CHECK_THROWS_AS(segment_coarse(glyph_of(b)), Error);
    CHECK_THROWS_AS(segment_fine(glyph_of(b)), Error);
}

TEST_CASE("merge distance joins nearby blobs transitively") {
    // Three 4x4 blocks in a row, 3px gaps: at merge_dist=4 all one component,
    // at merge_dist=2 three.
    Bitmap b = canvas_with({{10, 10, 13, 13}, {17, 10, 20, 13}, {24, 10, 27, 13}});
    CHECK(segment_coarse(glyph_of(b), 4.0).masks.size() == 1);
    CHECK(segment_coarse(glyph_of(b), 2.0).masks.size() == 3);

    // Distance is Euclidean between boundary pixels: corners (13,13) and
    // (16,16) sit sqrt(18) ~ 4.243 apart.
    Bitmap diag = canvas_with({{10, 10, 13, 13}, {16, 16, 19, 19}});
    CHECK(segment_coarse(glyph_of(diag), 4.2).masks.size() == 2);
    CHECK(segment_coarse(glyph_of(diag), 4.3).masks.size() == 1);
}

TEST_CASE("masks come out in canonical order") {
    Bitmap b = canvas_with({{40, 2, 45, 7}, {2, 2, 7, 7}, {2, 40, 7, 45}});
    MaskSet set = segment_coarse(glyph_of(b), 0.0);
    REQUIRE(set.masks.size() == 3);
    CHECK(set.masks[0].bbox.x0 == 2);
    CHECK(set.masks[0].bbox.y0 == 2);
    CHECK(set.masks[1].bbox.x0 == 2);
    CHECK(set.masks[1].bbox.y0 == 40);
    CHECK(set.masks[2].bbox.x0 == 40);
    CHECK(set.source == MaskSource::Coarse);
}

TEST_CASE("fine segmentation keeps pieces under the area cap") {
    Rng rng(22);
    for (int i = 0; i < 50; ++i) {
        Bitmap b = testsupport::random_bitmap(rng, kCanvas, kCanvas, 0.45);
        if (b.foreground_count() == 0) continue;
        MaskSet set = segment_fine(glyph_of(b), 300);
        for (const auto& m : set.masks) CHECK(m.area <= 300);
        check_partition(set, b);
        CHECK(set.source == MaskSource::Fine);
    }

    // A solid bar larger than the cap must split near the middle, not shave edges.
    Bitmap bar = canvas_with({{0, 24, 63, 39}}); // 64x16 = 1024 px
    MaskSet set = segment_fine(glyph_of(bar), 600);
    REQUIRE(set.masks.size() == 2);
    CHECK(set.masks[0].area >= 400);
    CHECK(set.masks[1].area >= 400);

    CHECK_THROWS_AS(segment_fine(glyph_of(bar), 0), Error);
}

TEST_CASE("rle round trip on random masks") {
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        Bitmap b = testsupport::random_bitmap(rng, kCanvas, kCanvas, rng.unit());
        auto runs = rle_encode(b);
        Bitmap back = rle_decode(runs, kCanvas, kCanvas);
        CHECK(back.pixels == b.pixels);
        // Alternating runs starting with background: sum must equal the canvas.
        long long total = 0;
        for (long long r : runs) {
            CHECK(r >= 0);
            total += r;
        }
        CHECK(total == static_cast<long long>(kCanvas) * kCanvas);
    }
    std::vector<long long> negative{10, -1};
    std::vector<long long> short_sum{10};
    CHECK_THROWS_AS(rle_decode(negative, kCanvas, kCanvas), Error);
    CHECK_THROWS_AS(rle_decode(short_sum, kCanvas, kCanvas), Error);
}

TEST_CASE("mask set files round trip") {
    TempDir tmp("maskset");
    Bitmap b = canvas_with({{2, 2, 9, 9}, {30, 30, 40, 44}});
    MaskSet set = segment_coarse(glyph_of(b), 0.0);
    set.glyph_id = "g-77";
    save_maskset(set, tmp / "m.json");
    MaskSet back = load_maskset(tmp / "m.json");
    CHECK(back.glyph_id == "g-77");
    REQUIRE(back.masks.size() == set.masks.size());
    for (size_t i = 0; i < set.masks.size(); ++i) {
        CHECK(back.masks[i].mask.pixels == set.masks[i].mask.pixels);
        CHECK(back.masks[i].bbox == set.masks[i].bbox);
    }
    CHECK(back.source == MaskSource::Imported);
}

TEST_CASE("imported masks are clipped, deduplicated and completed") {
    TempDir tmp("import");
    Bitmap b = canvas_with({{0, 0, 15, 15}, {32, 32, 47, 47}});
    Glyph g = glyph_of(b);
    g.id = "g-1";

    SUBCASE("exact masks come back unchanged") {
        MaskSet set = segment_coarse(g, 0.0);
        set.glyph_id = "g-1";
        save_maskset(set, tmp / "exact.json");
        MaskSet imported = import_masks(g, tmp / "exact.json");
        CHECK(pixel_groups(imported) == pixel_groups(set));
        check_partition(imported, b);
    }

    SUBCASE("uncovered foreground is appended as residual components") {
        MaskSet set;
        set.glyph_id = "g-1";
        Bitmap only_first = canvas_with({{0, 0, 15, 15}});
        set.masks.push_back(make_component(only_first, MaskSource::Imported));
        save_maskset(set, tmp / "partial.json");
        MaskSet imported = import_masks(g, tmp / "partial.json");
        CHECK(imported.masks.size() == 2);
        check_partition(imported, b);
    }

    SUBCASE("masks reaching outside the foreground are clipped") {
        MaskSet set;
        set.glyph_id = "g-1";
        Bitmap over = canvas_with({{0, 0, 24, 24}}); // spills past the first blob
        set.masks.push_back(make_component(over, MaskSource::Imported));
        Bitmap second = canvas_with({{32, 32, 47, 47}});
        set.masks.push_back(make_component(second, MaskSource::Imported));
        save_maskset(set, tmp / "over.json");
        MaskSet imported = import_masks(g, tmp / "over.json");
        check_partition(imported, b);
        REQUIRE(imported.masks.size() == 2);
        CHECK(imported.masks[0].area == 256);
    }

    SUBCASE("glyph id mismatch throws") {
        MaskSet set = segment_coarse(g, 0.0);
        set.glyph_id = "other";
        save_maskset(set, tmp / "bad.json");
        CHECK_THROWS_AS(import_masks(g, tmp / "bad.json"), Error);
    }
}
