#include "glyphid/segment.hpp"

#include "glyphid/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <climits>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

namespace glyphid {

namespace {

using PixelList = std::vector<std::pair<int, int>>;

constexpr int kDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr int kDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

/// 8-connected components as pixel lists, in scan order.
std::vector<PixelList> connected_components(const Bitmap& bm) {
    std::vector<int> label(bm.pixels.size(), -1);
    std::vector<PixelList> comps;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < bm.height; ++y) {
        for (int x = 0; x < bm.width; ++x) {
            if (!bm.at(x, y) || label[static_cast<size_t>(y) * bm.width + x] >= 0) continue;
            int id = static_cast<int>(comps.size());
            comps.emplace_back();
            stack.assign(1, {x, y});
            label[static_cast<size_t>(y) * bm.width + x] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                comps[id].emplace_back(cx, cy);
                for (int d = 0; d < 8; ++d) {
                    int nx = cx + kDx[d], ny = cy + kDy[d];
                    if (!bm.in_bounds(nx, ny) || !bm.at(nx, ny)) continue;
                    int& l = label[static_cast<size_t>(ny) * bm.width + nx];
                    if (l < 0) {
                        l = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }
    return comps;
}

/// Pixels of a component with at least one non-component 8-neighbor; the
/// minimum distance between two disjoint components is attained between
/// boundary pixels.
PixelList boundary(const Bitmap& bm, const PixelList& comp) {
    PixelList out;
    for (auto [x, y] : comp) {
        bool edge = false;
        for (int d = 0; d < 8 && !edge; ++d) {
            int nx = x + kDx[d], ny = y + kDy[d];
            if (!bm.in_bounds(nx, ny) || !bm.at(nx, ny)) edge = true;
        }
        if (edge) out.emplace_back(x, y);
    }
    return out;
}

long long min_sq_distance(const PixelList& a, const PixelList& b) {
    long long best = LLONG_MAX;
    for (auto [ax, ay] : a)
        for (auto [bx, by] : b) {
            long long dx = ax - bx, dy = ay - by;
            long long d2 = dx * dx + dy * dy;
            if (d2 < best) best = d2;
        }
    return best;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void merge(int a, int b) { parent[find(a)] = find(b); }
};

ComponentMask component_from_pixels(int width, int height, const PixelList& pixels,
                                    MaskSource source) {
    Bitmap mask(width, height);
    for (auto [x, y] : pixels) mask.set(x, y);
    return make_component(std::move(mask), source);
}

void sort_canonical(std::vector<ComponentMask>& masks) {
    std::sort(masks.begin(), masks.end(), [](const ComponentMask& a, const ComponentMask& b) {
        auto ka = std::tuple(a.bbox.x0, a.bbox.y0, a.bbox.x1, a.bbox.y1, a.area);
        auto kb = std::tuple(b.bbox.x0, b.bbox.y0, b.bbox.x1, b.bbox.y1, b.area);
        return ka < kb;
    });
}

} // namespace

std::string_view mask_source_name(MaskSource s) {
    switch (s) {
    case MaskSource::Coarse: return "Coarse";
    case MaskSource::Fine: return "Fine";
    case MaskSource::Imported: return "Imported";
    }
    return "?";
}

std::optional<MaskSource> parse_mask_source(std::string_view name) {
    if (name == "Coarse") return MaskSource::Coarse;
    if (name == "Fine") return MaskSource::Fine;
    if (name == "Imported") return MaskSource::Imported;
    return std::nullopt;
}

ComponentMask make_component(Bitmap mask, MaskSource source) {
    auto box = mask.foreground_box();
    if (!box) fail(Errc::EmptyMaskError, "component mask is blank");
    ComponentMask c;
    c.area = mask.foreground_count();
    c.mask = std::move(mask);
    c.bbox = *box;
    c.source = source;
    return c;
}

MaskSet segment_coarse(const Glyph& glyph, double merge_dist) {
    auto comps = connected_components(glyph.bitmap);
    if (comps.empty()) fail(Errc::BlankImage, "glyph " + glyph.id + " has no foreground");

    UnionFind uf(static_cast<int>(comps.size()));
    if (merge_dist > 0 && comps.size() > 1) {
        std::vector<PixelList> rims(comps.size());
        for (size_t i = 0; i < comps.size(); ++i) rims[i] = boundary(glyph.bitmap, comps[i]);
        double limit = merge_dist * merge_dist;
        for (size_t i = 0; i < comps.size(); ++i)
            for (size_t j = i + 1; j < comps.size(); ++j)
                if (static_cast<double>(min_sq_distance(rims[i], rims[j])) <= limit)
                    uf.merge(static_cast<int>(i), static_cast<int>(j));
    }

    std::map<int, PixelList> groups;
    for (size_t i = 0; i < comps.size(); ++i) {
        auto& g = groups[uf.find(static_cast<int>(i))];
        g.insert(g.end(), comps[i].begin(), comps[i].end());
    }

    MaskSet out{glyph.id, MaskSource::Coarse, {}};
    for (auto& [root, pixels] : groups)
        out.masks.push_back(component_from_pixels(glyph.bitmap.width, glyph.bitmap.height, pixels,
                                                  MaskSource::Coarse));
    sort_canonical(out.masks);
    return out;
}

namespace {

Box pixel_bbox(const PixelList& pixels) {
    Box b{INT_MAX, INT_MAX, INT_MIN, INT_MIN};
    for (auto [x, y] : pixels) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
    }
    return b;
}

/// Split one oversized piece at the row/column crossing the least ink; among
/// equals prefer the cut nearest the bbox middle, rows before columns.
std::pair<PixelList, PixelList> split_piece(const PixelList& piece) {
    Box b = pixel_bbox(piece);
    std::vector<long long> row_ink(static_cast<size_t>(b.height()), 0);
    std::vector<long long> col_ink(static_cast<size_t>(b.width()), 0);
    for (auto [x, y] : piece) {
        ++row_ink[static_cast<size_t>(y - b.y0)];
        ++col_ink[static_cast<size_t>(x - b.x0)];
    }

    // key: (ink crossed, distance from middle, axis, coordinate)
    bool cut_row = true;
    int cut = -1;
    auto best = std::tuple<long long, int, int, int>(LLONG_MAX, INT_MAX, INT_MAX, INT_MAX);
    for (int y = b.y0; y < b.y1; ++y) {
        auto key = std::tuple(row_ink[static_cast<size_t>(y - b.y0)],
                              std::abs(2 * y - (b.y0 + b.y1)), 0, y);
        if (key < best) {
            best = key;
            cut_row = true;
            cut = y;
        }
    }
    for (int x = b.x0; x < b.x1; ++x) {
        auto key = std::tuple(col_ink[static_cast<size_t>(x - b.x0)],
                              std::abs(2 * x - (b.x0 + b.x1)), 1, x);
        if (key < best) {
            best = key;
            cut_row = false;
            cut = x;
        }
    }

    std::pair<PixelList, PixelList> sides;
    for (auto [x, y] : piece) {
        bool first = cut_row ? y <= cut : x <= cut;
        (first ? sides.first : sides.second).emplace_back(x, y);
    }
    return sides;
}

} // namespace

MaskSet segment_fine(const Glyph& glyph, long long max_piece_area) {
    if (max_piece_area < 1) fail(Errc::InvalidArgument, "max_piece_area must be >= 1");
    auto comps = connected_components(glyph.bitmap);
    if (comps.empty()) fail(Errc::BlankImage, "glyph " + glyph.id + " has no foreground");

    std::vector<PixelList> pending(comps.begin(), comps.end());
    std::vector<PixelList> done;
    while (!pending.empty()) {
        PixelList piece = std::move(pending.back());
        pending.pop_back();
        if (static_cast<long long>(piece.size()) <= max_piece_area) {
            done.push_back(std::move(piece));
            continue;
        }
        Box b = pixel_bbox(piece);
        if (b.width() == 1 && b.height() == 1) {
            done.push_back(std::move(piece));
            continue;
        }
        auto [first, second] = split_piece(piece);
        // Cutting may disconnect a side; keep the pieces connected.
        for (PixelList* side : {&first, &second}) {
            Bitmap bm(glyph.bitmap.width, glyph.bitmap.height);
            for (auto [x, y] : *side) bm.set(x, y);
            for (auto& sub : connected_components(bm)) pending.push_back(std::move(sub));
        }
    }

    MaskSet out{glyph.id, MaskSource::Fine, {}};
    for (auto& piece : done)
        out.masks.push_back(
            component_from_pixels(glyph.bitmap.width, glyph.bitmap.height, piece, MaskSource::Fine));
    sort_canonical(out.masks);
    return out;
}

std::vector<long long> rle_encode(const Bitmap& mask) {
    std::vector<long long> runs;
    uint8_t current = 0; // background first
    long long run = 0;
    for (uint8_t p : mask.pixels) {
        uint8_t v = p ? 1 : 0;
        if (v == current) {
            ++run;
        } else {
            runs.push_back(run);
            current = v;
            run = 1;
        }
    }
    runs.push_back(run);
    return runs;
}

Bitmap rle_decode(std::span<const long long> runs, int width, int height) {
    long long total = 0;
    for (long long r : runs) {
        if (r < 0) fail(Errc::SchemaError, "negative RLE run");
        total += r;
    }
    if (total != static_cast<long long>(width) * height)
        fail(Errc::SchemaError, "RLE runs sum to " + std::to_string(total) + ", expected " +
                                    std::to_string(static_cast<long long>(width) * height));
    Bitmap out(width, height);
    size_t pos = 0;
    uint8_t value = 0;
    for (long long r : runs) {
        for (long long i = 0; i < r; ++i) out.pixels[pos++] = value;
        value = !value;
    }
    return out;
}

namespace {

nlohmann::json maskset_to_json(const MaskSet& set) {
    nlohmann::json j;
    j["glyph_id"] = set.glyph_id;
    j["masks"] = nlohmann::json::array();
    for (const auto& m : set.masks) {
        nlohmann::json e;
        e["rle"] = rle_encode(m.mask);
        e["bbox"] = {m.bbox.x0, m.bbox.y0, m.bbox.x1, m.bbox.y1};
        j["masks"].push_back(std::move(e));
    }
    return j;
}

} // namespace

void save_maskset(const MaskSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write mask file " + path.string());
    out << maskset_to_json(set).dump(2) << "\n";
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

MaskSet load_maskset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open mask file " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("glyph_id") || !j.contains("masks") ||
        !j["masks"].is_array())
        fail(Errc::SchemaError, "mask file " + path.string() + " is malformed");

    MaskSet set;
    set.glyph_id = j["glyph_id"].get<std::string>();
    set.source = MaskSource::Imported;
    for (const auto& e : j["masks"]) {
        if (!e.is_object() || !e.contains("rle") || !e["rle"].is_array())
            fail(Errc::SchemaError, "mask entry without rle in " + path.string());
        std::vector<long long> runs = e["rle"].get<std::vector<long long>>();
        Bitmap mask = rle_decode(runs, kCanvas, kCanvas);
        if (mask.foreground_count() == 0)
            fail(Errc::EmptyMaskError, "mask with no foreground in " + path.string());
        set.masks.push_back(make_component(std::move(mask), MaskSource::Imported));
    }
    return set;
}

MaskSet import_masks(const Glyph& glyph, const std::filesystem::path& path) {
    MaskSet raw = load_maskset(path);
    if (raw.glyph_id != glyph.id)
        fail(Errc::IdMismatch, "mask file is for \"" + raw.glyph_id + "\", glyph is \"" +
                                   glyph.id + "\"");

    // Clip to the glyph foreground.
    struct Clipped {
        PixelList pixels;
        size_t index;
    };
    std::vector<Clipped> clipped;
    for (size_t i = 0; i < raw.masks.size(); ++i) {
        const Bitmap& m = raw.masks[i].mask;
        if (m.width != glyph.bitmap.width || m.height != glyph.bitmap.height)
            fail(Errc::SchemaError, "mask dimensions do not match the glyph");
        Clipped c{{}, i};
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                if (m.at(x, y) && glyph.bitmap.at(x, y)) c.pixels.emplace_back(x, y);
        if (!c.pixels.empty()) clipped.push_back(std::move(c));
    }

    // Contested pixels go to the smaller mask: claim in ascending area order.
    std::sort(clipped.begin(), clipped.end(), [](const Clipped& a, const Clipped& b) {
        return std::tuple(a.pixels.size(), a.index) < std::tuple(b.pixels.size(), b.index);
    });
    Bitmap claimed(glyph.bitmap.width, glyph.bitmap.height);
    MaskSet out{glyph.id, MaskSource::Imported, {}};
    for (auto& c : clipped) {
        PixelList kept;
        for (auto [x, y] : c.pixels)
            if (!claimed.at(x, y)) {
                claimed.set(x, y);
                kept.emplace_back(x, y);
            }
        if (!kept.empty())
            out.masks.push_back(component_from_pixels(glyph.bitmap.width, glyph.bitmap.height,
                                                      kept, MaskSource::Imported));
    }

    // Leftover foreground becomes its own pieces so the set stays a partition.
    Bitmap residue(glyph.bitmap.width, glyph.bitmap.height);
    bool any_residue = false;
    for (int y = 0; y < glyph.bitmap.height; ++y)
        for (int x = 0; x < glyph.bitmap.width; ++x)
            if (glyph.bitmap.at(x, y) && !claimed.at(x, y)) {
                residue.set(x, y);
                any_residue = true;
            }
    if (any_residue)
        for (auto& piece : connected_components(residue))
            out.masks.push_back(component_from_pixels(glyph.bitmap.width, glyph.bitmap.height,
                                                      piece, MaskSource::Imported));

    if (out.masks.empty())
        fail(Errc::EmptyMaskError, "no usable masks for glyph \"" + glyph.id + "\"");
    sort_canonical(out.masks);
    return out;
}

} // namespace glyphid
