#include "glyphid/glyph.hpp"

#include "glyphid/errors.hpp"
#include "glyphid/image_io.hpp"
#include "glyphid/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <unordered_set>

namespace glyphid {

namespace {

constexpr std::array<Period, 7> kPeriods = {
    Period::OBI,       Period::Bronze, Period::WarringStates, Period::Seal,
    Period::Clerical,  Period::Kangxi, Period::Regular,
};

constexpr std::array<std::string_view, 7> kPeriodNames = {
    "OBI", "Bronze", "WarringStates", "Seal", "Clerical", "Kangxi", "Regular",
};

// Edge-preserving nearest-neighbor index map: both endpoints of the source
// range are always sampled, so tight content stays tight after scaling.
int sample_index(int dst, int dst_n, int src_n) {
    if (dst_n <= 1) return 0;
    return static_cast<int>(
        std::llround(static_cast<double>(dst) * (src_n - 1) / (dst_n - 1)));
}

Bitmap center_on_canvas(const Bitmap& content) {
    Bitmap out(kCanvas, kCanvas);
    int ox = (kCanvas - content.width) / 2;
    int oy = (kCanvas - content.height) / 2;
    for (int y = 0; y < content.height; ++y)
        for (int x = 0; x < content.width; ++x)
            if (content.at(x, y)) out.set(ox + x, oy + y);
    return out;
}

} // namespace

std::string_view period_name(Period p) { return kPeriodNames[static_cast<int>(p)]; }

std::optional<Period> parse_period(std::string_view name) {
    for (size_t i = 0; i < kPeriodNames.size(); ++i)
        if (kPeriodNames[i] == name) return kPeriods[i];
    return std::nullopt;
}

std::span<const Period> all_periods() { return kPeriods; }

Bitmap scale_nearest(const Bitmap& src, int w, int h) {
    Bitmap out(w, h);
    for (int y = 0; y < h; ++y) {
        int sy = sample_index(y, h, src.height);
        for (int x = 0; x < w; ++x) {
            int sx = sample_index(x, w, src.width);
            out.set(x, y, src.at(sx, sy));
        }
    }
    return out;
}

Bitmap crop_to(const Bitmap& src, const Box& box) {
    Bitmap out(box.width(), box.height());
    for (int y = box.y0; y <= box.y1; ++y)
        for (int x = box.x0; x <= box.x1; ++x)
            out.set(x - box.x0, y - box.y0, src.at(x, y));
    return out;
}

Bitmap normalize_bitmap(const Bitmap& raw) {
    auto box = raw.foreground_box();
    if (!box) fail(Errc::BlankImage, "no foreground pixels");
    Bitmap content = crop_to(raw, *box);
    int w, h;
    if (content.width >= content.height) {
        w = kCanvas;
        h = std::max<int>(1, static_cast<int>(std::llround(
                                 static_cast<double>(kCanvas) * content.height / content.width)));
    } else {
        h = kCanvas;
        w = std::max<int>(1, static_cast<int>(std::llround(
                                 static_cast<double>(kCanvas) * content.width / content.height)));
    }
    return center_on_canvas(scale_nearest(content, w, h));
}

Bitmap normalize_raster(const GrayImage& raw, int threshold) {
    if (raw.width <= 0 || raw.height <= 0) fail(Errc::BlankImage, "empty raster");
    Bitmap bin(raw.width, raw.height);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            if (raw.at(x, y) < threshold) bin.set(x, y);
    return normalize_bitmap(bin);
}

Manifest::Manifest(std::vector<ManifestRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
    for (size_t i = 0; i < records_.size(); ++i) index_.emplace(records_[i].id, i);
}

const ManifestRecord* Manifest::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::filesystem::path Manifest::resolve_path(const ManifestRecord& r) const {
    std::filesystem::path p(r.image_path);
    if (p.is_absolute()) return p;
    return base_dir_ / p;
}

std::map<Period, long long> Manifest::samples_per_period() const {
    std::map<Period, long long> counts;
    for (const auto& r : records_) ++counts[r.period];
    return counts;
}

std::map<Period, std::set<std::string>> Manifest::categories_per_period() const {
    std::map<Period, std::set<std::string>> cats;
    for (const auto& r : records_)
        if (r.category) cats[r.period].insert(*r.category);
    return cats;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open manifest " + path.string());
    std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";

    std::vector<ManifestRecord> records;
    std::unordered_set<std::string> seen_ids;
    std::unordered_set<std::string> checked_paths;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": not a JSON object");
        ManifestRecord r;
        try {
            r.id = j.at("id").get<std::string>();
            std::string period = j.at("period").get<std::string>();
            auto p = parse_period(period);
            if (!p)
                fail(Errc::SchemaError,
                     "line " + std::to_string(line_no) + ": unknown period \"" + period + "\"");
            r.period = *p;
            if (j.contains("category") && !j.at("category").is_null())
                r.category = j.at("category").get<std::string>();
            r.image_path = j.at("image_path").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(r.id).second)
            fail(Errc::DuplicateId, "line " + std::to_string(line_no) + ": duplicate id \"" +
                                        r.id + "\"");
        std::filesystem::path img(r.image_path);
        if (!img.is_absolute()) img = base / img;
        if (checked_paths.insert(img.string()).second && !std::filesystem::exists(img))
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": image_path \"" +
                                        r.image_path + "\" does not resolve");
        records.push_back(std::move(r));
    }
    return Manifest(std::move(records), base);
}

void save_manifest(const std::filesystem::path& path, std::span<const ManifestRecord> records) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write manifest " + path.string());
    for (const auto& r : records) {
        nlohmann::json j;
        j["id"] = r.id;
        j["period"] = std::string(period_name(r.period));
        if (r.category) j["category"] = *r.category;
        else j["category"] = nullptr;
        j["image_path"] = r.image_path;
        out << j.dump() << "\n";
    }
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

RadicalAtlas load_atlas(const std::filesystem::path& dir) {
    std::filesystem::path index = dir / "index.tsv";
    std::ifstream in(index);
    if (!in) fail(Errc::IoError, "cannot open atlas index " + index.string());
    RadicalAtlas atlas;
    atlas.stamp_width = 0;
    atlas.stamp_height = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            fail(Errc::ParseError, index.string() + " line " + std::to_string(line_no) +
                                       ": expected `label<TAB>file`");
        std::string label = line.substr(0, tab);
        std::string file = line.substr(tab + 1);
        GrayImage img = read_gray_image(dir / file);
        Bitmap stamp(img.width, img.height);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                if (img.at(x, y) < kDefaultThreshold) stamp.set(x, y);
        if (stamp.foreground_count() == 0)
            fail(Errc::ParseError, "atlas stamp for \"" + label + "\" is blank");
        if (atlas.stamps.empty()) {
            atlas.stamp_width = stamp.width;
            atlas.stamp_height = stamp.height;
        } else if (stamp.width != atlas.stamp_width || stamp.height != atlas.stamp_height) {
            fail(Errc::ParseError, "atlas stamp for \"" + label + "\" has mismatched dimensions");
        }
        atlas.stamps[label] = std::move(stamp);
    }
    if (atlas.stamps.empty()) fail(Errc::EmptyDictError, "atlas " + dir.string() + " is empty");
    return atlas;
}

void save_atlas(const RadicalAtlas& atlas, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "index.tsv");
    if (!index) fail(Errc::IoError, "cannot write atlas index in " + dir.string());
    int i = 0;
    for (const auto& [label, stamp] : atlas.stamps) {
        char name[32];
        std::snprintf(name, sizeof(name), "stamp_%04d.pgm", i++);
        write_pgm(dir / name, stamp);
        index << label << "\t" << name << "\n";
    }
}

namespace {

void draw_segment(Bitmap& bm, int x0, int y0, int x1, int y1, int thickness) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    int half = thickness / 2;
    while (true) {
        for (int by = y - half; by < y - half + thickness; ++by)
            for (int bx = x - half; bx < x - half + thickness; ++bx)
                if (bm.in_bounds(bx, by)) bm.set(bx, by);
        if (x == x1 && y == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

std::vector<std::pair<int, int>> ink_pixels(const Bitmap& bm) {
    std::vector<std::pair<int, int>> px;
    for (int y = 0; y < bm.height; ++y)
        for (int x = 0; x < bm.width; ++x)
            if (bm.at(x, y)) px.emplace_back(x, y);
    return px;
}

} // namespace

RadicalAtlas make_synthetic_atlas(const std::set<std::string>& labels, uint64_t base_seed,
                                  const AtlasStyle& style) {
    RadicalAtlas atlas;
    for (const auto& label : labels) {
        // Base geometry depends only on (label, base_seed) so styles of the
        // same label stay related across periods.
        Rng base(hash64(label) ^ (base_seed * 0x9E3779B97F4A7C15ULL));
        int segments = static_cast<int>(base.range(4, 6));
        std::vector<std::pair<int, int>> anchors;
        anchors.emplace_back(static_cast<int>(base.range(8, 23)),
                             static_cast<int>(base.range(8, 23)));
        Bitmap stamp(kStamp, kStamp);
        for (int s = 0; s < segments; ++s) {
            auto [ax, ay] = anchors[base.below(anchors.size())];
            int bx = static_cast<int>(base.range(4, 27));
            int by = static_cast<int>(base.range(4, 27));
            draw_segment(stamp, ax, ay, bx, by, style.thickness);
            anchors.emplace_back(bx, by);
            anchors.emplace_back((ax + bx) / 2, (ay + by) / 2);
        }
        Rng deco(hash64(label) ^ style.style_seed ^ 0xA5A5A5A5A5A5A5A5ULL);
        for (int t = 0; t < style.ticks; ++t) {
            auto ink = ink_pixels(stamp);
            auto [ax, ay] = ink[deco.below(ink.size())];
            int bx = std::clamp<int>(ax + static_cast<int>(deco.range(-3, 3)), 0, kStamp - 1);
            int by = std::clamp<int>(ay + static_cast<int>(deco.range(-3, 3)), 0, kStamp - 1);
            draw_segment(stamp, ax, ay, bx, by, 1);
        }
        if (style.dx != 0 || style.dy != 0) {
            Bitmap shifted(kStamp, kStamp);
            for (int y = 0; y < kStamp; ++y)
                for (int x = 0; x < kStamp; ++x)
                    if (stamp.at(x, y) && shifted.in_bounds(x + style.dx, y + style.dy))
                        shifted.set(x + style.dx, y + style.dy);
            stamp = std::move(shifted);
        }
        if (stamp.foreground_count() == 0)
            fail(Errc::InvalidArgument, "generated stamp for \"" + label + "\" is blank");
        atlas.stamps[label] = std::move(stamp);
    }
    return atlas;
}

namespace {

struct ComposeContext {
    const RadicalAtlas& atlas;
    const JitterParams& jitter;
    Rng rng;
    Bitmap canvas{kCanvas, kCanvas};
};

void stamp_leaf(ComposeContext& ctx, const std::string& label, const Box& box) {
    auto it = ctx.atlas.stamps.find(label);
    if (it == ctx.atlas.stamps.end())
        fail(Errc::MissingRadical, "radical \"" + label + "\" is not in the atlas");
    const Bitmap& stamp = it->second;
    int inset = std::min({ctx.jitter.inset, (box.width() - 1) / 2, (box.height() - 1) / 2});
    int tw = box.width() - 2 * inset;
    int th = box.height() - 2 * inset;
    double scale = std::min(static_cast<double>(tw) / stamp.width,
                            static_cast<double>(th) / stamp.height);
    int sw = std::clamp(static_cast<int>(std::llround(stamp.width * scale)), 1, tw);
    int sh = std::clamp(static_cast<int>(std::llround(stamp.height * scale)), 1, th);
    Bitmap scaled = scale_nearest(stamp, sw, sh);

    int ox = box.x0 + inset + (tw - sw) / 2;
    int oy = box.y0 + inset + (th - sh) / 2;
    if (ctx.jitter.max_offset > 0) {
        ox += static_cast<int>(ctx.rng.range(-ctx.jitter.max_offset, ctx.jitter.max_offset));
        oy += static_cast<int>(ctx.rng.range(-ctx.jitter.max_offset, ctx.jitter.max_offset));
    }
    ox = std::clamp(ox, box.x0, box.x1 - sw + 1);
    oy = std::clamp(oy, box.y0, box.y1 - sh + 1);
    for (int y = 0; y < sh; ++y)
        for (int x = 0; x < sw; ++x)
            if (scaled.at(x, y)) ctx.canvas.set(ox + x, oy + y);
}

// Inner child box of a surround operator: half scale, placed so the open side
// of the frame is the side the inner box touches.
Box surround_inner(char32_t op, const Box& b) {
    int iw = std::max(1, b.width() / 2);
    int ih = std::max(1, b.height() / 2);
    int cx = b.x0 + (b.width() - iw) / 2;
    int cy = b.y0 + (b.height() - ih) / 2;
    int left = b.x0, right = b.x1 - iw + 1;
    int top = b.y0, bottom = b.y1 - ih + 1;
    switch (op) {
    case 0x2FF4: return {cx, cy, cx + iw - 1, cy + ih - 1};          // full surround
    case 0x2FF5: return {cx, bottom, cx + iw - 1, b.y1};             // open below
    case 0x2FF6: return {cx, top, cx + iw - 1, top + ih - 1};        // open above
    case 0x2FF7: return {right, cy, b.x1, cy + ih - 1};              // open right
    case 0x2FF8: return {right, bottom, b.x1, b.y1};                 // open lower-right
    case 0x2FF9: return {left, bottom, left + iw - 1, b.y1};         // open lower-left
    case 0x2FFA: return {right, top, b.x1, top + ih - 1};            // open upper-right
    case 0x2FFB: return {cx, cy, cx + iw - 1, cy + ih - 1};          // overlaid
    }
    fail(Errc::InvalidArgument, "not a surround operator");
}

void compose_into(ComposeContext& ctx, const IdsTree& tree, const Box& box) {
    if (tree.is_leaf()) {
        stamp_leaf(ctx, tree.label, box);
        return;
    }
    int w = box.width(), h = box.height();
    switch (tree.op) {
    case 0x2FF0: { // left-right
        int xm = box.x0 + w / 2 - 1;
        compose_into(ctx, tree.children[0], {box.x0, box.y0, xm, box.y1});
        compose_into(ctx, tree.children[1], {xm + 1, box.y0, box.x1, box.y1});
        return;
    }
    case 0x2FF1: { // top-bottom
        int ym = box.y0 + h / 2 - 1;
        compose_into(ctx, tree.children[0], {box.x0, box.y0, box.x1, ym});
        compose_into(ctx, tree.children[1], {box.x0, ym + 1, box.x1, box.y1});
        return;
    }
    case 0x2FF2: { // left-middle-right
        int xa = box.x0 + w / 3 - 1;
        int xb = box.x0 + 2 * w / 3 - 1;
        compose_into(ctx, tree.children[0], {box.x0, box.y0, xa, box.y1});
        compose_into(ctx, tree.children[1], {xa + 1, box.y0, xb, box.y1});
        compose_into(ctx, tree.children[2], {xb + 1, box.y0, box.x1, box.y1});
        return;
    }
    case 0x2FF3: { // top-middle-bottom
        int ya = box.y0 + h / 3 - 1;
        int yb = box.y0 + 2 * h / 3 - 1;
        compose_into(ctx, tree.children[0], {box.x0, box.y0, box.x1, ya});
        compose_into(ctx, tree.children[1], {box.x0, ya + 1, box.x1, yb});
        compose_into(ctx, tree.children[2], {box.x0, yb + 1, box.x1, box.y1});
        return;
    }
    default: { // surround family: outer over the whole box, inner at 50%
        compose_into(ctx, tree.children[0], box);
        compose_into(ctx, tree.children[1], surround_inner(tree.op, box));
        return;
    }
    }
}

} // namespace

Bitmap compose_synthetic(const CharEntry& entry, const RadicalAtlas& atlas,
                         const JitterParams& jitter, uint64_t seed) {
    for (const auto& [label, count] : entry.radicals)
        if (!atlas.stamps.count(label))
            fail(Errc::MissingRadical, "radical \"" + label + "\" is not in the atlas");
    ComposeContext ctx{atlas, jitter, Rng(seed)};
    compose_into(ctx, entry.ids, Box{0, 0, kCanvas - 1, kCanvas - 1});
    return std::move(ctx.canvas);
}

} // namespace glyphid
