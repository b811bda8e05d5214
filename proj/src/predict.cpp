#include "glyphid/predict.hpp"

#include "glyphid/errors.hpp"
#include "glyphid/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>

namespace glyphid {

bool tokens_parse(std::span<const Token> tokens) {
    if (tokens.empty() || tokens.back().kind != TokenKind::Eos) return false;
    auto prefix = tokens.first(tokens.size() - 1);
    for (const Token& t : prefix)
        if (t.kind == TokenKind::Eos) return false;
    try {
        parse_tokens(prefix);
    } catch (const Error&) {
        return false;
    }
    return true;
}

namespace {

long long intersection_area(const Box& a, const Box& b) {
    int x0 = std::max(a.x0, b.x0), y0 = std::max(a.y0, b.y0);
    int x1 = std::min(a.x1, b.x1), y1 = std::min(a.y1, b.y1);
    if (x1 < x0 || y1 < y0) return 0;
    return static_cast<long long>(x1 - x0 + 1) * (y1 - y0 + 1);
}

int overlap_len(int a0, int a1, int b0, int b1) {
    return std::min(a1, b1) - std::max(a0, b0) + 1;
}

bool x_separated(const Box& a, const Box& b) {
    double ov = overlap_len(a.x0, a.x1, b.x0, b.x1);
    return ov < 0.25 * std::min(a.width(), b.width());
}

bool y_separated(const Box& a, const Box& b) {
    double ov = overlap_len(a.y0, a.y1, b.y0, b.y1);
    return ov < 0.25 * std::min(a.height(), b.height());
}

double center_x(const Box& b) { return (b.x0 + b.x1) / 2.0; }
double center_y(const Box& b) { return (b.y0 + b.y1) / 2.0; }

char32_t surround_case(const Box& outer, const Box& inner) {
    bool left = inner.x0 - outer.x0 <= kTouchTol;
    bool right = outer.x1 - inner.x1 <= kTouchTol;
    bool top = inner.y0 - outer.y0 <= kTouchTol;
    bool bottom = outer.y1 - inner.y1 <= kTouchTol;
    int touched = left + right + top + bottom;
    if (touched == 0) return 0x2FF4;                   // full surround
    if (touched == 1 && bottom) return 0x2FF5;         // frame above, open below
    if (touched == 1 && top) return 0x2FF6;            // frame below, open above
    if (touched == 1 && right) return 0x2FF7;          // frame left, open right
    if (touched == 2 && bottom && right) return 0x2FF8; // frame upper-left
    if (touched == 2 && bottom && left) return 0x2FF9;  // frame upper-right
    if (touched == 2 && top && right) return 0x2FFA;    // frame lower-left
    return 0x2FFB;
}

} // namespace

char32_t infer_structure(std::span<const Box> boxes) {
    if (boxes.size() != 2 && boxes.size() != 3)
        fail(Errc::BadArity, "structure inference takes 2 or 3 boxes, got " +
                                 std::to_string(boxes.size()));
    for (const Box& b : boxes)
        if (!b.valid()) fail(Errc::InvalidArgument, "degenerate box");

    if (boxes.size() == 2) {
        const Box& a = boxes[0];
        const Box& b = boxes[1];
        const Box& outer = a.area() >= b.area() ? a : b;
        const Box& inner = a.area() >= b.area() ? b : a;
        if (intersection_area(outer, inner) >= 0.9 * static_cast<double>(inner.area())) {
            if (outer.area() == inner.area()) return 0x2FFB;
            return surround_case(outer, inner);
        }
        if (x_separated(a, b)) return 0x2FF0;
        if (y_separated(a, b)) return 0x2FF1;
        return 0x2FFB;
    }

    std::array<Box, 3> sorted_x = {boxes[0], boxes[1], boxes[2]};
    std::sort(sorted_x.begin(), sorted_x.end(),
              [](const Box& a, const Box& b) { return center_x(a) < center_x(b); });
    if (x_separated(sorted_x[0], sorted_x[1]) && x_separated(sorted_x[1], sorted_x[2]))
        return 0x2FF2;

    std::array<Box, 3> sorted_y = {boxes[0], boxes[1], boxes[2]};
    std::sort(sorted_y.begin(), sorted_y.end(),
              [](const Box& a, const Box& b) { return center_y(a) < center_y(b); });
    if (y_separated(sorted_y[0], sorted_y[1]) && y_separated(sorted_y[1], sorted_y[2]))
        return 0x2FF3;
    return 0x2FFB;
}

namespace {

struct Item {
    Box box;
    const std::string* label;
};

Box hull(std::span<const Item> items) {
    Box h = items.front().box;
    for (const Item& it : items.subspan(1)) {
        h.x0 = std::min(h.x0, it.box.x0);
        h.y0 = std::min(h.y0, it.box.y0);
        h.x1 = std::max(h.x1, it.box.x1);
        h.y1 = std::max(h.y1, it.box.y1);
    }
    return h;
}

/// Partition items into axis-ordered clusters; consecutive clusters satisfy
/// the x/y separation rule. Returns one cluster when no split exists.
std::vector<std::vector<Item>> cluster_axis(std::vector<Item> items, bool horizontal) {
    std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        return horizontal ? std::tuple(a.box.x0, center_x(a.box), a.box.y0) <
                                std::tuple(b.box.x0, center_x(b.box), b.box.y0)
                          : std::tuple(a.box.y0, center_y(a.box), a.box.x0) <
                                std::tuple(b.box.y0, center_y(b.box), b.box.x0);
    });
    std::vector<std::vector<Item>> clusters;
    Box run{};
    for (const Item& it : items) {
        bool separate =
            !clusters.empty() && (horizontal ? x_separated(run, it.box) : y_separated(run, it.box));
        if (clusters.empty() || separate) {
            clusters.push_back({it});
            run = it.box;
        } else {
            clusters.back().push_back(it);
            run.x0 = std::min(run.x0, it.box.x0);
            run.y0 = std::min(run.y0, it.box.y0);
            run.x1 = std::max(run.x1, it.box.x1);
            run.y1 = std::max(run.y1, it.box.y1);
        }
    }
    return clusters;
}

IdsTree compose_items(std::vector<Item> items);

IdsTree compose_clusters(std::vector<std::vector<Item>> clusters, char32_t two_op,
                         char32_t three_op) {
    if (clusters.size() == 2 || clusters.size() == 3) {
        std::vector<Box> hulls;
        for (auto& c : clusters) hulls.push_back(hull(c));
        char32_t op = infer_structure(hulls);
        // Disjoint hulls by construction; fall back to the axis op if the
        // geometry is degenerate enough to classify differently.
        if (op != two_op && op != three_op) op = clusters.size() == 2 ? two_op : three_op;
        std::vector<IdsTree> children;
        for (auto& c : clusters) children.push_back(compose_items(std::move(c)));
        return IdsTree::node(op, std::move(children));
    }
    // More clusters than any operator's arity: peel the first, nest the rest.
    std::vector<Item> rest;
    for (size_t i = 1; i < clusters.size(); ++i)
        rest.insert(rest.end(), clusters[i].begin(), clusters[i].end());
    std::vector<IdsTree> children;
    children.push_back(compose_items(std::move(clusters.front())));
    children.push_back(compose_items(std::move(rest)));
    return IdsTree::node(two_op, std::move(children));
}

IdsTree compose_items(std::vector<Item> items) {
    if (items.size() == 1) return IdsTree::leaf(*items.front().label);

    auto x_clusters = cluster_axis(items, true);
    if (x_clusters.size() > 1) return compose_clusters(std::move(x_clusters), 0x2FF0, 0x2FF2);
    auto y_clusters = cluster_axis(items, false);
    if (y_clusters.size() > 1) return compose_clusters(std::move(y_clusters), 0x2FF1, 0x2FF3);

    if (items.size() == 2) {
        char32_t op = infer_structure(std::array{items[0].box, items[1].box});
        bool surround = op >= 0x2FF4 && op <= 0x2FFA;
        std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
            if (surround) return a.box.area() > b.box.area(); // outer first
            return std::tuple(center_x(a.box), center_y(a.box)) <
                   std::tuple(center_x(b.box), center_y(b.box));
        });
        std::vector<IdsTree> children;
        children.push_back(IdsTree::leaf(*items[0].label));
        children.push_back(IdsTree::leaf(*items[1].label));
        return IdsTree::node(op, std::move(children));
    }

    // Inseparable pile: peel the canonically first item, overlay the rest.
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return std::tuple(center_x(a.box), center_y(a.box), a.box.area()) <
               std::tuple(center_x(b.box), center_y(b.box), b.box.area());
    });
    std::vector<Item> rest(items.begin() + 1, items.end());
    std::vector<IdsTree> children;
    children.push_back(IdsTree::leaf(*items.front().label));
    children.push_back(compose_items(std::move(rest)));
    return IdsTree::node(0x2FFB, std::move(children));
}

} // namespace

IdsTree compose_structure(std::span<const Box> boxes, std::span<const std::string> labels) {
    if (boxes.empty()) fail(Errc::EmptyInput, "no boxes to compose");
    if (boxes.size() != labels.size())
        fail(Errc::InvalidArgument, "boxes and labels are not parallel");
    std::vector<Item> items;
    for (size_t i = 0; i < boxes.size(); ++i) items.push_back({boxes[i], &labels[i]});
    return compose_items(std::move(items));
}

TokenSeq predict_knn_compose(const Glyph& glyph, const AnnotationStore& store,
                             const Projection& proj, const PredictParams& params) {
    MaskSet masks = segment_coarse(glyph, params.merge_dist);
    if (masks.masks.size() == 1) {
        MaskSet fine = segment_fine(glyph, params.max_piece_area);
        if (fine.masks.size() >= 2 && fine.masks.size() <= 3) masks = std::move(fine);
    }

    std::vector<Box> boxes;
    std::vector<std::string> labels;
    for (const auto& m : masks.masks) {
        FeatureVec f = embed(describe_normalized(m), proj);
        NeighborSet nb = knn_query(f, store, params.k);
        labels.push_back(assign_label(refine_confidence(nb, params.mode)));
        boxes.push_back(m.bbox);
    }

    IdsTree tree = compose_structure(boxes, labels);
    TokenSeq seq;
    seq.glyph_id = glyph.id;
    seq.tokens = tree_tokens(tree);
    seq.tokens.push_back(Token::eos());
    seq.valid = true;
    return seq;
}

namespace {

std::string token_text(const Token& t) {
    return t.kind == TokenKind::Eos ? kEosText : t.text;
}

} // namespace

void save_predictions(std::span<const TokenSeq> seqs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write predictions " + path.string());
    for (const TokenSeq& seq : seqs) {
        nlohmann::json j;
        j["glyph_id"] = seq.glyph_id;
        auto tokens = nlohmann::json::array();
        for (const Token& t : seq.tokens) tokens.push_back(token_text(t));
        j["tokens"] = std::move(tokens);
        out << j.dump() << "\n";
    }
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

std::vector<TokenSeq> import_predictions(const std::filesystem::path& path,
                                         const std::set<std::string>& vocabulary) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open predictions " + path.string());
    std::vector<TokenSeq> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": not a JSON object");
        TokenSeq seq;
        std::vector<std::string> texts;
        try {
            seq.glyph_id = j.at("glyph_id").get<std::string>();
            texts = j.at("tokens").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        for (const std::string& text : texts) {
            if (text == kEosText) {
                seq.tokens.push_back(Token::eos());
                continue;
            }
            auto cps = utf8::decode(text);
            if (cps.size() == 1 && is_struct_op(cps[0])) {
                seq.tokens.push_back(Token::op(cps[0]));
                continue;
            }
            if (!vocabulary.count(text))
                fail(Errc::UnknownToken, "line " + std::to_string(line_no) + ": token \"" + text +
                                             "\" is outside the vocabulary");
            seq.tokens.push_back(Token::radical(text));
        }
        seq.valid = tokens_parse(seq.tokens);
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<AugmentSample> augment_radicals(const std::string& glyph_id, Period period,
                                            const LabeledMaskSet& accepted) {
    if (accepted.labels.size() != accepted.set.masks.size())
        fail(Errc::InvalidArgument, "labels and masks are not parallel");
    std::vector<AugmentSample> out;
    for (size_t i = 0; i < accepted.set.masks.size(); ++i) {
        AugmentSample s;
        s.id = glyph_id + "-r" + std::to_string(i);
        s.period = period;
        s.label = accepted.labels[i];
        s.mask = accepted.set.masks[i].mask;
        s.seq.glyph_id = s.id;
        s.seq.tokens = {Token::radical(s.label), Token::eos()};
        s.seq.valid = true;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace glyphid
