#include "glyphid/annotate.hpp"
#include "glyphid/embed.hpp"
#include "glyphid/errors.hpp"
#include "glyphid/glyph.hpp"
#include "glyphid/ids.hpp"
#include "glyphid/image_io.hpp"
#include "glyphid/reconstruct.hpp"
#include "glyphid/segment.hpp"
#include "glyphid/utf8.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace glyphid;

namespace {

Bitmap to_bitmap(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D uint8 array");
    Bitmap b;
    b.height = static_cast<int>(arr.shape(0));
    b.width = static_cast<int>(arr.shape(1));
    b.pixels.resize(static_cast<size_t>(b.width) * b.height);
    auto view = arr.unchecked<2>();
    for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x) b.pixels[static_cast<size_t>(y) * b.width + x] =
            view(y, x) ? 1 : 0;
    return b;
}

py::array_t<uint8_t> from_bitmap(const Bitmap& b) {
    py::array_t<uint8_t> arr({b.height, b.width});
    auto view = arr.mutable_unchecked<2>();
    for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x) view(y, x) = b.at(x, y);
    return arr;
}

FeatureVec to_feature(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 1 || arr.shape(0) != kFeatureDim)
        throw py::value_error("expected a 1-D float array of length 128");
    FeatureVec f;
    auto view = arr.unchecked<1>();
    for (int i = 0; i < kFeatureDim; ++i) f[static_cast<size_t>(i)] = view(i);
    return f;
}

py::array_t<double> from_vector(const std::vector<double>& v) {
    // Build from an explicit shape vector: the count constructor of array_t
    // leaves the strides container empty, which yields stride-0 arrays.
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size())};
    py::array_t<double> arr(shape);
    std::copy(v.begin(), v.end(), arr.mutable_data());
    return arr;
}

py::dict tree_to_dict(const IdsTree& t) {
    py::dict d;
    if (t.is_leaf()) {
        d["leaf"] = t.label;
        return d;
    }
    d["op"] = utf8::encode(t.op);
    py::list children;
    for (const auto& c : t.children) children.append(tree_to_dict(c));
    d["children"] = std::move(children);
    return d;
}

Token token_from_text(const std::string& text) {
    if (text == kEosText) return Token::eos();
    auto cps = utf8::decode(text);
    if (cps.size() == 1 && is_struct_op(cps[0])) return Token::op(cps[0]);
    return Token::radical(text);
}

Projection projection_from(const std::optional<std::string>& path) {
    return path ? load_projection(*path) : Projection::identity();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "radical-level glyph decipherment core";
    m.attr("__version__") = "1.0.0";
    m.attr("FEATURE_DIM") = kFeatureDim;
    m.attr("CANVAS") = kCanvas;

    py::register_exception<Error>(m, "GlyphidError");

    m.def(
        "parse_ids", [](const std::string& text) { return tree_to_dict(parse_ids(text)); },
        py::arg("text"), "Parse an IDS expression into a nested dict.");

    m.def(
        "serialize_ids",
        [](const std::string& text) { return serialize_ids(parse_ids(text)); },
        py::arg("text"), "Parse and re-serialize an IDS expression (canonical form).");

    m.def(
        "ids_tokens",
        [](const std::string& text) {
            std::vector<std::string> out;
            for (const auto& t : tokenize_ids(text)) out.push_back(t.text);
            return out;
        },
        py::arg("text"), "Token texts of an IDS expression, in prefix order.");

    m.def(
        "radical_multiset",
        [](const std::string& text) { return radical_multiset(parse_ids(text)); },
        py::arg("text"), "Leaf radical counts of an IDS expression.");

    m.def(
        "token_levenshtein",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
            std::vector<Token> ta, tb;
            for (const auto& t : a) ta.push_back(token_from_text(t));
            for (const auto& t : b) tb.push_back(token_from_text(t));
            return token_levenshtein(ta, tb);
        },
        py::arg("a"), py::arg("b"), "Token-level edit distance between two sequences.");

    m.def(
        "normalize_image",
        [](const std::string& path, int threshold) {
            return from_bitmap(normalize_raster(read_gray_image(path), threshold));
        },
        py::arg("path"), py::arg("threshold") = kDefaultThreshold,
        "Load, binarize and center a glyph image onto the 64x64 canvas.");

    m.def(
        "segment",
        [](const std::string& path, double merge_dist, bool fine, long long max_piece_area,
           int threshold) {
            Glyph g;
            g.id = std::filesystem::path(path).stem().string();
            g.bitmap = normalize_raster(read_gray_image(path), threshold);
            MaskSet set = fine ? segment_fine(g, max_piece_area) : segment_coarse(g, merge_dist);
            py::list out;
            for (const auto& mask : set.masks) {
                py::dict d;
                d["bbox"] = py::make_tuple(mask.bbox.x0, mask.bbox.y0, mask.bbox.x1, mask.bbox.y1);
                d["area"] = mask.area;
                d["mask"] = from_bitmap(mask.mask);
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("path"), py::arg("merge_dist") = kDefaultMergeDist, py::arg("fine") = false,
        py::arg("max_piece_area") = kDefaultMaxPieceArea,
        py::arg("threshold") = kDefaultThreshold,
        "Split a glyph image into component masks (canvas-sized uint8 arrays).");

    m.def(
        "describe",
        [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask) {
            auto component = make_component(to_bitmap(mask), MaskSource::Imported);
            return from_vector(describe_normalized(component));
        },
        py::arg("mask"), "Raw 148-dim descriptor of one component mask.");

    m.def(
        "embed",
        [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask,
           const std::optional<std::string>& projection) {
            auto component = make_component(to_bitmap(mask), MaskSource::Imported);
            FeatureVec f = embed(describe_normalized(component), projection_from(projection));
            return from_vector(std::vector<double>(f.begin(), f.end()));
        },
        py::arg("mask"), py::arg("projection") = py::none(),
        "Unit-norm 128-dim feature of one component mask.");

    m.def(
        "contrastive_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& k_pos,
           const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>&
               k_neg,
           double tau) {
            ContrastiveBatch batch;
            batch.q = to_feature(q);
            batch.k_pos = to_feature(k_pos);
            for (const auto& k : k_neg) batch.k_neg.push_back(to_feature(k));
            batch.tau = tau;
            LossGrad lg = contrastive_loss(batch);
            return py::make_tuple(lg.loss,
                                  from_vector(std::vector<double>(lg.grad_q.begin(),
                                                                  lg.grad_q.end())));
        },
        py::arg("q"), py::arg("k_pos"), py::arg("k_neg"), py::arg("tau") = kDefaultTau,
        "InfoNCE loss and analytic query gradient.");

    m.def(
        "refine_confidence",
        [](const std::vector<std::pair<double, std::map<std::string, double>>>& neighbors,
           const std::string& weight) {
            auto mode = parse_weight_mode(weight);
            if (!mode) throw py::value_error("unknown weight mode \"" + weight + "\"");
            NeighborSet set;
            for (size_t i = 0; i < neighbors.size(); ++i) {
                Neighbor n;
                n.component_id = "n" + std::to_string(i);
                n.distance = neighbors[i].first;
                n.dict = ConfidenceDict(neighbors[i].second.begin(), neighbors[i].second.end());
                set.neighbors.push_back(std::move(n));
            }
            return std::map<std::string, double>(refine_confidence(set, *mode));
        },
        py::arg("neighbors"), py::arg("weight") = "inverse",
        "Distance-weighted softmax over neighbor confidence dictionaries; "
        "neighbors are (distance, {label: confidence}) pairs.");

    m.def(
        "match",
        [](const std::string& dict_path, const std::optional<std::string>& ids,
           const std::optional<std::vector<std::string>>& labels, double fuzz,
           const std::optional<std::string>& target) {
            DictLoadResult loaded = load_dict(dict_path);
            QueryForm q;
            if (ids && labels) throw py::value_error("give either ids or labels, not both");
            if (ids) {
                q = QueryForm::from_ids(*ids);
            } else if (labels) {
                std::map<std::string, int> multiset;
                for (const auto& l : *labels) ++multiset[l];
                q = QueryForm::from_multiset(std::move(multiset));
            } else {
                throw py::value_error("give either ids or labels");
            }
            std::optional<char32_t> target_cp;
            if (target) {
                auto cps = utf8::decode(*target);
                if (cps.size() != 1) throw py::value_error("target must be a single character");
                target_cp = cps[0];
            }
            ReconstructionResult r = match_sequence(q, loaded.dict, fuzz, target_cp);
            py::list candidates;
            for (const auto& c : r.candidates) {
                py::dict d;
                d["char"] = utf8::encode(c.ch);
                d["score"] = c.score;
                d["kind"] = std::string(match_kind_name(c.kind));
                candidates.append(std::move(d));
            }
            py::dict out;
            out["candidates"] = std::move(candidates);
            out["accepted"] = r.accepted;
            return out;
        },
        py::arg("dict_path"), py::arg("ids") = py::none(), py::arg("labels") = py::none(),
        py::arg("fuzz") = kDefaultFuzz, py::arg("target") = py::none(),
        "Rank dictionary characters for an IDS or radical-multiset query.");
}
