"""Smoke tests for the Python extension module."""

import math
import os
from pathlib import Path

import numpy as np
import pytest

import glyphid


DATA = Path(os.environ["GLYPHID_DATA"])


def write_pgm(path, arr):
    arr = np.asarray(arr, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (arr.shape[1], arr.shape[0]))
        f.write(arr.tobytes())


@pytest.fixture()
def blocks_image(tmp_path):
    """White 40x40 page with two well-separated black squares."""
    img = np.full((40, 40), 255, dtype=np.uint8)
    img[4:14, 4:14] = 0
    img[26:36, 26:36] = 0
    path = tmp_path / "blocks.pgm"
    write_pgm(path, img)
    return path


def test_module_constants():
    assert glyphid.FEATURE_DIM == 128
    assert glyphid.CANVAS == 64
    assert glyphid.__version__


def test_ids_parsing_round_trip():
    tree = glyphid.parse_ids("⿰木日")
    assert tree == {"op": "⿰", "children": [{"leaf": "木"}, {"leaf": "日"}]}
    assert glyphid.serialize_ids("⿱宀⿰女子") == "⿱宀⿰女子"
    # Braced atoms stay braced: the braces are part of the radical label.
    assert glyphid.ids_tokens("⿰{ra}{rb}") == ["⿰", "{ra}", "{rb}"]
    assert glyphid.radical_multiset("⿱木⿰木木") == {"木": 3}
    with pytest.raises(glyphid.GlyphidError):
        glyphid.parse_ids("⿰木")  # missing second operand


def test_token_levenshtein():
    assert glyphid.token_levenshtein(["⿰", "木", "日"], ["⿰", "木", "日"]) == 0
    assert glyphid.token_levenshtein(["⿰", "木", "日"], ["⿱", "木", "日"]) == 1
    assert glyphid.token_levenshtein([], ["木"]) == 1


def test_normalize_and_segment(blocks_image):
    canvas = glyphid.normalize_image(str(blocks_image))
    assert canvas.shape == (64, 64)
    assert canvas.dtype == np.uint8
    assert set(np.unique(canvas)) <= {0, 1}
    assert canvas.sum() > 0

    masks = glyphid.segment(str(blocks_image))
    assert len(masks) == 2
    total = np.zeros((64, 64), dtype=np.int32)
    for m in masks:
        assert m["mask"].shape == (64, 64)
        assert m["area"] > 0
        x0, y0, x1, y1 = m["bbox"]
        assert 0 <= x0 <= x1 < 64 and 0 <= y0 <= y1 < 64
        total += m["mask"].astype(np.int32)
    # Masks partition the normalized foreground.
    assert np.array_equal(total, canvas.astype(np.int32))


def test_descriptor_and_embedding(blocks_image):
    masks = glyphid.segment(str(blocks_image))
    desc = glyphid.describe(masks[0]["mask"])
    assert desc.shape == (148,)

    feat = glyphid.embed(masks[0]["mask"])
    assert feat.shape == (128,)
    assert math.isclose(np.linalg.norm(feat), 1.0, rel_tol=0, abs_tol=1e-9)

    # A solid canvas has unit density everywhere and centered geometry.
    solid = np.ones((64, 64), dtype=np.uint8)
    d = glyphid.describe(solid)
    assert np.allclose(d[:16], 1.0)
    assert np.allclose(d[144:], [0.5, 0.5, 1.0, 1.0])


def test_contrastive_loss_values():
    q = np.zeros(128)
    q[0] = 1.0
    k_neg = np.zeros(128)
    k_neg[1] = 1.0

    loss, grad = glyphid.contrastive_loss(q, q, [], tau=0.07)
    assert abs(loss) < 1e-12
    assert grad.shape == (128,)

    loss, _ = glyphid.contrastive_loss(q, q, [k_neg], tau=0.5)
    assert math.isclose(loss, math.log(1.0 + math.exp(-2.0)), rel_tol=1e-9)


def test_refine_confidence():
    out = glyphid.refine_confidence([(0.5, {"A": 1.0}), (2.0, {"B": 1.0})])
    expected = math.exp(2.0) / (math.exp(2.0) + math.exp(0.5))
    assert math.isclose(out["A"], expected, rel_tol=1e-4)
    assert math.isclose(sum(out.values()), 1.0, abs_tol=1e-9)

    literal = glyphid.refine_confidence(
        [(0.5, {"A": 1.0}), (2.0, {"B": 1.0})], weight="literal"
    )
    assert literal["B"] > literal["A"]  # literal weighting favors the far neighbor

    with pytest.raises(ValueError):
        glyphid.refine_confidence([(1.0, {"A": 1.0})], weight="bogus")


def test_dictionary_match():
    dict_path = str(DATA / "chardict_small.tsv")

    exact = glyphid.match(dict_path, ids="⿱宀女", target="安")
    assert exact["accepted"]  # the target ranked first
    assert exact["candidates"][0]["char"] == "安"
    assert exact["candidates"][0]["score"] == 1.0
    assert exact["candidates"][0]["kind"] == "ExactIds"

    # Without a target nothing can be "accepted", but ranking still works.
    multiset = glyphid.match(dict_path, labels=["子", "女"])
    assert not multiset["accepted"]
    assert multiset["candidates"][0]["char"] == "好"

    with pytest.raises(ValueError):
        glyphid.match(dict_path, ids="⿱宀女", labels=["女"])
    with pytest.raises(ValueError):
        glyphid.match(dict_path)
