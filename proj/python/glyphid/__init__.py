"""Radical-level glyph decipherment: IDS parsing, segmentation, embeddings,
and dictionary reconstruction, backed by the C++ core."""

from ._core import (
    CANVAS,
    FEATURE_DIM,
    GlyphidError,
    __version__,
    contrastive_loss,
    describe,
    embed,
    ids_tokens,
    match,
    normalize_image,
    parse_ids,
    radical_multiset,
    refine_confidence,
    segment,
    serialize_ids,
    token_levenshtein,
)

__all__ = [
    "CANVAS",
    "FEATURE_DIM",
    "GlyphidError",
    "__version__",
    "contrastive_loss",
    "describe",
    "embed",
    "ids_tokens",
    "match",
    "normalize_image",
    "parse_ids",
    "radical_multiset",
    "refine_confidence",
    "segment",
    "serialize_ids",
    "token_levenshtein",
]
