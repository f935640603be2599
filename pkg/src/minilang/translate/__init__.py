"""Isar-S frontend: parser, normalization pipeline, emitter, refinement."""

from .isar import IsarParseError, IsarScript, parse_isar
from .passes import PASSES, Untranslatable, normalize
from .emit import to_minilang
from .refine import apply_count, refine
from .corpus import PassReport, translate_corpus, translate_proof

__all__ = [
    "IsarParseError", "IsarScript", "PASSES", "PassReport", "Untranslatable",
    "apply_count", "normalize", "parse_isar", "refine", "to_minilang",
    "translate_corpus", "translate_proof",
]
