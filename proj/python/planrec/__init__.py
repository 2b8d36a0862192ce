"""Plan recognition over probabilistic partially-ordered plan libraries."""

from ._planrec import (
    Library,
    LibraryError,
    RecognitionResult,
    generate,
    parse_library,
    recognize,
    simulate,
)

__all__ = [
    "Library",
    "LibraryError",
    "RecognitionResult",
    "generate",
    "parse_library",
    "recognize",
    "simulate",
]
