"""Attention-weight prompt syntax.

A prompt is a comma-separated list of terms. A term written `(body:1.4)`
carries attention weight 1.4 (140%); any other segment is a plain term with
weight 1.0. Parentheses never nest: the syntax is flat by design.

`parse_prompt` and `serialize_prompt` are inverse on valid term lists, and
serialize(parse(text)) is idempotent on valid prompt text.
"""

from __future__ import annotations

import re

from air.core.types import MAX_TERM_WEIGHT
from air.errors import PromptParseError

_WEIGHTED = re.compile(r"^\((?P<body>.*):(?P<weight>\d+(?:\.\d{1,2})?)\)$", re.DOTALL)


def _split_top_level(text: str) -> list[tuple[str, int]]:
    """Split on commas outside parentheses; returns (segment, start offset) pairs."""
    segments: list[tuple[str, int]] = []
    depth = 0
    start = 0
    for pos, ch in enumerate(text):
        if ch == "(":
            if depth == 1:
                raise PromptParseError("nested parentheses are not allowed", pos)
            depth += 1
        elif ch == ")":
            if depth == 0:
                raise PromptParseError("unbalanced closing parenthesis", pos)
            depth -= 1
        elif ch == "," and depth == 0:
            segments.append((text[start:pos], start))
            start = pos + 1
    if depth != 0:
        raise PromptParseError("unbalanced opening parenthesis", len(text))
    segments.append((text[start:], start))
    return segments


def parse_prompt(text: str) -> list[tuple[str, float]]:
    """Parse prompt text into ordered (term, weight) pairs.

    Weights are decimals with up to two fraction digits; whitespace around
    segments is trimmed; empty segments are skipped.
    """
    terms: list[tuple[str, float]] = []
    for segment, offset in _split_top_level(text):
        stripped = segment.strip()
        if not stripped:
            continue
        match = _WEIGHTED.match(stripped)
        if match:
            weight = float(match.group("weight"))
            if weight <= 0:
                raise PromptParseError(f"weight must be positive, got {weight}", offset)
            if weight > MAX_TERM_WEIGHT:
                raise PromptParseError(
                    f"weight must be at most {MAX_TERM_WEIGHT}, got {weight}", offset
                )
            terms.append((match.group("body").strip(), weight))
        else:
            terms.append((stripped, 1.0))
    return terms


def format_weight(weight: float) -> str:
    """Two fraction digits max, trailing zeros trimmed: 1.40 -> '1.4', 2.00 -> '2'."""
    text = f"{weight:.2f}".rstrip("0").rstrip(".")
    return text or "0"


def serialize_prompt(terms: list[tuple[str, float]] | tuple[tuple[str, float], ...]) -> str:
    """Render terms back to prompt text; weight-1.0 terms are emitted bare."""
    rendered: list[str] = []
    for term, weight in terms:
        if not (0.0 < weight <= MAX_TERM_WEIGHT):
            raise PromptParseError(f"weight {weight} outside (0, {MAX_TERM_WEIGHT}]", 0)
        if weight == 1.0:
            rendered.append(term)
        else:
            rendered.append(f"({term}:{format_weight(weight)})")
    return ", ".join(rendered)
