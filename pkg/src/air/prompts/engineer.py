"""Rewriter-backed prompt engineering with validation and a deterministic fallback.

The rewriter backend (a language model in production, a fixed template in
mock mode) turns context keywords into a descriptive prompt. Its output is
untrusted: rewritten prompts drift, dropping or inventing keywords, so every
candidate is validated and the operation falls back to the simplistic prompt
rather than ever emitting a label-inconsistent one.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from air.core.canonical import canonical_json
from air.core.types import ContextCombination, PromptRecord, PromptSource
from air.errors import PromptParseError, ValidationError
from air.prompts.combinations import render_simplistic_prompt
from air.prompts.syntax import parse_prompt

QUALITY_SUFFIX_TERMS: tuple[tuple[str, float], ...] = (
    ("4K UHD image", 1.0),
    ("Photorealistic", 1.0),
)

DEFAULT_TEMPLATE_ID = "air-v1"


@dataclass(frozen=True)
class RewriteTemplate:
    """Instruction plus few-shot pairs sent to the rewriter backend."""

    template_id: str
    instruction: str
    few_shots: tuple[tuple[str, str], ...]


_AIR_V1 = RewriteTemplate(
    template_id=DEFAULT_TEMPLATE_ID,
    instruction=(
        "Rewrite the given comma-separated context keywords into one vivid,"
        " photographic text-to-image prompt. Keep every keyword verbatim"
        " somewhere in the prompt. Emphasize important fragments with the"
        " attention syntax (fragment:w), where w is a decimal weight such as"
        " 1.4 meaning 140% attention. End with quality tags such as"
        " '4K UHD image, Photorealistic'."
    ),
    few_shots=(
        (
            "small fire and smoke, tropical forest, drone's view, morning",
            "A captivating drone's view of a tropical forest at dawn, with a"
            " medium-intensity fire burning amidst the lush greenery,"
            " (dramatic:1.4), (serene:1.2), (vivid:1.3),"
            " (medium-intensity fire:1.4), 4K UHD image, Photorealistic,"
            " Intricate details",
        ),
        (
            "small fire and smoke, boreal forest, drone's view, morning",
            "A mesmerizing aerial perspective of a boreal forest at sunrise,"
            " featuring a moderately intense fire blazing amidst the vibrant"
            " foliage, (captivating:1.4), (serense:1.3), 4K UHD image,"
            " Cinematic, Realistic",
        ),
    ),
)

_TEMPLATES: dict[str, RewriteTemplate] = {_AIR_V1.template_id: _AIR_V1}


def get_template(template_id: str) -> RewriteTemplate:
    try:
        return _TEMPLATES[template_id]
    except KeyError:
        raise ValidationError(f"unknown instruction template: {template_id!r}") from None


@dataclass(frozen=True)
class RewriteRequest:
    combination: ContextCombination
    instruction_template_id: str = DEFAULT_TEMPLATE_ID
    max_terms: int = 24

    def __post_init__(self) -> None:
        get_template(self.instruction_template_id)
        if self.max_terms < 1:
            raise ValidationError(f"max_terms must be positive, got {self.max_terms}")


def prompt_id_for(source: PromptSource, class_label: str, text: str, extra: str = "") -> str:
    digest = hashlib.sha256(
        f"{source.value}\x1f{class_label}\x1f{text}\x1f{extra}".encode("utf-8")
    ).hexdigest()
    return f"p-{digest[:12]}"


def _validate_candidate(
    text: str, combination: ContextCombination, max_terms: int
) -> list[tuple[str, float]] | None:
    """Terms if the candidate satisfies the contract, else None."""
    try:
        terms = parse_prompt(text)
    except PromptParseError:
        return None
    if not terms or len(terms) > max_terms:
        return None
    lowered = [term.lower() for term, _ in terms]
    for option in combination.options():
        needle = option.lower()
        if not any(needle in term for term in lowered):
            return None
    if not any(weight != 1.0 for _, weight in terms):
        return None
    return terms


def simplistic_prompt_record(combination: ContextCombination, with_suffix: bool = False) -> PromptRecord:
    """The keyword-join baseline prompt as a record (suffix terms optional)."""
    terms: list[tuple[str, float]] = [(opt, 1.0) for opt in combination.options()]
    if with_suffix:
        terms.extend(QUALITY_SUFFIX_TERMS)
    text = render_simplistic_prompt(combination)
    combo_key = canonical_json(combination.to_json_dict())
    return PromptRecord(
        id=prompt_id_for(PromptSource.SIMPLISTIC, combination.class_label, text, combo_key),
        terms=tuple(terms),
        source=PromptSource.SIMPLISTIC,
        class_label=combination.class_label,
        combination=combination,
    )


def engineer_prompt(request: RewriteRequest, rewriter) -> PromptRecord:
    """Rewrite a combination into a validated prompt record.

    The rewriter output must parse, keep every option keyword, and contain at
    least one attention-weighted term. One retry is allowed; after that the
    operation degrades to the simplistic prompt plus fixed quality-suffix
    terms, marked source=simplistic. Backend transport failures are raised,
    not swallowed into the fallback.
    """
    combination = request.combination
    for _ in range(2):
        candidate = rewriter.rewrite(request)
        terms = _validate_candidate(candidate, combination, request.max_terms)
        if terms is not None:
            combo_key = canonical_json(combination.to_json_dict())
            return PromptRecord(
                id=prompt_id_for(
                    PromptSource.ENGINEERED, combination.class_label, candidate, combo_key
                ),
                terms=tuple(terms),
                source=PromptSource.ENGINEERED,
                class_label=combination.class_label,
                combination=combination,
            )
    return simplistic_prompt_record(combination, with_suffix=True)
