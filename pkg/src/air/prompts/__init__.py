"""Prompt construction: grammar expansion, attention-weight syntax, rewriting."""

from air.prompts.combinations import enumerate_combinations, render_simplistic_prompt
from air.prompts.engineer import RewriteRequest, engineer_prompt
from air.prompts.syntax import parse_prompt, serialize_prompt

__all__ = [
    "enumerate_combinations",
    "render_simplistic_prompt",
    "parse_prompt",
    "serialize_prompt",
    "RewriteRequest",
    "engineer_prompt",
]
