"""Expansion of a context grammar into combinations and baseline prompts."""

from __future__ import annotations

import itertools

from air.core.types import ContextCombination, ContextGrammar


def enumerate_combinations(grammar: ContextGrammar) -> list[ContextCombination]:
    """All combinations taking one option per context, grammar order preserved.

    Enumeration order is the Cartesian product with the leftmost context
    varying slowest, i.e. lexicographic in option indices. The leftmost
    context is also the most influential one in the rendered prompt, so the
    output groups by it first.
    """
    names = [c.name for c in grammar.contexts]
    option_lists = [c.options for c in grammar.contexts]
    return [
        ContextCombination(assignments=tuple(zip(names, choice)))
        for choice in itertools.product(*option_lists)
    ]


def render_simplistic_prompt(combination: ContextCombination) -> str:
    """Baseline prompt: the chosen options comma-joined in assignment order."""
    return ", ".join(combination.options())
