"""Structural similarity of flattened plans via token-level edit distance."""

from __future__ import annotations

from typing import Sequence

#: Plans within this many edit steps are considered structurally similar.
DEFAULT_THRESHOLD = 1


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance over whole operation tokens.

    One token counts as one symbol; edits are insertions, deletions, and
    substitutions, computed with the standard dynamic-programming table
    (two rolling rows).
    """
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            current[j] = min(
                previous[j - 1] + cost,  # substitute
                previous[j] + 1,         # delete from a
                current[j - 1] + 1,      # insert into a
            )
        previous = current
    return previous[len(b)]


def structurally_similar(
    a: Sequence[str], b: Sequence[str], threshold: int = DEFAULT_THRESHOLD
) -> bool:
    """True iff the sequences can be edited into each other within threshold steps.

    Reflexive and symmetric; not transitive (two plans can each sit one
    step from a middle plan yet be two steps apart from each other).
    """
    return edit_distance(a, b) <= threshold
