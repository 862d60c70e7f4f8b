"""Exact combinatorics of orderings.

A permutation of length n is a sequence of the 1-based positions 1..n, each
appearing exactly once.  Inversions of pi are pairs (i, j) with i < j and
pi(i) > pi(j); the shuffle degree of a rearrangement is its inversion count
normalized by the maximum n(n-1)/2, so 0 means same order and 1 means full
reversal.  Lehmer codes (inversion sequences) encode per-position counts and
decode to a unique permutation, which is how rearrangements with an exact
target inversion count are generated.
"""

from __future__ import annotations

import math
import random
import unicodedata
from enum import Enum
from fractions import Fraction
from typing import Any, Sequence, TypeVar

from .errors import AlignEvalError

T = TypeVar("T")


class NotAPermutation(AlignEvalError):
    """Two item lists are not rearrangements of each other, or a mapping is
    not a bijection on 1..n."""


class InvalidLehmerCode(AlignEvalError):
    """An inversion sequence violates the per-position bound 0 <= e_i <= n-i."""


class TargetOutOfRange(AlignEvalError):
    """A requested inversion count is outside [0, n(n-1)/2]."""


class EmptyBand(AlignEvalError):
    """A difficulty band contains no integer inversion count for this n."""


class Difficulty(str, Enum):
    """Difficulty of a montage lie, defined by the shuffle-degree band its
    inversion count is sampled from.  Higher shuffle degree means the
    reordering is more blatant, hence easier to detect."""

    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"
    EXTREME = "extreme"

    @property
    def band(self) -> tuple[Fraction, Fraction]:
        return _BANDS[self]


# Band edges are exact rationals: float edges times n(n-1)/2 can land on the
# wrong side of an integer (e.g. 0.55 * 780 rounds up in binary floating
# point), and band membership must be exact.
_BANDS: dict[Difficulty, tuple[Fraction, Fraction]] = {
    Difficulty.EASY: (Fraction(80, 100), Fraction(90, 100)),
    Difficulty.MEDIUM: (Fraction(55, 100), Fraction(65, 100)),
    Difficulty.HARD: (Fraction(30, 100), Fraction(40, 100)),
    Difficulty.EXTREME: (Fraction(5, 100), Fraction(15, 100)),
}

DIFFICULTIES: tuple[Difficulty, ...] = (
    Difficulty.EASY,
    Difficulty.MEDIUM,
    Difficulty.HARD,
    Difficulty.EXTREME,
)


def canonical_key(item: Any) -> Any:
    """Identity used to match items across reorderings: strings compare by
    NFC-normalized, whitespace-collapsed form; anything else by itself."""
    if isinstance(item, str):
        return " ".join(unicodedata.normalize("NFC", item).split())
    return item


def validate_permutation(mapping: Sequence[int]) -> None:
    """Raise NotAPermutation unless mapping is a bijection on {1..n}."""
    n = len(mapping)
    seen = [False] * n
    for value in mapping:
        if not isinstance(value, int) or not 1 <= value <= n or seen[value - 1]:
            raise NotAPermutation(f"not a bijection on 1..{n}: {list(mapping)!r}")
        seen[value - 1] = True


def max_inversions(n: int) -> int:
    """Maximum possible inversion count for a length-n ordering: n(n-1)/2."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * (n - 1) // 2


def inversion_count(perm: Sequence[int]) -> int:
    """Number of pairs (i, j), i < j, with perm[i] > perm[j].

    Merge-based O(n log n); the quadratic pair-counting definition is kept as
    an oracle in the test suite.
    """
    validate_permutation(perm)
    _, inversions = _merge_count(list(perm))
    return inversions


def _merge_count(values: list[int]) -> tuple[list[int], int]:
    if len(values) < 2:
        return values, 0
    mid = len(values) // 2
    left, left_inv = _merge_count(values[:mid])
    right, right_inv = _merge_count(values[mid:])
    merged: list[int] = []
    inv = left_inv + right_inv
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            # right[j] precedes every remaining left element it should follow
            merged.append(right[j])
            j += 1
            inv += len(left) - i
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def permutation_between(original: Sequence[T], shuffled: Sequence[T]) -> list[int]:
    """The unique pi (1-based) with shuffled[i] = original[pi(i) - 1].

    Items are compared via canonical_key; original must contain no duplicates
    under that identity.
    """
    if len(original) != len(shuffled):
        raise NotAPermutation(
            f"length mismatch: {len(original)} original vs {len(shuffled)} shuffled"
        )
    positions: dict[Any, int] = {}
    for index, item in enumerate(original):
        key = canonical_key(item)
        if key in positions:
            raise NotAPermutation(f"duplicate item in original: {item!r}")
        positions[key] = index + 1
    mapping: list[int] = []
    used = [False] * len(original)
    for item in shuffled:
        position = positions.get(canonical_key(item))
        if position is None:
            raise NotAPermutation(f"item not present in original: {item!r}")
        if used[position - 1]:
            raise NotAPermutation(f"item duplicated in shuffled: {item!r}")
        used[position - 1] = True
        mapping.append(position)
    return mapping


def shuffle_degree(original: Sequence[T], shuffled: Sequence[T]) -> float:
    """Inversion count of the permutation between the two orderings, divided
    by the maximum n(n-1)/2.  Defined as 0 for n <= 1 (a single item cannot
    be out of order)."""
    mapping = permutation_between(original, shuffled)
    if len(mapping) <= 1:
        return 0.0
    return inversion_count(mapping) / max_inversions(len(mapping))


def lehmer_decode(code: Sequence[int], items: Sequence[T]) -> list[T]:
    """Decode an inversion sequence: position i takes the (e_i + 1)-th
    smallest element still available from a sorted copy of items.  The result
    has inversion count sum(code) relative to sorted order."""
    n = len(items)
    if len(code) != n:
        raise InvalidLehmerCode(f"code length {len(code)} != item count {n}")
    for i, entry in enumerate(code):
        if not 0 <= entry <= n - 1 - i:
            raise InvalidLehmerCode(
                f"entry {entry} at position {i + 1} outside [0, {n - 1 - i}]"
            )
    remaining = sorted(items)  # type: ignore[type-var]
    return [remaining.pop(entry) for entry in code]


def random_shuffle_with_inversions(
    items: Sequence[T], target: int, rng: random.Random
) -> list[T]:
    """Rearrange items (treated as the reference order) so the result has
    exactly `target` inversions relative to them.

    Starts from the maximal inversion sequence (full reversal) and randomly
    decrements entries until the total equals the target, then decodes.  Each
    decrement picks uniformly among positions that are still positive, which
    matches rejection sampling over all positions but always terminates.
    """
    n = len(items)
    ceiling = max_inversions(n) if n else 0
    if not 0 <= target <= ceiling:
        raise TargetOutOfRange(f"target {target} outside [0, {ceiling}] for n={n}")
    code = [n - 1 - i for i in range(n)]
    surplus = ceiling - target
    while surplus > 0:
        positive = [i for i, entry in enumerate(code) if entry > 0]
        code[rng.choice(positive)] -= 1
        surplus -= 1
    order = lehmer_decode(code, range(n))
    return [items[i] for i in order]


def sample_inversion_target(
    n: int, level: Difficulty, rng: random.Random
) -> int:
    """Draw an inversion count uniformly from the integers whose shuffle
    degree falls in the level's band.  Raises EmptyBand when the band holds
    no integer for this n (cannot happen for n >= 5, where band width times
    n(n-1)/2 is at least 1)."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    low, high = level.band
    total = max_inversions(n)
    lowest = math.ceil(low * total)
    highest = math.floor(high * total)
    if lowest > highest:
        raise EmptyBand(
            f"no integer inversion count in [{float(low)}, {float(high)}] for n={n}"
        )
    return rng.randint(lowest, highest)
