"""Independent oracles and record factories shared across test modules.

The oracles stay deliberately naive: quadratic pair counting, direct
definition evaluation.  They are the reference the fast implementations are
checked against, so they must never share code with them.
"""

from __future__ import annotations

import random
from typing import Sequence

from aligneval.corpus import DataInstance, InstanceMeta, SeedPair
from aligneval.permutations import DIFFICULTIES, max_inversions, sample_inversion_target

_WORDS = (
    "harbor", "signal", "ledger", "orchard", "comet", "lantern", "meadow",
    "anchor", "circuit", "parcel", "summit", "gully", "prism", "bastion",
)


def inversions_bruteforce(perm: Sequence[int]) -> int:
    """Literal pair-count definition of the inversion number."""
    return sum(
        1
        for i in range(len(perm))
        for j in range(i + 1, len(perm))
        if perm[i] > perm[j]
    )


def auc_bruteforce(positives: Sequence[float], negatives: Sequence[float]) -> float:
    """Literal Mann-Whitney definition: wins plus half-ties over all pairs."""
    half_units = 0
    for p in positives:
        for n in negatives:
            if p > n:
                half_units += 2
            elif p == n:
                half_units += 1
    return half_units / (2 * len(positives) * len(negatives))


def random_text(rng: random.Random, words: int = 6) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(words)).capitalize() + "."


def make_random_instance(rng: random.Random, instance_id: str = "") -> DataInstance:
    num_events = rng.randint(5, 12)
    total = max_inversions(num_events)
    targets = {d: sample_inversion_target(num_events, d, rng) for d in DIFFICULTIES}
    return DataInstance(
        id=instance_id or f"inst-{rng.randrange(10**9):09d}",
        source=random_text(rng, 40),
        correct=random_text(rng, 12),
        lies={d: random_text(rng, 12) for d in DIFFICULTIES},
        paraphrases={
            "correct": random_text(rng, 12),
            **{d.value: random_text(rng, 12) for d in DIFFICULTIES},
        },
        meta=InstanceMeta(
            origin=rng.choice(("booksum", "summscreen", "synthetic")),
            num_events=num_events,
            target_inversions=targets,
            achieved_shuffle_degree={d: targets[d] / total for d in DIFFICULTIES},
            generator_model="scripted",
            seed=rng.randrange(2**63),
        ),
    )


def make_seed_pair(rng: random.Random, seed_id: str = "seed-1") -> SeedPair:
    return SeedPair(
        id=seed_id,
        source=random_text(rng, 30),
        summary=random_text(rng, 10),
        origin="synthetic",
    )
