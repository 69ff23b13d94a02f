"""Reference decoders and exhaustive oracles.

The flat design here is structure-free: an explicit list of member sets.  It
backs the classic one-shot decoders (COMP and its noise-tolerant thresholded
variant) and the brute-force oracles used to cross-check the tree decoders on
tiny instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .core import OutcomeVector, RandomnessKey

ORACLE_MAX_N = 20
ORACLE_MAX_K = 4

# Committed default for the thresholded decoder, from a grid search at
# (n=2**10, k=4, p=0.05) over the constant-column-weight benchmark design.
DEFAULT_NCOMP_THRESHOLD = 0.15


@dataclass(frozen=True)
class FlatDesign:
    n: int
    tests: tuple[frozenset, ...]

    def __post_init__(self):
        for i, test in enumerate(self.tests):
            for item in test:
                if not 0 <= item < self.n:
                    raise ValueError(f"test {i} contains out-of-range item {item}")

    @property
    def layout(self):
        return ((0, 0, len(self.tests)),)

    @property
    def t_total(self) -> int:
        return len(self.tests)

    def segment_positives(self, level, rep, defectives):
        dset = set(defectives)
        return [i for i, test in enumerate(self.tests) if test & dset]

    @property
    def storage_words(self) -> int:
        return sum(len(test) for test in self.tests)


def flatten_design(design) -> FlatDesign:
    """Explicit member sets of every test of a tree design, in layout order.

    Intended for tiny instances only; the result is quadratic in n."""
    tests = []
    for level, rep, _ in design.layout:
        tests.extend(frozenset(m) for m in design.segment_members(level, rep))
    return FlatDesign(n=design.n, tests=tuple(tests))


def build_flat_design(n: int, tests_count: int, key: RandomnessKey, k: int = 1,
                      per_item: int | None = None) -> FlatDesign:
    """Random constant-column-weight design for the COMP-style baselines.

    Each item joins the same number of distinct tests, chosen uniformly:
    ``per_item`` when given, otherwise round(T * ln2 / k), which makes about
    half the tests negative and is the classic sweet spot for one-shot
    decoding.  Constant column weight guarantees every item is covered, which
    the thresholded decoder needs.
    """
    if tests_count < 1:
        raise ValueError("tests_count must be >= 1")
    weight = (per_item if per_item is not None
              else round(tests_count * math.log(2) / max(1, k)))
    weight = min(max(1, weight), tests_count)
    rng = key.generator()
    members = [set() for _ in range(tests_count)]
    for item in range(n):
        for t in rng.choice(tests_count, size=weight, replace=False):
            members[int(t)].add(item)
    return FlatDesign(n=n, tests=tuple(frozenset(m) for m in members))


def default_baseline_tests(n: int, k: int) -> int:
    """Committed default test budget for the flat baselines: 2e * k * ln(n).

    The factor two over the asymptotic threshold keeps the expected number of
    unresolved items well below one at the sizes benchmarked here.
    """
    return math.ceil(2 * math.e * k * math.log(n))


def decode_comp(design: FlatDesign, outcomes: OutcomeVector) -> tuple[int, ...]:
    """Anything seen in a negative test is clean; everything else is flagged."""
    bits = outcomes.bits
    if len(bits) != len(design.tests):
        raise ValueError("one outcome per test required")
    cleared = set()
    for i, test in enumerate(design.tests):
        if not bits[i]:
            cleared |= test
    return tuple(sorted(set(range(design.n)) - cleared))


def decode_ncomp(design: FlatDesign, outcomes: OutcomeVector,
                 threshold: float) -> tuple[int, ...]:
    """Thresholded variant: an item is flagged iff the fraction of its tests
    that came back negative is at most ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    bits = outcomes.bits
    if len(bits) != len(design.tests):
        raise ValueError("one outcome per test required")
    appearances = [0] * design.n
    negatives = [0] * design.n
    for i, test in enumerate(design.tests):
        neg = not bits[i]
        for item in test:
            appearances[item] += 1
            if neg:
                negatives[item] += 1
    flagged = []
    for item in range(design.n):
        if appearances[item] == 0:
            raise ValueError(f"item {item} appears in no test")
        if negatives[item] <= threshold * appearances[item]:
            flagged.append(item)
    return tuple(flagged)


def _item_masks(design: FlatDesign) -> list[int]:
    masks = [0] * design.n
    for i, test in enumerate(design.tests):
        bit = 1 << i
        for item in test:
            masks[item] |= bit
    return masks


def _outcome_mask(outcomes: OutcomeVector) -> int:
    mask = 0
    for i, b in enumerate(outcomes.bits):
        if b:
            mask |= 1 << i
    return mask


def _check_budget(design: FlatDesign, k: int):
    if design.n > ORACLE_MAX_N or k > ORACLE_MAX_K:
        raise ValueError(
            f"oracle budget is n <= {ORACLE_MAX_N}, k <= {ORACLE_MAX_K}; "
            f"got n={design.n}, k={k}"
        )


def _candidates(n: int, k: int):
    for size in range(k + 1):
        yield from combinations(range(n), size)


def oracle_consistent_sets(design: FlatDesign, outcomes: OutcomeVector,
                           k: int) -> list[tuple[int, ...]]:
    """Every defective set of size <= k whose noiseless outcomes match
    exactly.  Exhaustive; guarded by a hard size budget."""
    _check_budget(design, k)
    masks = _item_masks(design)
    want = _outcome_mask(outcomes)
    out = []
    for cand in _candidates(design.n, k):
        pattern = 0
        for item in cand:
            pattern |= masks[item]
        if pattern == want:
            out.append(cand)
    return out


def ml_minimizers(design: FlatDesign, outcomes: OutcomeVector,
                  k: int) -> list[tuple[int, ...]]:
    """All size-<=k sets at minimum Hamming distance from the outcomes."""
    _check_budget(design, k)
    masks = _item_masks(design)
    want = _outcome_mask(outcomes)
    best = None
    best_sets: list[tuple[int, ...]] = []
    for cand in _candidates(design.n, k):
        pattern = 0
        for item in cand:
            pattern |= masks[item]
        dist = bin(pattern ^ want).count("1")
        if best is None or dist < best:
            best = dist
            best_sets = [cand]
        elif dist == best:
            best_sets.append(cand)
    return best_sets


def oracle_ml(design: FlatDesign, outcomes: OutcomeVector, k: int,
              p: float) -> tuple[int, ...]:
    """Maximum-likelihood set under symmetric noise below one half: the
    fewest-disagreements candidate, ties broken lexicographically."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"p must lie in (0, 0.5), got {p}")
    return min(ml_minimizers(design, outcomes, k))
