"""Scheme for finitely divisible items: each item joins at most ``gamma`` tests.

The design is a tree of height ``gamma_prime <= gamma``.  Level 1 tests each
of the n/M size-M nodes individually; levels 2..gamma_prime-1 place each node
into one uniformly chosen test of a per-level sequence; the final level runs
``gamma - gamma_prime + 1`` independent sequences over the singletons.  An
item is therefore pooled once per tree level plus once per final sequence:
exactly the gamma budget.

The decoder walks the tree breadth-first, only ever reading the tests of
nodes that are still possibly defective, which is what makes its cost scale
with k rather than with the number of tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .core import DecodeReport, OutcomeVector, RandomnessKey, is_power_of_two
from .placements import IdentityPlacement, uniform_style_placement

DEFAULT_C_CONST = 8.0  # smallest integer above e**2, the analysis floor
MIN_C_CONST = math.e ** 2


def default_beta(n: int) -> float:
    """Committed default target error term: one over (log2 n) squared."""
    return 1.0 / (math.log2(n) ** 2)


def theta_of(n: int, k: int) -> float:
    """Density exponent of the defective bound: log(k) / log(n)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return math.log(k) / math.log(n)


def _objective(gamma: int, gamma_prime: int, theta: float) -> float:
    tail = gamma - gamma_prime + 1
    return max(
        (1.0 - theta) / gamma_prime,
        theta / tail + (1.0 - theta) / (gamma_prime * tail),
    )


def select_gamma_prime(gamma: int, theta: float) -> int:
    """Tree height minimising the test-count exponent at density theta.

    The exponent is convex in the height, so only the floor and ceiling of
    the unconstrained optimum (1 - theta) * gamma need to be compared; below
    the valid range the answer is pinned to 3.  Ties go to the smaller height.
    """
    if gamma < 3:
        raise ValueError(f"gamma must be at least 3, got {gamma}")
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    target = (1.0 - theta) * gamma
    if target < 3:
        return 3
    candidates = sorted({int(math.floor(target)), int(math.ceil(target))})
    return min(candidates, key=lambda gp: (_objective(gamma, gp, theta), gp))


@dataclass(frozen=True)
class GammaParams:
    gamma: int
    gamma_prime: int
    branching: int       # per-level fan-out b, a power of two
    level1_size: int     # M = b ** (gamma_prime - 1)
    t_len: int
    t_len_prime: int
    t_len_dprime: int
    c_const: float
    beta_n: float

    @property
    def final_reps(self) -> int:
        return self.gamma - self.gamma_prime + 1


def gamma_params(
    n: int,
    k: int,
    gamma: int,
    beta_n: float | None = None,
    c_const: float = DEFAULT_C_CONST,
    gamma_prime: int | None = None,
) -> GammaParams:
    """Pick all sequence lengths for a rounded (n, k) instance.

    The branching factor is rounded up to a power of two so node boundaries
    stay aligned; the final-level sequence length then absorbs the slack.
    """
    if not (is_power_of_two(n) and is_power_of_two(k) and k < n):
        raise ValueError("expected power-of-two n and k with k < n (round first)")
    if gamma < 3:
        raise ValueError(f"gamma must be at least 3, got {gamma}")
    if beta_n is None:
        beta_n = default_beta(n)
    if not 0.0 < beta_n <= 1.0:
        raise ValueError(f"beta_n must lie in (0, 1], got {beta_n}")
    if c_const < MIN_C_CONST:
        raise ValueError(f"c_const must be at least e^2 ~ {MIN_C_CONST:.3f}, got {c_const}")
    if gamma_prime is None:
        gamma_prime = select_gamma_prime(gamma, theta_of(n, k))
    if not 3 <= gamma_prime <= gamma:
        raise ValueError(f"gamma_prime must lie in [3, {gamma}], got {gamma_prime}")

    b = 1 << math.ceil(math.log2(n // k) / gamma_prime)
    m = b ** (gamma_prime - 1)
    if m > n:
        raise ValueError(
            f"level-1 node size {m} exceeds n={n}; lower gamma_prime or raise k"
        )
    tail = gamma - gamma_prime + 1
    t_len = math.ceil(c_const * k * b)
    t_len_prime = gamma_prime * k * b
    t_len_dprime = math.ceil(
        k * (k / beta_n) ** (1.0 / tail) * (n / k) ** (1.0 / (gamma_prime * tail))
    )
    return GammaParams(
        gamma=gamma,
        gamma_prime=gamma_prime,
        branching=b,
        level1_size=m,
        t_len=t_len,
        t_len_prime=t_len_prime,
        t_len_dprime=t_len_dprime,
        c_const=c_const,
        beta_n=beta_n,
    )


def gamma_total_tests(params: GammaParams, n: int) -> int:
    """Closed-form segment sum for the whole design."""
    mid = (params.gamma_prime - 3) * params.t_len
    return (
        n // params.level1_size
        + mid
        + params.t_len_prime
        + params.final_reps * params.t_len_dprime
    )


class GammaDesign:
    """Materialised test layout for one key: placements for every level."""

    def __init__(self, params: GammaParams, n: int, key: RandomnessKey,
                 hash_mode: str = "full"):
        self.params = params
        self.n = n
        self.hash_mode = hash_mode
        gp = params.gamma_prime
        self.level1_count = n // params.level1_size
        self.placements: dict[tuple[int, int], object] = {
            (1, 0): IdentityPlacement(self.level1_count)
        }
        layout = [(1, 0, self.level1_count)]
        for level in range(2, gp - 1):
            self.placements[(level, 0)] = uniform_style_placement(
                self.num_nodes(level), params.t_len, key.child("level", level),
                hash_mode, kwise_degree=params.gamma,
            )
            layout.append((level, 0, params.t_len))
        self.placements[(gp - 1, 0)] = uniform_style_placement(
            self.num_nodes(gp - 1), params.t_len_prime, key.child("level", gp - 1),
            hash_mode, kwise_degree=params.gamma,
        )
        layout.append((gp - 1, 0, params.t_len_prime))
        for rep in range(params.final_reps):
            self.placements[(gp, rep)] = uniform_style_placement(
                n, params.t_len_dprime, key.child("final", rep),
                hash_mode, kwise_degree=params.gamma,
            )
            layout.append((gp, rep, params.t_len_dprime))
        self.layout = tuple(layout)

    def node_size(self, level: int) -> int:
        return self.params.level1_size // self.params.branching ** (level - 1)

    def num_nodes(self, level: int) -> int:
        return self.n // self.node_size(level)

    def node_of(self, item: int, level: int) -> int:
        return item // self.node_size(level)

    def test_of(self, level: int, rep: int, node: int) -> int:
        return self.placements[(level, rep)].test_of(node)

    def segment_positives(self, level, rep, defectives):
        placement = self.placements[(level, rep)]
        size = self.node_size(level)
        return {placement.test_of(d // size) for d in defectives}

    def segment_members(self, level, rep):
        """Explicit member sets of every test in a segment (small n only)."""
        placement = self.placements[(level, rep)]
        _, _, length = next(s for s in self.layout if s[:2] == (level, rep))
        size = self.node_size(level)
        tests = [set() for _ in range(length)]
        for node in range(self.num_nodes(level)):
            tests[placement.test_of(node)].update(
                range(node * size, (node + 1) * size)
            )
        return tests

    def memberships_per_item(self) -> list[int]:
        """Number of tests each item participates in, counted from the
        materialised test member sets (exhaustive; small n only)."""
        counts = [0] * self.n
        for level, rep, _ in self.layout:
            for members in self.segment_members(level, rep):
                for item in members:
                    counts[item] += 1
        return counts

    @property
    def t_total(self) -> int:
        return sum(length for _, _, length in self.layout)

    @property
    def storage_words(self) -> int:
        return sum(p.storage_cost for p in self.placements.values())


def build_gamma_design(params: GammaParams, n: int, key: RandomnessKey,
                       hash_mode: str = "full") -> GammaDesign:
    return GammaDesign(params, n, key, hash_mode)


def decode_gamma(design: GammaDesign, outcomes: OutcomeVector) -> tuple[tuple[int, ...], DecodeReport]:
    """Walk the tree top-down, reading only tests of surviving nodes.

    A level-1 node survives if its individual test is positive; a mid-level
    node survives if its single test is positive; a singleton makes the
    estimate if none of its final-level tests is negative.
    """
    if tuple(outcomes.layout) != tuple(design.layout):
        raise ValueError("outcome layout does not match this design")
    start = time.perf_counter_ns()
    params = design.params
    gp = params.gamma_prime
    b = params.branching
    seen: set[tuple[int, int, int]] = set()  # distinct outcome cells observed
    visited = 0
    pd_peak = 0

    survivors = []
    for node in range(design.level1_count):
        seen.add((1, 0, node))
        visited += 1
        if outcomes.get(1, 0, node):
            survivors.append(node)
    pd_peak = max(pd_peak, len(survivors))

    pd = [c for node in survivors for c in range(node * b, node * b + b)]
    for level in range(2, gp):
        pd_peak = max(pd_peak, len(pd))
        survivors = []
        for node in pd:
            visited += 1
            test = design.test_of(level, 0, node)
            seen.add((level, 0, test))
            if outcomes.get(level, 0, test):
                survivors.append(node)
        pd = [c for node in survivors for c in range(node * b, node * b + b)]

    pd_peak = max(pd_peak, len(pd))
    estimate = []
    for item in pd:
        visited += 1
        clean = True
        for rep in range(params.final_reps):
            test = design.test_of(gp, rep, item)
            seen.add((gp, rep, test))
            if not outcomes.get(gp, rep, test):
                clean = False
                break
        if clean:
            estimate.append(item)

    wall = time.perf_counter_ns() - start
    storage = design.storage_words + pd_peak + (outcomes.t_total + 63) // 64
    report = DecodeReport(
        estimate=tuple(sorted(estimate)),
        outcomes_read=len(seen),
        nodes_visited=visited,
        wall_nanos=wall,
        storage_words=storage,
    )
    return report.estimate, report
