"""Scheme for size-limited tests: no test ever pools more than ``rho`` items.

A constant-depth tree with rho^(1/C)-ary splits.  Level 0 tests each of the
n/rho size-rho nodes individually.  Each mid level runs N independent
balanced placements (column weight one, exact row weight), so a test at level
l holds exactly rho^(l/C) nodes of size rho^(1-l/C): exactly rho items.  The
final level runs C' balanced placements over the singletons.  The size cap is
therefore structural, not probabilistic.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

from .core import DecodeReport, OutcomeVector, RandomnessKey, is_power_of_two
from .placements import IdentityPlacement, balanced_style_placement

DEFAULT_C_DEPTH = 2
DEFAULT_N_REPS = 3
DEFAULT_C_FINAL = 3


@dataclass(frozen=True)
class RhoParams:
    rho: int
    c_depth: int
    n_reps: int
    c_final: int
    branch: int  # rho ** (1 / c_depth), a power of two


def rho_params(
    n: int,
    k: int,
    rho: int,
    c_depth: int = DEFAULT_C_DEPTH,
    n_reps: int = DEFAULT_N_REPS,
    c_final: int = DEFAULT_C_FINAL,
) -> RhoParams:
    """Validate the size cap and settle the tree depth.

    The depth must divide log2(rho) so the per-level branching stays a power
    of two; a depth that does not is lowered to the largest divisor, which
    keeps the row weights exact (the size cap is a hard constraint, unlike
    the test counts).
    """
    if not is_power_of_two(rho):
        raise ValueError(f"rho must be a power of two, got {rho} (round first)")
    if rho > n:
        raise ValueError(f"rho={rho} exceeds n={n}")
    if n_reps < 1 or c_final < 1 or c_depth < 1:
        raise ValueError("c_depth, n_reps and c_final must all be >= 1")
    if k >= 1 and rho >= n // k:
        warnings.warn(
            f"rho={rho} is not small next to n/k={n // k}; recovery targets "
            "assume tests much smaller than n/k",
            stacklevel=2,
        )
    log_rho = rho.bit_length() - 1
    if log_rho == 0:
        depth = 1
    elif log_rho % c_depth == 0:
        depth = c_depth
    else:
        depth = max(d for d in range(1, min(c_depth, log_rho) + 1) if log_rho % d == 0)
    branch = 1 << (log_rho // depth) if log_rho else 1
    return RhoParams(rho=rho, c_depth=depth, n_reps=n_reps, c_final=c_final,
                     branch=branch)


def rho_total_tests(params: RhoParams, n: int) -> int:
    per_level = n // params.rho
    return (1 + params.n_reps * (params.c_depth - 1) + params.c_final) * per_level


class RhoDesign:
    """Materialised layout: identity level 0, balanced mid and final levels."""

    def __init__(self, params: RhoParams, n: int, key: RandomnessKey,
                 hash_mode: str = "full"):
        if n % params.rho != 0:
            raise ValueError(f"rho={params.rho} must divide n={n}")
        self.params = params
        self.n = n
        self.hash_mode = hash_mode
        self.tests_per_level = n // params.rho
        self.placements: dict[tuple[int, int], object] = {
            (0, 0): IdentityPlacement(self.tests_per_level)
        }
        layout = [(0, 0, self.tests_per_level)]
        for level in range(1, params.c_depth):
            for rep in range(params.n_reps):
                self.placements[(level, rep)] = balanced_style_placement(
                    self.num_nodes(level), self.tests_per_level,
                    key.child("level", level, rep), hash_mode,
                )
                layout.append((level, rep, self.tests_per_level))
        for rep in range(params.c_final):
            self.placements[(params.c_depth, rep)] = balanced_style_placement(
                n, self.tests_per_level, key.child("final", rep), hash_mode,
            )
            layout.append((params.c_depth, rep, self.tests_per_level))
        self.layout = tuple(layout)

    def node_size(self, level: int) -> int:
        return self.params.rho // self.params.branch ** level

    def num_nodes(self, level: int) -> int:
        return self.n // self.node_size(level)

    def test_of(self, level: int, rep: int, node: int) -> int:
        return self.placements[(level, rep)].test_of(node)

    def segment_positives(self, level, rep, defectives):
        placement = self.placements[(level, rep)]
        size = self.node_size(level)
        return {placement.test_of(d // size) for d in defectives}

    def segment_members(self, level, rep):
        placement = self.placements[(level, rep)]
        size = self.node_size(level)
        tests = [set() for _ in range(self.tests_per_level)]
        for node in range(self.num_nodes(level)):
            tests[placement.test_of(node)].update(
                range(node * size, (node + 1) * size)
            )
        return tests

    def max_items_per_test(self) -> int:
        """Largest test load across the whole design (verification helper)."""
        import numpy as np

        worst = 0
        for level, rep, length in self.layout:
            table = self.placements[(level, rep)].table()
            loads = np.bincount(table, minlength=length) * self.node_size(level)
            worst = max(worst, int(loads.max()))
        return worst

    @property
    def t_total(self) -> int:
        return sum(length for _, _, length in self.layout)

    @property
    def storage_words(self) -> int:
        return sum(p.storage_cost for p in self.placements.values())


def build_rho_design(params: RhoParams, n: int, key: RandomnessKey,
                     hash_mode: str = "full") -> RhoDesign:
    return RhoDesign(params, n, key, hash_mode)


def decode_rho(design: RhoDesign, outcomes: OutcomeVector) -> tuple[tuple[int, ...], DecodeReport]:
    """Constant-depth descent: a mid-level node survives only if all N of its
    tests are positive; a singleton makes the estimate if none of its final
    tests is negative."""
    if tuple(outcomes.layout) != tuple(design.layout):
        raise ValueError("outcome layout does not match this design")
    start = time.perf_counter_ns()
    params = design.params
    branch = params.branch
    seen: set[tuple[int, int, int]] = set()  # distinct outcome cells observed
    visited = 0
    pd_peak = 0

    survivors = []
    for node in range(design.tests_per_level):
        seen.add((0, 0, node))
        visited += 1
        if outcomes.get(0, 0, node):
            survivors.append(node)
    pd_peak = max(pd_peak, len(survivors))

    pd = [c for node in survivors for c in range(node * branch, node * branch + branch)]
    for level in range(1, params.c_depth):
        pd_peak = max(pd_peak, len(pd))
        survivors = []
        for node in pd:
            visited += 1
            alive = True
            for rep in range(params.n_reps):
                test = design.test_of(level, rep, node)
                seen.add((level, rep, test))
                if not outcomes.get(level, rep, test):
                    alive = False
                    break
            if alive:
                survivors.append(node)
        pd = [c for node in survivors
              for c in range(node * branch, node * branch + branch)]

    pd_peak = max(pd_peak, len(pd))
    estimate = []
    for item in pd:
        visited += 1
        clean = True
        for rep in range(params.c_final):
            test = design.test_of(params.c_depth, rep, item)
            seen.add((params.c_depth, rep, test))
            if not outcomes.get(params.c_depth, rep, test):
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
