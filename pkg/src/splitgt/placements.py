"""Node-to-test placement primitives shared by all tree schemes.

Four backings are provided:

  - explicit table: every node's test stored, one word per node;
  - polynomial hash: degree-d polynomial over a prime field, reduced mod the
    sequence length -- d-wise independent, d + O(1) words of storage;
  - balanced table: a keyed random permutation chunked into equal blocks,
    giving exact row weight and column weight one;
  - truncated permutation: a keyed Feistel bijection on the node ids with the
    low bits dropped -- same exact weights as the balanced table at O(1)
    storage.

Every backing exposes ``test_of(node)``, ``table()`` (materialised mapping,
for verification at small sizes), and ``storage_cost`` in machine words.
"""

from __future__ import annotations

import numpy as np

from .core import RandomnessKey, _splitmix64, is_power_of_two

HASH_MODES = ("full", "kwise", "pairwise", "permutation")

_MASK64 = (1 << 64) - 1


def smallest_prime_at_least(x: int) -> int:
    if x <= 2:
        return 2
    candidate = x if x % 2 else x + 1
    while True:
        d = 3
        is_prime = candidate % 2 != 0
        while is_prime and d * d <= candidate:
            if candidate % d == 0:
                is_prime = False
            d += 2
        if is_prime:
            return candidate
        candidate += 2


class IdentityPlacement:
    """One node per test, in order.  Used for the individual-testing levels."""

    def __init__(self, num_nodes: int):
        self.num_nodes = num_nodes
        self.t_len = num_nodes
        self.storage_cost = 1

    def test_of(self, node: int) -> int:
        return node

    def table(self) -> np.ndarray:
        return np.arange(self.num_nodes, dtype=np.int64)


class ExplicitTable:
    """Fully random placement with the whole node->test array retained."""

    def __init__(self, num_nodes: int, t_len: int, assignments: np.ndarray):
        self.num_nodes = num_nodes
        self.t_len = t_len
        self._table = assignments
        self.storage_cost = num_nodes

    def test_of(self, node: int) -> int:
        return int(self._table[node])

    def table(self) -> np.ndarray:
        return self._table


class PolynomialHash:
    """Degree-d polynomial over a prime field, reduced mod t_len.

    d coefficients give d-wise independence over the field; the final modular
    reduction adds a bias of at most t_len/prime per bucket, which is
    negligible for the primes used here (>= num_nodes).
    """

    def __init__(self, num_nodes: int, t_len: int, degree: int, key: RandomnessKey):
        if degree < 2:
            raise ValueError(f"independence degree must be >= 2, got {degree}")
        if t_len < 1:
            raise ValueError("t_len must be >= 1")
        self.num_nodes = num_nodes
        self.t_len = t_len
        self.degree = degree
        self.prime = smallest_prime_at_least(max(num_nodes, t_len, 2))
        rng = key.generator()
        self.coeffs = tuple(int(c) for c in rng.integers(0, self.prime, size=degree))
        self.storage_cost = degree + 2

    def test_of(self, node: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * node + c) % self.prime
        return acc % self.t_len

    def table(self) -> np.ndarray:
        x = np.arange(self.num_nodes, dtype=np.int64)
        acc = np.zeros(self.num_nodes, dtype=np.int64)
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.prime
        return acc % self.t_len


class BalancedTable:
    """Uniformly random placement with exact row weight and column weight one.

    Realised by a keyed permutation of the nodes chunked into consecutive
    blocks of row_weight; the full position array is retained.
    """

    def __init__(self, num_nodes: int, t_len: int, key: RandomnessKey):
        if num_nodes % t_len != 0:
            raise ValueError(f"t_len={t_len} must divide num_nodes={num_nodes}")
        self.num_nodes = num_nodes
        self.t_len = t_len
        self.row_weight = num_nodes // t_len
        order = key.generator().permutation(num_nodes)
        positions = np.empty(num_nodes, dtype=np.int64)
        positions[order] = np.arange(num_nodes, dtype=np.int64)
        self._positions = positions
        self.storage_cost = num_nodes

    def test_of(self, node: int) -> int:
        return int(self._positions[node]) // self.row_weight

    def table(self) -> np.ndarray:
        return self._positions // self.row_weight


class TruncatedPermutation:
    """Keyed Feistel bijection on [0, num_nodes) with the low bits dropped.

    Requires power-of-two sizes.  The Feistel network runs on an even bit
    width and cycle-walks back into range when the node width is odd, so the
    map stays a bijection and the row/column weights are exact.  Storage is
    the four round keys.
    """

    ROUNDS = 4

    def __init__(self, num_nodes: int, t_len: int, key: RandomnessKey):
        if not (is_power_of_two(num_nodes) and is_power_of_two(t_len)):
            raise ValueError("num_nodes and t_len must be powers of two")
        if t_len > num_nodes:
            raise ValueError(f"t_len={t_len} exceeds num_nodes={num_nodes}")
        self.num_nodes = num_nodes
        self.t_len = t_len
        self.row_weight = num_nodes // t_len
        self._shift = (num_nodes // t_len).bit_length() - 1
        bits = num_nodes.bit_length() - 1
        self._width = bits + (bits & 1)
        self._half = self._width // 2
        self._half_mask = (1 << self._half) - 1
        rng = key.generator()
        self._round_keys = tuple(int(v) for v in rng.integers(0, 1 << 63, size=self.ROUNDS))
        self.storage_cost = self.ROUNDS + 2

    def _permute(self, x: int) -> int:
        if self.num_nodes == 1:
            return 0
        while True:
            left, right = x >> self._half, x & self._half_mask
            for rk in self._round_keys:
                left, right = right, left ^ (_splitmix64(right ^ rk) & self._half_mask)
            x = (left << self._half) | right
            if x < self.num_nodes:  # cycle-walk only when the width was odd
                return x

    def test_of(self, node: int) -> int:
        return self._permute(node) >> self._shift

    def table(self) -> np.ndarray:
        return np.array([self.test_of(j) for j in range(self.num_nodes)], dtype=np.int64)


def place_uniform(num_nodes: int, t_len: int, key: RandomnessKey) -> ExplicitTable:
    """Each node's test i.i.d. uniform on [0, t_len), stored explicitly."""
    if t_len < 1:
        raise ValueError("t_len must be >= 1")
    assignments = key.generator().integers(0, t_len, size=num_nodes, dtype=np.int64)
    return ExplicitTable(num_nodes, t_len, assignments)


def place_hashed(num_nodes: int, t_len: int, independence_degree: int,
                 key: RandomnessKey) -> PolynomialHash:
    return PolynomialHash(num_nodes, t_len, independence_degree, key)


def place_balanced(num_nodes: int, t_len: int, key: RandomnessKey) -> BalancedTable:
    return BalancedTable(num_nodes, t_len, key)


def place_truncated_permutation(num_nodes: int, t_len: int,
                                key: RandomnessKey) -> TruncatedPermutation:
    return TruncatedPermutation(num_nodes, t_len, key)


def uniform_style_placement(num_nodes: int, t_len: int, key: RandomnessKey,
                            hash_mode: str, kwise_degree: int = 2):
    """Placement for the independently-placed levels, per the hash-mode switch.

    ``full`` keeps the explicit table; ``kwise`` uses a polynomial hash of the
    supplied degree; ``pairwise`` forces degree two.  The truncated
    permutation is balanced rather than i.i.d., so it is rejected here.
    """
    if hash_mode == "full":
        return place_uniform(num_nodes, t_len, key)
    if hash_mode == "kwise":
        return place_hashed(num_nodes, t_len, max(2, kwise_degree), key)
    if hash_mode == "pairwise":
        return place_hashed(num_nodes, t_len, 2, key)
    if hash_mode == "permutation":
        raise ValueError(
            "permutation backing is balanced, not i.i.d.; use kwise or pairwise here"
        )
    raise ValueError(f"unknown hash mode {hash_mode!r}; expected one of {HASH_MODES}")


def balanced_style_placement(num_nodes: int, t_len: int, key: RandomnessKey,
                             hash_mode: str):
    """Balanced placement per the hash-mode switch.

    Only the truncated permutation preserves exact row/column weights at O(1)
    storage, so every low-storage mode maps to it.
    """
    if hash_mode == "full":
        return place_balanced(num_nodes, t_len, key)
    if hash_mode in ("kwise", "pairwise", "permutation"):
        return place_truncated_permutation(num_nodes, t_len, key)
    raise ValueError(f"unknown hash mode {hash_mode!r}; expected one of {HASH_MODES}")
