"""Extended binary images and the choice of extension matrices.

An extension matrix ``A = [I_p | B]`` is stored as its list of columns, each
column being the integer ``k`` whose binary decomposition it is; column ``k``
produces the extended bit ``alpha_k = parity(x & k)`` of a symbol ``x``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._core.pykernel import SetAlgebra
from .gf import GF, columns_to_matrix, parity, vector_rank

# selection rules
DMIN = "dmin"
RANDOM = "random"

EXHAUSTIVE_LIMIT = 5000
ENUMERATION_LIMIT = 20


def nontrivial_columns(gf: GF) -> list[int]:
    """Indices k in [1, q-1] that are not powers of two."""
    return [k for k in range(1, gf.q) if k & (k - 1)]


@dataclass(frozen=True)
class ExtensionMatrix:
    """``A = [I_p | B]`` as a tuple of column integers.

    ``strict=False`` admits repeated columns (repetition of binary-image
    bits), which is only used as a baseline in experiments.
    """

    field: GF
    columns: tuple[int, ...]
    strict: bool = dc_field(default=True, compare=False)

    def __post_init__(self):
        p, q = self.field.p, self.field.q
        cols = tuple(int(c) for c in self.columns)
        object.__setattr__(self, "columns", cols)
        if cols[:p] != tuple(1 << i for i in range(p)):
            raise ValueError(f"first {p} columns must be the identity {[1 << i for i in range(p)]}, got {list(cols[:p])}")
        if any(not 1 <= c < q for c in cols):
            raise ValueError(f"columns must lie in [1, {q - 1}]")
        if self.strict and len(set(cols)) != len(cols):
            raise ValueError("columns of an extension matrix must be pairwise distinct")

    @classmethod
    def identity(cls, gf: GF) -> ExtensionMatrix:
        return cls(gf, tuple(1 << i for i in range(gf.p)))

    @classmethod
    def with_extra(cls, gf: GF, extra: Sequence[int], strict: bool = True) -> ExtensionMatrix:
        return cls(gf, tuple(1 << i for i in range(gf.p)) + tuple(extra), strict)

    @classmethod
    def parse(cls, gf: GF, text: str) -> ExtensionMatrix:
        """From the serialized form ``"1,2,4,8,15"``."""
        return cls(gf, tuple(int(c) for c in text.replace(" ", "").split(",") if c))

    def __str__(self):
        return ",".join(str(c) for c in self.columns)

    @property
    def t(self) -> int:
        return len(self.columns)

    @property
    def k_ext(self) -> int:
        return self.t - self.field.p

    @property
    def extra(self) -> tuple[int, ...]:
        return self.columns[self.field.p:]

    def as_bitmatrix(self) -> np.ndarray:
        return columns_to_matrix(self.columns, self.field.p)


@dataclass(frozen=True)
class SelectionReport:
    matrix: ExtensionMatrix
    dmin: int
    expected_eligible_at: tuple[tuple[float, float], ...]


def extended_bit(gf: GF, x: int, k: int) -> int:
    """``alpha_k`` of the symbol ``x``."""
    if not 1 <= k <= gf.q - 1:
        raise ValueError(f"k must be in [1, {gf.q - 1}], got {k}")
    gf._check(x)
    return parity(x & k)


def extend(x: int, A: ExtensionMatrix) -> np.ndarray:
    """The transmitted bits ``x A``: binary image followed by the extended bits."""
    A.field._check(x)
    return np.array([parity(x & c) for c in A.columns], dtype=np.uint8)


def dmin(A: ExtensionMatrix) -> int:
    """Smallest number of linearly dependent columns (``t + 1`` if none are).

    A minimal dependent set has all its coefficients equal to one, so it is a
    set of columns XOR-ing to zero; sizes are tried in increasing order.
    """
    cols = A.columns
    for s in range(1, len(cols) + 1):
        for combo in itertools.combinations(cols, s):
            acc = 0
            for c in combo:
                acc ^= c
            if acc == 0:
                return s
    return len(cols) + 1


@lru_cache(maxsize=4096)
def _rank_profile(p: int, columns: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """``counts[i][r]``: number of i-column subsets of rank r."""
    t = len(columns)
    alg = SetAlgebra(p, np.zeros((1 << p, 1 << p), np.uint8), np.zeros(1 << p, np.uint8))
    span = [1] * (1 << t)  # bitmap of the span; {0} for the empty subset
    counts = [[0] * (p + 1) for _ in range(t + 1)]
    counts[0][0] = 1
    for mask in range(1, 1 << t):
        j = (mask & -mask).bit_length() - 1
        prev = span[mask ^ (1 << j)]
        c = columns[j]
        s = prev if (prev >> c) & 1 else prev | alg.translate(prev, c)
        span[mask] = s
        counts[bin(mask).count("1")][bin(s).count("1").bit_length() - 1] += 1
    return tuple(tuple(row) for row in counts)


def expected_eligible(A: ExtensionMatrix, eps: float) -> float:
    """Expected number of symbols consistent with the received bits of ``x A``.

    Exact enumeration of all erasure patterns for ``t <= 20`` columns,
    Monte-Carlo (10^5 samples) beyond.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must be in [0, 1], got {eps}")
    p, t = A.field.p, A.t
    if t > ENUMERATION_LIMIT:
        return expected_eligible_mc(A, eps, 100_000, seed=0)[0]
    counts = _rank_profile(p, A.columns)
    total = 0.0
    for i in range(t + 1):
        w = (1 - eps) ** i * eps ** (t - i)
        total += w * sum(n * 2 ** (p - r) for r, n in enumerate(counts[i]) if n)
    return total


def expected_eligible_mc(A: ExtensionMatrix, eps: float, samples: int, seed=None) -> tuple[float, float]:
    """Monte-Carlo mean of ``2^(p - rank(A_rec))`` and its standard error."""
    rng = np.random.default_rng(seed)
    p = A.field.p
    received = rng.random((samples, A.t)) >= eps
    vals = np.empty(samples)
    cols = A.columns
    cache: dict[int, float] = {}
    keys = received @ (1 << np.arange(A.t, dtype=np.int64))
    for n, key in enumerate(keys):
        v = cache.get(key)
        if v is None:
            v = cache[key] = 2.0 ** (p - vector_rank(c for j, c in enumerate(cols) if (key >> j) & 1))
        vals[n] = v
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def eligible_weight(A: ExtensionMatrix) -> int:
    """``sum over column subsets of 2^(p - rank)``: ``2^t E(A)`` at eps = 1/2, exactly."""
    p = A.field.p
    return sum(n << (p - r) for row in _rank_profile(p, A.columns) for r, n in enumerate(row))


def _check_k(gf: GF, k_ext: int):
    if not 0 <= k_ext <= gf.q - gf.p - 1:
        raise ValueError(f"k_ext must be in [0, {gf.q - gf.p - 1}], got {k_ext}")


@lru_cache(maxsize=None)
def select_extension(gf: GF, k_ext: int, report_eps: tuple[float, ...] = (0.25, 0.5, 0.75)) -> SelectionReport:
    """Extension by ``k_ext`` bits with maximal dmin.

    Ties go to the smallest expected eligible-set size at eps = 1/2, then to
    the lexicographically smallest column list. The search is exhaustive up
    to :data:`EXHAUSTIVE_LIMIT` candidates and a seeded random sample beyond.
    """
    _check_k(gf, k_ext)
    pool = nontrivial_columns(gf)
    if math.comb(len(pool), k_ext) <= EXHAUSTIVE_LIMIT:
        candidates = list(itertools.combinations(pool, k_ext))
    else:
        rng = np.random.default_rng(k_ext)
        candidates = sorted({tuple(sorted(rng.choice(pool, k_ext, replace=False).tolist()))
                             for _ in range(EXHAUSTIVE_LIMIT)})
    mats = [ExtensionMatrix.with_extra(gf, c) for c in candidates]
    dmins = [dmin(m) for m in mats]
    best = max(dmins)
    top = [m for m, d in zip(mats, dmins) if d == best]
    if len(top) > 1 and top[0].t <= ENUMERATION_LIMIT:
        top.sort(key=lambda m: (eligible_weight(m), m.extra))
    chosen = top[0]
    return SelectionReport(chosen, best, tuple((e, expected_eligible(chosen, e)) for e in report_eps))


def random_extension(gf: GF, k_ext: int, seed=None) -> ExtensionMatrix:
    """Uniformly random set of ``k_ext`` nontrivial columns (sorted)."""
    _check_k(gf, k_ext)
    rng = np.random.default_rng(seed)
    pool = nontrivial_columns(gf)
    extra = sorted(rng.choice(pool, k_ext, replace=False).tolist()) if k_ext else []
    return ExtensionMatrix.with_extra(gf, extra)
