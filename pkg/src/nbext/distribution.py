"""Extending distributions ``f[d, k]`` and their rate algebra.

``f[d, k]`` is the fraction of degree-``d`` symbol nodes that carry ``k``
nontrivial extended bits, ``0 <= k <= q - p - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .code import DegreeDistribution, NBCode, largest_remainder
from .extension import DMIN, RANDOM, ExtensionMatrix, random_extension, select_extension
from .gf import GF

TOL = 1e-9


@dataclass(frozen=True)
class ExtendingDistribution:
    field: GF
    table: Mapping[tuple[int, int], float]

    def __post_init__(self):
        kmax = self.max_k
        clean: dict[tuple[int, int], float] = {}
        for (d, k), v in self.table.items():
            if not 0 <= k <= kmax:
                raise ValueError(f"k={k} outside [0, {kmax}] for degree {d}")
            if v < -TOL:
                raise ValueError(f"negative fraction f[{d},{k}] = {v}")
            if v > 0.0:
                clean[(int(d), int(k))] = float(v)
        object.__setattr__(self, "table", dict(sorted(clean.items())))
        for d in self.degrees:
            s = sum(self.row(d))
            if abs(s - 1.0) > 1e-6:
                raise ValueError(f"fractions for degree {d} sum to {s}, not 1")

    @property
    def max_k(self) -> int:
        return self.field.q - self.field.p - 1

    @property
    def degrees(self) -> list[int]:
        return sorted({d for d, _ in self.table})

    def row(self, d: int) -> list[float]:
        """``[f[d,0], ..., f[d,K]]``; degrees not listed are unextended."""
        if d not in self.degrees:
            return [1.0] + [0.0] * self.max_k
        return [self.table.get((d, k), 0.0) for k in range(self.max_k + 1)]

    def mean(self, d: int) -> float:
        return sum(k * v for k, v in enumerate(self.row(d)))

    @classmethod
    def none(cls, gf: GF, degrees) -> ExtendingDistribution:
        return cls(gf, {(d, 0): 1.0 for d in degrees})

    @classmethod
    def uniform(cls, gf: GF, degrees, k: int) -> ExtendingDistribution:
        """Every symbol node extended by exactly ``k`` bits."""
        return cls(gf, {(d, k): 1.0 for d in degrees})

    def dumps(self) -> str:
        return "".join(f"{d} {k} {v!r}\n" for (d, k), v in self.table.items())


def _check_means(gf: GF, f_d: Mapping[int, float]):
    kmax = gf.q - gf.p - 1
    for d, v in f_d.items():
        if not -TOL <= v <= kmax + TOL:
            raise ValueError(f"f_{d} = {v} outside [0, {kmax}]")


def spreading_from(gf: GF, f_d: Mapping[int, float]) -> ExtendingDistribution:
    """Extended bits spread as evenly as possible over the degree-d nodes.

    Only ``floor(f_d)`` and ``ceil(f_d)`` occur, weighted so that the mean is ``f_d``.
    """
    _check_means(gf, f_d)
    table: dict[tuple[int, int], float] = {}
    for d, v in f_d.items():
        v = min(max(float(v), 0.0), gf.q - gf.p - 1)
        lo, hi = math.floor(v), math.ceil(v)
        if lo == hi:
            table[(d, lo)] = 1.0
        else:
            table[(d, lo)] = hi - v
            table[(d, hi)] = v - lo
    return ExtendingDistribution(gf, table)


def clustering_from(gf: GF, f_d: Mapping[int, float]) -> ExtendingDistribution:
    """Extended bits concentrated on as few degree-d nodes as possible (each gets all ``q-p-1``)."""
    _check_means(gf, f_d)
    K = gf.q - gf.p - 1
    table: dict[tuple[int, int], float] = {}
    for d, v in f_d.items():
        v = min(max(float(v), 0.0), K)
        table[(d, K)] = v / K
        table[(d, 0)] = 1.0 - v / K
    return ExtendingDistribution(gf, table)


def average_extension(dist: ExtendingDistribution, dd: DegreeDistribution) -> float:
    """Mean number of nontrivial extended bits per symbol node."""
    missing = [d for d in dist.degrees if d not in dd.lam and dist.mean(d) > 0]
    if missing:
        raise ValueError(f"degrees {missing} are extended but absent from the degree distribution")
    return sum(dd.node_fraction(d) * dist.mean(d) for d in dd.lam)


def extended_rate(r: float, p: int, f: float) -> float:
    if not 0.0 < r < 1.0:
        raise ValueError(f"rate {r} outside (0, 1)")
    if f < 0:
        raise ValueError("average extension must be non-negative")
    return r * p / (p + f)


def budget_for_rate(dd: DegreeDistribution, r_e: float, p: int) -> float:
    """Required ``sum_d Lambda_d f_d`` for the extended rate ``r_e``."""
    r = dd.design_rate
    lo = r * p / ((1 << p) - 1)
    if not lo - 1e-12 <= r_e <= r + 1e-12:
        raise ValueError(f"extended rate {r_e} outside the achievable interval [{lo}, {r}]")
    return max(p * (r / r_e - 1.0), 0.0)


spec_for_target_rate = budget_for_rate


def assign_extensions(code: NBCode, dist: ExtendingDistribution, selection: str = DMIN,
                      seed=None) -> list[ExtensionMatrix]:
    """Per-node extension matrices realizing ``dist`` on a concrete code.

    For every degree class the node counts per ``k`` come from
    largest-remainder rounding; which node gets which ``k`` is a seeded
    uniform shuffle.
    """
    if selection not in (DMIN, RANDOM):
        raise ValueError(f"unknown selection rule {selection!r}")
    gf = code.field
    rng = np.random.default_rng(seed)
    degs = code.graph.symbol_degrees
    present = set(int(d) for d in np.unique(degs))
    for d in dist.degrees:
        if d not in present and dist.mean(d) > 0:
            raise ValueError(f"degree {d} is extended but the code has no degree-{d} symbol nodes")
    out: list[ExtensionMatrix | None] = [None] * code.N
    for d in sorted(present):
        nodes = np.nonzero(degs == d)[0]
        tie = rng.permutation(dist.max_k + 1)
        counts = largest_remainder(dist.row(d), len(nodes), order_key=lambda i: tie[i])
        nodes = rng.permutation(nodes)
        pos = 0
        for k, n in enumerate(counts):
            for v in nodes[pos:pos + n]:
                if selection == DMIN:
                    out[v] = select_extension(gf, k).matrix
                else:
                    out[v] = random_extension(gf, k, rng)
            pos += n
    return out  # type: ignore[return-value]


def empirical_rate(code: NBCode, assignment) -> float:
    """``K p / T`` with ``T`` the number of transmitted bits."""
    return code.K * code.field.p / sum(A.t for A in assignment)


# ---------------------------------------------------------------------------
# distribution files


def loads_distribution(text: str, gf: GF) -> ExtendingDistribution:
    """Parse a distribution spec.

    Lines ``d: f_d`` (or ``d f_d``) give spreading means; lines ``d k f`` give
    explicit fractions. A line ``kind: clustering`` turns the means into a
    clustering-type distribution. ``#`` starts a comment.
    """
    means: dict[int, float] = {}
    table: dict[tuple[int, int], float] = {}
    kind = "spreading"
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("kind"):
            kind = line.split(":", 1)[-1].split()[-1]
            if kind not in ("spreading", "clustering"):
                raise ValueError(f"line {n}: unknown kind {kind!r}")
            continue
        parts = line.replace(":", " ").split()
        try:
            if len(parts) == 2:
                means[int(parts[0])] = float(parts[1])
            elif len(parts) == 3:
                table[(int(parts[0]), int(parts[1]))] = float(parts[2])
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {n}: cannot parse {line!r}") from None
    if means and table:
        raise ValueError("a distribution file holds either means or explicit fractions, not both")
    if table:
        return ExtendingDistribution(gf, table)
    return (clustering_from if kind == "clustering" else spreading_from)(gf, means)


def read_distribution(path, gf: GF) -> ExtendingDistribution:
    return loads_distribution(Path(path).read_text(), gf)
