"""Monte-Carlo density evolution for extended ensembles on the BEC.

The infinite code is emulated by population dynamics: a large population of
check-to-symbol messages (eligible sets) is resampled through symbol and
constraint node updates. The fraction of symbols whose posterior is not a
single symbol is the decodability criterion, and the threshold is found by
bisection on the erasure probability.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from . import _core
from .code import DegreeDistribution
from .distribution import ExtendingDistribution, average_extension, extended_rate
from .extension import DMIN, RANDOM, ExtensionMatrix, nontrivial_columns, select_extension
from .gf import GF

log = logging.getLogger(__name__)

Selection = Union[str, Mapping[tuple[int, int], ExtensionMatrix]]


@dataclass(frozen=True)
class DEConfig:
    population_size: int = 10_000
    max_iters: int = 200
    success_tol: float = 1e-3
    bisection_tol: float = 1e-3
    seed: int = 0
    # give up once the residual has not reached a new minimum for this many rounds (0: never)
    stall_iters: int = 0

    def __post_init__(self):
        if self.population_size < 1000:
            raise ValueError("population_size must be at least 1000")
        if self.bisection_tol < 1e-5:
            raise ValueError("bisection_tol must be at least 1e-5")
        if self.max_iters < 0 or self.stall_iters < 0:
            raise ValueError("iteration limits must be non-negative")


@dataclass(frozen=True)
class EnsembleSpec:
    """Degree distributions, field, extending distribution and matrix selection rule.

    ``selection`` is ``"dmin"`` (one dmin-optimal matrix per ``k``),
    ``"random"`` (a fresh uniformly random matrix per node) or a mapping
    ``(d, k) -> ExtensionMatrix``; missing keys fall back to dmin-optimal.
    """

    dd: DegreeDistribution
    field: GF
    dist: ExtendingDistribution | None = None
    selection: Selection = DMIN

    def __post_init__(self):
        if self.dist is not None:
            if self.dist.field != self.field:
                raise ValueError("extending distribution is over a different field")
            average_extension(self.dist, self.dd)  # degree support check
        if isinstance(self.selection, str) and self.selection not in (DMIN, RANDOM):
            raise ValueError(f"unknown selection rule {self.selection!r}")

    @property
    def mother_rate(self) -> float:
        return self.dd.design_rate

    @property
    def average_extension(self) -> float:
        return 0.0 if self.dist is None else average_extension(self.dist, self.dd)

    @property
    def rate(self) -> float:
        """Extended design rate."""
        return extended_rate(self.mother_rate, self.field.p, self.average_extension)

    def _matrix(self, d: int, k: int) -> ExtensionMatrix:
        if isinstance(self.selection, Mapping) and (d, k) in self.selection:
            return self.selection[(d, k)]
        return select_extension(self.field, k).matrix

    @cached_property
    def tables(self) -> dict:
        """Keyword arguments describing the ensemble to the kernels."""
        gf = self.field
        K = gf.q - gf.p - 1
        degs = self.dd.symbol_degrees
        k_rows = []
        for d in degs:
            row = [1.0] + [0.0] * K if self.dist is None else self.dist.row(d)
            k_rows.append(row)
        width = max([gf.q - 1] + [self._matrix(d, k).t
                                   for d, row in zip(degs, k_rows) for k, v in enumerate(row) if v > 0])
        cols = np.zeros((len(degs), K + 1, width), dtype=np.int64)
        if self.selection != RANDOM:
            for i, (d, row) in enumerate(zip(degs, k_rows)):
                for k, v in enumerate(row):
                    if v > 0:
                        A = self._matrix(d, k)
                        if A.field != gf:
                            raise ValueError("explicit matrix over a different field")
                        cols[i, k, : A.t] = A.columns
                        if A.t < gf.p + k:
                            raise ValueError(f"matrix for (d={d}, k={k}) has only {A.t} columns")
        nodes = self.dd.node_fractions()
        return dict(
            lam_deg=np.array(degs, dtype=np.int64),
            lam_cdf=_cdf([self.dd.lam[d] for d in degs]),
            node_cdf=_cdf([nodes[d] for d in degs]),
            k_cdf=np.array([_cdf(r) for r in k_rows]),
            mode=1 if self.selection == RANDOM else 0,
            col_table=cols,
            nontrivial=np.array(nontrivial_columns(gf), dtype=np.int64),
            rho_deg=np.array(list(self.dd.rho), dtype=np.int64),
            rho_cdf=_cdf(list(self.dd.rho.values())),
        )


def _cdf(probs) -> np.ndarray:
    """Cumulative table for inverse-transform draws; entries from the last
    positive weight on are pushed above 1 so that rounding can never select a
    zero-probability outcome."""
    w = np.asarray(probs, dtype=float)
    c = np.cumsum(w) / w.sum()
    last = int(np.nonzero(w > 0)[0][-1])
    c[last:] = 2.0
    return c


@dataclass(frozen=True)
class DEOutcome:
    converged: bool
    residual: float
    iterations: int
    trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class TracePoint:
    eps: float
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    gap: float
    rate: float
    trace: tuple[TracePoint, ...] = dc_field(default=())
    monotone: bool = True


def de_converges(spec: EnsembleSpec, eps: float, cfg: DEConfig = DEConfig()) -> DEOutcome:
    """Run population dynamics at erasure probability ``eps``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must be in [0, 1], got {eps}")
    gf = spec.field
    ok, res, iters, trace = _core.kernel.density_evolution(
        gf.p, gf.mul_table, np.array(gf.inv_table, np.uint8), float(eps), int(cfg.seed) & ((1 << 64) - 1),
        cfg.population_size, cfg.max_iters, cfg.success_tol, cfg.stall_iters, **spec.tables)
    return DEOutcome(bool(ok), float(res), int(iters), tuple(trace))


def normalized_gap(r: float, threshold: float) -> float:
    """Relative distance of a threshold to the BEC capacity ``1 - r``."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"rate {r} outside (0, 1)")
    return (1.0 - r - threshold) / (1.0 - r)


def threshold(spec: EnsembleSpec, cfg: DEConfig = DEConfig(), bracket: tuple[float, float] = (0.0, 1.0)) -> ThresholdResult:
    """Largest erasure probability at which density evolution converges.

    Bisection on ``bracket`` down to ``cfg.bisection_tol``; the result is the
    midpoint of the final bracket. If the bracket ends disagree with a
    monotone picture (low end fails or high end converges), a uniform scan
    at the bisection resolution is used instead.
    """
    lo, hi = bracket
    trace: list[TracePoint] = []

    def probe(eps):
        out = de_converges(spec, eps, cfg)
        trace.append(TracePoint(eps, out.iterations, out.residual, out.converged))
        return out.converged

    r = spec.rate
    lo_ok = probe(lo)
    hi_ok = probe(hi)
    if lo_ok and not hi_ok:
        while hi - lo > cfg.bisection_tol:
            mid = 0.5 * (lo + hi)
            if probe(mid):
                lo = mid
            else:
                hi = mid
        eps_star = 0.5 * (lo + hi)
        return ThresholdResult(eps_star, normalized_gap(r, eps_star), r, tuple(trace))

    log.warning("non-monotone convergence on [%g, %g]; scanning", lo, hi)
    n = max(2, int(np.ceil((hi - lo) / cfg.bisection_tol)) + 1)
    best = lo if lo_ok else None
    for eps in np.linspace(lo, hi, n)[1:-1]:
        if probe(float(eps)):
            best = float(eps)
        else:
            break
    eps_star = (hi if hi_ok and best is not None and best >= hi - 2 * cfg.bisection_tol else best) or 0.0
    return ThresholdResult(eps_star, normalized_gap(r, eps_star), r, tuple(trace), monotone=False)


def write_trace(result: ThresholdResult, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "iterations", "residual", "converged"])
        for t in result.trace:
            w.writerow([repr(t.eps), t.iterations, repr(t.residual), int(t.converged)])
