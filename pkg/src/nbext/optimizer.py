"""Differential-evolution search over spreading-type extending distributions.

A candidate is the vector of mean extension counts ``f_d``, one per symbol
degree. Candidates live in the box ``[0, q-p-1]^D`` intersected with the
rate hyperplane ``sum_d Lambda_d f_d = F``; fitness is the density-evolution
threshold of the spreading distribution built from the vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .code import DegreeDistribution
from .density import DEConfig, EnsembleSpec, normalized_gap, threshold
from .distribution import budget_for_rate, spreading_from
from .extension import DMIN
from .gf import GF

log = logging.getLogger(__name__)

BUDGET_TOL = 1e-6
CACHE_GRID = 1e-3


@dataclass(frozen=True)
class OptConfig:
    population: int = 40
    weight: float = 0.5
    crossover: float = 0.9
    generations: int = 30
    de_config: DEConfig = DEConfig()
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("differential evolution needs at least 4 candidates")
        if not 0.0 < self.weight <= 2.0:
            raise ValueError("differential weight must be in (0, 2]")
        if not 0.0 <= self.crossover <= 1.0:
            raise ValueError("crossover rate must be in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")


@dataclass(frozen=True)
class Candidate:
    degrees: tuple[int, ...]
    f: tuple[float, ...]
    threshold: float
    gap: float

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.degrees, self.f))


@dataclass
class OptResult:
    best: Candidate
    rate: float
    budget: float
    history: list[float] = dc_field(default_factory=list)  # best threshold after each generation
    evaluations: int = 0


def project_to_budget(v, weights, budget: float, upper: float, max_rounds: int = 20) -> np.ndarray:
    """Nearest-in-spirit feasible point: clip to ``[0, upper]`` and rescale.

    Coordinates pinned at a bound keep their value; the free ones are scaled
    so that ``weights . v == budget``. Repeats until nothing new saturates.
    """
    v = np.clip(np.asarray(v, dtype=float), 0.0, upper)
    w = np.asarray(weights, dtype=float)
    cap = float(w.sum() * upper)
    if budget < -BUDGET_TOL or budget > cap + BUDGET_TOL:
        raise ValueError(f"budget {budget} not reachable inside the box (max {cap})")
    if budget <= 0.0:
        return np.zeros_like(v)
    if budget >= cap:
        return np.full_like(v, upper)
    if w @ v <= 0.0:
        v = np.full_like(v, budget / w.sum())
    for _ in range(max_rounds):
        s = w @ v
        if abs(s - budget) <= BUDGET_TOL * 1e-3:
            break
        if s > budget:
            v = v * (budget / s)
        else:
            free = v < upper
            fixed = w[~free] @ v[~free]
            sf = w[free] @ v[free]
            if sf <= 1e-9 * (budget - fixed):
                # (near-)zero free part: scaling would blow up, spread evenly instead
                v[free] = (budget - fixed) / w[free].sum()
            else:
                v[free] *= (budget - fixed) / sf
        v = np.clip(v, 0.0, upper)
    if abs(w @ v - budget) > BUDGET_TOL:
        raise ValueError("projection did not reach the budget")
    return v


class _Fitness:
    """Threshold of a spreading candidate, cached on a quantized key."""

    def __init__(self, dd: DegreeDistribution, gf: GF, degrees, cfg: DEConfig, selection=DMIN):
        self.dd, self.gf, self.degrees, self.cfg, self.selection = dd, gf, degrees, cfg, selection
        self.cache: dict[tuple[int, ...], float] = {}
        self.evaluations = 0

    def __call__(self, v) -> float:
        key = tuple(int(round(x / CACHE_GRID)) for x in v)
        if key not in self.cache:
            dist = spreading_from(self.gf, dict(zip(self.degrees, map(float, v))))
            spec = EnsembleSpec(self.dd, self.gf, dist, self.selection)
            self.cache[key] = threshold(spec, self.cfg).threshold
            self.evaluations += 1
        return self.cache[key]


def optimize(dd: DegreeDistribution, gf: GF, r_e: float, cfg: OptConfig = OptConfig(),
             progress: Callable[[int, float], None] | None = None) -> OptResult:
    """DE/rand/1/bin maximizing the threshold at extended rate ``r_e``.

    All density-evolution runs share one seed, so candidates are compared
    under common random numbers.
    """
    degrees = tuple(dd.symbol_degrees)
    lam = np.array([dd.node_fraction(d) for d in degrees])
    upper = float(gf.q - gf.p - 1)
    budget = budget_for_rate(dd, r_e, gf.p)
    fit = _Fitness(dd, gf, degrees, cfg.de_config)
    rng = np.random.default_rng(cfg.seed)
    D = len(degrees)

    def cand(v, t):
        return Candidate(degrees, tuple(float(x) for x in v), t, normalized_gap(r_e, t))

    if budget <= BUDGET_TOL:
        v = np.zeros(D)
        best = cand(v, fit(v))
        return OptResult(best, r_e, budget, [best.threshold], fit.evaluations)

    pop = np.array([project_to_budget(rng.uniform(0.0, upper, D), lam, budget, upper)
                    for _ in range(cfg.population)])
    score = np.array([fit(v) for v in pop])
    history = [float(score.max())]
    if progress:
        progress(0, history[-1])
    for g in range(1, cfg.generations + 1):
        trials = []
        for i in range(cfg.population):
            others = [j for j in range(cfg.population) if j != i]
            a, b, c = rng.choice(others, 3, replace=False)
            mutant = pop[a] + cfg.weight * (pop[b] - pop[c])
            cross = rng.random(D) < cfg.crossover
            cross[rng.integers(D)] = True
            trials.append(project_to_budget(np.where(cross, mutant, pop[i]), lam, budget, upper))
        # selection at the generation barrier
        for i, v in enumerate(trials):
            s = fit(v)
            if s >= score[i]:
                pop[i], score[i] = v, s
        history.append(float(score.max()))
        log.info("generation %d: best threshold %.4f (%d evaluations)", g, history[-1], fit.evaluations)
        if progress:
            progress(g, history[-1])
    i = int(np.argmax(score))
    return OptResult(cand(pop[i], score[i]), r_e, budget, history, fit.evaluations)


def uniform_candidate(dd: DegreeDistribution, gf: GF, r_e: float) -> np.ndarray:
    """Every degree extended by the same mean amount."""
    degrees = dd.symbol_degrees
    lam = np.array([dd.node_fraction(d) for d in degrees])
    F = budget_for_rate(dd, r_e, gf.p)
    return project_to_budget(np.full(len(degrees), F), lam, F, float(gf.q - gf.p - 1))


def format_result(result: OptResult, echo: Sequence[tuple[str, object]] = ()) -> str:
    b = result.best
    lines = [f"{d} {v:.6f}" for d, v in zip(b.degrees, b.f)]
    lines += [f"# threshold {b.threshold:.6f}", f"# gap {b.gap:.6f}", f"# rate {result.rate:.6f}",
              f"# budget {result.budget:.6f}", f"# evaluations {result.evaluations}"]
    lines += [f"# {k} {v}" for k, v in echo]
    return "\n".join(lines) + "\n"


def write_result(result: OptResult, path, echo: Sequence[tuple[str, object]] = ()) -> None:
    Path(path).write_text(format_result(result, echo))
