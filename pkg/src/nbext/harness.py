"""Experiment drivers: BER sweeps, threshold tables, optimized-rate tables and plot data.

Every driver returns plain row dictionaries; :func:`write_csv` fixes the
column order so files are stable across runs and locales.
"""

from __future__ import annotations

import csv
import hashlib
import math
import shlex
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .code import DegreeDistribution, NBCode
from .decoder import ExtendedCode, decode, transmit
from .density import DEConfig, EnsembleSpec, normalized_gap, threshold
from .distribution import ExtendingDistribution, assign_extensions, budget_for_rate, spreading_from
from .extension import DMIN, RANDOM
from .gf import GF
from .optimizer import OptConfig, optimize

TABLE1_RATES = (0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 2 / 15)
ECHO_SUFFIX = ".echo"


# ---------------------------------------------------------------------------
# small I/O helpers


def parse_grid(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma list; always sorted and non-empty."""
    text = text.strip()
    if ":" in text:
        try:
            lo, hi, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ValueError(f"bad grid {text!r}; expected lo:hi:step") from None
        if step <= 0 or hi < lo:
            raise ValueError(f"bad grid {text!r}: need step > 0 and hi >= lo")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        grid = [round(lo + i * step, 12) for i in range(n)]
    else:
        grid = sorted(float(x) for x in text.split(",") if x.strip())
    if not grid:
        raise ValueError("empty grid")
    return grid


def write_csv(path, rows: Sequence[Mapping[str, object]], columns: Sequence[str] | None = None) -> None:
    if not rows:
        raise ValueError("no rows to write")
    columns = list(columns or rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v} in results")
        return repr(float(v))
    return str(v)


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def config_hash(params: Mapping[str, object]) -> str:
    blob = "\n".join(f"{k}={params[k]}" for k in sorted(params))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def echo_text(command: str, params: Mapping[str, object], argv: Sequence[str] | None = None) -> str:
    """Line-oriented record of a run: version, command, every parameter."""
    lines = [f"version {__version__}", f"command {command}"]
    if argv is not None:
        lines.append("argv " + shlex.join(argv))
    lines += [f"{k} {params[k]}" for k in sorted(params)]
    lines.append(f"hash {config_hash(params)}")
    return "\n".join(lines) + "\n"


def write_echo(out, command: str, params: Mapping[str, object], argv=None) -> Path:
    path = Path(str(out) + ECHO_SUFFIX)
    path.write_text(echo_text(command, params, argv))
    return path


def read_echo(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition(" ")
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# finite-length BER


def run_ber_sweep(code: NBCode, dist: ExtendingDistribution, eps_grid: Iterable[float], trials: int,
                  seed: int = 0, selection: str = DMIN, max_iters: int = 200,
                  progress: Callable[[dict], None] | None = None) -> list[dict]:
    """Bit erasure rate of the information bits over an erasure-probability grid.

    Trial ``i`` draws its erasures from seed ``seed ^ i`` at every grid
    point, so neighbouring points see coupled channels. ``stderr`` is the
    binomial error over all counted bits; ``stderr_trials`` is the spread
    of per-trial BER, which also reflects correlation within a frame.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    grid = sorted(float(e) for e in eps_grid)
    if not grid:
        raise ValueError("empty erasure-probability grid")
    ext = ExtendedCode(code, tuple(assign_extensions(code, dist, selection, seed)))
    info = code.info_positions
    n_bits = info.size * code.field.p
    rows = []
    for eps in grid:
        per = np.empty(trials)
        frames = 0
        for i in range(trials):
            out = decode(code, ext, transmit(ext, eps, seed ^ i), max_iters)
            u = out.unresolved_bits(info)
            per[i] = u / n_bits
            frames += u > 0
        ber = float(per.mean())
        row = dict(eps=eps, rate=ext.rate, ber=ber,
                   stderr=math.sqrt(ber * (1 - ber) / (n_bits * trials)),
                   stderr_trials=float(per.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
                   fer=frames / trials, trials=trials, bits=n_bits * trials)
        rows.append(row)
        if progress:
            progress(row)
    return rows


def waterfall_onset(rows: Sequence[Mapping[str, float]], level: float = 1e-2) -> float:
    """Smallest grid point whose BER reaches ``level`` (inf if none does)."""
    for r in sorted(rows, key=lambda r: float(r["eps"])):
        if float(r["ber"]) >= level:
            return float(r["eps"])
    return math.inf


# ---------------------------------------------------------------------------
# asymptotic tables


@dataclass(frozen=True)
class EnsembleCase:
    label: str
    spec: EnsembleSpec
    k: str = ""  # extension count, for plotting against k

    @property
    def selection(self) -> str:
        return self.spec.selection if isinstance(self.spec.selection, str) else "explicit"


def threshold_stats(spec: EnsembleSpec, cfg: DEConfig, seeds: int = 1) -> tuple[float, float]:
    """Mean threshold over ``seeds`` DE seeds and its standard error.

    The error combines the spread across seeds with the quantization of the
    final bisection bracket (uniform, width ``bisection_tol``), so it is
    never zero even when every seed ends on the same point.
    """
    if seeds < 1:
        raise ValueError("need at least one seed")
    vals = [threshold(spec, _reseed(cfg, s)).threshold for s in range(seeds)]
    var = (float(np.var(vals, ddof=1)) if seeds > 1 else 0.0) + cfg.bisection_tol**2 / 12
    return float(np.mean(vals)), math.sqrt(var / seeds)


def threshold_rows(cases: Sequence[EnsembleCase], cfg: DEConfig, seeds: int = 1,
                   progress: Callable[[dict], None] | None = None) -> list[dict]:
    """Threshold, gap and standard errors per case, averaged over ``seeds`` DE seeds."""
    rows = []
    for case in cases:
        t, se = threshold_stats(case.spec, cfg, seeds)
        r = case.spec.rate
        row = dict(label=case.label, k=case.k, selection=case.selection, rate=r, threshold=t,
                   gap=normalized_gap(r, t), stderr=se, gap_stderr=se / (1 - r), seeds=seeds)
        rows.append(row)
        if progress:
            progress(row)
    return rows


def _reseed(cfg: DEConfig, i: int) -> DEConfig:
    if i == 0:
        return cfg
    d = asdict(cfg)
    d["seed"] = cfg.seed + 1_000_003 * i
    return DEConfig(**d)


def fixed_k_cases(dd: DegreeDistribution, gf: GF, ks: Sequence[int], r_e: float | None = None,
                  selections: Sequence[str] = (DMIN, RANDOM), tag: str = "") -> list[EnsembleCase]:
    """Every symbol node extended by ``k`` bits, or, with ``r_e`` given,
    a fraction of nodes extended by ``k`` bits so that the rate is ``r_e``."""
    cases = []
    for k in ks:
        if r_e is None:
            f = {d: float(k) for d in dd.lam}
            dist = spreading_from(gf, f)
        else:
            frac = budget_for_rate(dd, r_e, gf.p) / k
            if frac > 1 + 1e-9:
                raise ValueError(f"k={k} cannot reach rate {r_e}")
            dist = ExtendingDistribution(gf, {**{(d, k): frac for d in dd.lam},
                                              **{(d, 0): 1 - frac for d in dd.lam}})
        for sel in selections:
            cases.append(EnsembleCase(f"{tag}k={k},{sel}", EnsembleSpec(dd, gf, dist, sel), str(k)))
    return cases


def run_table1(dd: DegreeDistribution, gf: GF, rates: Sequence[float] = TABLE1_RATES,
               opt_cfg: OptConfig = OptConfig(), given: Mapping[float, Mapping[int, float]] | None = None,
               progress: Callable[[dict], None] | None = None, seeds: int = 1) -> list[dict]:
    """Optimized spreading distribution per extended rate, with dmin and random selection gaps.

    End points need no search: ``F = 0`` means no extension, a full budget
    means every node carries all ``q - p - 1`` bits. ``given`` supplies
    vectors to evaluate instead of optimizing. Thresholds are averaged over
    ``seeds`` DE seeds; gap errors are listed alongside.
    """
    K = gf.q - gf.p - 1
    degrees = dd.symbol_degrees
    cap = K * sum(dd.node_fraction(d) for d in degrees)
    rows = []
    for r_e in rates:
        F = budget_for_rate(dd, r_e, gf.p)
        key = next((g for g in (given or {}) if abs(g - r_e) < 1e-9), None)
        if F <= 1e-9:
            f, source = {d: 0.0 for d in degrees}, "fixed"
        elif F >= cap - 1e-9:
            f, source = {d: float(K) for d in degrees}, "fixed"
        elif key is not None:
            f, source = dict(given[key]), "given"
        else:
            f, source = optimize(dd, gf, r_e, opt_cfg).best.as_dict(), "optimized"
        dist = spreading_from(gf, f)
        cfg = opt_cfg.de_config
        t, se = threshold_stats(EnsembleSpec(dd, gf, dist, DMIN), cfg, seeds)
        tr, se_r = threshold_stats(EnsembleSpec(dd, gf, dist, RANDOM), cfg, seeds)
        row = dict(r_e=r_e, budget=F, **{f"f_{d}": f.get(d, 0.0) for d in degrees},
                   threshold=t, gap=normalized_gap(r_e, t), gap_stderr=se / (1 - r_e), threshold_rand=tr,
                   gap_rand=normalized_gap(r_e, tr), gap_rand_stderr=se_r / (1 - r_e), source=source)
        rows.append(row)
        if progress:
            progress(row)
    return rows


# ---------------------------------------------------------------------------
# plot data


def emit_plot_data(csv_paths: Sequence, out_dir, x: str, y: str, by: str | None = None,
                   extra: Sequence[str] = ()) -> Path:
    """Split result files into whitespace-delimited series and write a manifest.

    One series per (input file, value of ``by``). Each manifest line names
    the series file, its source, the axes and the config hash of the run that
    produced the source (from its echo file, else a hash of the CSV itself).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for src in map(Path, csv_paths):
        rows = read_csv(src)
        if not rows:
            raise ValueError(f"{src}: no result rows")
        for col in [x, y, *extra] + ([by] if by else []):
            if col not in rows[0]:
                raise ValueError(f"{src}: missing column {col!r}")
        echo = Path(str(src) + ECHO_SUFFIX)
        chash = read_echo(echo).get("hash") if echo.exists() else None
        chash = chash or hashlib.sha256(src.read_bytes()).hexdigest()[:16]
        groups: dict[str, list[dict]] = {}
        for r in rows:
            groups.setdefault(r[by] if by else "all", []).append(r)
        for g, rs in groups.items():
            name = f"{src.stem}__{_slug(g)}.dat"
            with open(out_dir / name, "w", encoding="utf-8") as fh:
                fh.write("# " + " ".join([x, y, *extra]) + "\n")
                for r in rs:
                    fh.write(" ".join(r[c] for c in (x, y, *extra)) + "\n")
            manifest.append(f"{name} source={src.name} x={x} y={y} group={g} points={len(rs)} config={chash}")
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(manifest) + "\n")
    return path


def _slug(s: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in str(s)) or "_"
