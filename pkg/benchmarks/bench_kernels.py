"""Compiled core vs pure-Python fallback on the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each kernel is timed on the same inputs with both backends; outputs are
compared so a speedup never hides a mismatch.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nbext import _core
from nbext._core import pykernel
from nbext.code import MOTHER_CODE, peg_construct
from nbext.decoder import ExtendedCode, decode, transmit
from nbext.density import DEConfig, EnsembleSpec, de_converges
from nbext.distribution import assign_extensions, spreading_from
from nbext.extension import RANDOM
from nbext.gf import field

try:
    from nbext._core import ckernel
except ImportError:  # pragma: no cover
    ckernel = None


def _time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick: bool):
    gf = field(4)
    dist = spreading_from(gf, {2: 0.5, 5: 1.5, 8: 0.0, 18: 3.0})
    pop = 1000 if quick else 2000
    iters = 3 if quick else 10
    for name, spec in (("DE dmin", EnsembleSpec(MOTHER_CODE, gf, dist)),
                       ("DE random", EnsembleSpec(MOTHER_CODE, gf, dist, RANDOM))):
        cfg = DEConfig(population_size=pop, max_iters=iters)
        yield f"{name} (pop {pop}, {iters} it)", lambda spec=spec, cfg=cfg: de_converges(spec, 0.6, cfg)

    n = 200 if quick else 600
    code = peg_construct(MOTHER_CODE, n, gf, 0)
    ext = ExtendedCode(code, tuple(assign_extensions(code, dist, seed=0)))
    pats = [transmit(ext, 0.55, s) for s in range(3)]
    yield (f"decode (N={n}, 3 frames)",
           lambda: [decode(code, ext, p).bit_resolved.tobytes() for p in pats])

    rng = np.random.default_rng(0)
    a = pykernel.to_words([_random_coset(rng, 4) for _ in range(2000)])
    b = pykernel.to_words([_random_coset(rng, 4) for _ in range(2000)])
    labels = rng.integers(1, 16, 2000)
    inv = np.array(gf.inv_table, np.uint8)
    yield "set scale (2000 sets)", lambda: _core.kernel.set_scale(4, gf.mul_table, inv, a, labels).tobytes()
    yield "set sum (2000 pairs)", lambda: _core.kernel.set_msum(4, gf.mul_table, inv, a, b).tobytes()


def _random_coset(rng, p):
    """Bitmap of a random affine subspace of GF(2)^p."""
    pts = {int(rng.integers(1 << p))}
    for g in rng.integers(1 << p, size=int(rng.integers(0, p + 1))):
        pts |= {x ^ int(g) for x in pts}
    return sum(1 << x for x in pts)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    if ckernel is None:
        raise SystemExit("compiled core not built; nothing to compare")
    print(f"{'kernel':34s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  same")
    for name, fn in cases(args.quick):
        res = {}
        for label, mod in (("cython", ckernel), ("python", pykernel)):
            _core.kernel = mod
            res[label] = _time(fn, args.repeat)
        (tc, oc), (tp, op) = res["cython"], res["python"]
        print(f"{name:34s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {oc == op}")


if __name__ == "__main__":
    main()
