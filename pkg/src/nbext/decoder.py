"""BEC transmission of extended codewords and eligible-set erasure decoding.

Each symbol node keeps the set of symbols still consistent with everything
it has heard. These sets are affine subspaces of GF(2)^p; messages are
intersected at symbol nodes and combined through ``sum_j h_j X_j = 0`` at
constraint nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _core
from ._core.pykernel import to_ints
from .code import NBCode
from .extension import ExtensionMatrix, extend
from .gf import AffineSubspace, solve_affine

DEFAULT_MAX_ITERS = 200
ORACLE_LIMIT = 5_000_000


@dataclass(frozen=True)
class ExtendedCode:
    """A code together with one extension matrix per symbol node."""

    code: NBCode
    assignment: tuple[ExtensionMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if len(self.assignment) != self.code.N:
            raise ValueError(f"{len(self.assignment)} extension matrices for {self.code.N} symbols")
        if any(A.field != self.code.field for A in self.assignment):
            raise ValueError("extension matrices over a different field")

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([A.t for A in self.assignment])]).astype(np.int64)

    @cached_property
    def columns(self) -> np.ndarray:
        return np.array([c for A in self.assignment for c in A.columns], dtype=np.int64)

    @property
    def T(self) -> int:
        return int(self.offsets[-1])

    @property
    def rate(self) -> float:
        return self.code.K * self.code.field.p / self.T

    def transmitted_bits(self, codeword: Sequence[int]) -> np.ndarray:
        return np.concatenate([extend(int(x), A) for x, A in zip(codeword, self.assignment)])


@dataclass(frozen=True)
class ErasurePattern:
    """Received flags of all ``T`` transmitted bits; node ``n`` owns ``received[offsets[n]:offsets[n+1]]``."""

    offsets: np.ndarray
    received: np.ndarray

    def mask(self, n: int) -> np.ndarray:
        return self.received[self.offsets[n]:self.offsets[n + 1]]


@dataclass
class DecodeOutcome:
    resolved: np.ndarray  # (N,) bool: posterior is a single symbol
    bit_resolved: np.ndarray  # (N, p) bool: coordinate constant over the posterior
    iterations: int
    posterior: list[AffineSubspace] | None = None

    def unresolved_bits(self, positions=None) -> int:
        rows = self.bit_resolved if positions is None else self.bit_resolved[np.asarray(positions)]
        return int(rows.size - rows.sum())


def _as_extended(code: NBCode, assignment) -> ExtendedCode:
    return assignment if isinstance(assignment, ExtendedCode) else ExtendedCode(code, tuple(assignment))


def transmit(assignment, eps: float, seed=None) -> ErasurePattern:
    """Erase each transmitted bit independently with probability ``eps``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must be in [0, 1], got {eps}")
    if isinstance(assignment, ExtendedCode):
        offsets = assignment.offsets
    else:
        offsets = np.concatenate([[0], np.cumsum([A.t for A in assignment])]).astype(np.int64)
    rng = np.random.default_rng(seed)
    return ErasurePattern(offsets, rng.random(int(offsets[-1])) >= eps)


def channel_set(A: ExtensionMatrix, mask, bits) -> AffineSubspace:
    """Symbols whose extended image matches the received bits."""
    mask = np.asarray(mask, dtype=bool)
    bits = np.asarray(bits, dtype=np.uint8)
    cols = [c for c, m in zip(A.columns, mask) if m]
    s = solve_affine(cols, bits[mask], p=A.field.p)
    if s.is_empty:
        raise ValueError("received bits are inconsistent: the BEC never flips bits")
    return s


def _received_values(ext: ExtendedCode, codeword) -> np.ndarray:
    if codeword is None:
        return np.zeros(ext.T, dtype=np.uint8)
    return ext.transmitted_bits(codeword)


def _bit_flags(p: int, bitmaps: list[int]) -> np.ndarray:
    q = 1 << p
    lanes = [sum(1 << x for x in range(q) if not (x >> i) & 1) for i in range(p)]
    full = (1 << q) - 1
    out = np.empty((len(bitmaps), p), dtype=bool)
    for n, s in enumerate(bitmaps):
        for i, lane in enumerate(lanes):
            out[n, i] = (s & lane) == s or (s & (full ^ lane)) == s
    return out


def _outcome(p: int, bitmaps: list[int], iters: int, keep_sets: bool) -> DecodeOutcome:
    if any(s == 0 for s in bitmaps):
        raise RuntimeError("empty eligible set: input was not a codeword or the decoder is faulty")
    resolved = np.array([s & (s - 1) == 0 for s in bitmaps], dtype=bool)
    sets = [AffineSubspace.from_bitmap(p, s) for s in bitmaps] if keep_sets else None
    return DecodeOutcome(resolved, _bit_flags(p, bitmaps), iters, sets)


def decode(code: NBCode, assignment, pattern: ErasurePattern, max_iters: int = DEFAULT_MAX_ITERS,
           codeword=None, keep_sets: bool = False) -> DecodeOutcome:
    """Flooding eligible-set decoding to a fixpoint (or ``max_iters`` rounds).

    ``codeword`` defaults to all-zero, which is all the BEC simulations need.
    """
    ext = _as_extended(code, assignment)
    gf = code.field
    kern = _core.kernel
    values = _received_values(ext, codeword)
    channel = kern.channel_sets(gf.p, ext.columns, ext.offsets, pattern.received.astype(np.uint8), values)
    var_ptr, var_edges, chk_ptr, chk_edges, labels = code.graph.csr
    post, iters = kern.decode(gf.p, gf.mul_table, np.array(gf.inv_table, np.uint8), var_ptr, var_edges,
                              chk_ptr, chk_edges, labels, channel, max_iters)
    return _outcome(gf.p, to_ints(post), int(iters), keep_sets)


def oracle_decode(code: NBCode, assignment, pattern: ErasurePattern, max_iters: int = DEFAULT_MAX_ITERS,
                  codeword=None) -> DecodeOutcome:
    """Reference decoder on explicit symbol sets, same flooding schedule as :func:`decode`.

    Channel sets come from filtering all q symbols against the received bits;
    check updates enumerate sums over the other symbols' sets.
    """
    ext = _as_extended(code, assignment)
    gf = code.field
    q = gf.q
    g = code.graph
    max_dc = int(g.check_degrees.max()) if g.M else 0
    if len(g.edges) * max_dc * q * q > ORACLE_LIMIT:
        raise ValueError("instance too large for the explicit-set oracle")
    values = _received_values(ext, codeword)
    channel: list[frozenset[int]] = []
    for n, A in enumerate(ext.assignment):
        lo = ext.offsets[n]
        rec = [(c, values[lo + j]) for j, c in enumerate(A.columns) if pattern.received[lo + j]]
        channel.append(frozenset(x for x in range(q) if all(bin(x & c).count("1") % 2 == b for c, b in rec)))
    if any(not s for s in channel):
        raise ValueError("empty channel set")
    full = frozenset(range(q))
    var_edges = [[] for _ in range(g.N)]
    chk_edges = [[] for _ in range(g.M)]
    for e, (v, c, _) in enumerate(g.edges):
        var_edges[v].append(e)
        chk_edges[c].append(e)
    labels = [h for _, _, h in g.edges]
    c2v = [full] * len(g.edges)
    v2c = [full] * len(g.edges)
    iters = 0
    if not all(len(s) == 1 for s in channel):
        for it in range(1, max_iters + 1):
            changed = False
            for n in range(g.N):
                for e in var_edges[n]:
                    m = channel[n]
                    for e2 in var_edges[n]:
                        if e2 != e:
                            m = m & c2v[e2]
                    if m != v2c[e]:
                        v2c[e], changed = m, True
            for c in range(g.M):
                for e in chk_edges[c]:
                    acc = frozenset([0])
                    for e2 in chk_edges[c]:
                        if e2 != e:
                            h = labels[e2]
                            acc = frozenset(a ^ gf.mul(h, s) for a in acc for s in v2c[e2])
                    hinv = gf.inv(labels[e])
                    m = frozenset(gf.mul(hinv, a) for a in acc)
                    if m != c2v[e]:
                        c2v[e], changed = m, True
            if not changed:
                break
            iters = it
    bitmaps = []
    for n in range(g.N):
        s = channel[n]
        for e in var_edges[n]:
            s = s & c2v[e]
        bitmaps.append(sum(1 << x for x in s))
    return _outcome(gf.p, bitmaps, iters, keep_sets=True)


def bit_erasure_rate(outcomes: Sequence[DecodeOutcome], positions) -> float:
    """Mean fraction of unresolved source bits; ``positions`` are the information symbols."""
    if not outcomes:
        raise ValueError("no decoding trials")
    positions = np.asarray(positions)
    n_bits = positions.size * outcomes[0].bit_resolved.shape[1]
    return sum(o.unresolved_bits(positions) for o in outcomes) / (n_bits * len(outcomes))
