"""Degree distributions, Tanner graphs, PEG construction and encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .gf import GF, field

SUM_TOL = 1e-9


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distributions ``lambda`` (symbols) and ``rho`` (checks).

    ``lam[d]`` is the fraction of edges attached to degree-``d`` symbol nodes,
    i.e. the coefficient of ``x^(d-1)``.
    """

    lam: Mapping[int, float]
    rho: Mapping[int, float]

    def __post_init__(self):
        for name, poly in (("lambda", self.lam), ("rho", self.rho)):
            if not poly:
                raise ValueError(f"{name} is empty")
            if any(int(d) < 1 for d in poly) or any(v < 0 for v in poly.values()):
                raise ValueError(f"{name} has a negative coefficient or a degree < 1")
            if abs(sum(poly.values()) - 1.0) > SUM_TOL:
                raise ValueError(f"{name} coefficients sum to {sum(poly.values())!r}, not 1")
        object.__setattr__(self, "lam", {int(d): float(v) for d, v in sorted(self.lam.items()) if v > 0})
        object.__setattr__(self, "rho", {int(d): float(v) for d, v in sorted(self.rho.items()) if v > 0})
        r = self.design_rate
        if not 0.0 < r < 1.0:
            raise ValueError(f"design rate {r} is outside (0, 1)")

    @classmethod
    def regular(cls, dv: int, dc: int) -> DegreeDistribution:
        return cls({dv: 1.0}, {dc: 1.0})

    @property
    def lambda_integral(self) -> float:
        return sum(v / d for d, v in self.lam.items())

    @property
    def rho_integral(self) -> float:
        return sum(v / d for d, v in self.rho.items())

    @property
    def design_rate(self) -> float:
        return 1.0 - self.rho_integral / self.lambda_integral

    @property
    def symbol_degrees(self) -> list[int]:
        return list(self.lam)

    def node_fraction(self, d: int) -> float:
        """Fraction of symbol nodes with degree ``d``."""
        return self.lam.get(d, 0.0) / (d * self.lambda_integral)

    def node_fractions(self) -> dict[int, float]:
        return {d: self.node_fraction(d) for d in self.lam}

    def check_node_fractions(self) -> dict[int, float]:
        return {d: v / (d * self.rho_integral) for d, v in self.rho.items()}

    @classmethod
    def parse(cls, text: str) -> DegreeDistribution:
        """From lines ``lambda d coeff`` / ``rho d coeff`` (``#`` starts a comment)."""
        lam: dict[int, float] = {}
        rho: dict[int, float] = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in ("lambda", "rho"):
                raise ValueError(f"line {n}: expected 'lambda d coeff' or 'rho d coeff', got {line!r}")
            target = lam if parts[0] == "lambda" else rho
            target[int(parts[1])] = target.get(int(parts[1]), 0.0) + float(parts[2])
        return cls(lam, rho)

    def dumps(self) -> str:
        return "".join([f"lambda {d} {v!r}\n" for d, v in self.lam.items()]
                       + [f"rho {d} {v!r}\n" for d, v in self.rho.items()])


#: Rate-1/2 mother code over GF(16) used for the optimized extensions.
MOTHER_CODE = DegreeDistribution({2: 0.596, 5: 0.186, 8: 0.071, 18: 0.147}, {5: 0.2836, 6: 0.7164})


def largest_remainder(weights: Sequence[float], total: int, order_key=None) -> list[int]:
    """Integers summing to ``total`` proportional to ``weights``.

    Leftover units go to the largest fractional parts; ``order_key(i)``
    breaks ties between equal remainders (default: lower index first).
    """
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if total == 0 or s == 0:
        return [0] * len(w)
    exact = w * total / s
    base = np.floor(exact + 1e-9).astype(int)
    rem = exact - base
    left = total - int(base.sum())
    key = order_key or (lambda i: i)
    order = sorted(range(len(w)), key=lambda i: (-round(rem[i], 12), key(i)))
    for i in order[:max(left, 0)]:
        base[i] += 1
    return [int(v) for v in base]


@dataclass(frozen=True)
class TannerGraph:
    """Labeled bipartite graph; ``edges`` holds ``(symbol, check, label)`` sorted by symbol then check."""

    N: int
    M: int
    edges: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        edges = tuple(sorted((int(v), int(c), int(h)) for v, c, h in self.edges))
        object.__setattr__(self, "edges", edges)
        seen = set()
        for v, c, h in edges:
            if h == 0:
                raise ValueError(f"edge ({v}, {c}) has a zero label")
            if not (0 <= v < self.N and 0 <= c < self.M):
                raise ValueError(f"edge ({v}, {c}) is out of range")
            if (v, c) in seen:
                raise ValueError(f"parallel edges between symbol {v} and check {c}")
            seen.add((v, c))

    @cached_property
    def symbol_degrees(self) -> np.ndarray:
        return np.bincount([v for v, _, _ in self.edges], minlength=self.N)

    @cached_property
    def check_degrees(self) -> np.ndarray:
        return np.bincount([c for _, c, _ in self.edges], minlength=self.M)

    @cached_property
    def csr(self):
        """Arrays for the kernels: ``var_ptr, var_edges, chk_ptr, chk_edges, labels``."""
        E = len(self.edges)
        v = np.array([e[0] for e in self.edges], dtype=np.int64).reshape(E)
        c = np.array([e[1] for e in self.edges], dtype=np.int64).reshape(E)
        labels = np.array([e[2] for e in self.edges], dtype=np.int64).reshape(E)
        var_ptr = np.concatenate([[0], np.cumsum(np.bincount(v, minlength=self.N))])
        var_edges = np.argsort(v, kind="stable")
        chk_ptr = np.concatenate([[0], np.cumsum(np.bincount(c, minlength=self.M))])
        chk_edges = np.argsort(c, kind="stable")
        return var_ptr, var_edges, chk_ptr, chk_edges, labels

    def girth(self) -> int:
        """Length of the shortest cycle (``0`` if acyclic)."""
        adj_v = [[] for _ in range(self.N)]
        adj_c = [[] for _ in range(self.M)]
        for v, c, _ in self.edges:
            adj_v[v].append(c)
            adj_c[c].append(v)
        best = math.inf
        for root in range(self.N):
            # BFS over nodes; symbol i -> i, check j -> N + j
            dist = {root: 0}
            parent = {root: -1}
            frontier = [root]
            while frontier and 2 * dist[frontier[0]] < best:
                nxt = []
                for u in frontier:
                    nbrs = [self.N + w for w in adj_v[u]] if u < self.N else adj_c[u - self.N]
                    for w in nbrs:
                        if w == parent[u]:
                            continue
                        if w in dist:
                            best = min(best, dist[u] + dist[w] + 1)
                        else:
                            dist[w] = dist[u] + 1
                            parent[w] = u
                            nxt.append(w)
                frontier = nxt
        return 0 if best == math.inf else int(best)


@dataclass
class NBCode:
    """A non-binary LDPC code: the kernel of the parity-check matrix of ``graph``."""

    graph: TannerGraph
    field: GF
    meta: dict = dc_field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.graph.N

    @property
    def M(self) -> int:
        return self.graph.M

    @cached_property
    def H(self) -> np.ndarray:
        H = np.zeros((self.M, self.N), dtype=np.uint8)
        for v, c, h in self.graph.edges:
            H[c, v] = h
        return H

    @cached_property
    def _systematic(self):
        return gf_rref(self.field, self.H)

    @property
    def rank(self) -> int:
        return len(self._systematic[1])

    @property
    def K(self) -> int:
        return self.N - self.rank

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def info_positions(self) -> np.ndarray:
        """Symbol indices carrying the message (non-pivot columns of the reduced H)."""
        piv = set(self._systematic[1])
        return np.array([j for j in range(self.N) if j not in piv], dtype=np.int64)

    def syndrome(self, word: Sequence[int]) -> np.ndarray:
        x = np.asarray(word, dtype=np.int64)
        mul = self.field.mul_table
        out = np.zeros(self.M, dtype=np.uint8)
        for v, c, h in self.graph.edges:
            out[c] ^= mul[h, x[v]]
        return out

    def encode(self, message: Sequence[int]) -> np.ndarray:
        """Codeword with ``message`` on :attr:`info_positions`."""
        msg = np.asarray(message, dtype=np.int64)
        if msg.shape != (self.K,):
            raise ValueError(f"message must have {self.K} symbols, got shape {msg.shape}")
        if np.any((msg < 0) | (msg >= self.field.q)):
            raise ValueError("message symbols must lie in the field")
        R, pivots = self._systematic
        info = self.info_positions
        x = np.zeros(self.N, dtype=np.int64)
        x[info] = msg
        mul = self.field.mul_table
        # row i reads x[piv_i] + sum_j R[i, j] x_j = 0 over the info columns
        prods = mul[R[: len(pivots)][:, info], msg[None, :]] if len(info) else np.zeros((len(pivots), 0), np.uint8)
        x[list(pivots)] = np.bitwise_xor.reduce(prods, axis=1) if prods.shape[1] else 0
        return x


def gf_rref(gf: GF, H: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(q) with unit pivots; returns ``(R, pivot columns)``."""
    R = np.array(H, dtype=np.uint8)
    m, n = R.shape
    mul = gf.mul_table
    inv = np.array(gf.inv_table, dtype=np.uint8)
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.nonzero(R[row:, col])[0]
        if nz.size == 0:
            continue
        r = row + nz[0]
        if r != row:
            R[[row, r]] = R[[r, row]]
        R[row] = mul[inv[R[row, col]], R[row]]
        others = np.nonzero(R[:, col])[0]
        others = others[others != row]
        if others.size:
            R[others] ^= mul[R[others, col][:, None], R[row][None, :]]
        pivots.append(col)
        row += 1
    return R, pivots


# ---------------------------------------------------------------------------
# PEG


def _symbol_degree_sequence(dd: DegreeDistribution, N: int) -> list[int]:
    degs = dd.symbol_degrees
    counts = largest_remainder([dd.node_fraction(d) for d in degs], N)
    out = []
    for d, n in zip(degs, counts):
        out += [d] * n
    return out


def _check_degree_sequence(dd: DegreeDistribution, E: int) -> list[int]:
    M = max(1, round(E * dd.rho_integral))
    fr = dd.check_node_fractions()
    degs = list(fr)
    counts = largest_remainder([fr[d] for d in degs], M)
    seq = []
    for d, n in zip(degs, counts):
        seq += [d] * n
    diff = E - sum(seq)
    # spread the edge surplus/deficit one unit at a time, keeping degrees balanced
    while diff:
        if diff > 0:
            i = min(range(M), key=lambda j: (seq[j], j))
            seq[i] += 1
            diff -= 1
        else:
            i = min(range(M), key=lambda j: (-seq[j], j))
            seq[i] -= 1
            diff += 1
    return sorted(seq)


def peg_construct(dd: DegreeDistribution, N: int, gf: GF, seed=None) -> NBCode:
    """Progressive edge growth with uniformly random nonzero labels.

    Symbol nodes are processed in a seeded random order. Each new edge goes
    to a check with spare capacity that is farthest from the symbol in the
    current graph (unreachable if possible); ties go to the lowest current
    check degree, then the lowest rank in a seeded random order of the checks.

    Both orders are random on purpose. Processing by increasing degree with
    ties broken by check index gives every check the same mix of degree-2 and
    high-degree neighbours, and that graph decodes well below the ensemble
    threshold.
    """
    var_deg = _symbol_degree_sequence(dd, N)
    E = sum(var_deg)
    chk_target = _check_degree_sequence(dd, E)
    M = len(chk_target)
    if max(var_deg) > M:
        raise ValueError(f"symbol degree {max(var_deg)} exceeds the number of checks {M}")
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, gf.q, size=E)
    rank = np.empty(M, dtype=np.int64)
    rank[rng.permutation(M)] = np.arange(M)
    order = rng.permutation(N)

    pairs = _peg_edges([var_deg[i] for i in order], chk_target, rank.tolist())
    edges = [(int(order[v]), int(c), int(h)) for (v, c), h in zip(pairs, labels)]
    graph = TannerGraph(N, M, tuple(edges))
    return NBCode(graph, gf, {"construction": "peg", "seed": seed})


def _peg_edges(var_deg: Sequence[int], chk_target: Sequence[int],
               rank: Sequence[int] | None = None) -> list[tuple[int, int]]:
    N, M = len(var_deg), len(chk_target)
    rank = list(range(M)) if rank is None else rank
    var_adj: list[list[int]] = [[] for _ in range(N)]
    chk_adj: list[list[int]] = [[] for _ in range(M)]
    chk_deg = [0] * M
    mark = [0] * M
    vmark = [0] * N
    stamp = 0
    out = []

    def best(cands):
        return min(cands, key=lambda c: (chk_deg[c], rank[c]))

    for v in range(N):
        for j in range(var_deg[v]):
            avail = [c for c in range(M) if chk_deg[c] < chk_target[c] and c not in var_adj[v]]
            if not avail:
                _swap_repair(v, var_adj, chk_adj, chk_deg, chk_target, out)
                continue
            if j == 0:
                c = best(avail)
            else:
                stamp += 1
                depth = {}
                frontier = list(var_adj[v])
                for c0 in frontier:
                    mark[c0] = stamp
                    depth[c0] = 0
                vmark[v] = stamp
                level = 0
                n_unreached = sum(1 for c0 in avail if mark[c0] != stamp)
                while True:
                    if n_unreached == 0:
                        top = max(depth[c0] for c0 in avail)
                        c = best([c0 for c0 in avail if depth[c0] == top])
                        break
                    level += 1
                    nxt = []
                    for c0 in frontier:
                        for u in chk_adj[c0]:
                            if vmark[u] == stamp:
                                continue
                            vmark[u] = stamp
                            for c1 in var_adj[u]:
                                if mark[c1] != stamp:
                                    mark[c1] = stamp
                                    depth[c1] = level
                                    nxt.append(c1)
                    if not nxt:
                        c = best([c0 for c0 in avail if mark[c0] != stamp])
                        break
                    n_unreached -= sum(1 for c1 in nxt if chk_deg[c1] < chk_target[c1] and c1 not in var_adj[v])
                    frontier = nxt
            var_adj[v].append(c)
            chk_adj[c].append(v)
            chk_deg[c] += 1
            out.append((v, c))
    return out


def _swap_repair(v, var_adj, chk_adj, chk_deg, chk_target, out) -> None:
    """Free a check for ``v`` when every check with spare capacity is already its neighbour.

    An edge ``(u, c)`` with ``c`` not adjacent to ``v`` is moved to ``(u, s)``
    for a spare check ``s``; ``v`` then takes ``c``. Check degrees stay on
    target.
    """
    spare = [s for s in range(len(chk_deg)) if chk_deg[s] < chk_target[s]]
    for s in spare:
        for c in range(len(chk_deg)):
            if c in var_adj[v] or c == s:
                continue
            for u in chk_adj[c]:
                if u != v and s not in var_adj[u]:
                    chk_adj[c].remove(u)
                    var_adj[u][var_adj[u].index(c)] = s
                    chk_adj[s].append(u)
                    out[out.index((u, c))] = (u, s)
                    chk_deg[s] += 1
                    var_adj[v].append(c)
                    chk_adj[c].append(v)
                    out.append((v, c))
                    return
    raise ValueError(f"no check with spare capacity for symbol {v}")


# ---------------------------------------------------------------------------
# labeled alist files


def dumps_code(code: NBCode) -> str:
    g = code.graph
    lines = [f"# poly {code.field.poly}"]
    for k, v in code.meta.items():
        lines.append(f"# {k} {v}")
    lines.append(f"{g.N} {g.M} {code.field.q}")
    by_var: list[list[tuple[int, int]]] = [[] for _ in range(g.N)]
    for v, c, h in g.edges:
        by_var[v].append((c, h))
    for pairs in by_var:
        lines.append(f"{len(pairs)}: " + " ".join(f"({c},{h})" for c, h in pairs))
    return "\n".join(lines) + "\n"


def loads_code(text: str) -> NBCode:
    poly = None
    meta = {}
    body = []
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            parts = s[1:].split(None, 1)
            if parts and parts[0] == "poly":
                poly = int(parts[1])
            elif parts:
                meta[parts[0]] = parts[1] if len(parts) > 1 else ""
        elif s:
            body.append(s)
    if not body:
        raise ValueError("empty code file")
    try:
        N, M, q = (int(x) for x in body[0].split())
    except ValueError:
        raise ValueError(f"bad header {body[0]!r}; expected 'N M q'") from None
    p = q.bit_length() - 1
    if q != 1 << p:
        raise ValueError(f"q={q} is not a power of two")
    if len(body) - 1 != N:
        raise ValueError(f"expected {N} symbol lines, found {len(body) - 1}")
    edges = []
    for v, line in enumerate(body[1:]):
        head, _, rest = line.partition(":")
        pairs = [tok.strip("()").split(",") for tok in rest.split()]
        if int(head) != len(pairs):
            raise ValueError(f"symbol {v}: degree {head} but {len(pairs)} pairs")
        for c, h in pairs:
            if not 1 <= int(h) < q:
                raise ValueError(f"symbol {v}: label {h} outside [1, {q - 1}]")
            edges.append((v, int(c), int(h)))
    return NBCode(TannerGraph(N, M, tuple(edges)), field(p, poly), meta)


def write_code(code: NBCode, path) -> None:
    Path(path).write_text(dumps_code(code))


def read_code(path) -> NBCode:
    return loads_code(Path(path).read_text())
