"""Pure-Python kernels: the reference the compiled core must match bit for bit.

Sets of GF(2)^p (p <= 8) are bitmaps: bit ``x`` set iff ``x`` is a member.
At the array boundary a bitmap is four little-endian uint64 words, i.e. an
``(n, 4)`` uint64 array; internally this module uses Python ints.
"""

from __future__ import annotations

import numpy as np

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
WORDS = 4


# ---------------------------------------------------------------------------
# counter-based random streams


def fmix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


class Stream:
    """Random stream keyed by ``(seed, a, b)``; independent of call order elsewhere."""

    __slots__ = ("state",)

    def __init__(self, seed: int, a: int, b: int):
        self.state = fmix(fmix(fmix(seed & M64) ^ (a & M64)) ^ (b & M64))

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & M64
        return fmix(self.state)

    def uniform(self) -> float:
        return (self.next() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        return ((self.next() >> 32) * n) >> 32

    def pick(self, cdf) -> int:
        u = self.uniform()
        i = 0
        while u >= cdf[i]:
            i += 1
        return i


# ---------------------------------------------------------------------------
# bitmap set algebra


def words_to_int(row) -> int:
    v = 0
    for i, w in enumerate(row):
        v |= int(w) << (64 * i)
    return v


def int_to_words(v: int) -> list[int]:
    return [(v >> (64 * i)) & M64 for i in range(WORDS)]


def to_ints(arr: np.ndarray) -> list[int]:
    return [words_to_int(r) for r in np.asarray(arr, dtype=np.uint64).reshape(-1, WORDS)]


def to_words(vals) -> np.ndarray:
    return np.array([int_to_words(v) for v in vals], dtype=np.uint64).reshape(-1, WORDS)


def _lane_masks(p: int) -> list[int]:
    n = 1 << p
    return [sum(1 << x for x in range(n) if not (x >> i) & 1) for i in range(p)]


class SetAlgebra:
    """Bitmap operations on subsets of GF(2)^p for one field."""

    def __init__(self, p: int, mul_table, inv_table):
        self.p = p
        self.q = 1 << p
        self.full = (1 << self.q) - 1
        self.lanes = _lane_masks(p)
        self.mul = [[int(v) for v in row] for row in np.asarray(mul_table)]
        self.inv = [int(v) for v in inv_table]
        # halfspace[c] = {x : parity(x & c) = 0}
        self.halfspace = [0] * self.q
        for c in range(self.q):
            m = 0
            for x in range(self.q):
                if not bin(x & c).count("1") & 1:
                    m |= 1 << x
            self.halfspace[c] = m

    def translate(self, s: int, b: int) -> int:
        for i in range(self.p):
            if (b >> i) & 1:
                sh, lane = 1 << i, self.lanes[i]
                s = ((s & lane) << sh) | ((s >> sh) & lane)
        return s

    def gens(self, s: int) -> tuple[int, list[int]]:
        total = bin(s).count("1")
        o = (s & -s).bit_length() - 1
        span, size, g = 1, 1, []
        rest = s
        while size < total:
            e = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            v = e ^ o
            if not (span >> v) & 1:
                g.append(v)
                span |= self.translate(span, v)
                size *= 2
        return o, g

    def msum(self, a: int, b: int) -> int:
        if a == self.full or b == self.full:
            return self.full
        if bin(a).count("1") > bin(b).count("1"):
            a, b = b, a
        o, g = self.gens(a)
        r = self.translate(b, o)
        for v in g:
            r |= self.translate(r, v)
        return r

    def scale(self, s: int, h: int) -> int:
        if h == 1 or s == self.full:
            return s
        o, g = self.gens(s)
        mh = self.mul[h]
        r = 1 << mh[o]
        for v in g:
            r |= self.translate(r, mh[v])
        return r


def set_msum(p, mul_table, inv_table, a, b):
    """Row-wise Minkowski sum of two arrays of subspace bitmaps (4 words per row)."""
    alg = SetAlgebra(p, mul_table, inv_table)
    return to_words([alg.msum(x, y) for x, y in zip(to_ints(a), to_ints(b))])


def set_scale(p, mul_table, inv_table, a, labels):
    """Row-wise scaling of subspace bitmaps by nonzero field elements."""
    alg = SetAlgebra(p, mul_table, inv_table)
    return to_words([alg.scale(x, int(h)) for x, h in zip(to_ints(a), labels)])


def _singleton(s: int) -> bool:
    return s != 0 and s & (s - 1) == 0


# ---------------------------------------------------------------------------
# finite-length decoder


def channel_sets(p, cols, node_ptr, received, values):
    """Bitmap of ``{x : parity(x & c_j) = v_j}`` over each node's received columns."""
    alg = SetAlgebra(p, np.zeros((1 << p, 1 << p), np.uint8), np.zeros(1 << p, np.uint8))
    return to_words(_channel_ints(alg, cols, node_ptr, received, values))


def _channel_ints(alg, cols, node_ptr, received, values):
    out = []
    for n in range(len(node_ptr) - 1):
        s = alg.full
        for j in range(int(node_ptr[n]), int(node_ptr[n + 1])):
            if received[j]:
                h = alg.halfspace[int(cols[j])]
                s &= h if not values[j] else alg.full ^ h
        out.append(s)
    return out


def decode(p, mul_table, inv_table, var_ptr, var_edges, chk_ptr, chk_edges, edge_label, channel, max_iters):
    """Flooding eligible-set decoder; returns ``(posterior words, iterations)``.

    Iterates until no message changes (or ``max_iters``); ``iterations`` counts
    the rounds in which some message changed.
    """
    alg = SetAlgebra(p, mul_table, inv_table)
    ch = to_ints(channel)
    n_var = len(var_ptr) - 1
    n_chk = len(chk_ptr) - 1
    E = len(edge_label)
    labels = [int(h) for h in edge_label]
    c2v = [alg.full] * E
    v2c = [alg.full] * E
    iters = 0
    if any(s == 0 for s in ch):
        raise ValueError("empty channel set")
    if all(_singleton(s) for s in ch):
        return to_words(ch), 0
    for it in range(1, max_iters + 1):
        changed = False
        for n in range(n_var):
            es = [int(e) for e in var_edges[var_ptr[n]:var_ptr[n + 1]]]
            d = len(es)
            pre = [ch[n]] * (d + 1)
            for j in range(d):
                pre[j + 1] = pre[j] & c2v[es[j]]
            suf = alg.full
            for j in range(d - 1, -1, -1):
                m = pre[j] & suf
                if m != v2c[es[j]]:
                    v2c[es[j]] = m
                    changed = True
                suf &= c2v[es[j]]
        for c in range(n_chk):
            es = [int(e) for e in chk_edges[chk_ptr[c]:chk_ptr[c + 1]]]
            d = len(es)
            terms = [alg.scale(v2c[e], labels[e]) for e in es]
            pre = [0] * d
            acc = None
            for j in range(d):
                pre[j] = acc
                acc = terms[j] if acc is None else alg.msum(acc, terms[j])
            suf = None
            for j in range(d - 1, -1, -1):
                if pre[j] is None and suf is None:
                    s = 1  # empty sum: {0}
                elif pre[j] is None:
                    s = suf
                elif suf is None:
                    s = pre[j]
                else:
                    s = alg.msum(pre[j], suf)
                m = alg.scale(s, alg.inv[labels[es[j]]])
                if m != c2v[es[j]]:
                    c2v[es[j]] = m
                    changed = True
                suf = terms[j] if suf is None else alg.msum(suf, terms[j])
        if not changed:
            break
        iters = it
    post = []
    for n in range(n_var):
        s = ch[n]
        for e in var_edges[var_ptr[n]:var_ptr[n + 1]]:
            s &= c2v[int(e)]
        post.append(s)
    return to_words(post), iters


# ---------------------------------------------------------------------------
# Monte-Carlo density evolution


def _node_channel(alg, st, p, k, mode, fixed_cols, nontrivial, eps):
    if mode == 0:
        cols = fixed_cols[: p + k]
    else:
        arr = list(nontrivial)
        L = len(arr)
        for j in range(k):
            r = j + st.below(L - j)
            arr[j], arr[r] = arr[r], arr[j]
        cols = [1 << i for i in range(p)] + arr[:k]
    s = alg.full
    for c in cols:
        if st.uniform() >= eps:
            s &= alg.halfspace[int(c)]
    return s


def density_evolution(p, mul_table, inv_table, eps, seed, pop, max_iters, tol, stall_iters,
                      lam_deg, lam_cdf, node_cdf, k_cdf, mode, col_table, nontrivial,
                      rho_deg, rho_cdf):
    """Population-dynamics density evolution at erasure probability ``eps``.

    Returns ``(converged, residual, iterations, residual_trace)``.
    """
    alg = SetAlgebra(p, mul_table, inv_table)
    q = 1 << p
    lam_deg = [int(d) for d in lam_deg]
    rho_deg = [int(d) for d in rho_deg]
    lam_cdf = [float(v) for v in lam_cdf]
    node_cdf = [float(v) for v in node_cdf]
    rho_cdf = [float(v) for v in rho_cdf]
    k_cdf = [[float(v) for v in row] for row in np.asarray(k_cdf)]
    col_table = np.asarray(col_table)
    fixed = [[[int(c) for c in col_table[i, k]] for k in range(col_table.shape[1])] for i in range(col_table.shape[0])]
    nontrivial = [int(c) for c in nontrivial]
    c2v = [alg.full] * pop
    v2c = [alg.full] * pop

    def probe(it):
        bad = 0
        for s in range(pop):
            st = Stream(seed, 4 * it + 2, s)
            di = st.pick(node_cdf)
            k = st.pick(k_cdf[di])
            m = _node_channel(alg, st, p, k, mode, fixed[di][k], nontrivial, eps)
            for _ in range(lam_deg[di]):
                if _singleton(m):
                    break
                m &= c2v[st.below(pop)]
            if not _singleton(m):
                bad += 1
        return bad / pop

    trace = [probe(0)]
    best, since_best = trace[0], 0
    if trace[0] < tol:
        return True, trace[0], 0, trace
    for it in range(1, max_iters + 1):
        for s in range(pop):
            st = Stream(seed, 4 * it, s)
            di = st.pick(lam_cdf)
            k = st.pick(k_cdf[di])
            m = _node_channel(alg, st, p, k, mode, fixed[di][k], nontrivial, eps)
            for _ in range(lam_deg[di] - 1):
                if _singleton(m):
                    break
                m &= c2v[st.below(pop)]
            v2c[s] = m
        for s in range(pop):
            st = Stream(seed, 4 * it + 1, s)
            ci = st.pick(rho_cdf)
            h_out = 1 + st.below(q - 1)
            acc = None
            for _ in range(rho_deg[ci] - 1):
                m = alg.scale(v2c[st.below(pop)], 1 + st.below(q - 1))
                acc = m if acc is None else alg.msum(acc, m)
                if acc == alg.full:
                    break
            c2v[s] = 1 if acc is None else alg.scale(acc, alg.inv[h_out])
        r = probe(it)
        trace.append(r)
        if r < tol:
            return True, r, it, trace
        if r < best:
            best, since_best = r, 0
        else:
            since_best += 1
            if stall_iters and since_best >= stall_iters:
                return False, r, it, trace
    return False, trace[-1], max_iters, trace
