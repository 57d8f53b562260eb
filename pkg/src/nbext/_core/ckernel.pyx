# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics (including every random draw) mirror pykernel.py."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, uint8_t, uint16_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef extern from *:
    """
    static inline int nb_popcount(unsigned long long x) { return __builtin_popcountll(x); }
    static inline int nb_ctz(unsigned long long x) { return __builtin_ctzll(x); }
    """
    int nb_popcount(unsigned long long x) nogil
    int nb_ctz(unsigned long long x) nogil

ctypedef struct bset:
    uint64_t w[4]

cdef uint64_t[6] LANE
LANE[0] = 0x5555555555555555ULL
LANE[1] = 0x3333333333333333ULL
LANE[2] = 0x0F0F0F0F0F0F0F0FULL
LANE[3] = 0x00FF00FF00FF00FFULL
LANE[4] = 0x0000FFFF0000FFFFULL
LANE[5] = 0x00000000FFFFFFFFULL


cdef struct Alg:
    int p
    int q
    bset full
    uint8_t mul[256][256]
    uint8_t inv[256]
    bset half[256]


cdef inline int count(const bset* s) nogil:
    return nb_popcount(s.w[0]) + nb_popcount(s.w[1]) + nb_popcount(s.w[2]) + nb_popcount(s.w[3])


cdef inline bint same(const bset* a, const bset* b) nogil:
    return a.w[0] == b.w[0] and a.w[1] == b.w[1] and a.w[2] == b.w[2] and a.w[3] == b.w[3]


cdef inline void band(bset* a, const bset* b) nogil:
    a.w[0] &= b.w[0]
    a.w[1] &= b.w[1]
    a.w[2] &= b.w[2]
    a.w[3] &= b.w[3]


cdef inline void bor(bset* a, const bset* b) nogil:
    a.w[0] |= b.w[0]
    a.w[1] |= b.w[1]
    a.w[2] |= b.w[2]
    a.w[3] |= b.w[3]


cdef inline bint test(const bset* s, int x) nogil:
    return (s.w[x >> 6] >> (x & 63)) & 1


cdef inline void single(bset* s, int x) nogil:
    s.w[0] = 0
    s.w[1] = 0
    s.w[2] = 0
    s.w[3] = 0
    s.w[x >> 6] = (<uint64_t>1) << (x & 63)


cdef inline bint is_single(const bset* s) nogil:
    return count(s) == 1


cdef inline void translate(bset* out, const bset* s, int b) nogil:
    cdef int i, j, sh
    cdef uint64_t x, t
    out[0] = s[0]
    for i in range(6):
        if (b >> i) & 1:
            sh = 1 << i
            for j in range(4):
                x = out.w[j]
                out.w[j] = ((x & LANE[i]) << sh) | ((x >> sh) & LANE[i])
    if b & 64:
        t = out.w[0]; out.w[0] = out.w[1]; out.w[1] = t
        t = out.w[2]; out.w[2] = out.w[3]; out.w[3] = t
    if b & 128:
        t = out.w[0]; out.w[0] = out.w[2]; out.w[2] = t
        t = out.w[1]; out.w[1] = out.w[3]; out.w[3] = t


cdef inline void close_under(bset* r, int v) nogil:
    cdef bset t
    translate(&t, r, v)
    bor(r, &t)


cdef int gens(const bset* s, int* o, int* g) nogil:
    """Offset (lowest element) and a generating set of the direction space."""
    cdef int total = count(s), size = 1, dim = 0, j, e, v
    cdef uint64_t rest
    cdef bset span
    o[0] = -1
    for j in range(4):
        if s.w[j]:
            o[0] = 64 * j + nb_ctz(s.w[j])
            break
    single(&span, 0)
    for j in range(4):
        rest = s.w[j]
        while rest and size < total:
            e = 64 * j + nb_ctz(rest)
            rest &= rest - 1
            v = e ^ o[0]
            if not test(&span, v):
                g[dim] = v
                dim += 1
                close_under(&span, v)
                size *= 2
        if size >= total:
            break
    return dim


cdef inline void msum(Alg* A, bset* out, const bset* a, const bset* b) nogil:
    cdef int o, dim, i
    cdef int g[8]
    cdef const bset* tmp
    if same(a, &A.full) or same(b, &A.full):
        out[0] = A.full
        return
    if count(a) > count(b):
        tmp = a; a = b; b = tmp
    dim = gens(a, &o, g)
    translate(out, b, o)
    for i in range(dim):
        close_under(out, g[i])


cdef inline void scale(Alg* A, bset* out, const bset* s, int h) nogil:
    cdef int o, dim, i
    cdef int g[8]
    if h == 1 or same(s, &A.full):
        out[0] = s[0]
        return
    dim = gens(s, &o, g)
    single(out, A.mul[h][o])
    for i in range(dim):
        close_under(out, A.mul[h][g[i]])


cdef Alg* make_alg(int p, mul_table, inv_table) except NULL:
    cdef const cnp.uint8_t[:, :] mt = np.ascontiguousarray(mul_table, dtype=np.uint8)
    cdef const cnp.uint8_t[:] it = np.ascontiguousarray(inv_table, dtype=np.uint8)
    cdef int a, b, x, c, q = 1 << p
    if not 1 <= p <= 8 or mt.shape[0] < q or mt.shape[1] < q or it.shape[0] < q:
        raise ValueError("field tables do not match p")
    cdef Alg* A = <Alg*>malloc(sizeof(Alg))
    if A == NULL:
        raise MemoryError()
    A.p = p
    A.q = q
    for a in range(q):
        A.inv[a] = it[a]
        for b in range(q):
            A.mul[a][b] = mt[a, b]
    for a in range(4):
        A.full.w[a] = 0
    for x in range(q):
        A.full.w[x >> 6] |= (<uint64_t>1) << (x & 63)
    for c in range(q):
        for a in range(4):
            A.half[c].w[a] = 0
        for x in range(q):
            if not (nb_popcount(x & c) & 1):
                A.half[c].w[x >> 6] |= (<uint64_t>1) << (x & 63)
    return A


cdef inline void load(bset* s, const uint64_t[:, :] arr, Py_ssize_t i) nogil:
    s.w[0] = arr[i, 0]
    s.w[1] = arr[i, 1]
    s.w[2] = arr[i, 2]
    s.w[3] = arr[i, 3]


cdef inline void store(uint64_t[:, :] arr, Py_ssize_t i, const bset* s) nogil:
    arr[i, 0] = s.w[0]
    arr[i, 1] = s.w[1]
    arr[i, 2] = s.w[2]
    arr[i, 3] = s.w[3]


# ---------------------------------------------------------------------------
# random streams

cdef inline uint64_t fmix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream(uint64_t seed, uint64_t a, uint64_t b) nogil:
    return fmix(fmix(fmix(seed) ^ a) ^ b)


cdef inline uint64_t rnext(uint64_t* st) nogil:
    st[0] += 0x9E3779B97F4A7C15ULL
    return fmix(st[0])


cdef inline double runif(uint64_t* st) nogil:
    return <double>(rnext(st) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int rbelow(uint64_t* st, int n) nogil:
    return <int>(((rnext(st) >> 32) * <uint64_t>n) >> 32)


cdef inline int rpick(uint64_t* st, const double* cdf) nogil:
    cdef double u = runif(st)
    cdef int i = 0
    while u >= cdf[i]:
        i += 1
    return i


def stream_draws(uint64_t seed, uint64_t a, uint64_t b, int n):
    """First ``n`` raw outputs of a stream (cross-checked against the Python stream)."""
    cdef uint64_t st = stream(seed, a, b)
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[:] o = out
    cdef int i
    for i in range(n):
        o[i] = rnext(&st)
    return out


# ---------------------------------------------------------------------------
# set algebra entry points (used by tests and benchmarks)

def set_msum(int p, mul_table, inv_table, a, b):
    cdef Alg* A = make_alg(p, mul_table, inv_table)
    cdef const uint64_t[:, :] aa = np.ascontiguousarray(a, dtype=np.uint64).reshape(-1, 4)
    cdef const uint64_t[:, :] bb = np.ascontiguousarray(b, dtype=np.uint64).reshape(-1, 4)
    out = np.empty((aa.shape[0], 4), dtype=np.uint64)
    cdef uint64_t[:, :] oo = out
    cdef bset x, y, r
    cdef Py_ssize_t i
    try:
        for i in range(aa.shape[0]):
            load(&x, aa, i)
            load(&y, bb, i)
            msum(A, &r, &x, &y)
            store(oo, i, &r)
    finally:
        free(A)
    return out


def set_scale(int p, mul_table, inv_table, a, labels):
    cdef Alg* A = make_alg(p, mul_table, inv_table)
    cdef const uint64_t[:, :] aa = np.ascontiguousarray(a, dtype=np.uint64).reshape(-1, 4)
    cdef const long[:] hh = np.ascontiguousarray(labels, dtype=np.int_)
    out = np.empty((aa.shape[0], 4), dtype=np.uint64)
    cdef uint64_t[:, :] oo = out
    cdef bset x, r
    cdef Py_ssize_t i
    try:
        for i in range(aa.shape[0]):
            load(&x, aa, i)
            scale(A, &r, &x, hh[i])
            store(oo, i, &r)
    finally:
        free(A)
    return out


# ---------------------------------------------------------------------------
# finite-length decoder

def channel_sets(int p, cols, node_ptr, received, values):
    cdef Alg* A = make_alg(p, np.zeros((1 << p, 1 << p), np.uint8), np.zeros(1 << p, np.uint8))
    cdef const long[:] cc = np.ascontiguousarray(cols, dtype=np.int_)
    cdef const long[:] ptr = np.ascontiguousarray(node_ptr, dtype=np.int_)
    cdef const cnp.uint8_t[:] rec = np.ascontiguousarray(received, dtype=np.uint8)
    cdef const cnp.uint8_t[:] val = np.ascontiguousarray(values, dtype=np.uint8)
    cdef Py_ssize_t n, j, N = ptr.shape[0] - 1
    out = np.empty((N, 4), dtype=np.uint64)
    cdef uint64_t[:, :] oo = out
    cdef bset s, h
    try:
        for n in range(N):
            s = A.full
            for j in range(ptr[n], ptr[n + 1]):
                if rec[j]:
                    h = A.half[cc[j]]
                    if val[j]:
                        h.w[0] ^= A.full.w[0]; h.w[1] ^= A.full.w[1]
                        h.w[2] ^= A.full.w[2]; h.w[3] ^= A.full.w[3]
                    band(&s, &h)
            store(oo, n, &s)
    finally:
        free(A)
    return out


def decode(int p, mul_table, inv_table, var_ptr, var_edges, chk_ptr, chk_edges, edge_label, channel, int max_iters):
    cdef Alg* A = make_alg(p, mul_table, inv_table)
    cdef const long[:] vp = np.ascontiguousarray(var_ptr, dtype=np.int_)
    cdef const long[:] ve = np.ascontiguousarray(var_edges, dtype=np.int_)
    cdef const long[:] cp = np.ascontiguousarray(chk_ptr, dtype=np.int_)
    cdef const long[:] ce = np.ascontiguousarray(chk_edges, dtype=np.int_)
    cdef const long[:] lab = np.ascontiguousarray(edge_label, dtype=np.int_)
    cdef const uint64_t[:, :] chv = np.ascontiguousarray(channel, dtype=np.uint64).reshape(-1, 4)
    cdef Py_ssize_t n_var = vp.shape[0] - 1, n_chk = cp.shape[0] - 1, E = lab.shape[0]
    cdef Py_ssize_t n, c, j, d, e, maxd = 1
    cdef int it, iters = 0
    cdef bint changed, all_single = True
    cdef bset s, m, suf
    for n in range(n_var):
        maxd = max(maxd, vp[n + 1] - vp[n])
    for c in range(n_chk):
        maxd = max(maxd, cp[c + 1] - cp[c])
    cdef bset* c2v = <bset*>malloc(max(E, 1) * sizeof(bset))
    cdef bset* v2c = <bset*>malloc(max(E, 1) * sizeof(bset))
    cdef bset* ch = <bset*>malloc(max(n_var, 1) * sizeof(bset))
    cdef bset* pre = <bset*>malloc((maxd + 1) * sizeof(bset))
    cdef bset* terms = <bset*>malloc((maxd + 1) * sizeof(bset))
    post = np.empty((n_var, 4), dtype=np.uint64)
    cdef uint64_t[:, :] po = post
    try:
        if c2v == NULL or v2c == NULL or ch == NULL or pre == NULL or terms == NULL:
            raise MemoryError()
        for n in range(n_var):
            load(&ch[n], chv, n)
            if count(&ch[n]) == 0:
                raise ValueError("empty channel set")
            if count(&ch[n]) != 1:
                all_single = False
        for e in range(E):
            c2v[e] = A.full
            v2c[e] = A.full
        if not all_single:
            with nogil:
                for it in range(1, max_iters + 1):
                    changed = False
                    for n in range(n_var):
                        d = vp[n + 1] - vp[n]
                        pre[0] = ch[n]
                        for j in range(d):
                            pre[j + 1] = pre[j]
                            band(&pre[j + 1], &c2v[ve[vp[n] + j]])
                        suf = A.full
                        for j in range(d - 1, -1, -1):
                            e = ve[vp[n] + j]
                            m = pre[j]
                            band(&m, &suf)
                            if not same(&m, &v2c[e]):
                                v2c[e] = m
                                changed = True
                            band(&suf, &c2v[e])
                    for c in range(n_chk):
                        d = cp[c + 1] - cp[c]
                        # pre[j] = sum of terms[0..j-1]; pre[0] unused (empty prefix)
                        for j in range(d):
                            e = ce[cp[c] + j]
                            scale(A, &terms[j], &v2c[e], lab[e])
                            if j == 1:
                                pre[1] = terms[0]
                            elif j > 1:
                                msum(A, &pre[j], &pre[j - 1], &terms[j - 1])
                        for j in range(d - 1, -1, -1):
                            e = ce[cp[c] + j]
                            if j == 0 and j == d - 1:
                                single(&s, 0)
                            elif j == 0:
                                s = suf
                            elif j == d - 1:
                                s = pre[j]
                            else:
                                msum(A, &s, &pre[j], &suf)
                            scale(A, &m, &s, A.inv[lab[e]])
                            if not same(&m, &c2v[e]):
                                c2v[e] = m
                                changed = True
                            if j == d - 1:
                                suf = terms[j]
                            else:
                                msum(A, &suf, &suf, &terms[j])
                    if not changed:
                        break
                    iters = it
        for n in range(n_var):
            s = ch[n]
            for j in range(vp[n], vp[n + 1]):
                band(&s, &c2v[ve[j]])
            store(po, n, &s)
    finally:
        free(c2v)
        free(v2c)
        free(ch)
        free(pre)
        free(terms)
        free(A)
    return post, iters


# ---------------------------------------------------------------------------
# Monte-Carlo density evolution

cdef inline void node_channel(Alg* A, bset* s, uint64_t* st, int k, int mode, const long* fixed,
                              const long* nontrivial, int L, long* scratch, double eps) nogil:
    cdef int j, r, t, c
    cdef long tmp
    s[0] = A.full
    if mode == 0:
        for j in range(A.p + k):
            c = fixed[j]
            if runif(st) >= eps:
                band(s, &A.half[c])
    else:
        for j in range(L):
            scratch[j] = nontrivial[j]
        for j in range(k):
            r = j + rbelow(st, L - j)
            tmp = scratch[j]; scratch[j] = scratch[r]; scratch[r] = tmp
        for j in range(A.p + k):
            c = (1 << j) if j < A.p else scratch[j - A.p]
            if runif(st) >= eps:
                band(s, &A.half[c])


def _de_bitmap(int p, mul_table, inv_table, double eps, uint64_t seed, int pop, int max_iters,
               double tol, int stall_iters, lam_deg, lam_cdf, node_cdf, k_cdf, int mode,
               col_table, nontrivial, rho_deg, rho_cdf):
    cdef Alg* A = make_alg(p, mul_table, inv_table)
    cdef const long[:] ld = np.ascontiguousarray(lam_deg, dtype=np.int_)
    cdef const double[:] lc = np.ascontiguousarray(lam_cdf, dtype=np.float64)
    cdef const double[:] nc = np.ascontiguousarray(node_cdf, dtype=np.float64)
    cdef const double[:, :] kc = np.ascontiguousarray(k_cdf, dtype=np.float64)
    cdef const long[:, :, :] ct = np.ascontiguousarray(col_table, dtype=np.int_)
    cdef const long[:] nt = np.ascontiguousarray(nontrivial, dtype=np.int_)
    cdef const long[:] rd = np.ascontiguousarray(rho_deg, dtype=np.int_)
    cdef const double[:] rc = np.ascontiguousarray(rho_cdf, dtype=np.float64)
    cdef int q = 1 << p, L = nt.shape[0], it, s, di, k, j, ci, h_out, idx, h, bad, since_best = 0
    cdef long dummy = 0
    cdef const long* ntp = &nt[0] if L > 0 else &dummy
    cdef uint64_t st
    cdef double r, best
    cdef bint have
    cdef bset m, acc, t
    cdef bset* c2v = <bset*>malloc(pop * sizeof(bset))
    cdef bset* v2c = <bset*>malloc(pop * sizeof(bset))
    cdef long* scratch = <long*>malloc((L + 1) * sizeof(long))
    trace = []
    try:
        if c2v == NULL or v2c == NULL or scratch == NULL:
            raise MemoryError()
        for s in range(pop):
            c2v[s] = A.full
            v2c[s] = A.full
        it = 0
        while True:
            if it > 0:
                with nogil:
                    for s in range(pop):
                        st = stream(seed, 4 * it, s)
                        di = rpick(&st, &lc[0])
                        k = rpick(&st, &kc[di, 0])
                        node_channel(A, &m, &st, k, mode, &ct[di, k, 0], ntp, L, scratch, eps)
                        for j in range(ld[di] - 1):
                            if is_single(&m):
                                break
                            band(&m, &c2v[rbelow(&st, pop)])
                        v2c[s] = m
                    for s in range(pop):
                        st = stream(seed, 4 * it + 1, s)
                        ci = rpick(&st, &rc[0])
                        h_out = 1 + rbelow(&st, q - 1)
                        have = False
                        for j in range(rd[ci] - 1):
                            idx = rbelow(&st, pop)
                            h = 1 + rbelow(&st, q - 1)
                            scale(A, &t, &v2c[idx], h)
                            if have:
                                msum(A, &acc, &acc, &t)
                            else:
                                acc = t
                                have = True
                            if same(&acc, &A.full):
                                break
                        if have:
                            scale(A, &c2v[s], &acc, A.inv[h_out])
                        else:
                            single(&c2v[s], 0)
            bad = 0
            with nogil:
                for s in range(pop):
                    st = stream(seed, 4 * it + 2, s)
                    di = rpick(&st, &nc[0])
                    k = rpick(&st, &kc[di, 0])
                    node_channel(A, &m, &st, k, mode, &ct[di, k, 0], ntp, L, scratch, eps)
                    for j in range(ld[di]):
                        if is_single(&m):
                            break
                        band(&m, &c2v[rbelow(&st, pop)])
                    if not is_single(&m):
                        bad += 1
            r = bad / <double>pop
            trace.append(r)
            if r < tol:
                return True, r, it, trace
            if it == 0:
                best = r
            elif r < best:
                best = r
                since_best = 0
            else:
                since_best += 1
                if stall_iters > 0 and since_best >= stall_iters:
                    return False, r, it, trace
            if it == max_iters:
                return False, r, it, trace
            it += 1
    finally:
        free(c2v)
        free(v2c)
        free(scratch)
        free(A)


# Under the all-zero codeword every DE set is a linear subspace. For small
# fields there are few of them (67 for p = 4, 374 for p = 5), so the set
# operations become lookups on subspace ids. Draws are unchanged, so the
# result is identical to the bitmap path.

TABLE_MAX_P = 5
_tables = {}


def subspace_tables(int p, mul_table, inv_table):
    """(masks, band, add, scale, half, single, full_id, zero_id) for GF(2^p), cached."""
    q = 1 << p  # a Python int: masks can exceed a C int
    mt = np.ascontiguousarray(np.asarray(mul_table)[:q, :q], dtype=np.uint8)
    key = (p, mt.tobytes())
    hit = _tables.get(key)
    if hit is not None:
        return hit
    full = (1 << q) - 1
    half = [sum(1 << x for x in range(q) if bin(x & c).count("1") % 2 == 0) for c in range(q)]
    subs = {full}
    frontier = [full]
    while frontier:
        nxt = []
        for s in frontier:
            for c in range(1, q):
                t = s & half[c]
                if t not in subs:
                    subs.add(t)
                    nxt.append(t)
        frontier = nxt
    masks = sorted(subs)
    n = len(masks)
    index = {m: i for i, m in enumerate(masks)}
    words = np.zeros((n, 4), dtype=np.uint64)
    words[:, 0] = masks
    ia, ib = np.repeat(np.arange(n), n), np.tile(np.arange(n), n)
    band = np.array([index[masks[a] & masks[b]] for a, b in zip(ia, ib)], dtype=np.uint16).reshape(n, n)
    summed = set_msum(p, mul_table, inv_table, words[ia], words[ib])[:, 0]
    add = np.array([index[int(m)] for m in summed], dtype=np.uint16).reshape(n, n)
    scale_tab = np.zeros((q, n), dtype=np.uint16)
    for h in range(1, q):
        scaled = set_scale(p, mul_table, inv_table, words, np.full(n, h))[:, 0]
        scale_tab[h] = [index[int(m)] for m in scaled]
    half_id = np.array([index[m] for m in half], dtype=np.uint16)
    single = np.array([bin(m).count("1") == 1 for m in masks], dtype=np.uint8)
    out = (masks, band, add, scale_tab, half_id, single, index[full], index[1])
    _tables[key] = out
    return out


cdef inline int node_channel_id(const uint16_t* band, int n, const uint16_t* half, int full, int p,
                                uint64_t* st, int k, int mode, const long* fixed, const long* nontrivial,
                                int L, long* scratch, double eps) nogil:
    cdef int j, r, c, s = full
    cdef long tmp
    if mode == 0:
        for j in range(p + k):
            c = fixed[j]
            if runif(st) >= eps:
                s = band[s * n + half[c]]
    else:
        for j in range(L):
            scratch[j] = nontrivial[j]
        for j in range(k):
            r = j + rbelow(st, L - j)
            tmp = scratch[j]; scratch[j] = scratch[r]; scratch[r] = tmp
        for j in range(p + k):
            c = (1 << j) if j < p else scratch[j - p]
            if runif(st) >= eps:
                s = band[s * n + half[c]]
    return s


def _de_table(int p, mul_table, inv_table, double eps, uint64_t seed, int pop, int max_iters,
              double tol, int stall_iters, lam_deg, lam_cdf, node_cdf, k_cdf, int mode,
              col_table, nontrivial, rho_deg, rho_cdf):
    masks, band_a, add_a, scale_a, half_a, single_a, full_id, zero_id = subspace_tables(p, mul_table, inv_table)
    cdef const uint16_t[:, :] bnd = band_a
    cdef const uint16_t[:, :] add = add_a
    cdef const uint16_t[:, :] scl = scale_a
    cdef const uint16_t[:] hlf = half_a
    cdef const uint8_t[:] sgl = single_a
    cdef const uint8_t[:] inv = np.ascontiguousarray(inv_table, dtype=np.uint8)
    cdef const long[:] ld = np.ascontiguousarray(lam_deg, dtype=np.int_)
    cdef const double[:] lc = np.ascontiguousarray(lam_cdf, dtype=np.float64)
    cdef const double[:] nc = np.ascontiguousarray(node_cdf, dtype=np.float64)
    cdef const double[:, :] kc = np.ascontiguousarray(k_cdf, dtype=np.float64)
    cdef const long[:, :, :] ct = np.ascontiguousarray(col_table, dtype=np.int_)
    cdef const long[:] nt = np.ascontiguousarray(nontrivial, dtype=np.int_)
    cdef const long[:] rd = np.ascontiguousarray(rho_deg, dtype=np.int_)
    cdef const double[:] rc = np.ascontiguousarray(rho_cdf, dtype=np.float64)
    cdef int n = len(masks), full = full_id, zero = zero_id
    cdef int q = 1 << p, L = nt.shape[0], it, s, di, k, j, ci, h_out, h, m, acc, t, bad, since_best = 0
    cdef long dummy = 0
    cdef const long* ntp = &nt[0] if L > 0 else &dummy
    cdef const uint16_t* bp = &bnd[0, 0]
    cdef const uint16_t* ap = &add[0, 0]
    cdef uint64_t st
    cdef double r, best
    cdef bint have
    cdef uint16_t* c2v = <uint16_t*>malloc(pop * sizeof(uint16_t))
    cdef uint16_t* v2c = <uint16_t*>malloc(pop * sizeof(uint16_t))
    cdef long* scratch = <long*>malloc((L + 1) * sizeof(long))
    trace = []
    try:
        if c2v == NULL or v2c == NULL or scratch == NULL:
            raise MemoryError()
        for s in range(pop):
            c2v[s] = full
            v2c[s] = full
        it = 0
        while True:
            if it > 0:
                with nogil:
                    for s in range(pop):
                        st = stream(seed, 4 * it, s)
                        di = rpick(&st, &lc[0])
                        k = rpick(&st, &kc[di, 0])
                        m = node_channel_id(bp, n, &hlf[0], full, p, &st, k, mode, &ct[di, k, 0], ntp, L,
                                            scratch, eps)
                        for j in range(ld[di] - 1):
                            if sgl[m]:
                                break
                            m = bp[m * n + c2v[rbelow(&st, pop)]]
                        v2c[s] = m
                    for s in range(pop):
                        st = stream(seed, 4 * it + 1, s)
                        ci = rpick(&st, &rc[0])
                        h_out = 1 + rbelow(&st, q - 1)
                        have = False
                        acc = zero
                        for j in range(rd[ci] - 1):
                            t = v2c[rbelow(&st, pop)]
                            h = 1 + rbelow(&st, q - 1)
                            t = scl[h, t]
                            if have:
                                acc = ap[acc * n + t]
                            else:
                                acc = t
                                have = True
                            if acc == full:
                                break
                        c2v[s] = scl[inv[h_out], acc] if have else zero
            bad = 0
            with nogil:
                for s in range(pop):
                    st = stream(seed, 4 * it + 2, s)
                    di = rpick(&st, &nc[0])
                    k = rpick(&st, &kc[di, 0])
                    m = node_channel_id(bp, n, &hlf[0], full, p, &st, k, mode, &ct[di, k, 0], ntp, L,
                                        scratch, eps)
                    for j in range(ld[di]):
                        if sgl[m]:
                            break
                        m = bp[m * n + c2v[rbelow(&st, pop)]]
                    if not sgl[m]:
                        bad += 1
            r = bad / <double>pop
            trace.append(r)
            if r < tol:
                return True, r, it, trace
            if it == 0:
                best = r
            elif r < best:
                best = r
                since_best = 0
            else:
                since_best += 1
                if stall_iters > 0 and since_best >= stall_iters:
                    return False, r, it, trace
            if it == max_iters:
                return False, r, it, trace
            it += 1
    finally:
        free(c2v)
        free(v2c)
        free(scratch)


def density_evolution(int p, mul_table, inv_table, double eps, uint64_t seed, int pop, int max_iters,
                      double tol, int stall_iters, lam_deg, lam_cdf, node_cdf, k_cdf, int mode,
                      col_table, nontrivial, rho_deg, rho_cdf):
    """One MC-DE run; returns ``(converged, residual, iterations, trace)``."""
    run = _de_table if p <= TABLE_MAX_P else _de_bitmap
    return run(p, mul_table, inv_table, eps, seed, pop, max_iters, tol, stall_iters, lam_deg, lam_cdf,
               node_cdf, k_cdf, mode, col_table, nontrivial, rho_deg, rho_cdf)
