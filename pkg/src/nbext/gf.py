"""GF(2^p) arithmetic and GF(2) linear algebra.

Field elements are plain ints in ``[0, q-1]``; bit ``i`` of the int is the
coordinate ``x_i`` of the binary image. Binary vectors of length ``n <= 64``
are packed the same way (bit ``i`` = coordinate ``i``), which keeps rank and
span computations down to XOR on small ints.

Subsets of GF(2)^p are also handled as *bitmaps*: an int with bit ``x`` set
iff the vector ``x`` belongs to the set. The compiled kernels speak bitmaps;
:class:`AffineSubspace` is the canonical, human-facing form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

# x+1, x^2+x+1, x^3+x+1, x^4+x+1, x^5+x^2+1, x^6+x+1, x^7+x^3+1, x^8+x^4+x^3+x^2+1
DEFAULT_POLYS = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101,
                 6: 0b1000011, 7: 0b10001001, 8: 0b100011101}


class FieldMismatchError(ValueError):
    """Raised when operands belong to different fields."""


def _poly_mod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree <= deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for f in range(1 << d, 1 << (d + 1)):
            if _poly_mod(poly, f) == 0:
                return False
    return True


class GF:
    """The field GF(2^p) with log/antilog multiplication tables.

    Args:
        p: Bit width, ``1 <= p <= 8``.
        poly: Irreducible polynomial of degree ``p`` as a bitmask
            (``x^4+x+1`` is ``0b10011``). Defaults to :data:`DEFAULT_POLYS`.
    """

    def __init__(self, p: int, poly: int | None = None):
        if not 1 <= p <= 8:
            raise ValueError(f"p must be in [1, 8], got {p}")
        poly = DEFAULT_POLYS[p] if poly is None else int(poly)
        if poly.bit_length() - 1 != p or not is_irreducible(poly):
            raise ValueError(f"{poly:#b} is not an irreducible polynomial of degree {p}")
        self.p = p
        self.q = 1 << p
        self.poly = poly

        q = self.q
        mul = np.zeros((q, q), dtype=np.uint8)
        for a in range(q):
            for b in range(a, q):
                mul[a, b] = mul[b, a] = self._slow_mul(a, b)
        self.mul_table = mul
        self.mul_table.setflags(write=False)

        # any irreducible poly works: search a generator instead of assuming x is primitive
        self.generator = next(g for g in range(2, q) if self._order(g) == q - 1) if q > 2 else 1
        exp = [1] * (2 * (q - 1))
        log = [0] * q
        for i in range(1, 2 * (q - 1)):
            exp[i] = int(mul[exp[i - 1], self.generator])
        for i in range(q - 1):
            log[exp[i]] = i
        self.exp = tuple(exp)
        self.log = tuple(log)
        self.inv_table = tuple([0] + [exp[(q - 1 - log[a]) % (q - 1)] for a in range(1, q)])

    def _slow_mul(self, a: int, b: int) -> int:
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a >> self.p:
                a ^= self.poly
        return r

    def _order(self, g: int) -> int:
        x, n = g, 1
        while x != 1:
            x = int(self.mul_table[x, g])
            n += 1
        return n

    def __eq__(self, other):
        return isinstance(other, GF) and (self.p, self.poly) == (other.p, other.poly)

    def __hash__(self):
        return hash((self.p, self.poly))

    def __repr__(self):
        return f"GF(2^{self.p}, poly={self.poly:#b})"

    def _check(self, *xs: int):
        for x in xs:
            if not 0 <= x < self.q:
                raise ValueError(f"{x} is not an element of GF({self.q})")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            self._check(a, b)
            return 0
        self._check(a, b)
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError("inversion of zero in GF(2^p)")
        return self.inv_table[a]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def element(self, value: int) -> FieldElement:
        return FieldElement(self, value)

    def mul_matrix(self, h: int) -> np.ndarray:
        """p x p binary matrix ``M`` of ``x -> h*x``: ``bits(h*x) = M @ bits(x)``."""
        cols = [self.mul(h, 1 << j) for j in range(self.p)]
        return np.array([[(c >> i) & 1 for c in cols] for i in range(self.p)], dtype=np.uint8)

    def bit_decomp(self, k: int) -> np.ndarray:
        """Column ``[k] = (k_0, ..., k_{p-1})^T`` with ``k = sum k_i 2^i``."""
        if not 1 <= k <= self.q - 1:
            raise ValueError(f"k must be in [1, {self.q - 1}], got {k}")
        return np.array([(k >> i) & 1 for i in range(self.p)], dtype=np.uint8)


@dataclass(frozen=True)
class FieldElement:
    """A field element bound to its field, with ``+``, ``*`` and ``~`` (inverse)."""

    field: GF
    value: int

    def __post_init__(self):
        self.field._check(self.value)

    def _same(self, other: FieldElement):
        if not isinstance(other, FieldElement) or other.field != self.field:
            raise FieldMismatchError(f"{other!r} is not in {self.field!r}")

    def __add__(self, other: FieldElement) -> FieldElement:
        self._same(other)
        return FieldElement(self.field, self.value ^ other.value)

    __sub__ = __add__

    def __mul__(self, other: FieldElement) -> FieldElement:
        self._same(other)
        return FieldElement(self.field, self.field.mul(self.value, other.value))

    def __invert__(self) -> FieldElement:
        return FieldElement(self.field, self.field.inv(self.value))

    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.field.p))


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def gf_inv(a: FieldElement) -> FieldElement:
    return ~a


@lru_cache(maxsize=None)
def field(p: int, poly: int | None = None) -> GF:
    """Shared field instance (tables are built once per ``(p, poly)``)."""
    return GF(p, poly)


# ---------------------------------------------------------------------------
# packed binary vectors


def parity(x: int) -> int:
    return bin(x).count("1") & 1


def pack_bits(bits: Iterable[int]) -> int:
    v = 0
    for i, b in enumerate(bits):
        if b & 1:
            v |= 1 << i
    return v


def unpack_bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)


def reduce_basis(vectors: Iterable[int]) -> tuple[int, ...]:
    """Reduced echelon basis of the span of packed vectors.

    Pivot of a row is its highest set bit; rows are sorted by decreasing
    pivot and every pivot bit is cleared from all other rows, so the result
    depends only on the span.
    """
    rows: list[int] = []
    for v in vectors:
        for r in rows:
            v = min(v, v ^ r)
        if v:
            rows.append(v)
    rows.sort(reverse=True)
    for i in range(len(rows)):
        piv = 1 << (rows[i].bit_length() - 1)
        for j in range(len(rows)):
            if j != i and rows[j] & piv:
                rows[j] ^= rows[i]
    return tuple(sorted(rows, reverse=True))


def reduce_vector(v: int, basis: Sequence[int]) -> int:
    """Clear the pivot bits of ``v`` using a reduced basis."""
    for r in basis:
        if v & (1 << (r.bit_length() - 1)):
            v ^= r
    return v


def vector_rank(vectors: Iterable[int]) -> int:
    rows: list[int] = []
    for v in vectors:
        for r in rows:
            v = min(v, v ^ r)
        if v:
            rows.append(v)
    return len(rows)


# ---------------------------------------------------------------------------
# BitMatrix: 2-D numpy uint8 arrays over GF(2)


def as_bitmatrix(M) -> np.ndarray:
    a = np.asarray(M, dtype=np.uint8)
    if a.ndim != 2:
        raise ValueError("a BitMatrix is two-dimensional")
    return a & 1


def columns_to_matrix(columns: Sequence[int], p: int) -> np.ndarray:
    """p x t BitMatrix whose j-th column is the binary decomposition of ``columns[j]``."""
    return np.array([[(c >> i) & 1 for c in columns] for i in range(p)], dtype=np.uint8).reshape(p, len(columns))


def matrix_to_columns(M) -> list[int]:
    M = as_bitmatrix(M)
    return [pack_bits(M[:, j]) for j in range(M.shape[1])]


def rank(M) -> int:
    """Rank over GF(2)."""
    M = as_bitmatrix(M)
    return vector_rank(pack_bits(row) for row in M)


def rref(M) -> np.ndarray:
    """Reduced row-echelon form over GF(2), pivots scanned left to right."""
    R = as_bitmatrix(M).copy()
    m, n = R.shape
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.nonzero(R[row:, col])[0]
        if nz.size == 0:
            continue
        piv = row + nz[0]
        if piv != row:
            R[[row, piv]] = R[[piv, row]]
        for r in np.nonzero(R[:, col])[0]:
            if r != row:
                R[r] ^= R[row]
        row += 1
    return R


# ---------------------------------------------------------------------------
# affine subspaces of GF(2)^p


@dataclass(frozen=True)
class AffineSubspace:
    """``offset + span(basis)`` inside GF(2)^dim, or the empty set.

    Always canonical: ``basis`` is reduced (see :func:`reduce_basis`) and
    ``offset`` has every pivot bit cleared, so equal sets compare equal.
    The empty set has ``offset=None``.
    """

    dim: int
    offset: int | None
    basis: tuple[int, ...] = ()

    @classmethod
    def make(cls, dim: int, offset: int, generators: Iterable[int] = ()) -> AffineSubspace:
        basis = reduce_basis(generators)
        return cls(dim, reduce_vector(offset, basis), basis)

    @classmethod
    def full(cls, dim: int) -> AffineSubspace:
        return cls.make(dim, 0, [1 << i for i in range(dim)])

    @classmethod
    def point(cls, dim: int, x: int) -> AffineSubspace:
        return cls(dim, x, ())

    @classmethod
    def empty(cls, dim: int) -> AffineSubspace:
        return cls(dim, None, ())

    @property
    def is_empty(self) -> bool:
        return self.offset is None

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def cardinality(self) -> int:
        return 0 if self.is_empty else 1 << len(self.basis)

    def __len__(self):
        return self.cardinality

    @property
    def is_singleton(self) -> bool:
        return not self.is_empty and not self.basis

    def __contains__(self, x: int) -> bool:
        return not self.is_empty and reduce_vector(x, self.basis) == self.offset

    def elements(self) -> list[int]:
        if self.is_empty:
            return []
        out = [self.offset]
        for b in self.basis:
            out += [x ^ b for x in out]
        return sorted(out)

    def constant_bits(self) -> list[bool]:
        """Per coordinate: is it the same for every element? (vacuously true if empty)."""
        used = 0
        for b in self.basis:
            used |= b
        return [not (used >> i) & 1 for i in range(self.dim)]

    def constraints(self) -> list[tuple[int, int]]:
        """Pairs ``(c, y)`` with ``self = {x : parity(c & x) = y for all pairs}``."""
        if self.is_empty:
            return [(0, 1)]
        pivots = {r.bit_length() - 1: r for r in self.basis}
        out = []
        for j in range(self.dim):
            if j in pivots:
                continue
            # c = e_j + sum of pivots i whose basis row has bit j
            c = 1 << j
            for i, r in pivots.items():
                if (r >> j) & 1:
                    c |= 1 << i
            out.append((c, parity(c & self.offset)))
        return out

    def to_bitmap(self) -> int:
        if self.is_empty:
            return 0
        m = 0
        for x in self.elements():
            m |= 1 << x
        return m

    @classmethod
    def from_bitmap(cls, dim: int, bitmap: int) -> AffineSubspace:
        """Inverse of :meth:`to_bitmap`; raises if the set is not affine."""
        if bitmap == 0:
            return cls.empty(dim)
        o = (bitmap & -bitmap).bit_length() - 1
        elems = [x for x in range(1 << dim) if (bitmap >> x) & 1]
        s = cls.make(dim, o, [x ^ o for x in elems])
        if s.cardinality != len(elems):
            raise ValueError("bitmap is not an affine subspace")
        return s


def solve_affine(A, y, p: int | None = None) -> AffineSubspace:
    """Solutions ``x`` of ``x A = y`` over GF(2).

    Args:
        A: p x t BitMatrix, or a sequence of packed columns (then ``p`` is required).
        y: length-t bits.
    """
    if isinstance(A, np.ndarray):
        p = A.shape[0]
        cols = matrix_to_columns(A)
    else:
        cols = [int(c) for c in A]
        if p is None:
            raise ValueError("p is required when A is given as packed columns")
    y = [int(v) & 1 for v in y]
    if len(y) != len(cols):
        raise ValueError("y must have one entry per column of A")
    return _solve_constraints(p, zip(cols, y))


def _solve_constraints(p: int, constraints: Iterable[tuple[int, int]]) -> AffineSubspace:
    # gaussian elimination on augmented rows (c | y), pivot = highest bit of c
    rows: dict[int, tuple[int, int]] = {}
    for c, b in constraints:
        for piv, (rc, rb) in rows.items():
            if (c >> piv) & 1:
                c ^= rc
                b ^= rb
        if c == 0:
            if b:
                return AffineSubspace.empty(p)
            continue
        piv = c.bit_length() - 1
        for k, (rc, rb) in list(rows.items()):
            if (rc >> piv) & 1:
                rows[k] = (rc ^ c, rb ^ b)
        rows[piv] = (c, b)
    # rows are fully reduced: each pivot bit appears only in its own row
    offset = 0
    for piv, (_, b) in rows.items():
        if b:
            offset |= 1 << piv
    gens = []
    for j in range(p):
        if j in rows:
            continue
        v = 1 << j
        for piv, (rc, _) in rows.items():
            if (rc >> j) & 1:
                v |= 1 << piv
        gens.append(v)
    return AffineSubspace.make(p, offset, gens)


def subspace_intersect(s1: AffineSubspace, s2: AffineSubspace) -> AffineSubspace:
    if s1.dim != s2.dim:
        raise ValueError(f"ambient dimensions differ: {s1.dim} vs {s2.dim}")
    if s1.is_empty or s2.is_empty:
        return AffineSubspace.empty(s1.dim)
    return _solve_constraints(s1.dim, s1.constraints() + s2.constraints())


def subspace_map_sum(gf: GF, terms: Sequence[tuple[int, AffineSubspace]]) -> AffineSubspace:
    """The set ``{sum_j h_j s_j : s_j in S_j}`` for nonzero labels ``h_j``."""
    if not terms:
        raise ValueError("at least one term is required")
    offset, gens = 0, []
    for h, s in terms:
        if h == 0:
            raise ValueError("labels must be nonzero")
        if s.dim != gf.p:
            raise ValueError(f"subspace of GF(2)^{s.dim} in a map over GF(2^{gf.p})")
        if s.is_empty:
            return AffineSubspace.empty(gf.p)
        M = gf.mul_matrix(h)
        apply = lambda v: pack_bits(M @ unpack_bits(v, gf.p) & 1)  # noqa: E731
        offset ^= apply(s.offset)
        gens += [apply(b) for b in s.basis]
    return AffineSubspace.make(gf.p, offset, gens)
