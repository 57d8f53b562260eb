from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbext.extension import (ExtensionMatrix, dmin, eligible_weight, expected_eligible, expected_eligible_mc,
                             extend, extended_bit, nontrivial_columns, random_extension, select_extension)
from nbext.gf import field, parity, vector_rank

F3, F4 = field(3), field(4)


def brute_dmin(cols):
    # smallest linearly dependent subset, straight from the rank definition
    for s in range(1, len(cols) + 1):
        for combo in itertools.combinations(cols, s):
            if vector_rank(combo) < s:
                return s
    return len(cols) + 1


def brute_E(A, eps):
    p, t = A.field.p, A.t
    total = 0.0
    for mask in range(1 << t):
        rec = [c for j, c in enumerate(A.columns) if (mask >> j) & 1]
        i = len(rec)
        total += (1 - eps) ** i * eps ** (t - i) * 2 ** (p - vector_rank(rec))
    return total


def test_matrix_invariants():
    with pytest.raises(ValueError):
        ExtensionMatrix(F4, (1, 2, 4, 8, 8))
    with pytest.raises(ValueError):
        ExtensionMatrix(F4, (2, 1, 4, 8))
    with pytest.raises(ValueError):
        ExtensionMatrix(F4, (1, 2, 4, 8, 16))
    rep = ExtensionMatrix.with_extra(F4, [1], strict=False)
    assert rep.k_ext == 1 and dmin(rep) == 2
    A = ExtensionMatrix.parse(F4, "1,2,4,8,15")
    assert str(A) == "1,2,4,8,15" and A.extra == (15,) and A.t == 5
    assert A.as_bitmatrix()[:, 4].tolist() == [1, 1, 1, 1]


def test_extended_bit_examples():
    for x in range(16):
        for i in range(4):
            assert extended_bit(F4, x, 1 << i) == (x >> i) & 1
        assert extended_bit(F4, 0, x or 1) == 0
    for x in range(8):
        assert extended_bit(F3, x, 5) == (x & 1) ^ (x >> 2 & 1)
    with pytest.raises(ValueError):
        extended_bit(F3, 1, 8)


def test_extend_examples():
    A = ExtensionMatrix(F3, (1, 2, 4, 5, 6))
    for x in range(8):
        x0, x1, x2 = x & 1, x >> 1 & 1, x >> 2 & 1
        assert extend(x, A).tolist() == [x0, x1, x2, x0 ^ x2, x1 ^ x2]
    full = ExtensionMatrix.with_extra(F4, nontrivial_columns(F4))
    assert extend(1, full).tolist() == [1, 0, 0, 0] + [c & 1 for c in nontrivial_columns(F4)]
    for x in range(16):
        assert extend(x, full)[:4].tolist() == [(x >> i) & 1 for i in range(4)]
        assert extend(x, ExtensionMatrix.identity(F4)).tolist() == [(x >> i) & 1 for i in range(4)]


def test_dmin_examples():
    assert dmin(ExtensionMatrix.with_extra(F4, [3])) == 3
    assert dmin(ExtensionMatrix.with_extra(F4, [15])) == 5
    assert dmin(ExtensionMatrix.identity(F4)) == 5
    assert dmin(ExtensionMatrix.identity(F3)) == 4
    # the three dmin values available for a single extra bit over GF(16)
    assert sorted({dmin(ExtensionMatrix.with_extra(F4, [c])) for c in nontrivial_columns(F4)}) == [3, 4, 5]


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_dmin_matches_brute_force_all_matrices(k):
    for extra in itertools.combinations(nontrivial_columns(F4), k):
        A = ExtensionMatrix.with_extra(F4, extra)
        assert dmin(A) == brute_dmin(A.columns)


def test_expected_eligible_examples():
    A = ExtensionMatrix.with_extra(F4, [15, 7])
    assert expected_eligible(A, 0.0) == pytest.approx(1.0)
    assert expected_eligible(A, 1.0) == pytest.approx(16.0)
    f1 = field(1)
    for eps in (0.0, 0.3, 0.8, 1.0):
        assert expected_eligible(ExtensionMatrix.identity(f1), eps) == pytest.approx(1 + eps)
    with pytest.raises(ValueError):
        expected_eligible(A, 1.5)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.sampled_from(nontrivial_columns(F4)), max_size=5), st.floats(0, 1))
def test_expected_eligible_matches_formula_enumeration(extra, eps):
    A = ExtensionMatrix.with_extra(F4, sorted(extra))
    assert expected_eligible(A, eps) == pytest.approx(brute_E(A, eps), rel=1e-12, abs=1e-12)
    assert eligible_weight(A) == round(brute_E(A, 0.5) * 2 ** A.t)


def test_expected_eligible_mc_within_3_sigma():
    A = ExtensionMatrix.with_extra(F4, [7, 11])
    for eps in (0.2, 0.5, 0.8):
        m, se = expected_eligible_mc(A, eps, 20000, seed=1)
        assert abs(m - expected_eligible(A, eps)) < 3 * se + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(nontrivial_columns(F4)), max_size=4, unique=True),
       st.sampled_from(nontrivial_columns(F4)), st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]))
def test_appending_a_column_never_increases_E(extra, new, eps):
    if new in extra:
        return
    A = ExtensionMatrix.with_extra(F4, extra)
    B = ExtensionMatrix.with_extra(F4, extra + [new])
    assert expected_eligible(B, eps) <= expected_eligible(A, eps) + 1e-12


def test_select_extension_examples():
    rep = select_extension(F4, 1)
    assert rep.matrix.columns == (1, 2, 4, 8, 15) and rep.dmin == 5
    assert select_extension(F4, 0).matrix == ExtensionMatrix.identity(F4)
    full = select_extension(F4, 11)
    assert full.matrix.columns == (1, 2, 4, 8) + tuple(nontrivial_columns(F4)) and full.dmin == 3
    assert [e for e, _ in rep.expected_eligible_at] == [0.25, 0.5, 0.75]
    with pytest.raises(ValueError):
        select_extension(F4, 12)


@pytest.mark.parametrize("k", range(0, 12))
def test_select_extension_is_dmin_optimal(k):
    rep = select_extension(F4, k)
    best = max(brute_dmin(ExtensionMatrix.with_extra(F4, c).columns)
               for c in itertools.combinations(nontrivial_columns(F4), k))
    assert rep.dmin == best == dmin(rep.matrix)
    # tie-break: smallest E(0.5) among the dmin-optimal matrices
    weights = [eligible_weight(ExtensionMatrix.with_extra(F4, c)) for c in itertools.combinations(nontrivial_columns(F4), k)
               if dmin(ExtensionMatrix.with_extra(F4, c)) == best]
    assert eligible_weight(rep.matrix) == min(weights)


def test_select_extension_gf8():
    assert select_extension(F3, 1).matrix.columns == (1, 2, 4, 7)
    assert select_extension(F3, 1).dmin == 4


def test_random_extension():
    assert random_extension(F4, 0) == ExtensionMatrix.identity(F4)
    assert random_extension(F4, 3, seed=5) == random_extension(F4, 3, seed=5)
    assert random_extension(F4, 11, seed=1).extra == tuple(nontrivial_columns(F4))
    seen = {random_extension(F4, 1, seed=s).extra[0] for s in range(300)}
    assert seen == set(nontrivial_columns(F4))
