from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbext.code import MOTHER_CODE, DegreeDistribution, peg_construct
from nbext.distribution import (ExtendingDistribution, assign_extensions, average_extension, budget_for_rate,
                                clustering_from, empirical_rate, extended_rate, loads_distribution,
                                spreading_from)
from nbext.extension import DMIN, RANDOM, ExtensionMatrix, select_extension
from nbext.gf import field

F3, F4 = field(3), field(4)
K16 = 11


def test_spreading_examples():
    d = spreading_from(F4, {2: 1.0})
    assert d.row(2)[1] == 1.0 and sum(d.row(2)) == 1.0
    assert spreading_from(F4, {2: 0.0}).row(2)[0] == 1.0
    d = spreading_from(F4, {2: 2.5})
    assert d.table == {(2, 2): 0.5, (2, 3): 0.5} and d.mean(2) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        spreading_from(F4, {2: 11.5})
    with pytest.raises(ValueError):
        spreading_from(F4, {2: -0.5})


def test_clustering_examples():
    d = clustering_from(F4, {3: 1.0})
    assert d.row(3)[K16] == pytest.approx(1 / 11) and d.row(3)[0] == pytest.approx(10 / 11)
    assert clustering_from(F4, {3: 0.0}).row(3)[0] == 1.0
    # regular rate-1/2 code, f = 1 over GF(16): r_e = 0.4 with about 9% of nodes carrying 11 bits
    reg = DegreeDistribution.regular(2, 4)
    f = average_extension(d := clustering_from(F4, {2: 1.0}), reg)
    assert extended_rate(reg.design_rate, 4, f) == pytest.approx(0.4)
    assert d.row(2)[K16] == pytest.approx(0.0909, abs=1e-3)


@settings(max_examples=200)
@given(st.dictionaries(st.sampled_from([2, 3, 5, 8, 18]), st.floats(0, 11), min_size=1))
def test_spreading_and_clustering_valid_and_mean_preserving(fd):
    for make in (spreading_from, clustering_from):
        d = make(F4, fd)
        for deg, v in fd.items():
            row = d.row(deg)
            assert all(x >= 0 for x in row)
            assert sum(row) == pytest.approx(1.0, abs=1e-12)
            assert d.mean(deg) == pytest.approx(v, abs=1e-9)
        if make is spreading_from:
            for deg, v in fd.items():
                support = {k for k, x in enumerate(d.row(deg)) if x > 0}
                assert support <= {int(np.floor(v)), int(np.ceil(v))}


def test_distribution_validation():
    with pytest.raises(ValueError):
        ExtendingDistribution(F4, {(2, 12): 1.0})
    with pytest.raises(ValueError):
        ExtendingDistribution(F4, {(2, 0): 0.5, (2, 1): 0.4})
    with pytest.raises(ValueError):
        ExtendingDistribution(F4, {(2, 0): 1.2, (2, 1): -0.2})


def test_average_extension_examples():
    # GF(8) example: lambda_2 = 4/7, lambda_3 = 3/7 gives Lambda_2 = 2/3, Lambda_3 = 1/3
    dd = DegreeDistribution({2: 4 / 7, 3: 3 / 7}, {4: 2 / 7, 5: 5 / 7})
    assert dd.node_fraction(2) == pytest.approx(2 / 3)
    assert dd.design_rate == pytest.approx(0.5, abs=1e-12)
    dist = ExtendingDistribution(F3, {(2, 0): .25, (2, 1): .25, (2, 2): .25, (2, 4): .25, (3, 2): .5, (3, 3): .5})
    f = average_extension(dist, dd)
    assert f == pytest.approx(2.0)
    assert extended_rate(0.5, 3, f) == pytest.approx(0.3)
    assert average_extension(ExtendingDistribution.none(F4, [2, 5, 8, 18]), MOTHER_CODE) == 0
    reg = DegreeDistribution.regular(3, 6)
    assert average_extension(ExtendingDistribution.uniform(F4, [3], 4), reg) == 4
    with pytest.raises(ValueError):
        average_extension(ExtendingDistribution.uniform(F4, [7], 1), reg)


def test_extended_rate_examples():
    assert extended_rate(0.5, 3, 2) == pytest.approx(0.3)
    assert extended_rate(0.5, 4, 0) == 0.5
    assert extended_rate(0.5, 4, 11) == pytest.approx(2 / 15)


def test_budget_examples():
    reg = DegreeDistribution.regular(2, 4)
    assert budget_for_rate(reg, 0.4, 4) == pytest.approx(1.0)
    assert budget_for_rate(reg, 0.5, 4) == 0.0
    fd = {2: 0.4610, 5: 0.3731, 8: 0.2487, 18: 0.1309}
    F = sum(MOTHER_CODE.node_fraction(d) * v for d, v in fd.items())
    assert F == pytest.approx(0.444, abs=0.01)
    assert budget_for_rate(MOTHER_CODE, 0.45, 4) == pytest.approx(4 * (MOTHER_CODE.design_rate / 0.45 - 1))
    with pytest.raises(ValueError):
        budget_for_rate(reg, 0.1, 4)
    with pytest.raises(ValueError):
        budget_for_rate(reg, 0.6, 4)


def test_budget_inverts_rate():
    rng = np.random.default_rng(0)
    r = MOTHER_CODE.design_rate
    for r_e in rng.uniform(r * 4 / 15, r, 100):
        F = budget_for_rate(MOTHER_CODE, r_e, 4)
        assert extended_rate(r, 4, F) == pytest.approx(r_e, abs=1e-9)


def test_assign_examples():
    reg = DegreeDistribution.regular(2, 4)
    code = peg_construct(reg, 100, F4, seed=0)
    mats = assign_extensions(code, ExtendingDistribution.none(F4, [2]))
    assert all(m == ExtensionMatrix.identity(F4) for m in mats)
    mats = assign_extensions(code, spreading_from(F4, {2: 1.0}))
    assert all(m.columns == (1, 2, 4, 8, 15) for m in mats)
    small = peg_construct(reg, 10, F4, seed=0)
    mats = assign_extensions(small, spreading_from(F4, {2: 2.5}), seed=3)
    assert Counter(m.k_ext for m in mats) == {2: 5, 3: 5}
    assert all(m == select_extension(F4, m.k_ext).matrix for m in mats)


def test_assign_random_and_determinism():
    code = peg_construct(MOTHER_CODE, 200, F4, seed=0)
    dist = spreading_from(F4, {2: 1.2, 5: 0.5, 8: 2.0, 18: 0.0})
    a = assign_extensions(code, dist, RANDOM, seed=9)
    b = assign_extensions(code, dist, RANDOM, seed=9)
    assert a == b
    assert len({m.extra for m in a if m.k_ext == 1}) > 3
    with pytest.raises(ValueError):
        assign_extensions(code, dist, "best")
    with pytest.raises(ValueError):
        assign_extensions(code, spreading_from(F4, {3: 1.0}))


def test_empirical_rate_matches_design_within_rounding():
    code = peg_construct(MOTHER_CODE, 500, F4, seed=0)
    for fd in ({2: 1.0, 5: 1.0, 8: 1.0, 18: 1.0}, {2: 0.46, 5: 0.37, 8: 0.25, 18: 0.13}, {2: 6.2, 5: 5.3, 8: 4.7, 18: 4.0}):
        dist = spreading_from(F4, fd)
        mats = assign_extensions(code, dist, DMIN, seed=1)
        design = extended_rate(code.rate, 4, average_extension(dist, MOTHER_CODE))
        # code.rate and the design rate differ only through rank deficiency; both share K p / T
        assert empirical_rate(code, mats) == pytest.approx(design, abs=1.5 / code.N)


def test_distribution_file_formats():
    d = loads_distribution("# means\n2: 1.5\n5 0.25\n", F4)
    assert d.mean(2) == pytest.approx(1.5) and d.mean(5) == pytest.approx(0.25)
    d = loads_distribution("kind: clustering\n2: 1\n", F4)
    assert d.row(2)[K16] == pytest.approx(1 / 11)
    d = loads_distribution("2 0 0.5\n2 3 0.5\n", F4)
    assert d.table == {(2, 0): 0.5, (2, 3): 0.5}
    assert loads_distribution(d.dumps(), F4).table == d.table
    with pytest.raises(ValueError):
        loads_distribution("2: 1\n2 0 1\n", F4)
    with pytest.raises(ValueError):
        loads_distribution("2 x\n", F4)
