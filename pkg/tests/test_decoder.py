from __future__ import annotations

import numpy as np
import pytest

from _instances import random_instance
from nbext.code import MOTHER_CODE, NBCode, TannerGraph, peg_construct
from nbext.decoder import (ErasurePattern, ExtendedCode, bit_erasure_rate, channel_set, decode, oracle_decode,
                           transmit)
from nbext.distribution import assign_extensions, spreading_from
from nbext.extension import ExtensionMatrix, select_extension
from nbext.gf import AffineSubspace, field

F3, F4 = field(3), field(4)


def test_transmit_examples():
    mats = [ExtensionMatrix.with_extra(F4, [15])] * 20000
    assert transmit(mats, 0.0, 1).received.all()
    assert not transmit(mats, 1.0, 1).received.any()
    pat = transmit(mats, 0.5, 1)
    assert pat.received.size == 100000 and abs(pat.received.mean() - 0.5) < 0.01
    assert (transmit(mats, 0.3, 7).received == transmit(mats, 0.3, 7).received).all()
    assert pat.mask(3).size == 5
    with pytest.raises(ValueError):
        transmit(mats, 1.5)


def test_channel_set_examples():
    A = ExtensionMatrix(F3, (1, 2, 4, 5, 6))
    assert channel_set(A, [0] * 5, [0] * 5) == AffineSubspace.full(3)
    assert channel_set(A, [1] * 5, [1, 0, 1, 0, 1]) == AffineSubspace.point(3, 5)
    s = channel_set(A, [0, 0, 0, 1, 1], [0, 0, 0, 0, 0])
    assert set(s.elements()) == {0b000, 0b111} and s.cardinality == 2
    with pytest.raises(ValueError):
        channel_set(A, [1, 0, 1, 1, 0], [1, 0, 0, 0, 0])  # x0 = 1, x2 = 0 but x0 ^ x2 = 0


def _single_check(gf, labels):
    edges = tuple((v, 0, h) for v, h in enumerate(labels))
    return NBCode(TannerGraph(len(labels), 1, edges), gf)


def test_decode_eps_zero_resolves_in_zero_iterations(backend):
    code = peg_construct(MOTHER_CODE, 100, F4, 0)
    mats = assign_extensions(code, spreading_from(F4, {d: 1.0 for d in MOTHER_CODE.lam}))
    out = decode(code, mats, transmit(mats, 0.0, 0))
    assert out.resolved.all() and out.iterations == 0
    assert out.bit_resolved.all()


def test_decode_peels_last_unknown(backend):
    code = _single_check(F4, [3, 7, 9, 2])
    mats = [ExtensionMatrix.identity(F4)] * 4
    received = np.ones(16, bool)
    received[12:] = False  # last symbol fully erased
    pat = ErasurePattern(np.arange(0, 17, 4), received)
    word = [5, 1, 14, 0]
    word[3] = F4.div(F4.mul(3, 5) ^ F4.mul(7, 1) ^ F4.mul(9, 14), 2)
    out = decode(code, mats, pat, codeword=word, keep_sets=True)
    assert out.resolved.all() and out.iterations == 1
    assert out.posterior[3] == AffineSubspace.point(4, word[3])


def test_decode_no_progress_with_everything_erased(backend):
    code = peg_construct(MOTHER_CODE, 40, F4, 0)
    mats = [ExtensionMatrix.identity(F4)] * code.N
    out = decode(code, mats, transmit(mats, 1.0, 0))
    assert not out.resolved.any() and out.iterations == 0
    assert bit_erasure_rate([out], code.info_positions) == 1.0
    oracle = oracle_decode(code, mats, transmit(mats, 1.0, 0))
    assert oracle.iterations == 0 and not oracle.resolved.any()


def test_bit_erasure_rate_examples():
    code = peg_construct(MOTHER_CODE, 60, F4, 0)
    mats = [select_extension(F4, 1).matrix] * code.N
    outs = [decode(code, mats, transmit(mats, 0.0, s)) for s in range(3)]
    assert bit_erasure_rate(outs, code.info_positions) == 0.0
    with pytest.raises(ValueError):
        bit_erasure_rate([], code.info_positions)


def _same(a, b):
    return (a.resolved == b.resolved).all() and (a.bit_resolved == b.bit_resolved).all()


def test_decode_matches_oracle_random(backend):
    rng = np.random.default_rng(2024)
    for _ in range(150):
        code, ext, pat = random_instance(rng)
        a = decode(code, ext, pat, keep_sets=True)
        b = oracle_decode(code, ext, pat)
        assert _same(a, b) and a.iterations == b.iterations
        assert a.posterior == b.posterior


def test_decode_nonzero_codeword():
    rng = np.random.default_rng(5)
    code = peg_construct(MOTHER_CODE, 80, F4, 3)
    mats = assign_extensions(code, spreading_from(F4, {d: 1.5 for d in MOTHER_CODE.lam}), seed=1)
    for trial in range(10):
        word = code.encode(rng.integers(0, 16, code.K))
        pat = transmit(mats, 0.55, trial)
        a = decode(code, mats, pat, codeword=word, keep_sets=True)
        z = decode(code, mats, pat)
        assert _same(a, z)
        assert all(int(x) in s for x, s in zip(word, a.posterior))


def test_posteriors_shrink_across_iterations():
    rng = np.random.default_rng(11)
    for _ in range(20):
        code, ext, pat = random_instance(rng)
        prev = None
        for it in range(0, 8):
            post = decode(code, ext, pat, max_iters=it, keep_sets=True).posterior
            if prev is not None:
                assert all(set(a.elements()) <= set(b.elements()) for a, b in zip(post, prev))
            prev = post


def test_more_received_bits_never_unresolve():
    rng = np.random.default_rng(3)
    for _ in range(40):
        code, ext, pat = random_instance(rng)
        more = pat.received | (rng.random(pat.received.size) < 0.3)
        a = decode(code, ext, pat)
        b = decode(code, ext, ErasurePattern(pat.offsets, more))
        assert (b.bit_resolved >= a.bit_resolved).all()
        assert (b.resolved >= a.resolved).all()


def test_resolved_implies_bits_resolved():
    rng = np.random.default_rng(8)
    for _ in range(30):
        code, ext, pat = random_instance(rng)
        out = decode(code, ext, pat)
        assert out.bit_resolved[out.resolved].all()


def test_invalid_inputs():
    code = _single_check(F4, [1, 1])
    mats = [ExtensionMatrix.identity(F4)] * 2
    received = np.ones(8, bool)
    received[5] = False
    pat = ErasurePattern(np.array([0, 4, 8]), received)
    # received bits that no codeword explains: the check forces x1 = x0 = 1
    with pytest.raises(RuntimeError):
        decode(code, mats, pat, codeword=[1, 2])
    with pytest.raises(ValueError):
        ExtendedCode(code, mats[:1])
    big = peg_construct(MOTHER_CODE, 2500, F4, 0)
    with pytest.raises(ValueError):
        oracle_decode(big, [ExtensionMatrix.identity(F4)] * big.N, transmit([ExtensionMatrix.identity(F4)] * big.N, 0.5, 0))
