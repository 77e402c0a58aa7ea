import math

import numpy as np
import pytest
from conftest import scalar_ctx
from hypothesis import given
from hypothesis import strategies as st

from kmsproc.checks import (
    eg4_cyclic_check,
    kms_reflection_check,
    merge_check,
    os_gram_check,
    real_symmetry_check,
    recover_generator,
    shift_check,
    thermal_B,
    weyl_os_check,
)
from kmsproc.errors import NonSymmetric, SpectrumNotAboveOne, TimeOutOfRange
from kmsproc.models import random_generator
from kmsproc.quasifree import EuclideanWord, thermal_context


def test_kms_scalar_and_symmetric_point():
    ctx = scalar_ctx(0.7, 2.0)
    f = np.array([1.3])
    assert kms_reflection_check(ctx, f, f, np.linspace(0, 2.0, 64)) <= 1e-12
    assert kms_reflection_check(ctx, f, f, [1.0]) == 0.0


def test_corrupted_state_breaks_kms(ctx4, rng):
    bad = thermal_context(ctx4.model, ctx4.beta, b_override=lambda lam: 1 + np.exp(-ctx4.beta * lam))
    f, g = rng.standard_normal(4), rng.standard_normal(4)
    assert kms_reflection_check(bad, f, g, np.linspace(0, bad.beta, 64)) > 1e-3


def test_real_symmetry(ctx4, rng):
    f, g = rng.standard_normal(4), rng.standard_normal(4)
    assert real_symmetry_check(ctx4, f, g, np.linspace(0, 1, 8)) < 1e-14
    with pytest.raises(ValueError):
        real_symmetry_check(ctx4, 1j * f, g, [0.1])


def test_os_gram_small_cases(ctx4, rng):
    f = rng.standard_normal(4)
    one = os_gram_check(ctx4, [f], [0.2])
    assert one.os_min >= 0
    same = os_gram_check(ctx4, [f, f, f], [0.0, 0.0, 0.0])
    assert abs(same.os_min) <= 1e-12 * same.os_norm
    with pytest.raises(TimeOutOfRange):
        os_gram_check(ctx4, [f], [ctx4.beta])


@given(st.integers(0, 2**32 - 1))
def test_os_gram_psd_property(seed):
    r = np.random.default_rng(seed)
    ctx = thermal_context(random_generator(r, 4), r.uniform(0.1, 10))
    n = int(r.integers(1, 9))
    real = bool(r.integers(0, 2))
    vecs = [r.standard_normal(4) + (0 if real else 1j * r.standard_normal(4)) for _ in range(n)]
    res = os_gram_check(ctx, vecs, r.uniform(0, ctx.beta / 2, n))
    assert res.margin() >= -1e-10


def test_weyl_os(ctx4, rng):
    words = [EuclideanWord((), ())]
    for _ in range(4):
        n = int(rng.integers(1, 3))
        vecs = tuple(rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(n))
        words.append(EuclideanWord(vecs, tuple(np.sort(rng.uniform(0, ctx4.beta / 2, n)))))
    lo, norm = weyl_os_check(ctx4, words)
    assert lo >= -1e-10 * norm


def test_weyl_os_ground_state(rng):
    ctx = thermal_context(random_generator(rng, 3), math.inf)
    words = [EuclideanWord((rng.standard_normal(3),), (t,)) for t in (0.0, 0.5, 1.5)]
    lo, norm = weyl_os_check(ctx, words)
    assert lo >= -1e-10 * norm


def test_shift_merge_cyclic(ctx4, rng):
    vecs = tuple(rng.standard_normal(4) for _ in range(3))
    w = EuclideanWord(vecs, (0.1, 0.2, 0.5))
    assert shift_check(ctx4, w, 0.6) <= 1e-12
    tie = EuclideanWord(vecs, (0.1, 0.4, 0.4))
    assert merge_check(ctx4, tie, 1) <= 1e-12
    cz = EuclideanWord(vecs, (0.0, 0.4, 1.1))
    assert eg4_cyclic_check(ctx4, cz) <= 1e-10
    assert eg4_cyclic_check(ctx4, EuclideanWord(vecs, (0.0, 0.0, 0.0))) <= 1e-12


def test_merge_with_complex_vectors(ctx4, rng):
    vecs = tuple(rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(3))
    assert merge_check(ctx4, EuclideanWord(vecs, (0.3, 0.3, 0.9)), 0) <= 1e-12


def test_recover_generator_values():
    m = recover_generator(np.array([[2.0]]), 1.0)
    assert m.eigenvalues[0] == pytest.approx(math.log(3.0), rel=1e-15)
    with pytest.raises(SpectrumNotAboveOne):
        recover_generator(np.eye(2), 1.0)
    with pytest.raises(NonSymmetric):
        recover_generator(np.array([[2.0, 1.0], [0.0, 2.0]]), 1.0)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 1.0, 10.0]))
def test_roundtrip_property(seed, beta):
    model = random_generator(np.random.default_rng(seed), 4)
    back = recover_generator(thermal_B(model, beta), beta)
    assert np.max(np.abs(back.h - model.h)) <= 1e-10
