import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qidlab import kernels
from qidlab._accel import HAVE_NUMBA
from qidlab.bits import irreducible_poly

NP = kernels.NUMPY_KERNELS
# without numba the twin is the uncompiled loop; compare numpy with itself
NB = kernels.NUMBA_KERNELS if HAVE_NUMBA else kernels.NUMPY_KERNELS


def random_words(rng, shape):
    return rng.integers(0, 2**64, size=shape, dtype=np.uint64)


@given(st.integers(0, 2**32 - 1))
def test_popcount_agrees(seed):
    rng = np.random.default_rng(seed)
    words = random_words(rng, (5, 3))
    ref = np.array([[bin(int(v)).count("1") for v in row] for row in words])
    assert np.array_equal(NP["popcount"](words), ref)
    assert np.array_equal(NB["popcount"](words), ref)


@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_span_elements_agree(ell, nwords, seed):
    rng = np.random.default_rng(seed)
    rows = random_words(rng, (4, ell, nwords))
    a, b = NP["span_elements"](rows), NB["span_elements"](rows)
    assert np.array_equal(a, b)
    for s in range(1 << ell):
        expect = np.zeros(nwords, dtype=np.uint64)
        for r in range(ell):
            if (s >> r) & 1:
                expect ^= rows[0, r]
        assert np.array_equal(a[0, s], expect)


@given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(0, 40))
def test_schur_failures_agree(ell, seed, threshold):
    rng = np.random.default_rng(seed)
    rows = random_words(rng, (6, ell, 2))
    rows[0] = 0  # all-zero matrix never fails
    span = NP["span_elements"](rows)
    masks = random_words(rng, (3, 2))
    a = NP["schur_failures"](span, masks, threshold)
    b = NB["schur_failures"](span, masks, threshold)
    assert np.array_equal(a, b)
    assert not a[0]


@given(st.integers(0, 2**32 - 1))
def test_min_distance_agree(seed):
    rng = np.random.default_rng(seed)
    words = random_words(rng, (7, 2))
    assert NP["pairwise_min_distance"](words) == NB["pairwise_min_distance"](words)


@pytest.mark.parametrize("k", [3, 8, 17])
def test_gf2k_mul_agree(k):
    rng = np.random.default_rng(k)
    a = rng.integers(0, 2**k, size=64, dtype=np.uint64)
    b = rng.integers(0, 2**k, size=64, dtype=np.uint64)
    poly = irreducible_poly(k)
    x, y = NP["gf2k_mul"](a, b, k, poly), NB["gf2k_mul"](a, b, k, poly)
    assert np.array_equal(x, y)
    assert int(x.max()) < 2**k


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not available")
def test_numba_is_active():
    assert kernels.popcount is kernels.NUMBA_KERNELS["popcount"]


def test_env_flag_selects_numpy():
    code = "import qidlab.kernels as k, qidlab; print(qidlab.backend(), k.popcount is k.NUMPY_KERNELS['popcount'])"
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"QIDLAB_DISABLE_NUMBA": "1", "PATH": ""},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.split() == ["numpy", "True"]
