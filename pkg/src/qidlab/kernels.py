"""Bit-level inner loops shared by the Monte Carlo drivers.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version. The public names dispatch to numba when it is available and not
disabled through ``QIDLAB_DISABLE_NUMBA``. Kernels never draw random numbers;
callers sample with a numpy ``Generator`` so both paths see identical inputs.

Packed layout: a bit vector of length n is stored as ``ceil(n / 64)`` uint64
words, bit ``i`` of the vector living at bit ``i % 64`` of word ``i // 64``.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

__all__ = [
    "popcount",
    "span_elements",
    "schur_failures",
    "pairwise_min_distance",
    "gf2k_mul",
    "NUMPY_KERNELS",
    "NUMBA_KERNELS",
]

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


# ---------------------------------------------------------------- numpy path


def _popcount_numpy(words):
    return np.bitwise_count(np.asarray(words, dtype=np.uint64)).astype(np.int64)


def _span_elements_numpy(rows):
    """All 2**ell combinations ``s F`` for a batch of matrices.

    rows has shape (T, ell, W); the result has shape (T, 2**ell, W) with
    combination ``s`` at index ``s`` (bit r of s selects row r).
    """
    rows = np.asarray(rows, dtype=np.uint64)
    t, ell, w = rows.shape
    out = np.zeros((t, 1 << ell, w), dtype=np.uint64)
    for s in range(1, 1 << ell):
        low = (s & -s).bit_length() - 1
        out[:, s] = out[:, s & (s - 1)] ^ rows[:, low]
    return out


def _schur_failures_numpy(span, masks, threshold):
    """Flag samples where some |f & g & mask| <= threshold.

    span: (T, S, W) candidate vectors (all-zero entries are ignored);
    masks: (P, W). Pairs f == g are included.
    """
    span = np.asarray(span, dtype=np.uint64)
    masks = np.asarray(masks, dtype=np.uint64)
    nonzero = np.any(span != 0, axis=-1)
    both = span[:, :, None, :] & span[:, None, :, :]
    weights = np.bitwise_count(both[:, :, :, None, :] & masks[None, None, None, :, :])
    weights = weights.sum(axis=-1, dtype=np.int64)
    valid = nonzero[:, :, None] & nonzero[:, None, :]
    bad = (weights <= threshold) & valid[:, :, :, None]
    return bad.reshape(bad.shape[0], -1).any(axis=1)


def _pairwise_min_distance_numpy(words):
    words = np.asarray(words, dtype=np.uint64)
    m = words.shape[0]
    best = np.iinfo(np.int64).max
    for i in range(m - 1):
        dist = np.bitwise_count(words[i + 1 :] ^ words[i]).sum(axis=-1, dtype=np.int64)
        best = min(best, int(dist.min()))
    return best


def _gf2k_mul_numpy(a, b, k, poly):
    a = np.array(a, dtype=np.uint64, copy=True)
    b = np.array(b, dtype=np.uint64, copy=True)
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    result = np.zeros(a.shape, dtype=np.uint64)
    top = np.uint64(1) << np.uint64(k)
    red = np.uint64(poly)
    one = np.uint64(1)
    for _ in range(k):
        result ^= np.where(b & one, a, np.uint64(0))
        b >>= one
        a <<= one
        a ^= np.where(a & top, red, np.uint64(0))
    return result


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True)
def _popcount_numba_flat(flat):
    out = np.empty(flat.shape[0], dtype=np.int64)
    for i in range(flat.shape[0]):
        out[i] = _popcount64(flat[i])
    return out


def _popcount_numba(words):
    words = np.ascontiguousarray(words, dtype=np.uint64)
    return _popcount_numba_flat(words.ravel()).reshape(words.shape)


@njit(cache=True)
def _span_elements_numba(rows):
    t, ell, w = rows.shape
    out = np.zeros((t, 1 << ell, w), dtype=np.uint64)
    for s in range(1, 1 << ell):
        low = 0
        while not (s >> low) & 1:
            low += 1
        prev = s & (s - 1)
        for i in range(t):
            for q in range(w):
                out[i, s, q] = out[i, prev, q] ^ rows[i, low, q]
    return out


@njit(cache=True)
def _schur_failures_numba(span, masks, threshold):
    t, s, w = span.shape
    p = masks.shape[0]
    out = np.zeros(t, dtype=np.bool_)
    for i in range(t):
        done = False
        for a in range(s):
            za = True
            for q in range(w):
                if span[i, a, q] != 0:
                    za = False
            if za:
                continue
            for b in range(a, s):
                zb = True
                for q in range(w):
                    if span[i, b, q] != 0:
                        zb = False
                if zb:
                    continue
                for r in range(p):
                    wt = 0
                    for q in range(w):
                        wt += _popcount64(span[i, a, q] & span[i, b, q] & masks[r, q])
                    if wt <= threshold:
                        done = True
                        break
                if done:
                    break
            if done:
                break
        out[i] = done
    return out


@njit(cache=True)
def _pairwise_min_distance_numba(words):
    m, w = words.shape
    best = np.iinfo(np.int64).max
    for i in range(m - 1):
        for j in range(i + 1, m):
            d = 0
            for q in range(w):
                d += _popcount64(words[i, q] ^ words[j, q])
            if d < best:
                best = d
    return best


@njit(cache=True)
def _gf2k_mul_numba_flat(a, b, k, poly):
    out = np.empty(a.shape[0], dtype=np.uint64)
    top = np.uint64(1) << np.uint64(k)
    one = np.uint64(1)
    for i in range(a.shape[0]):
        x = a[i]
        y = b[i]
        r = np.uint64(0)
        for _ in range(k):
            if y & one:
                r ^= x
            y >>= one
            x <<= one
            if x & top:
                x ^= poly
        out[i] = r
    return out


def _gf2k_mul_numba(a, b, k, poly):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64))
    shape = a.shape
    flat = _gf2k_mul_numba_flat(
        np.ascontiguousarray(a).ravel(), np.ascontiguousarray(b).ravel(), int(k), np.uint64(poly)
    )
    return flat.reshape(shape)


def _schur_failures_numba_entry(span, masks, threshold):
    return _schur_failures_numba(
        np.ascontiguousarray(span, dtype=np.uint64),
        np.ascontiguousarray(masks, dtype=np.uint64),
        float(threshold),
    )


def _span_elements_numba_entry(rows):
    return _span_elements_numba(np.ascontiguousarray(rows, dtype=np.uint64))


def _pairwise_min_distance_numba_entry(words):
    return int(_pairwise_min_distance_numba(np.ascontiguousarray(words, dtype=np.uint64)))


NUMPY_KERNELS = {
    "popcount": _popcount_numpy,
    "span_elements": _span_elements_numpy,
    "schur_failures": _schur_failures_numpy,
    "pairwise_min_distance": _pairwise_min_distance_numpy,
    "gf2k_mul": _gf2k_mul_numpy,
}

NUMBA_KERNELS = {
    "popcount": _popcount_numba,
    "span_elements": _span_elements_numba_entry,
    "schur_failures": _schur_failures_numba_entry,
    "pairwise_min_distance": _pairwise_min_distance_numba_entry,
    "gf2k_mul": _gf2k_mul_numba,
}

_ACTIVE = NUMBA_KERNELS if HAVE_NUMBA else NUMPY_KERNELS

popcount = _ACTIVE["popcount"]
span_elements = _ACTIVE["span_elements"]
schur_failures = _ACTIVE["schur_failures"]
pairwise_min_distance = _ACTIVE["pairwise_min_distance"]
gf2k_mul = _ACTIVE["gf2k_mul"]
