import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qidlab.bits import (
    BinaryCode,
    BitMatrix,
    BitVec,
    LengthMismatch,
    StrongHash,
    atmost_bound,
    block_repetition_code,
    find_c_tilde,
    gf2_rank,
    gf_mul,
    hamming_distance,
    hash_field_degree,
    inner,
    irreducible_poly,
    is_irreducible,
    lemma_schur_holds,
    min_distance,
    parse_code,
    repetition_code,
    row_span,
    schur,
    schur_bound,
    schur_failure_rate,
    span_without_zero,
    strong_hash_batch,
)


def bitvecs(n):
    return st.integers(0, (1 << n) - 1).map(lambda v: BitVec(v, n))


same_length_pair = st.integers(1, 40).flatmap(lambda n: st.tuples(bitvecs(n), bitvecs(n)))


def test_string_roundtrip_and_indexing():
    v = BitVec.from_string("1011")
    assert str(v) == "1011"
    assert v.bits == (1, 0, 1, 1)
    assert v[0] == 1 and v[1] == 0 and v[-1] == 1
    assert BitVec.from_string("+x+x") == BitVec.from_string("0101")
    with pytest.raises(ValueError):
        BitVec.from_string("10a1")
    with pytest.raises(ValueError):
        BitVec(8, 3)


def test_schur_example():
    assert schur(BitVec.from_string("1101"), BitVec.from_string("1011")) == BitVec.from_string("1001")


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        BitVec.from_string("10") ^ BitVec.from_string("101")


def test_words_layout():
    v = BitVec((1 << 70) | 1, 71)
    w = v.to_words()
    assert w.dtype == np.uint64 and w.tolist() == [1, 1 << 6]


@given(same_length_pair)
def test_schur_is_and(pair):
    v, w = pair
    prod = schur(v, w)
    assert prod.bits == tuple(a & b for a, b in zip(v.bits, w.bits))
    assert prod.weight() <= min(v.weight(), w.weight())
    assert schur(v, w) == schur(w, v)


@given(same_length_pair)
def test_distance_is_weight_of_xor(pair):
    v, w = pair
    assert hamming_distance(v, w) == sum(a != b for a, b in zip(v.bits, w.bits))
    assert hamming_distance(v, w) == (v ^ w).weight()
    assert (~v).weight() == v.n - v.weight()


@given(st.integers(1, 5), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_span_closed_under_xor(ell, n, seed):
    F = BitMatrix.random(ell, n, np.random.default_rng(seed))
    span = row_span(F)
    assert len(span) == 2 ** gf2_rank(F)
    for a, b in itertools.islice(itertools.product(span, span), 200):
        assert a ^ b in span
    assert BitVec.zeros(n) not in span_without_zero(F)


@given(st.integers(1, 5), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_apply_and_combine(ell, n, seed):
    rng = np.random.default_rng(seed)
    F = BitMatrix.random(ell, n, rng)
    x = BitVec.random(n, rng)
    s = BitVec.random(ell, rng)
    fx = (F.to_array().astype(int) @ x.to_array()) % 2
    assert F.apply(x).to_array().tolist() == fx.tolist()
    sf = (s.to_array().astype(int) @ F.to_array()) % 2
    assert F.combine(s).to_array().tolist() == sf.tolist()
    # s.(Fx) = (sF).x
    assert inner(s, F.apply(x)) == inner(F.combine(s), x)


def test_rank_examples():
    assert gf2_rank(BitMatrix.from_strings(["110", "011", "101"])) == 2
    assert gf2_rank(BitMatrix.from_strings(["100", "010", "001"])) == 3
    assert gf2_rank(BitMatrix.zeros(2, 4)) == 0


def test_codes():
    rep = repetition_code(4)
    assert rep.d == 4 and rep.m == 2 and rep.relative_distance == 1.0
    blk = block_repetition_code(8)
    assert blk.m == 4 and blk.d == 4
    assert str(blk.encode(1)) == "11110000"
    with pytest.raises(IndexError):
        blk.encode(4)
    with pytest.raises(ValueError):
        BinaryCode.from_strings(["0101", "0101"])


def test_code_text_roundtrip():
    code = block_repetition_code(6)
    assert parse_code(code.to_text()).codewords == code.codewords
    assert parse_code("# comment\n++xx\nxx++\n").d == 4
    with pytest.raises(ValueError):
        parse_code("n=5 m=2\n0000\n1111\n")
    with pytest.raises(LengthMismatch):
        parse_code("000\n1111\n")


def test_min_distance_bruteforce(rng):
    for _ in range(20):
        words = list({int(v) for v in rng.integers(0, 2**10, size=6)})
        if len(words) < 2:
            continue
        cw = [BitVec(v, 10) for v in words]
        brute = min(hamming_distance(a, b) for a, b in itertools.combinations(cw, 2))
        assert min_distance(cw) == brute


@pytest.mark.parametrize("k", [1, 2, 3, 5, 8, 13, 31])
def test_irreducible_poly(k):
    poly = irreducible_poly(k)
    assert poly.bit_length() == k + 1 and is_irreducible(poly)


def test_irreducible_small_cases():
    # x^2+x+1 irreducible, x^2+1 = (x+1)^2 not
    assert is_irreducible(0b111)
    assert not is_irreducible(0b101)
    assert not is_irreducible(0b1)


@given(st.integers(1, 10), st.data())
def test_field_axioms(k, data):
    a, b, c = (data.draw(st.integers(0, 2**k - 1)) for _ in range(3))
    assert gf_mul(a, b, k) == gf_mul(b, a, k)
    assert gf_mul(a, gf_mul(b, c, k), k) == gf_mul(gf_mul(a, b, k), c, k)
    assert gf_mul(a, b ^ c, k) == gf_mul(a, b, k) ^ gf_mul(a, c, k)
    assert gf_mul(a, 1, k) == a


def test_nonzero_has_inverse():
    k = 6
    for a in range(1, 2**k):
        assert any(gf_mul(a, b, k) == 1 for b in range(1, 2**k))


def test_strong_hash_pairwise_uniform():
    m, ell = 4, 1
    k = hash_field_degree(m, ell)
    counts = {}
    for a in range(2**k):
        for b in range(2**k):
            h = StrongHash(a, b, ell, k)
            key = (h(0).value, h(3).value)
            counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 4 and len(set(counts.values())) == 1


def test_strong_hash_batch_matches_scalar(rng):
    k, ell = 6, 3
    a = rng.integers(0, 2**k, size=50, dtype=np.uint64)
    b = rng.integers(0, 2**k, size=50, dtype=np.uint64)
    w = rng.integers(0, 4, size=50, dtype=np.uint64)
    batch = strong_hash_batch(a, b, w, ell, k)
    for ai, bi, wi, out in zip(a, b, w, batch):
        assert StrongHash(int(ai), int(bi), ell, k)(int(wi)).value == int(out)


def test_hash_degree():
    assert hash_field_degree(4, 8) == 10
    assert hash_field_degree(2, 1) == 2
    with pytest.raises(ValueError):
        StrongHash(0, 0, 5, 4)


def test_lemma_schur_small():
    F = BitMatrix.from_strings(["11111111"])
    assert lemma_schur_holds(F, range(8), 0.1)
    # 11110000 and its complement 00001111 share no support
    assert not lemma_schur_holds(BitMatrix.from_strings(["11111111", "11110000"]), range(8), 0.1)
    F_bad = BitMatrix.from_strings(["10000000", "01000000"])
    assert not lemma_schur_holds(F_bad, range(8), 0.1)
    with pytest.raises(ValueError):
        lemma_schur_holds(F, range(8), 0.3)


def test_find_c_tilde():
    code = repetition_code(8)
    F = BitMatrix.from_strings(["11111111"])
    ct = find_c_tilde(F, BitVec.zeros(8), code, 0.1)
    assert ct.index == 0 and not ct.violation
    ct = find_c_tilde(F, BitVec.from_string("11110000"), code, 0.1)
    assert ct.index is None


def test_failure_rate_below_bound(rng):
    freq, bound = schur_failure_rate(64, 2, 64, 0.2, 2000, rng)
    assert bound == schur_bound(2, 64, 0.2)
    assert freq <= bound
    assert atmost_bound(4, 2, 64, 0.2) == pytest.approx(6 * bound)
