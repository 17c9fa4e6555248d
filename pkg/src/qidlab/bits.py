"""GF(2) vectors, matrices, binary codes and hash families.

Bit vectors are immutable Python ints with an explicit length: bit ``i`` of
``BitVec.value`` is coordinate ``i`` (the leftmost character of the string
form). Conversions to packed uint64 words feed the kernels in
:mod:`qidlab.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels

MAX_SPAN_ROWS = 20
MAX_CODE_LENGTH = 1024

_CHAR_BITS = {"0": 0, "1": 1, "+": 0, "x": 1, "×": 1}


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BitVec:
    value: int
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative length")
        if self.value < 0 or self.value >> self.n:
            raise ValueError(f"value {self.value} does not fit in {self.n} bits")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVec":
        value = 0
        n = 0
        for i, b in enumerate(bits):
            b = int(b)
            if b not in (0, 1):
                raise ValueError(f"entry {b!r} is not a bit")
            value |= b << i
            n = i + 1
        return cls(value, n)

    @classmethod
    def from_string(cls, text: str) -> "BitVec":
        try:
            return cls.from_bits(_CHAR_BITS[ch] for ch in text.strip())
        except KeyError as exc:
            raise ValueError(f"invalid bit character {exc.args[0]!r}") from None

    @classmethod
    def zeros(cls, n: int) -> "BitVec":
        return cls(0, n)

    @classmethod
    def ones(cls, n: int) -> "BitVec":
        return cls((1 << n) - 1, n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitVec":
        return cls.from_bits(rng.integers(0, 2, size=n))

    @property
    def bits(self) -> tuple:
        return tuple((self.value >> i) & 1 for i in range(self.n))

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def to_words(self) -> np.ndarray:
        nwords = max(1, -(-self.n // 64))
        mask = (1 << 64) - 1
        return np.array([(self.value >> (64 * q)) & mask for q in range(nwords)], dtype=np.uint64)

    def weight(self) -> int:
        return self.value.bit_count()

    def __len__(self):
        return self.n

    def __getitem__(self, i: int) -> int:
        if not -self.n <= i < self.n:
            raise IndexError(i)
        return (self.value >> (i % self.n)) & 1

    def __iter__(self):
        return iter(self.bits)

    def _check(self, other: "BitVec"):
        if not isinstance(other, BitVec):
            return NotImplemented
        if other.n != self.n:
            raise LengthMismatch(f"lengths {self.n} and {other.n} differ")

    def __xor__(self, other: "BitVec") -> "BitVec":
        self._check(other)
        return BitVec(self.value ^ other.value, self.n)

    def __and__(self, other: "BitVec") -> "BitVec":
        self._check(other)
        return BitVec(self.value & other.value, self.n)

    def __invert__(self) -> "BitVec":
        return BitVec(self.value ^ ((1 << self.n) - 1), self.n)

    def restrict(self, positions: Sequence[int]) -> "BitVec":
        return BitVec.from_bits(self[i] for i in positions)

    def __str__(self):
        return "".join(str(b) for b in self.bits)

    def __repr__(self):
        return f"BitVec('{self}')"


def hamming_weight(v: BitVec) -> int:
    return v.weight()


def schur(v: BitVec, w: BitVec) -> BitVec:
    """Element-wise product of two bit vectors."""
    return v & w


def inner(v: BitVec, w: BitVec) -> int:
    return (v & w).weight() & 1


def hamming_distance(v: BitVec, w: BitVec) -> int:
    return (v ^ w).weight()


@dataclass(frozen=True)
class BitMatrix:
    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        if not rows:
            raise ValueError("a BitMatrix needs at least one row")
        n = rows[0].n
        if n < 1 or any(r.n != n for r in rows):
            raise LengthMismatch("all rows must share one positive length")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_strings(cls, rows: Iterable[str]) -> "BitMatrix":
        return cls(tuple(BitVec.from_string(r) for r in rows))

    @classmethod
    def from_array(cls, array) -> "BitMatrix":
        array = np.asarray(array)
        return cls(tuple(BitVec.from_bits(r) for r in array))

    @classmethod
    def random(cls, ell: int, n: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_array(rng.integers(0, 2, size=(ell, n)))

    @classmethod
    def zeros(cls, ell: int, n: int) -> "BitMatrix":
        return cls(tuple(BitVec.zeros(n) for _ in range(ell)))

    @property
    def ell(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return self.rows[0].n

    def apply(self, x: BitVec) -> BitVec:
        """Matrix-vector product ``F x`` as an ell-bit vector."""
        return BitVec.from_bits(inner(r, x) for r in self.rows)

    def combine(self, s: BitVec) -> BitVec:
        """Row-vector product ``s F``."""
        if s.n != self.ell:
            raise LengthMismatch("selector length must equal the number of rows")
        acc = 0
        for r, row in enumerate(self.rows):
            if (s.value >> r) & 1:
                acc ^= row.value
        return BitVec(acc, self.n)

    def to_array(self) -> np.ndarray:
        return np.array([r.bits for r in self.rows], dtype=np.uint8)

    def to_words(self) -> np.ndarray:
        return np.stack([r.to_words() for r in self.rows])

    def __str__(self):
        return "\n".join(str(r) for r in self.rows)


def gf2_rank(F: BitMatrix) -> int:
    work = [r.value for r in F.rows]
    rank = 0
    for col in range(F.n):
        pivot = next((i for i in range(rank, len(work)) if (work[i] >> col) & 1), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and (work[i] >> col) & 1:
                work[i] ^= work[rank]
        rank += 1
        if rank == len(work):
            break
    return rank


def row_span(F: BitMatrix) -> frozenset:
    """All vectors ``s F`` for ``s`` in {0,1}^ell, deduplicated."""
    if F.ell > MAX_SPAN_ROWS:
        raise ValueError(f"refusing to enumerate 2**{F.ell} combinations (limit {MAX_SPAN_ROWS} rows)")
    values = [0]
    for row in F.rows:
        values = values + [v ^ row.value for v in values]
    return frozenset(BitVec(v, F.n) for v in values)


def span_without_zero(F: BitMatrix) -> frozenset:
    return row_span(F) - {BitVec.zeros(F.n)}


def min_distance(codewords: Sequence[BitVec]) -> int:
    """Exhaustive minimum pairwise Hamming distance."""
    codewords = list(codewords)
    if len(codewords) < 2:
        raise ValueError("need at least two codewords")
    if len(set(codewords)) != len(codewords):
        raise ValueError("duplicate codewords")
    if len(codewords) * (len(codewords) - 1) // 2 > 2**16:
        raise ValueError("too many codeword pairs for exhaustive search")
    n = codewords[0].n
    if any(c.n != n for c in codewords):
        raise LengthMismatch("codewords have different lengths")
    words = np.stack([c.to_words() for c in codewords])
    return kernels.pairwise_min_distance(words)


@dataclass(frozen=True)
class BinaryCode:
    """Password code: codeword ``w`` encodes password index ``w`` (0-based)."""

    codewords: tuple
    min_distance: int = field(init=False)

    def __post_init__(self):
        cws = tuple(self.codewords)
        if len(cws) < 2:
            raise ValueError("a code needs at least two codewords")
        if cws[0].n > MAX_CODE_LENGTH:
            raise ValueError(f"code length {cws[0].n} exceeds {MAX_CODE_LENGTH}")
        object.__setattr__(self, "codewords", cws)
        object.__setattr__(self, "min_distance", min_distance(cws))

    @classmethod
    def from_strings(cls, words: Iterable[str]) -> "BinaryCode":
        return cls(tuple(BitVec.from_string(w) for w in words))

    @property
    def n(self) -> int:
        return self.codewords[0].n

    @property
    def m(self) -> int:
        return len(self.codewords)

    @property
    def d(self) -> int:
        return self.min_distance

    @property
    def relative_distance(self) -> float:
        return self.min_distance / self.n

    def encode(self, w: int) -> BitVec:
        if not 0 <= w < self.m:
            raise IndexError(f"password index {w} outside [0, {self.m})")
        return self.codewords[w]

    def to_text(self) -> str:
        lines = [f"n={self.n} m={self.m}"] + [str(c) for c in self.codewords]
        return "\n".join(lines) + "\n"


def parse_code(text: str) -> BinaryCode:
    """Parse the one-codeword-per-line format ('+'/'x' accepted for 0/1)."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    header = None
    if lines and lines[0].startswith("n="):
        header = {}
        for part in lines.pop(0).split():
            key, _, val = part.partition("=")
            if key not in ("n", "m") or not val.isdigit():
                raise ValueError(f"malformed header field {part!r}")
            header[key] = int(val)
    code = BinaryCode(tuple(BitVec.from_string(ln) for ln in lines))
    lengths = {c.n for c in code.codewords}
    if len(lengths) != 1:
        raise LengthMismatch("codewords have different lengths")
    if header:
        if header.get("n", code.n) != code.n or header.get("m", code.m) != code.m:
            raise ValueError(f"header {header} disagrees with body (n={code.n}, m={code.m})")
    return code


def load_code(path) -> BinaryCode:
    return parse_code(Path(path).read_text(encoding="utf-8"))


def repetition_code(n: int) -> BinaryCode:
    return BinaryCode((BitVec.zeros(n), BitVec.ones(n)))


def block_repetition_code(n: int) -> BinaryCode:
    """Four codewords built from the two halves: {00, 10, 01, 11} repeated."""
    h = n // 2
    left = BitVec((1 << h) - 1, n)
    right = BitVec(((1 << (n - h)) - 1) << h, n)
    return BinaryCode((BitVec.zeros(n), left, right, BitVec.ones(n)))


# ------------------------------------------------------------ GF(2^k) hashing


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _polymod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _polymod(a, b)
    return a


def is_irreducible(poly: int) -> bool:
    """Ben-Or test for a binary polynomial given as an int bitmask."""
    k = poly.bit_length() - 1
    if k < 1:
        return False
    x = 0b10
    power = x
    for _ in range(k // 2):
        power = _polymod(_clmul(power, power), poly)
        if _polygcd(poly, power ^ x) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_poly(k: int) -> int:
    """Lexicographically smallest irreducible polynomial of degree k."""
    if not 1 <= k <= 63:
        raise ValueError("field degree must lie in [1, 63]")
    for low in range(1, 1 << k, 2):
        poly = (1 << k) | low
        if is_irreducible(poly):
            return poly
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


def gf_mul(a: int, b: int, k: int) -> int:
    return _polymod(_clmul(a, b), irreducible_poly(k))


def hash_field_degree(m: int, ell: int) -> int:
    """Degree k with 2**k >= m * 2**ell."""
    return max(1, math.ceil(math.log2(m))) + ell


@dataclass(frozen=True)
class StrongHash:
    """``g(w) = low ell bits of a*w + b`` over GF(2^k)."""

    a: int
    b: int
    ell: int
    k: int

    def __post_init__(self):
        if not 1 <= self.ell <= self.k:
            raise ValueError("need 1 <= ell <= k")
        if not (0 <= self.a < 2**self.k and 0 <= self.b < 2**self.k):
            raise ValueError("key outside the field")

    @classmethod
    def random(cls, m: int, ell: int, rng: np.random.Generator, k: int | None = None) -> "StrongHash":
        k = hash_field_degree(m, ell) if k is None else k
        a, b = (int(v) for v in rng.integers(0, 2**k, size=2, dtype=np.uint64))
        return cls(a, b, ell, k)

    def embed(self, w: int) -> int:
        if not 0 <= w < 2**self.k:
            raise ValueError(f"password index {w} does not embed into GF(2^{self.k})")
        return w

    def __call__(self, w: int) -> BitVec:
        full = gf_mul(self.a, self.embed(w), self.k) ^ self.b
        return BitVec(full & ((1 << self.ell) - 1), self.ell)


def strong_hash_eval(h: StrongHash, w: int) -> BitVec:
    return h(w)


def strong_hash_batch(a, b, w, ell: int, k: int) -> np.ndarray:
    """Vectorised hash outputs as ints, for Monte Carlo loops."""
    full = kernels.gf2k_mul(a, w, k, irreducible_poly(k)) ^ np.asarray(b, dtype=np.uint64)
    return full & np.uint64((1 << ell) - 1)


# ------------------------------------------------- Schur-product properties


def lemma_schur_holds(F: BitMatrix, I: Sequence[int], beta: float) -> bool:
    """True iff every pair f, g of nonzero span vectors has |(f & g)_I| > (1/4 - beta)|I|."""
    if not 0 < beta < 0.25:
        raise ValueError("beta must lie in (0, 1/4)")
    I = set(I)
    if not I:
        raise ValueError("index set must be non-empty")
    mask = BitVec.from_bits(1 if i in I else 0 for i in range(F.n))
    threshold = (0.25 - beta) * len(I)
    span = sorted(span_without_zero(F), key=lambda v: v.value)
    for i, f in enumerate(span):
        for g in span[i:]:
            if (f & g & mask).weight() <= threshold:
                return False
    return True


class CTilde(NamedTuple):
    index: int | None
    candidates: tuple

    @property
    def violation(self) -> bool:
        return len(self.candidates) > 1


def find_c_tilde(F: BitMatrix, s: BitVec, code: BinaryCode, beta: float) -> CTilde:
    """Codeword(s) that some nonzero span vector brings within half the Schur threshold of s.

    ``candidates`` lists every qualifying codeword index; for a good F there is
    at most one. On a violation ``index`` is the smallest candidate.
    """
    if not 0 < beta < 0.25:
        raise ValueError("beta must lie in (0, 1/4)")
    threshold = 0.5 * (0.25 - beta) * code.d
    span = span_without_zero(F)
    found = []
    for w, c in enumerate(code.codewords):
        diff = c ^ s
        if any((f & diff).weight() < threshold for f in span):
            found.append(w)
    return CTilde(found[0] if found else None, tuple(found))


def schur_bound(ell: int, k: int, beta: float) -> float:
    return 2 ** (2 * ell) * math.exp(-2 * k * beta**2)


def atmost_bound(m: int, ell: int, d: int, beta: float) -> float:
    return math.comb(m, 2) * schur_bound(ell, d, beta)


def _random_matrix_words(trials: int, ell: int, n: int, rng: np.random.Generator) -> np.ndarray:
    nwords = -(-n // 64)
    words = rng.integers(0, 2**64, size=(trials, ell, nwords), dtype=np.uint64)
    tail = n - 64 * (nwords - 1)
    if tail < 64:
        words[..., -1] &= np.uint64((1 << tail) - 1)
    return words


def schur_failure_rate(n: int, ell: int, k: int, beta: float, trials: int, rng: np.random.Generator):
    """Monte Carlo frequency of random F violating the Schur lemma on I = [0, k)."""
    if not 0 < k <= n:
        raise ValueError("need 0 < k <= n")
    rows = _random_matrix_words(trials, ell, n, rng)
    mask = BitVec((1 << k) - 1, n).to_words()[None, :]
    fails = kernels.schur_failures(kernels.span_elements(rows), mask, (0.25 - beta) * k)
    return float(fails.mean()), schur_bound(ell, k, beta)


def atmost_failure_rate(code: BinaryCode, ell: int, beta: float, trials: int, rng: np.random.Generator):
    """Frequency of "bad" F: some nonzero f, g and codeword pair with |f & g & (c ^ c')| <= (1/4 - beta) d."""
    rows = _random_matrix_words(trials, ell, code.n, rng)
    masks = np.stack([(c ^ c2).to_words() for c, c2 in combinations(code.codewords, 2)])
    fails = kernels.schur_failures(kernels.span_elements(rows), masks, (0.25 - beta) * code.d)
    return float(fails.mean()), atmost_bound(code.m, ell, code.d, beta)
