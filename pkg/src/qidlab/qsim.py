"""Exact simulation of small multi-qubit systems.

Convention: qubit 0 is the leftmost tensor factor, so the computational
basis index of ``x`` is ``sum(x_i << (n - 1 - i))``. Outcome distributions
over {0,1}^n are numpy vectors in that index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .bits import BitVec, min_distance

MAX_QUBITS = 14
CONSTRUCTION_TOL = 1e-10
PSD_TOL = 1e-9
TIE_TOL = 1e-12

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
IDENTITY = np.eye(2, dtype=complex)


def index_of(x: BitVec) -> int:
    idx = 0
    for b in x.bits:
        idx = (idx << 1) | b
    return idx


def bits_of(index: int, n: int) -> BitVec:
    return BitVec.from_bits((index >> (n - 1 - i)) & 1 for i in range(n))


@dataclass(frozen=True, eq=False)
class QubitBasis:
    v0: np.ndarray
    v1: np.ndarray

    def __post_init__(self):
        v0 = np.asarray(self.v0, dtype=complex).reshape(2)
        v1 = np.asarray(self.v1, dtype=complex).reshape(2)
        if abs(np.linalg.norm(v0) - 1) > CONSTRUCTION_TOL or abs(np.linalg.norm(v1) - 1) > CONSTRUCTION_TOL:
            raise ValueError("basis vectors must have unit norm")
        if abs(np.vdot(v0, v1)) > CONSTRUCTION_TOL:
            raise ValueError("basis vectors must be orthogonal")
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "v1", v1)

    @property
    def matrix(self) -> np.ndarray:
        """Unitary whose columns are v0 and v1."""
        return np.column_stack([self.v0, self.v1])

    @classmethod
    def from_unitary(cls, u) -> "QubitBasis":
        u = np.asarray(u, dtype=complex)
        return cls(u[:, 0], u[:, 1])

    @classmethod
    def from_alpha_beta(cls, alpha: complex, beta: complex) -> "QubitBasis":
        """{alpha|0> + beta|1>, beta|0> - alpha|1>}; orthonormal only if conj(alpha)*beta is real."""
        return cls(np.array([alpha, beta]), np.array([beta, -alpha]))

    @classmethod
    def computational(cls) -> "QubitBasis":
        return cls(np.array([1, 0]), np.array([0, 1]))

    @classmethod
    def hadamard(cls) -> "QubitBasis":
        return cls.from_unitary(HADAMARD)

    @classmethod
    def breidbart(cls) -> "QubitBasis":
        c, s = math.cos(math.pi / 8), math.sin(math.pi / 8)
        return cls(np.array([c, s]), np.array([s, -c]))

    @classmethod
    def circular(cls) -> "QubitBasis":
        """Eigenbasis of Pauli Y: unbiased with respect to both + and x."""
        r = 1 / math.sqrt(2)
        return cls(np.array([r, 1j * r]), np.array([r, -1j * r]))

    @classmethod
    def of_bit(cls, b: int) -> "QubitBasis":
        return cls.hadamard() if b else cls.computational()

    @classmethod
    def random(cls, rng: np.random.Generator) -> "QubitBasis":
        """Haar-random basis."""
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, r = np.linalg.qr(z)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return cls.from_unitary(q)

    @classmethod
    def random_real_pair(cls, rng: np.random.Generator) -> "QubitBasis":
        """Random (alpha, beta) with conj(alpha)*beta real, in the two-parameter form."""
        t = rng.uniform(0, 2 * math.pi)
        phase = np.exp(1j * rng.uniform(0, 2 * math.pi))
        return cls.from_alpha_beta(phase * math.cos(t), phase * math.sin(t))


@dataclass(frozen=True, eq=False)
class ProductBasis:
    bases: tuple
    codeword: BitVec | None = None

    def __post_init__(self):
        bases = tuple(self.bases)
        if not bases:
            raise ValueError("empty product basis")
        object.__setattr__(self, "bases", bases)
        if self.codeword is not None:
            if self.codeword.n != len(bases):
                raise ValueError("codeword length differs from number of qubits")
            for b, q in zip(self.codeword.bits, bases):
                if not np.allclose(q.matrix, QubitBasis.of_bit(b).matrix, atol=CONSTRUCTION_TOL):
                    raise ValueError("codeword tag inconsistent with per-qubit bases")

    @classmethod
    def from_codeword(cls, c: BitVec) -> "ProductBasis":
        return cls(tuple(QubitBasis.of_bit(b) for b in c.bits), codeword=c)

    @classmethod
    def uniform(cls, basis: QubitBasis, n: int) -> "ProductBasis":
        return cls((basis,) * n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "ProductBasis":
        return cls(tuple(QubitBasis.random(rng) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.bases)

    def matrices(self) -> np.ndarray:
        return np.stack([b.matrix for b in self.bases])

    def unitary(self) -> np.ndarray:
        return reduce(np.kron, (b.matrix for b in self.bases))

    def vector(self, x: BitVec) -> np.ndarray:
        """|x>_B."""
        return reduce(np.kron, (b.matrix[:, xi] for b, xi in zip(self.bases, x.bits)))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = int(round(math.log2(amp.size))) if amp.size else -1
        if n < 0 or 2**n != amp.size or n > MAX_QUBITS:
            raise ValueError(f"length {amp.size} is not 2**n with n <= {MAX_QUBITS}")
        if abs(np.vdot(amp, amp).real - 1) > CONSTRUCTION_TOL:
            raise ValueError("state is not normalised")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n(self) -> int:
        return int(round(math.log2(self.amplitudes.size)))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def to_json(self) -> list:
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]

    @classmethod
    def from_json(cls, data) -> "PureState":
        return cls(np.array([complex(re, im) for re, im in data]))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PureState":
        z = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        return cls(z / np.linalg.norm(z))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T), initial=0) > CONSTRUCTION_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > CONSTRUCTION_TOL:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return int(round(math.log2(self.dim)))

    def to_json(self) -> list:
        return [[[float(v.real), float(v.imag)] for v in row] for row in self.entries]

    @classmethod
    def from_json(cls, data) -> "DensityMatrix":
        return cls(np.array([[complex(re, im) for re, im in row] for row in data]))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(2**n, dtype=complex) / 2**n)

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, rank: int | None = None) -> "DensityMatrix":
        """Ginibre-induced random state of the given rank (full rank by default)."""
        rank = dim if rank is None else rank
        g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        rho = g @ g.conj().T
        rho = (rho + rho.conj().T) / 2
        return cls(rho / np.trace(rho).real)

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence["DensityMatrix"]) -> "DensityMatrix":
        return cls(sum(w * s.entries for w, s in zip(weights, states)))


def hadamard_power(b: int) -> np.ndarray:
    return HADAMARD if b else IDENTITY


def prepare(x: BitVec, c: BitVec) -> PureState:
    """|x>_c = H^{c_1}|x_1> (x) ... (x) H^{c_n}|x_n>."""
    if x.n != c.n:
        raise ValueError("x and c must have equal length")
    factors = [hadamard_power(ci)[:, xi] for xi, ci in zip(x.bits, c.bits)]
    return PureState(reduce(np.kron, factors))


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    if isinstance(rho, PureState):
        return np.outer(rho.amplitudes, rho.amplitudes.conj())
    return np.asarray(rho, dtype=complex)


def measure_dist(rho, B: ProductBasis) -> np.ndarray:
    """Outcome distribution Q(x) = <x|_B rho |x>_B of a product-basis measurement."""
    n = B.n
    if isinstance(rho, PureState):
        if rho.amplitudes.size != 2**n:
            raise ValueError("dimension mismatch")
        psi = rho.amplitudes.reshape((2,) * n)
        for i, u in enumerate(B.matrices()):
            psi = np.moveaxis(np.tensordot(u.conj().T, psi, axes=([1], [i])), 0, i)
        q = np.abs(psi.ravel()) ** 2
    else:
        mat = _as_matrix(rho)
        if mat.shape != (2**n, 2**n):
            raise ValueError("dimension mismatch")
        t = mat.reshape((2,) * (2 * n))
        for i, u in enumerate(B.matrices()):
            t = np.moveaxis(np.tensordot(u.conj().T, t, axes=([1], [i])), 0, i)
            t = np.moveaxis(np.tensordot(u.T, t, axes=([1], [n + i])), 0, n + i)
        q = np.real(np.diagonal(t.reshape(2**n, 2**n))).copy()
    np.clip(q, 0.0, None, out=q)
    return q


def single_qubit_probs(x: int, b: int, theta: QubitBasis) -> tuple:
    """Outcome probabilities when H^b|x> is measured in theta."""
    state = hadamard_power(b)[:, x]
    p0 = abs(np.vdot(theta.v0, state)) ** 2
    p1 = abs(np.vdot(theta.v1, state)) ** 2
    return float(p0), float(p1)


def max_overlap_exhaustive(family: Sequence[ProductBasis]) -> float:
    if len(family) < 2:
        raise ValueError("need at least two bases")
    if family[0].n > 10:
        raise ValueError("exhaustive overlap limited to n <= 10")
    us = [B.unitary() for B in family]
    best = 0.0
    for j in range(len(us)):
        for k in range(j + 1, len(us)):
            best = max(best, float(np.max(np.abs(us[j].conj().T @ us[k]))))
    return best


def max_overlap(family: Sequence[ProductBasis]) -> float:
    """Largest |<x|_j |y>_k| over distinct family members.

    Codeword-tagged families use the closed form 2**(-d/2), d the minimum
    distance of the tags; anything else is computed exhaustively.
    """
    if len(family) < 2:
        raise ValueError("need at least two bases")
    if all(B.codeword is not None for B in family):
        d = min_distance([B.codeword for B in family])
        return 2.0 ** (-d / 2)
    return max_overlap_exhaustive(family)


def operator_norm(A) -> float:
    """Largest singular value, from the spectrum of A*A."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("operator norm expects a square matrix")
    if A.shape[0] > 2**10:
        raise ValueError("matrix too large")
    lam = np.linalg.eigvalsh(A.conj().T @ A)
    return float(math.sqrt(max(lam.max(), 0.0)))


def is_projector(P, tol: float = 1e-9) -> bool:
    P = np.asarray(P, dtype=complex)
    return bool(np.allclose(P @ P, P, atol=tol) and np.allclose(P, P.conj().T, atol=tol))


def norm_inequality_check(projectors: Sequence[np.ndarray]) -> tuple:
    """(||sum A_j||, 1 + (m-1) max_{j!=k} ||A_j A_k||, lhs <= rhs + 1e-9)."""
    projectors = [np.asarray(P, dtype=complex) for P in projectors]
    if len(projectors) < 2:
        raise ValueError("need at least two projectors")
    for P in projectors:
        if not is_projector(P):
            raise ValueError("input is not an orthogonal projector")
    m = len(projectors)
    lhs = operator_norm(sum(projectors))
    cross = max(
        operator_norm(projectors[j] @ projectors[k]) for j in range(m) for k in range(m) if j != k
    )
    rhs = 1 + (m - 1) * cross
    return lhs, rhs, lhs <= rhs + 1e-9


def trace_norm(A) -> float:
    A = np.asarray(A, dtype=complex)
    if np.allclose(A, A.conj().T, atol=1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh((A + A.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def trace_distance(rho, sigma) -> float:
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return 0.5 * trace_norm(a - b)


def quantized_basis(theta: QubitBasis) -> int:
    """0 if theta is at least as close to the computational basis as to Hadamard, else 1."""
    ket0 = np.array([1, 0], dtype=complex)
    overlaps = []
    for j in (0, 1):
        target = hadamard_power(j) @ ket0
        overlaps.append(max(abs(np.vdot(theta.v0, target)), abs(np.vdot(theta.v1, target))))
    return 1 if overlaps[1] > overlaps[0] + TIE_TOL else 0


def quantized(theta: ProductBasis) -> BitVec:
    return BitVec.from_bits(quantized_basis(b) for b in theta.bases)


# ------------------------------------------------------- Bell measurements

_BELL = {
    # (zz parity, xx parity) -> Bell vector
    (0, 0): np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2),
    (0, 1): np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2),
    (1, 0): np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2),
    (1, 1): np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2),
}


def bell_outcome_probs(state4: np.ndarray) -> dict:
    """Bell-basis outcome probabilities keyed by (ZZ parity, XX parity)."""
    state4 = np.asarray(state4, dtype=complex)
    return {key: float(abs(np.vdot(vec, state4)) ** 2) for key, vec in _BELL.items()}


def pair_parity_probs(state4: np.ndarray, c_first: tuple) -> dict:
    """Joint distribution of the parities for encoding c_first and its complement.

    Measures sigma(c_i) (x) sigma(c_j) together with the complementary pair,
    where sigma(0) = Z and sigma(1) = X. Rotating by H^{c_i} (x) H^{c_j} maps
    the two observables to ZZ and XX, which a Bell measurement reads out.
    Keys are (parity for c_first, parity for the complement).
    """
    u = np.kron(hadamard_power(c_first[0]), hadamard_power(c_first[1]))
    return bell_outcome_probs(u @ np.asarray(state4, dtype=complex))


def bell_parity_probs(x1: int, x2: int, a: int, mixed: bool = False) -> dict:
    """Outcome distribution of the pair trick on |x1>_a |x2>_a.

    With ``mixed`` the first qubit is encoded in the opposite basis,
    |x1>_{1-a} |x2>_a, and a Hadamard on it precedes the Bell measurement.
    Keys are (parity_plus, parity_times).
    """
    first = hadamard_power(a ^ int(mixed))[:, x1]
    second = hadamard_power(a)[:, x2]
    state = np.kron(first, second)
    if mixed:
        state = np.kron(HADAMARD, IDENTITY) @ state
    return bell_outcome_probs(state)


def bell_parity(x1: int, x2: int, a: int, rng: np.random.Generator, mixed: bool = False) -> tuple:
    """Sample (parity_plus, parity_times); the one matching a always equals x1 ^ x2."""
    probs = bell_parity_probs(x1, x2, a, mixed)
    keys = list(probs)
    p = np.array([probs[k] for k in keys])
    return keys[rng.choice(len(keys), p=p / p.sum())]
