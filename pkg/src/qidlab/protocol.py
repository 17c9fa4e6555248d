"""The Q-ID identification protocol, its honest parties, and adversaries.

Product states measured qubit-wise are simulated position by position with
:func:`qidlab.qsim.single_qubit_probs`; ``measurement_factorization_check``
compares that shortcut against full statevector simulation.

Outcome vectors over {0,1}^n in this module are indexed by ``BitVec.value``
(bit i of the index is position i), which differs from the big-endian state
index of :mod:`qidlab.qsim`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .bits import (
    BinaryCode,
    BitMatrix,
    BitVec,
    StrongHash,
    find_c_tilde,
    hash_field_degree,
    irreducible_poly,
    row_span,
)
from .infotheory import walsh_hadamard
from .qsim import (
    ProductBasis,
    QubitBasis,
    bits_of,
    measure_dist,
    pair_parity_probs,
    hadamard_power,
    prepare,
    quantized,
    single_qubit_probs,
)

EXACT_MAX_N = 20


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    ell: int
    code: BinaryCode
    rng_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.ell < self.n:
            raise ValueError("need 1 <= ell < n")
        if self.code.n != self.n:
            raise ValueError("code length differs from n")
        if self.code.d <= 0:
            raise ValueError("code needs positive minimum distance")

    @property
    def m(self) -> int:
        return self.code.m

    @property
    def d(self) -> int:
        return self.code.d

    @property
    def delta(self) -> float:
        return self.code.d / self.n

    @property
    def hash_degree(self) -> int:
        return hash_field_degree(self.m, self.ell)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)

    def to_json(self) -> dict:
        return {"n": self.n, "ell": self.ell, "m": self.m, "d": self.d, "seed": self.rng_seed}


def _bits_str(v: BitVec) -> str:
    return str(v)


@dataclass(frozen=True)
class Transcript:
    w: int
    x: BitVec
    F: BitMatrix
    g: StrongHash
    z: BitVec
    x_prime: BitVec
    accept: bool
    seed: int | None = None

    def to_json(self) -> dict:
        return {
            "w": self.w,
            "x": _bits_str(self.x),
            "F": [str(r) for r in self.F.rows],
            "g": {"a": self.g.a, "b": self.g.b, "ell": self.g.ell, "k": self.g.k},
            "z": _bits_str(self.z),
            "x_prime": _bits_str(self.x_prime),
            "accept": self.accept,
            "seed": self.seed,
        }


# --------------------------------------------------------------- sampling


def _sample_outcomes(x: BitVec, c: BitVec, theta: ProductBasis, rng: np.random.Generator) -> BitVec:
    """Measure |x>_c qubit-wise in theta."""
    p0 = np.array([single_qubit_probs(xi, ci, th)[0] for xi, ci, th in zip(x.bits, c.bits, theta.bases)])
    u = rng.random(x.n)
    return BitVec.from_bits((u >= p0).astype(int))


def _measure_in_code_basis(x: BitVec, c: BitVec, basis: BitVec, rng: np.random.Generator) -> BitVec:
    """Outcome of measuring |x>_c in the product basis given by bit string ``basis``."""
    diff = (c ^ basis).value
    noise = int(sum(int(b) << i for i, b in enumerate(rng.integers(0, 2, size=x.n)))) & diff
    return BitVec(x.value ^ noise, x.n)


def _setup(params: ProtocolParams, rng: np.random.Generator):
    x = BitVec.random(params.n, rng)
    F = BitMatrix.random(params.ell, params.n, rng)
    g = StrongHash.random(params.m, params.ell, rng)
    return x, F, g


def honest_run(params: ProtocolParams, w: int, rng: np.random.Generator, seed: int | None = None) -> Transcript:
    """Steps 1-6 with honest user and server."""
    if not 0 <= w < params.m:
        raise ValueError("password index out of range")
    x, F, g = _setup(params, rng)
    c = params.code.encode(w)
    x_prime = _measure_in_code_basis(x, c, c, rng)
    z = F.apply(x) ^ g(w)
    accept = z == F.apply(x_prime) ^ g(w)
    return Transcript(w, x, F, g, z, x_prime, bool(accept), seed)


def dishonest_user_run(params: ProtocolParams, w_true: int, w_guess: int, rng: np.random.Generator) -> bool:
    """User holding ``w_guess`` tries to log in against a server expecting ``w_true``."""
    x, F, g = _setup(params, rng)
    x_prime = _measure_in_code_basis(x, params.code.encode(w_guess), params.code.encode(w_true), rng)
    z = F.apply(x) ^ g(w_guess)
    return bool(z == F.apply(x_prime) ^ g(w_true))


def _parity_rows(F_bits: np.ndarray, v_bits: np.ndarray) -> np.ndarray:
    """Batched F v over GF(2): F_bits (T, ell, n), v_bits (T, n) -> (T,) ints."""
    prod = np.einsum("tln,tn->tl", F_bits, v_bits) & 1
    weights = 1 << np.arange(F_bits.shape[1], dtype=np.int64)
    return (prod * weights).sum(axis=1)


def dishonest_user_rate(params: ProtocolParams, w_true: int, w_guess: int, trials: int, rng: np.random.Generator) -> tuple:
    """(acceptance frequency, binomial stderr) over ``trials`` batched runs."""
    n, ell, k = params.n, params.ell, params.hash_degree
    c_true = params.code.encode(w_true).to_array()
    c_guess = params.code.encode(w_guess).to_array()
    diff = (c_true ^ c_guess).astype(np.int64)
    x = rng.integers(0, 2, size=(trials, n))
    noise = rng.integers(0, 2, size=(trials, n)) * diff
    x_prime = x ^ noise
    F = rng.integers(0, 2, size=(trials, ell, n))
    a = rng.integers(0, 2**k, size=trials, dtype=np.uint64)
    b = rng.integers(0, 2**k, size=trials, dtype=np.uint64)
    poly = irreducible_poly(k)
    mask = np.uint64((1 << ell) - 1)
    g_true = (kernels.gf2k_mul(a, np.uint64(w_true), k, poly) ^ b) & mask
    g_guess = (kernels.gf2k_mul(a, np.uint64(w_guess), k, poly) ^ b) & mask
    z = _parity_rows(F, x) ^ g_guess.astype(np.int64)
    z_prime = _parity_rows(F, x_prime) ^ g_true.astype(np.int64)
    acc = z == z_prime
    p = float(acc.mean())
    return p, math.sqrt(max(p * (1 - p), 1e-300) / trials)


def server_security_bound(m: int, ell: int) -> float:
    return math.comb(m, 2) * 2.0**-ell


# ------------------------------------------------------------- SQOM model

BasisRule = Callable[[BitMatrix, StrongHash, BitVec], ProductBasis]


@dataclass(frozen=True)
class SqomStrategy:
    """Non-adaptive single-qubit strategy: theta depends on (F, g, z) only."""

    name: str
    basis_rule: BasisRule

    def theta(self, F: BitMatrix, g: StrongHash, z: BitVec) -> ProductBasis:
        th = self.basis_rule(F, g, z)
        if not isinstance(th, ProductBasis) or th.n != F.n:
            raise ValueError("basis rule must return one qubit basis per position")
        return th


def quantized_guess_strategy(code: BinaryCode, w_hat: int) -> SqomStrategy:
    basis = ProductBasis.from_codeword(code.encode(w_hat))
    return SqomStrategy(f"guess[{w_hat}]", lambda F, g, z: basis)


def breidbart_strategy(n: int) -> SqomStrategy:
    basis = ProductBasis.uniform(QubitBasis.breidbart(), n)
    return SqomStrategy("breidbart", lambda F, g, z: basis)


def circular_strategy(n: int) -> SqomStrategy:
    basis = ProductBasis.uniform(QubitBasis.circular(), n)
    return SqomStrategy("circular", lambda F, g, z: basis)


def random_product_strategy(n: int, seed: int) -> SqomStrategy:
    """One fixed Haar-random product basis, drawn once from ``seed``."""
    basis = ProductBasis.random(n, np.random.default_rng(seed))
    return SqomStrategy(f"random_product[{seed}]", lambda F, g, z: basis)


def z_dependent_strategy(code: BinaryCode) -> SqomStrategy:
    """Candidate password picked from z: the z-th codeword (mod m)."""
    bases = [ProductBasis.from_codeword(code.encode(w)) for w in range(code.m)]
    return SqomStrategy("z_candidate", lambda F, g, z: bases[z.value % code.m])


def oracle_strategy(code: BinaryCode, w: int) -> SqomStrategy:
    """Measures in the true basis; built with w explicitly, so outside the model."""
    basis = ProductBasis.from_codeword(code.encode(w))
    return SqomStrategy(f"oracle[{w}]", lambda F, g, z: basis)


def strategy_catalog(code: BinaryCode, seed: int = 0) -> list:
    return [
        quantized_guess_strategy(code, 0),
        breidbart_strategy(code.n),
        random_product_strategy(code.n, seed),
        z_dependent_strategy(code),
        circular_strategy(code.n),
    ]


@dataclass(frozen=True)
class AdversaryView:
    theta: ProductBasis
    y: BitVec
    z: BitVec
    F: BitMatrix
    g: StrongHash
    transcript: Transcript | None = field(default=None, compare=False)
    """Ground truth of the run; not part of the adversary's view."""

    def to_json(self) -> dict:
        out = {
            "theta": [[[float(c.real), float(c.imag)] for c in np.concatenate([b.v0, b.v1])] for b in self.theta.bases],
            "theta_hat": str(quantized(self.theta)),
            "y": str(self.y),
            "z": str(self.z),
            "F": [str(r) for r in self.F.rows],
            "g": {"a": self.g.a, "b": self.g.b, "ell": self.g.ell, "k": self.g.k},
        }
        if self.transcript is not None:
            out["truth"] = self.transcript.to_json()
        return out


def sqom_run(params: ProtocolParams, w: int, strategy: SqomStrategy, rng: np.random.Generator) -> AdversaryView:
    """Honest user against a server that stores the qubits and measures them in theta(F, g, z)."""
    x, F, g = _setup(params, rng)
    c = params.code.encode(w)
    z = F.apply(x) ^ g(w)
    theta = strategy.theta(F, g, z)
    y = _sample_outcomes(x, c, theta, rng)
    truth = Transcript(w, x, F, g, z, y, False)
    return AdversaryView(theta, y, z, F, g, truth)


def measurement_factorization_check(x: BitVec, c: BitVec, theta: ProductBasis) -> float:
    """Max deviation between statevector outcome probabilities and the per-qubit product."""
    full = measure_dist(prepare(x, c), theta)
    worst = 0.0
    for idx in range(1 << x.n):
        y = bits_of(idx, x.n)
        prod = 1.0
        for xi, ci, th, yi in zip(x.bits, c.bits, theta.bases, y.bits):
            prod *= single_qubit_probs(xi, ci, th)[yi]
        worst = max(worst, abs(prod - full[idx]))
    return worst


def delta_flip_probs(c: BitVec, theta: ProductBasis) -> np.ndarray:
    """Pr[Delta_i = 1] per position, independent of x_i."""
    return np.array([single_qubit_probs(0, ci, th)[1] for ci, th in zip(c.bits, theta.bases)])


def delta_biases(c: BitVec, theta: ProductBasis) -> np.ndarray:
    return np.abs(1 - 2 * delta_flip_probs(c, theta))


def z_distribution_exhaustive(params: ProtocolParams, F: BitMatrix) -> np.ndarray:
    """Exact P(z | w) over all x and all hash keys, as an (m, 2**ell) array."""
    n, ell, k = params.n, params.ell, params.hash_degree
    if ell > 4 or n > 12:
        raise ValueError("exhaustive enumeration limited to ell <= 4, n <= 12")
    fx = _image_table(F)
    counts = np.zeros((params.m, 1 << ell))
    for a in range(1 << k):
        for b in range(1 << k):
            g = StrongHash(a, b, ell, k)
            for w in range(params.m):
                gw = g(w).value
                np.add.at(counts[w], fx ^ gw, 1)
    return counts / counts.sum(axis=1, keepdims=True)


# --------------------------------------------------- exact user security


def _image_table(F: BitMatrix) -> np.ndarray:
    """F x for every x (indexed by x.value), as ints."""
    n = F.n
    xs = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=np.int64)
    for r, row in enumerate(F.rows):
        out |= (np.bitwise_count(xs & row.value) & 1).astype(np.int64) << r
    return out


def coset_distribution(fx: np.ndarray, u: int) -> np.ndarray:
    """X uniform on {x : F x = u}."""
    sel = (fx == u).astype(float)
    total = sel.sum()
    if total == 0:
        raise ValueError("u is not in the image of F")
    return sel / total


def apply_flip_channel(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distribution of X xor Delta with independent Delta_i ~ Bernoulli(q_i)."""
    out = np.array(p, dtype=float, copy=True)
    xs = np.arange(out.size)
    for i, qi in enumerate(q):
        out = (1 - qi) * out + qi * out[xs ^ (1 << i)]
    return out


def bias_spectrum(p: np.ndarray) -> np.ndarray:
    """bias(alpha . Y) for all alpha (indexed by alpha.value)."""
    return np.abs(walsh_hadamard(p))


def usec_bound(ell: int, d: int, m: int, beta: float) -> float:
    return 0.5 * 2.0 ** (ell / 2 - 0.25 * (0.25 - beta) * d) + math.comb(m, 2) * 2.0 ** (2 * ell) * math.exp(-2 * d * beta**2)


def cell_dunif_bound(ell: int, d: int, beta: float) -> float:
    return 0.5 * 2.0 ** (ell / 2 - 0.25 * (0.25 - beta) * d)


def default_w_prime(F: BitMatrix, theta: ProductBasis, code: BinaryCode, beta: float) -> int:
    """W' from the quantized basis: the unique close codeword, else index 0."""
    found = find_c_tilde(F, quantized(theta), code, beta)
    return found.index if found.index is not None else 0


@dataclass
class CellReport:
    z: int
    w: int
    w_prime: int
    dunif: float
    xor_bound: float
    cell_bound: float
    max_bias_outside_span: float
    span_checks: list
    """(alpha, bias, product bound 2^{-|alpha & (c ^ theta_hat)|/2}, inequality holds, exponent bound)."""
    all_inequalities: bool


def _span_values(F: BitMatrix) -> list:
    return sorted(v.value for v in row_span(F) if v.value)


def analyse_cells(params: ProtocolParams, F: BitMatrix, g: StrongHash, strategy: SqomStrategy, beta: float,
                  w_prime_rule=None) -> list:
    """Exact per-cell biases and distance to uniform of Y given (F(X)=u, theta, W=w, W'=w')."""
    n, code = params.n, params.code
    if n > EXACT_MAX_N:
        raise ValueError(f"exact cell analysis limited to n <= {EXACT_MAX_N}")
    rule = w_prime_rule or (lambda F_, th: default_w_prime(F_, th, code, beta))
    fx = _image_table(F)
    image = set(np.unique(fx).tolist())
    span = _span_values(F)
    span_set = set(span) | {0}
    outside = np.array([a not in span_set for a in range(1 << n)])
    threshold = 0.5 * (0.25 - beta) * params.d
    exponent_bound = 2.0 ** (-0.25 * (0.25 - beta) * params.d)
    reports = []
    for zv in range(1 << params.ell):
        z = BitVec(zv, params.ell)
        theta = strategy.theta(F, g, z)
        th_hat = quantized(theta)
        wp = rule(F, theta)
        for w in range(params.m):
            if w == wp:
                continue
            u = zv ^ g(w).value
            if u not in image:
                continue
            c = code.encode(w)
            q = delta_flip_probs(c, theta)
            p_y = apply_flip_channel(coset_distribution(fx, u), q)
            biases = bias_spectrum(p_y)
            mismatch = (c ^ th_hat).value
            checks = []
            all_ok = True
            for a in span:
                overlap = bin(a & mismatch).count("1")
                holds = overlap >= threshold
                all_ok &= holds
                checks.append((a, float(biases[a]), 2.0 ** (-overlap / 2), holds, exponent_bound))
            reports.append(
                CellReport(
                    z=zv,
                    w=w,
                    w_prime=wp,
                    dunif=0.5 * float(np.abs(p_y - 1.0 / p_y.size).sum()),
                    xor_bound=0.5 * math.sqrt(float(np.sum(biases[1:] ** 2))),
                    cell_bound=cell_dunif_bound(params.ell, params.d, beta),
                    max_bias_outside_span=float(biases[outside].max()) if outside.any() else 0.0,
                    span_checks=checks,
                    all_inequalities=all_ok,
                )
            )
    return reports


def exact_user_sd(params: ProtocolParams, F: BitMatrix, g: StrongHash, strategy: SqomStrategy, beta: float,
                  w_prime_rule=None) -> dict:
    """SD(P_{EW|W'=w',W!=W'}, P_W P_E) for each reachable w', with W and X uniform."""
    n, ell, m, code = params.n, params.ell, params.m, params.code
    if n > EXACT_MAX_N:
        raise ValueError(f"exact evaluation limited to n <= {EXACT_MAX_N}")
    rule = w_prime_rule or (lambda F_, th: default_w_prime(F_, th, code, beta))
    fx = _image_table(F)
    counts = np.bincount(fx, minlength=1 << ell)
    by_wp: dict = {}
    for zv in range(1 << ell):
        z = BitVec(zv, ell)
        theta = strategy.theta(F, g, z)
        wp = rule(F, theta)
        by_wp.setdefault(wp, []).append((zv, theta))
    out = {}
    for wp, cells in by_wp.items():
        ws = [w for w in range(m) if w != wp]
        # joint[w_idx, z_idx, y]
        joint = np.zeros((len(ws), len(cells), 1 << n))
        for zi, (zv, theta) in enumerate(cells):
            for wi, w in enumerate(ws):
                u = zv ^ g(w).value
                pz = counts[u] / (1 << n)
                if pz == 0:
                    continue
                q = delta_flip_probs(code.encode(w), theta)
                joint[wi, zi] = pz / m * apply_flip_channel(coset_distribution(fx, u), q)
        total = joint.sum()
        if total == 0:
            continue
        joint /= total
        pw = joint.sum(axis=(1, 2))
        pe = joint.sum(axis=0)
        out[wp] = 0.5 * float(np.abs(joint - pw[:, None, None] * pe[None]).sum())
    return out


@dataclass
class Estimate:
    name: str
    estimate: float
    stderr: float
    trials: int
    seed: int
    bound: float | None = None
    extra: dict = field(default_factory=dict)

    def csv_row(self, params: str) -> dict:
        return {
            "strategy": self.name,
            "params": params,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "trials": self.trials,
            "seed": self.seed,
        }


def user_security_sd(params: ProtocolParams, strategy: SqomStrategy, trials: int, rng: np.random.Generator,
                     beta: float = 0.1, w_prime_rule=None, seed: int = 0) -> Estimate:
    """Average over random (F, g) of the worst-w' exact statistical distance."""
    if trials < 1:
        raise ValueError("need at least one (F, g) sample")
    vals = []
    for _ in range(trials):
        F = BitMatrix.random(params.ell, params.n, rng)
        g = StrongHash.random(params.m, params.ell, rng)
        sd = exact_user_sd(params, F, g, strategy, beta, w_prime_rule)
        vals.append(max(sd.values()) if sd else 0.0)
    vals = np.array(vals)
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return Estimate(strategy.name, float(vals.mean()), stderr, trials, seed,
                    bound=usec_bound(params.ell, params.d, params.m, beta), extra={"max": float(vals.max())})


# ------------------------------------------------------------ Bell attack


@dataclass(frozen=True)
class AttackResult:
    check1: int
    check2: int
    z_bit: int
    discards: frozenset
    odd: bool
    pairs: int


def bell_attack(params: ProtocolParams, w_true: int, w1: int, w2: int, rng: np.random.Generator) -> AttackResult:
    """Two-candidate attack using Bell measurements on pairs of qubits.

    The span element used is the first nonzero row of F (row r), checked
    against bit r of z. If the set of paired positions has odd size, its last
    position is measured singly in the basis of the first candidate.
    """
    if w1 == w2:
        raise ValueError("candidates must differ")
    n, code = params.n, params.code
    x, F, g = _setup(params, rng)
    c = code.encode(w_true)
    z = F.apply(x) ^ g(w_true)
    nonzero = [r for r, row in enumerate(F.rows) if row.value]
    if not nonzero:
        return AttackResult(0, 0, 0, frozenset(), False, 0)
    r = nonzero[0]
    f = F.rows[r]
    c1, c2 = code.encode(w1), code.encode(w2)
    support = [i for i in range(n) if f[i]]
    paired = [i for i in support if c1[i] != c2[i]]
    single = [i for i in support if c1[i] == c2[i]]
    odd = len(paired) % 2 == 1
    if odd:
        single.append(paired.pop())
    par1 = par2 = 0
    for i, j in zip(paired[0::2], paired[1::2]):
        state = np.kron(hadamard_power(c[i])[:, x[i]], hadamard_power(c[j])[:, x[j]])
        probs = pair_parity_probs(state, (c1[i], c1[j]))
        keys = list(probs)
        p = np.array([probs[k] for k in keys])
        k1, k2 = keys[rng.choice(len(keys), p=p / p.sum())]
        par1 ^= k1
        par2 ^= k2
    for i in single:
        p0 = single_qubit_probs(x[i], c[i], QubitBasis.of_bit(c1[i]))[0]
        yi = int(rng.random() >= p0)
        par1 ^= yi
        par2 ^= yi
    check1 = par1 ^ g(w1)[r]
    check2 = par2 ^ g(w2)[r]
    zb = z[r]
    discards = frozenset(w for w, chk in ((w1, check1), (w2, check2)) if chk != zb)
    return AttackResult(check1, check2, zb, discards, odd, len(paired) // 2)


# ------------------------------------------------------------ BQSM bound


def bqsm_epsilon(n: int, delta: float, q: int, ell: int, kappa: float) -> float:
    return 2.0 ** (-0.5 * ((delta / 2 - 2 * kappa) * n - 1 - q - ell)) + 4 * 2.0 ** (-kappa * n)


def bqsm_bound(params: ProtocolParams, q: int, kappa: float) -> tuple:
    """(epsilon, vacuous) for a server storing at most q qubits."""
    if not 0 < kappa < params.delta / 4:
        raise ValueError("kappa must lie in (0, delta/4)")
    eps = bqsm_epsilon(params.n, params.delta, q, params.ell, kappa)
    return eps, eps >= 1
