"""Projector-sum uncertainty relation, good event, and the all-but-one J' construction.

Outcome distributions Q^j are indexed by the integer encoding of x used in
:mod:`qidlab.qsim`. The J' construction runs on exact rationals: each Q^j is
rounded to a multiple of 2**-60 and corrected to sum to one, so the
independence of J and J' can be checked as an equality of fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bits import BinaryCode
from .infotheory import Dist, JointDist
from .qsim import DensityMatrix, ProductBasis, max_overlap, measure_dist

EXACT_BITS = 60
FLOAT_ZERO = 1e-12
CHECK_TOL = 1e-9

CASE_ZERO = "zero"
CASE_INFLATE = "inflate"
CASE_DEFLATE = "deflate"


@dataclass(frozen=True, eq=False)
class BasisFamily:
    bases: tuple
    c: float
    delta: float
    code: BinaryCode | None = None

    def __post_init__(self):
        if len(self.bases) < 2:
            raise ValueError("a family needs at least two bases")
        if len({b.n for b in self.bases}) != 1:
            raise ValueError("bases act on different numbers of qubits")
        if not 0 < self.c <= 1 + 1e-12:
            raise ValueError("overlap must lie in (0, 1]")

    @classmethod
    def from_code(cls, code: BinaryCode) -> "BasisFamily":
        bases = tuple(ProductBasis.from_codeword(code.encode(w)) for w in range(code.m))
        return cls(bases, 2.0 ** (-code.d / 2), code.d / code.n, code)

    @classmethod
    def from_bases(cls, bases: Sequence[ProductBasis]) -> "BasisFamily":
        bases = tuple(bases)
        c = max_overlap(bases)
        n = bases[0].n
        return cls(bases, c, -math.log2(c * c) / n)

    @property
    def n(self) -> int:
        return self.bases[0].n

    @property
    def m(self) -> int:
        return len(self.bases)

    def distributions(self, rho) -> np.ndarray:
        """Array Q[j, x] of outcome probabilities for every basis."""
        return np.stack([measure_dist(rho, B) for B in self.bases])


def _rho_matrix(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


# --------------------------------------------------------- set relation


def thm_sets_bound(rho, family: BasisFamily, sets: Sequence[Sequence[int]], Q: np.ndarray | None = None) -> tuple:
    """(sum_j Q^j(L^j), 1 + c(m-1) max_{j != k} sqrt(|L^j||L^k|), holds)."""
    if len(sets) != family.m:
        raise ValueError("one subset per basis required")
    size = 1 << family.n
    clean = []
    for L in sets:
        idx = sorted(set(int(x) for x in L))
        if idx and (idx[0] < 0 or idx[-1] >= size):
            raise ValueError("subset element out of range")
        clean.append(idx)
    if Q is None:
        Q = family.distributions(rho)
    lhs = float(sum(Q[j, L].sum() for j, L in enumerate(clean)))
    sizes = [len(L) for L in clean]
    m = family.m
    cross = max(math.sqrt(sizes[j] * sizes[k]) for j in range(m) for k in range(m) if j != k)
    rhs = 1 + family.c * (m - 1) * cross
    return lhs, rhs, lhs <= rhs + CHECK_TOL


# ------------------------------------------------------------ good event


def _check_epsilon(family: BasisFamily, epsilon: float) -> None:
    if not 0 < epsilon < family.delta / 4:
        raise ValueError(f"epsilon must lie in (0, delta/4) = (0, {family.delta / 4})")


def exact_distribution(q: np.ndarray, bits: int = EXACT_BITS) -> list:
    """Round a probability vector to multiples of 2**-bits summing exactly to one."""
    scale = 1 << bits
    ints = [max(0, int(round(float(v) * scale))) for v in q]
    ints[int(np.argmax(q))] += scale - sum(ints)
    if min(ints) < 0:
        raise ValueError("rounding produced a negative probability")
    return [Fraction(v, scale) for v in ints]


@dataclass
class GoodEvent:
    epsilon: float
    threshold: float
    small: list
    """small[j][x]: x lies in S^j."""
    q_small: list
    qualifies: list
    pr_event: list
    hmin: list
    sum_bound: float
    hmin_bound: float
    pr_event_total: object = None
    pr_event_total_bound: float | None = None

    @property
    def event_sum(self):
        return sum(self.pr_event)

    def indicator(self, j: int, x: int) -> int:
        return int(self.qualifies[j] and self.small[j][x])

    def checks(self) -> dict:
        out = {
            "sum": float(self.event_sum) >= self.sum_bound - CHECK_TOL,
            "hmin": all(h is None or h >= self.hmin_bound - CHECK_TOL for h in self.hmin),
        }
        if self.pr_event_total is not None:
            out["total"] = float(self.pr_event_total) >= self.pr_event_total_bound - CHECK_TOL
        return out


def _good_event(Q, family: BasisFamily, epsilon: float, P_J=None) -> GoodEvent:
    n, m = family.n, family.m
    threshold = 2.0 ** (-(family.delta / 2 - epsilon) * n)
    floor = 2.0 ** (-epsilon * n)
    exact = isinstance(Q[0][0], Fraction)
    zero = Fraction(0) if exact else 0.0
    small, q_small, qualifies, pr, hmin = [], [], [], [], []
    for j in range(m):
        row = Q[j]
        mask = [v <= threshold for v in row]
        mass = sum((v for v, s in zip(row, mask) if s), zero)
        ok = mass >= floor
        small.append(mask)
        q_small.append(mass)
        qualifies.append(bool(ok))
        pr.append(mass if ok else zero)
        if ok and mass > 0:
            top = max(v for v, s in zip(row, mask) if s)
            hmin.append(-math.log2(float(top / mass)) if top > 0 else float("inf"))
        else:
            hmin.append(None)
    ev = GoodEvent(
        epsilon=epsilon,
        threshold=threshold,
        small=small,
        q_small=q_small,
        qualifies=qualifies,
        pr_event=pr,
        hmin=hmin,
        sum_bound=(m - 1) - (2 * m - 1) * floor,
        hmin_bound=(family.delta / 2 - 2 * epsilon) * n,
    )
    if P_J is not None:
        pj = list(P_J.probs)
        ev.pr_event_total = sum((p * e for p, e in zip(pj, pr)), zero)
        p = float(max(pj))
        ev.pr_event_total_bound = (1 - p) - p * (2 * m - 1) * floor
    return ev


def good_event(rho, family: BasisFamily, P_J: Dist | None = None, epsilon: float = 0.1, exact: bool = False) -> GoodEvent:
    """Sets S^j, Pr[E|J=j] and Hmin(X|J=j,E) for the event E."""
    _check_epsilon(family, epsilon)
    Q = family.distributions(_rho_matrix(rho))
    if exact:
        Q = [exact_distribution(q) for q in Q]
    else:
        Q = [list(map(float, q)) for q in Q]
    return _good_event(Q, family, epsilon, P_J)


# ------------------------------------------------------- J' construction


def water_fill(caps: Sequence[Fraction], total: Fraction) -> list:
    """Largest-minimum allocation a_j <= caps_j with sum a_j = total."""
    if total > sum(caps):
        raise ValueError("allocation infeasible")
    alloc = [Fraction(0)] * len(caps)
    remaining = Fraction(total)
    left = len(caps)
    for j in sorted(range(len(caps)), key=lambda i: caps[i]):
        share = remaining / left
        take = min(caps[j], share)
        alloc[j] = take
        remaining -= take
        left -= 1
    return alloc


@dataclass
class JPrimeResult:
    joint: JointDist
    alpha: Fraction
    case_tag: str
    epsilon: float
    n: int
    m: int
    delta: float
    pr_psi: Fraction
    psi_bound: float
    hmin_bound: float
    hmin_pairs: dict
    jprime_marginal: list
    degenerate: int | None
    inflate_capped: bool
    checks: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return self.hmin_bound <= 0

    @property
    def passed(self) -> bool:
        return all(v for v in self.checks.values() if isinstance(v, bool))

    def to_json(self, include_joint: bool = True) -> dict:
        out = {
            "case_tag": self.case_tag,
            "alpha": str(self.alpha),
            "alpha_float": float(self.alpha),
            "epsilon": self.epsilon,
            "n": self.n,
            "m": self.m,
            "delta": self.delta,
            "pr_psi": float(self.pr_psi),
            "psi_bound": self.psi_bound,
            "hmin_bound": self.hmin_bound,
            "hmin_min": min(self.hmin_pairs.values()) if self.hmin_pairs else None,
            "vacuous": self.vacuous,
            "degenerate_jstar": self.degenerate,
            "inflate_capped": self.inflate_capped,
            "jprime_marginal": [str(p) for p in self.jprime_marginal],
            "checks": dict(self.checks),
        }
        if include_joint:
            out["joint"] = self.joint.to_json()
        return out


def _exact_pj(P_J: Dist) -> list:
    return [Fraction(p).limit_denominator(1 << 40) if not isinstance(p, Fraction) else p for p in P_J.probs]


def construct_jprime(rho, family: BasisFamily, P_J: Dist, epsilon: float, Q=None) -> JPrimeResult:
    """Build P_{J J' X Psi} following the three-case construction.

    ``rho`` may be None when exact outcome distributions ``Q`` are supplied.
    """
    _check_epsilon(family, epsilon)
    n, m = family.n, family.m
    if len(P_J.labels) != m:
        raise ValueError("P_J must range over the m bases")
    if Q is None:
        Q = [exact_distribution(q) for q in family.distributions(_rho_matrix(rho))]
    pj = _exact_pj(P_J)
    if sum(pj) != 1:
        raise ValueError("P_J must sum to one exactly")
    N = 1 << n
    ev = _good_event(Q, family, epsilon)
    e = [[ev.indicator(j, x) for x in range(N)] for j in range(m)]
    p_e = list(ev.pr_event)
    alpha = (m - 1) - sum(p_e)
    one = Fraction(1)

    # per (j, x): P(E' & Psi), P(E' & not Psi), P(not E' & Psi)
    inflate_capped = False
    if alpha == 0:
        case = CASE_ZERO
        pe1 = [[Fraction(v) for v in row] for row in e]
        pe0 = [[Fraction(0)] * N for _ in range(m)]
    elif alpha < 0:
        case = CASE_DEFLATE
        r = Fraction(m - 1) / (m - 1 - alpha)
        pe1 = [[r * v for v in row] for row in e]
        pe0 = [[Fraction(0)] * N for _ in range(m)]
    else:
        case = CASE_INFLATE
        p_bar = [one - p for p in p_e]
        uniform = alpha / m
        if all(pb >= uniform for pb in p_bar):
            alloc = [uniform] * m
        else:
            inflate_capped = True
            alloc = water_fill(p_bar, alpha)
        frac = [a / pb if pb > 0 else Fraction(0) for a, pb in zip(alloc, p_bar)]
        pe1 = [[Fraction(v) for v in row] for row in e]
        pe0 = [[(1 - v) * frac[j] for v in e[j]] for j in range(m)]
    pb1 = [[one - pe1[j][x] - pe0[j][x] for x in range(N)] for j in range(m)]
    for j in range(m):
        for x in range(N):
            if min(pe1[j][x], pe0[j][x], pb1[j][x]) < 0:
                raise ArithmeticError("negative conditional probability in J' construction")

    p_ep = [sum(Q[j][x] * (pe1[j][x] + pe0[j][x]) for x in range(N)) for j in range(m)]
    p_ep_bar = [one - v for v in p_ep]
    if sum(p_ep_bar) != 1:
        raise ArithmeticError("adjusted event does not have complement mass exactly one")

    zeros = [j for j in range(m) if p_ep[j] == 0]
    degenerate = zeros[0] if zeros else None
    kernel = [[Fraction(0)] * m for _ in range(m)]
    for j in range(m):
        for jp in range(m):
            if degenerate is not None:
                kernel[j][jp] = one if jp == degenerate else Fraction(0)
            elif jp != j:
                kernel[j][jp] = p_ep_bar[jp] / p_ep[j]
    for j in range(m):
        if degenerate is None and sum(kernel[j]) != 1:
            raise ArithmeticError("J' kernel is not a distribution")

    probs = np.empty((m, m, N, 2), dtype=object)
    for j in range(m):
        for jp in range(m):
            k = kernel[j][jp]
            same = jp == j
            for x in range(N):
                base = pj[j] * Q[j][x]
                psi1 = pe1[j][x] * k + (pb1[j][x] if same else 0)
                probs[j, jp, x, 1] = base * psi1
                probs[j, jp, x, 0] = base * pe0[j][x] * k
    joint = JointDist(("J", "J'", "X", "Psi"), (tuple(range(m)), tuple(range(m)), tuple(range(N)), (0, 1)), probs)

    pjj = [[sum(probs[j, jp].ravel(), Fraction(0)) for jp in range(m)] for j in range(m)]
    pjp = [sum(pjj[j][jp] for j in range(m)) for jp in range(m)]
    independent = all(pjj[j][jp] == pj[j] * pjp[jp] for j in range(m) for jp in range(m))
    pr_psi = sum(probs[..., 1].ravel(), Fraction(0))
    psi_bound = 1 - 2 * 2.0 ** (-epsilon * n)
    hmin_bound = (family.delta / 2 - 2 * epsilon) * n - 1

    hmin_pairs = {}
    markov = True
    for j in range(m):
        off = [sum(probs[j, jp, x, 1] for jp in range(m) if jp != j) for x in range(N)]
        off_total = sum(off, Fraction(0))
        for jp in range(m):
            if jp == j:
                continue
            cell = probs[j, jp, :, 1]
            total = sum(cell, Fraction(0))
            if total == 0:
                continue
            hmin_pairs[(j, jp)] = -math.log2(float(max(cell) / total))
            # X <-> J <-> J' on {J != J', Psi}
            if any(cell[x] * off_total != off[x] * total for x in range(N)):
                markov = False

    checks = {
        "independence": independent,
        "jprime_marginal": pjp == p_ep_bar,
        "markov": markov,
        "psi": float(pr_psi) >= psi_bound - CHECK_TOL,
    }
    if hmin_bound > 0:
        checks["hmin"] = all(h >= hmin_bound - CHECK_TOL for h in hmin_pairs.values())
    else:
        checks["hmin"] = "vacuous"
    return JPrimeResult(
        joint=joint,
        alpha=alpha,
        case_tag=case,
        epsilon=epsilon,
        n=n,
        m=m,
        delta=family.delta,
        pr_psi=pr_psi,
        psi_bound=psi_bound,
        hmin_bound=hmin_bound,
        hmin_pairs=hmin_pairs,
        jprime_marginal=p_ep_bar,
        degenerate=degenerate,
        inflate_capped=inflate_capped,
        checks=checks,
    )


# ------------------------------------------------------ auxiliary checks


def shannon_entropy(q: np.ndarray) -> float:
    q = np.asarray(q, dtype=float)
    q = q[q > 0]
    return float(-(q * np.log2(q)).sum())


def shannon_check(rho, family: BasisFamily) -> tuple:
    """(min_{j != k} H(Q^j) + H(Q^k), -log2 c^2, holds)."""
    Q = family.distributions(_rho_matrix(rho))
    h = [shannon_entropy(q) for q in Q]
    lhs = min(h[j] + h[k] for j in range(family.m) for k in range(family.m) if j != k)
    rhs = -math.log2(family.c**2)
    return lhs, rhs, lhs >= rhs - CHECK_TOL


def counterexample_state(family: BasisFamily, j: int, k: int, x: int = 0, y: int = 0) -> DensityMatrix:
    """Uniform mixture of the x-th vector of basis j and the y-th vector of basis k."""
    vj = family.bases[j].unitary()[:, x]
    vk = family.bases[k].unitary()[:, y]
    return DensityMatrix(0.5 * np.outer(vj, vj.conj()) + 0.5 * np.outer(vk, vk.conj()))


def average_min_entropy(rho, family: BasisFamily, j: int, k: int) -> float:
    """1/2 Hmin(X|J=j) + 1/2 Hmin(X|J=k)."""
    Q = family.distributions(_rho_matrix(rho))
    return 0.5 * (-math.log2(Q[j].max())) + 0.5 * (-math.log2(Q[k].max()))


# -------------------------------------------------------- random inputs

STATE_KINDS = ("mixed", "wishart", "basis", "pair", "noisy_basis")
STATE_WEIGHTS = (0.15, 0.15, 0.15, 0.35, 0.2)


def random_state(family: BasisFamily, rng: np.random.Generator, kind: str | None = None) -> tuple:
    """Random test state drawn from a few structured classes; returns (rho, kind)."""
    kind = kind or STATE_KINDS[rng.choice(len(STATE_KINDS), p=STATE_WEIGHTS)]
    dim = 1 << family.n

    def basis_vec():
        j = int(rng.integers(family.m))
        return j, family.bases[j].unitary()[:, int(rng.integers(dim))]

    if kind == "mixed":
        rho = np.eye(dim, dtype=complex) / dim
    elif kind == "wishart":
        rank = int(rng.integers(1, dim + 1))
        rho = DensityMatrix.random(dim, rng, rank=rank).entries
    elif kind == "basis":
        _, v = basis_vec()
        rho = np.outer(v, v.conj())
    elif kind == "pair":
        j, v = basis_vec()
        k = int((j + 1 + rng.integers(family.m - 1)) % family.m)
        u = family.bases[k].unitary()[:, int(rng.integers(dim))]
        w = rng.uniform(0.2, 0.8)
        rho = w * np.outer(v, v.conj()) + (1 - w) * np.outer(u, u.conj())
    elif kind == "noisy_basis":
        _, v = basis_vec()
        eta = rng.uniform(0.0, 0.6)
        rho = (1 - eta) * np.outer(v, v.conj()) + eta * DensityMatrix.random(dim, rng).entries
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return DensityMatrix((rho + rho.conj().T) / 2 / np.trace(rho).real), kind


def random_pj(m: int, rng: np.random.Generator, resolution: int = 64) -> Dist:
    """Random P_J with rational weights."""
    w = rng.integers(1, resolution + 1, size=m)
    total = int(w.sum())
    return Dist(tuple(range(m)), np.array([Fraction(int(v), total) for v in w], dtype=object))


def random_epsilon(family: BasisFamily, rng: np.random.Generator) -> float:
    return float(rng.uniform(0.02, 0.98)) * family.delta / 4
