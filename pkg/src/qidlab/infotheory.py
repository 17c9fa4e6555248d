"""Classical and small quantum information measures.

Distributions store either float64 arrays or object arrays of ``Fraction``;
the exact form is used wherever independence has to be asserted exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .qsim import DensityMatrix, trace_norm

SUM_TOL = 1e-9
RANK_TOL = 1e-10


def _is_exact(probs: np.ndarray) -> bool:
    return probs.dtype == object


def _as_probs(probs) -> np.ndarray:
    arr = np.asarray(probs)
    if arr.dtype == object or any(isinstance(p, Fraction) for p in arr.ravel()[:1]):
        return np.array([Fraction(p) for p in arr.ravel()], dtype=object).reshape(arr.shape)
    return np.asarray(arr, dtype=float)


def _check_total(probs: np.ndarray) -> None:
    if _is_exact(probs):
        if any(p < 0 for p in probs.ravel()):
            raise ValueError("negative probability")
        if sum(probs.ravel(), Fraction(0)) != 1:
            raise ValueError("probabilities do not sum to 1")
    else:
        if probs.size and probs.min() < -SUM_TOL:
            raise ValueError("negative probability")
        if abs(probs.sum() - 1) > SUM_TOL:
            raise ValueError("probabilities do not sum to 1")


@dataclass(frozen=True, eq=False)
class Dist:
    labels: tuple
    probs: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        probs = _as_probs(self.probs).ravel()
        if len(labels) != probs.size:
            raise ValueError("labels and probabilities differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        _check_total(probs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, labels: Sequence, exact: bool = False) -> "Dist":
        labels = tuple(labels)
        p = Fraction(1, len(labels)) if exact else 1.0 / len(labels)
        return cls(labels, np.array([p] * len(labels), dtype=object if exact else float))

    @classmethod
    def point(cls, labels: Sequence, label, exact: bool = False) -> "Dist":
        labels = tuple(labels)
        zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
        return cls(labels, np.array([one if l == label else zero for l in labels], dtype=object if exact else float))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Dist":
        return cls(tuple(mapping), np.array(list(mapping.values())))

    @property
    def exact(self) -> bool:
        return _is_exact(self.probs)

    def __getitem__(self, label):
        return self.probs[self.labels.index(label)]

    def support(self) -> tuple:
        return tuple(l for l, p in zip(self.labels, self.probs) if p > 0)

    def as_float(self) -> np.ndarray:
        return self.probs.astype(float)

    def to_json(self) -> dict:
        return {"axes": [list(self.labels)], "probs": [_jsonable(p) for p in self.probs]}


@dataclass(frozen=True, eq=False)
class JointDist:
    """Joint distribution over named axes; ``probs`` has one dimension per axis."""

    axes: tuple
    labels: tuple
    probs: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        labels = tuple(tuple(l) for l in self.labels)
        probs = _as_probs(self.probs)
        if len(axes) != len(labels) or probs.ndim != len(axes):
            raise ValueError("axes, labels and tensor rank disagree")
        if probs.shape != tuple(len(l) for l in labels):
            raise ValueError("tensor shape does not match label sets")
        if len(set(axes)) != len(axes):
            raise ValueError("duplicate axis names")
        _check_total(probs)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @property
    def exact(self) -> bool:
        return _is_exact(self.probs)

    def _axis(self, name) -> int:
        return self.axes.index(name)

    def marginal(self, *names) -> "JointDist":
        keep = [self._axis(n) for n in names]
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        summed = self.probs.sum(axis=drop) if drop else self.probs
        # summing leaves the kept axes in their original order
        order = sorted(keep)
        summed = np.transpose(np.asarray(summed), [order.index(k) for k in keep])
        return JointDist(tuple(names), tuple(self.labels[k] for k in keep), np.asarray(summed))

    def marginal_dist(self, name) -> Dist:
        m = self.marginal(name)
        return Dist(m.labels[0], m.probs)

    def prob(self, **fixed):
        """Probability of the event fixing some axes to given labels."""
        index = []
        for i, name in enumerate(self.axes):
            if name in fixed:
                index.append(self.labels[i].index(fixed[name]))
            else:
                index.append(slice(None))
        sub = self.probs[tuple(index)]
        if isinstance(sub, np.ndarray):
            return sum(sub.ravel(), Fraction(0)) if self.exact else float(sub.sum())
        return sub

    def condition(self, **fixed) -> "JointDist":
        """Distribution of the remaining axes given the fixed labels."""
        total = self.prob(**fixed)
        if total == 0:
            raise ZeroDivisionError("conditioning on a null event")
        index, rest = [], []
        for i, name in enumerate(self.axes):
            if name in fixed:
                index.append(self.labels[i].index(fixed[name]))
            else:
                index.append(slice(None))
                rest.append(i)
        sub = np.asarray(self.probs[tuple(index)]) / total
        return JointDist(tuple(self.axes[i] for i in rest), tuple(self.labels[i] for i in rest), sub)

    def to_json(self) -> dict:
        return {
            "axes": [{"name": str(a), "labels": list(map(_jsonable, l))} for a, l in zip(self.axes, self.labels)],
            "probs": [_jsonable(p) for p in self.probs.ravel()],
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


@dataclass(frozen=True, eq=False)
class HybridState:
    """cq-state sum_x P(x) |x><x| (x) rho_E^x."""

    weights: Dist
    side_states: tuple

    def __post_init__(self):
        states = tuple(s if isinstance(s, DensityMatrix) else DensityMatrix(s) for s in self.side_states)
        if len(states) != len(self.weights.labels):
            raise ValueError("one side state per label required")
        if len({s.dim for s in states}) != 1:
            raise ValueError("side states must share a dimension")
        object.__setattr__(self, "side_states", states)

    @property
    def x_labels(self) -> tuple:
        return self.weights.labels

    @property
    def dim_e(self) -> int:
        return self.side_states[0].dim

    def weighted_blocks(self) -> list:
        p = self.weights.as_float()
        return [pi * s.entries for pi, s in zip(p, self.side_states)]

    def rho_e(self) -> np.ndarray:
        return sum(self.weighted_blocks())

    def dense(self) -> np.ndarray:
        """Block-diagonal matrix of rho_XE."""
        blocks = self.weighted_blocks()
        k, d = len(blocks), self.dim_e
        out = np.zeros((k * d, k * d), dtype=complex)
        for i, b in enumerate(blocks):
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = b
        return out


# ------------------------------------------------------------ entropies


def min_entropy(P: Dist) -> float:
    return -math.log2(float(max(P.probs)))


def pguess_classical(P: JointDist, x_axis="X", y_axis="Y") -> float:
    """sum_y max_x P_XY(x, y)."""
    joint = P.marginal(x_axis, y_axis).probs.astype(float)
    return float(joint.max(axis=0).sum())


def cond_min_entropy(P: JointDist, x_axis="X", y_axis="Y") -> float:
    return -math.log2(pguess_classical(P, x_axis, y_axis))


def pguess_binary_quantum(rho: HybridState) -> float:
    """Helstrom guessing probability for a binary X with quantum side information."""
    if len(rho.x_labels) != 2:
        raise ValueError("Helstrom formula needs exactly two labels")
    b0, b1 = rho.weighted_blocks()
    return 0.5 * (1 + trace_norm(b0 - b1))


def stat_distance(P: Dist, Q: Dist) -> float:
    if P.labels != Q.labels:
        if set(P.labels) != set(Q.labels):
            raise ValueError("label sets differ")
        Q = Dist(P.labels, np.array([Q[l] for l in P.labels]))
    return 0.5 * float(np.abs(P.as_float() - Q.as_float()).sum())


def dist_uniform(rho: HybridState) -> float:
    """1/2 || rho_XE - rho_U (x) rho_E ||_1 using the block structure."""
    rho_e = rho.rho_e()
    k = len(rho.x_labels)
    return 0.5 * sum(trace_norm(b - rho_e / k) for b in rho.weighted_blocks())


def dist_uniform_dense(rho: HybridState) -> float:
    """Same quantity from the full 2-system matrices; used as an oracle."""
    k = len(rho.x_labels)
    ideal = np.kron(np.eye(k) / k, rho.rho_e())
    return 0.5 * trace_norm(rho.dense() - ideal)


def dist_uniform_classical(joint: np.ndarray) -> float:
    """d_unif(X|E) for a classical joint P_XE given as an array [x, e]."""
    joint = np.asarray(joint, dtype=float)
    pe = joint.sum(axis=0)
    return 0.5 * float(np.abs(joint - pe[None, :] / joint.shape[0]).sum())


def bias(P: Dist) -> float:
    if len(P.labels) != 2:
        raise ValueError("bias needs a binary distribution")
    p = P.as_float()
    return abs(float(p[0] - p[1]))


def walsh_hadamard(P: np.ndarray) -> np.ndarray:
    """hat P(f) = sum_x (-1)^{f.x} P(x) for a vector of length 2**n (index bits as vectors)."""
    a = np.array(P, dtype=float, copy=True)
    n = a.size.bit_length() - 1
    if a.size != 1 << n:
        raise ValueError("length must be a power of two")
    h = 1
    while h < a.size:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1)
        a = a.reshape(-1)
        h *= 2
    return a


def linear_biases(P) -> np.ndarray:
    """bias(f.X) for every f, indexed like P."""
    probs = P.as_float() if isinstance(P, Dist) else np.asarray(P, dtype=float)
    return np.abs(walsh_hadamard(probs))


def xor_lemma_bound(P) -> float:
    """1/2 sqrt(sum_{f != 0} bias(f.X)^2)."""
    probs = P.as_float() if isinstance(P, Dist) else np.asarray(P, dtype=float)
    if probs.size > 1 << 12:
        raise ValueError("xor lemma enumeration limited to n <= 12")
    b = linear_biases(probs)
    return 0.5 * math.sqrt(float(np.sum(b[1:] ** 2)))


def sd_to_uniform(P) -> float:
    probs = P.as_float() if isinstance(P, Dist) else np.asarray(P, dtype=float)
    return 0.5 * float(np.abs(probs - 1.0 / probs.size).sum())


def hoeffding_bound(n: int, t: float) -> float:
    if t < 0 or t >= 1:
        raise ValueError("t must lie in [0, 1)")
    return math.exp(-2 * n * t * t)


def hoeffding_tail_frequency(n: int, t: float, trials: int, rng: np.random.Generator) -> float:
    """Empirical Pr[mean - 1/2 >= t] for n fair coin flips."""
    heads = rng.binomial(n, 0.5, size=trials)
    return float(np.mean(heads / n - 0.5 >= t))


def pa_bound(hmin: float, ell: int) -> float:
    return 0.5 * 2.0 ** (-(hmin - ell) / 2)


def pa_exhaustive(support: Sequence[int], n: int, ell: int) -> float:
    """Exact d_unif(F(X)|F) over all ell x n matrices F, X uniform on ``support``.

    Elements of ``support`` are n-bit integers; a matrix is an ell-tuple of
    row masks and F(x)_r = popcount(row_r & x) mod 2.
    """
    support = np.asarray(list(support), dtype=np.int64)
    rows = np.arange(1 << n, dtype=np.int64)
    # parity[row, x]
    parity = np.array([[bin(r & x).count("1") & 1 for x in support] for r in rows], dtype=np.int64)
    total = 0.0
    n_mats = (1 << n) ** ell
    for idx in range(n_mats):
        out = np.zeros(len(support), dtype=np.int64)
        rest = idx
        for r in range(ell):
            out |= parity[rest % (1 << n)] << r
            rest //= 1 << n
        counts = np.bincount(out, minlength=1 << ell) / len(support)
        total += 0.5 * float(np.abs(counts - 2.0**-ell).sum())
    return total / n_mats


def hmax_rank(rho_e, tol: float = RANK_TOL) -> float:
    """log2 rank of the side state."""
    mat = rho_e.entries if isinstance(rho_e, DensityMatrix) else np.asarray(rho_e)
    lam = np.linalg.eigvalsh((mat + mat.conj().T) / 2)
    return math.log2(int(np.sum(lam > tol)))


def chain_rule_check(p_xy, side_states) -> tuple:
    """Check Hmin(X|YE) >= Hmin(X|Y) - Hmax(E) for binary X and classical Y.

    ``p_xy`` is a (2, |Y|) array; ``side_states[x][y]`` the state of E given
    X=x, Y=y. The left side uses the averaging form over y with Helstrom's
    formula for each y.
    """
    p_xy = np.asarray(p_xy, dtype=float)
    if p_xy.shape[0] != 2:
        raise ValueError("chain rule check needs |X| = 2")
    if abs(p_xy.sum() - 1) > SUM_TOL or p_xy.min() < 0:
        raise ValueError("invalid joint distribution")
    mats = [[s.entries if isinstance(s, DensityMatrix) else np.asarray(s) for s in row] for row in side_states]
    if mats[0][0].shape[0] > 16:
        raise ValueError("side system limited to dimension 16")
    pg = 0.0
    rho_e = np.zeros_like(mats[0][0], dtype=complex)
    for y in range(p_xy.shape[1]):
        a = p_xy[0, y] * mats[0][y]
        b = p_xy[1, y] * mats[1][y]
        pg += 0.5 * (p_xy[:, y].sum() + trace_norm(a - b))
        rho_e += a + b
    lhs = -math.log2(pg)
    hmin_xy = -math.log2(float(p_xy.max(axis=0).sum()))
    rhs = hmin_xy - hmax_rank(rho_e)
    return lhs, rhs, lhs >= rhs - 1e-9


def moreminent_check(rho: HybridState) -> tuple:
    """(Hmin(XE), Hmin(X), holds) for a cq-state, with Hmin(XE) from the dense block matrix."""
    lam = np.linalg.eigvalsh(rho.dense()).max()
    lhs = -math.log2(float(lam))
    rhs = min_entropy(rho.weights)
    return lhs, rhs, lhs >= rhs - 1e-9


def random_dist(size: int, rng: np.random.Generator, concentration: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(size, concentration))
