import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qidlab.bits import block_repetition_code, repetition_code
from qidlab.infotheory import Dist
from qidlab.qsim import DensityMatrix, ProductBasis, max_overlap_exhaustive
from qidlab.uncertainty import (
    CASE_DEFLATE,
    CASE_INFLATE,
    CASE_ZERO,
    STATE_KINDS,
    BasisFamily,
    average_min_entropy,
    construct_jprime,
    counterexample_state,
    exact_distribution,
    good_event,
    random_epsilon,
    random_pj,
    random_state,
    shannon_check,
    thm_sets_bound,
    water_fill,
)

seeds = st.integers(0, 2**32 - 1)
FAMILIES = [BasisFamily.from_code(block_repetition_code(4)), BasisFamily.from_code(block_repetition_code(6)),
            BasisFamily.from_code(repetition_code(4))]


def independent_check(result):
    """Recompute P_{JJ'} from the joint and compare with the product of marginals."""
    p = result.joint.marginal("J", "J'").probs
    pj = p.sum(axis=1)
    pjp = p.sum(axis=0)
    return all(p[j, k] == pj[j] * pjp[k] for j in range(p.shape[0]) for k in range(p.shape[1]))


def test_family_from_code():
    fam = BasisFamily.from_code(block_repetition_code(6))
    assert fam.m == 4 and fam.n == 6
    assert fam.c == pytest.approx(2 ** -1.5)
    assert fam.delta == pytest.approx(0.5)
    assert fam.c == pytest.approx(max_overlap_exhaustive(list(fam.bases)), abs=1e-10)


def test_from_bases_matches_code():
    code = repetition_code(3)
    fam = BasisFamily.from_bases([ProductBasis.from_codeword(c) for c in code.codewords])
    assert fam.delta == pytest.approx(1.0)


@given(seeds)
def test_sets_bound(seed):
    rng = np.random.default_rng(seed)
    fam = FAMILIES[int(rng.integers(len(FAMILIES)))]
    rho, _ = random_state(fam, rng)
    sets = [rng.choice(1 << fam.n, size=int(rng.integers(0, 1 << fam.n)), replace=False) for _ in range(fam.m)]
    lhs, rhs, ok = thm_sets_bound(rho, fam, sets)
    assert ok and lhs <= rhs + 1e-9


def test_sets_bound_validates():
    fam = FAMILIES[0]
    with pytest.raises(ValueError):
        thm_sets_bound(DensityMatrix.maximally_mixed(4), fam, [[0]])
    with pytest.raises(ValueError):
        thm_sets_bound(DensityMatrix.maximally_mixed(4), fam, [[99]] * fam.m)


def test_exact_distribution_sums_to_one(rng):
    q = rng.dirichlet(np.ones(16))
    ex = exact_distribution(q)
    assert sum(ex) == 1 and all(isinstance(v, Fraction) for v in ex)
    assert max(abs(float(a) - b) for a, b in zip(ex, q)) < 1e-15


def test_good_event_properties(rng):
    fam = FAMILIES[1]
    for kind in STATE_KINDS:
        rho, _ = random_state(fam, rng, kind)
        ev = good_event(rho, fam, P_J=Dist.uniform(range(fam.m)), epsilon=0.05)
        assert all(ev.checks().values())
    with pytest.raises(ValueError):
        good_event(DensityMatrix.maximally_mixed(6), fam, epsilon=fam.delta / 4)


def test_water_fill():
    caps = [Fraction(1, 10), Fraction(1), Fraction(1)]
    alloc = water_fill(caps, Fraction(1))
    assert sum(alloc) == 1 and alloc[0] == Fraction(1, 10)
    assert alloc[1] == alloc[2] == Fraction(9, 20)
    with pytest.raises(ValueError):
        water_fill([Fraction(1, 4)], Fraction(1, 2))


@given(seeds)
def test_jprime_random_instances(seed):
    rng = np.random.default_rng(seed)
    fam = FAMILIES[int(rng.integers(2))]
    rho, _ = random_state(fam, rng)
    res = construct_jprime(rho, fam, random_pj(fam.m, rng), random_epsilon(fam, rng))
    assert res.case_tag in (CASE_ZERO, CASE_DEFLATE, CASE_INFLATE)
    assert res.passed
    assert independent_check(res)
    assert res.joint.exact
    assert float(res.pr_psi) >= res.psi_bound - 1e-9
    marg = res.joint.marginal_dist("J'")
    assert list(marg.probs) == res.jprime_marginal


def exact_uniform(m):
    return Dist.uniform(range(m), exact=True)


def test_jprime_maximally_mixed_deflates():
    # every basis qualifies, so the event probabilities sum to m > m - 1
    fam = FAMILIES[1]
    res = construct_jprime(DensityMatrix.maximally_mixed(6), fam, exact_uniform(4), 0.05)
    assert res.case_tag == CASE_DEFLATE and res.alpha == -1
    assert res.passed and independent_check(res)


def test_jprime_basis_state_is_exact():
    # only the state's own basis fails, leaving exactly m - 1
    fam = FAMILIES[1]
    v = fam.bases[0].unitary()[:, 0]
    res = construct_jprime(DensityMatrix.from_vector(v), fam, exact_uniform(4), 0.05)
    assert res.case_tag == CASE_ZERO and res.alpha == 0
    assert res.passed


def test_jprime_two_vector_mixture_inflates():
    fam = FAMILIES[1]
    res = construct_jprime(counterexample_state(fam, 0, 1), fam, exact_uniform(4), 0.05)
    assert res.case_tag == CASE_INFLATE and res.alpha == 1
    assert res.passed and independent_check(res)


def test_jprime_json():
    fam = FAMILIES[0]
    res = construct_jprime(DensityMatrix.maximally_mixed(4), fam, Dist.uniform(range(4), exact=True), 0.05)
    data = res.to_json(include_joint=False)
    assert data["vacuous"] is True and data["checks"]["hmin"] == "vacuous"
    assert "joint" in res.to_json()


def test_jprime_rejects_large_epsilon():
    fam = FAMILIES[0]
    with pytest.raises(ValueError):
        construct_jprime(DensityMatrix.maximally_mixed(4), fam, Dist.uniform(range(4)), 0.2)


def test_shannon_relation(rng):
    fam = FAMILIES[1]
    for _ in range(20):
        rho, _ = random_state(fam, rng)
        assert shannon_check(rho, fam)[2]


def test_counterexample_average_entropy():
    fam = FAMILIES[1]
    rho = counterexample_state(fam, 0, 3)
    # both Q^0 and Q^3 put mass at least 1/2 on a single outcome
    assert average_min_entropy(rho, fam, 0, 3) <= 1.0 + 1e-12
    assert math.isfinite(average_min_entropy(rho, fam, 0, 3))
