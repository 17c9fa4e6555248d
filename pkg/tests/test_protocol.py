import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qidlab.bits import BitMatrix, BitVec, StrongHash, block_repetition_code, repetition_code
from qidlab.qsim import ProductBasis, QubitBasis, quantized
from qidlab.protocol import (
    ProtocolParams,
    analyse_cells,
    apply_flip_channel,
    bell_attack,
    bqsm_bound,
    bqsm_epsilon,
    breidbart_strategy,
    circular_strategy,
    coset_distribution,
    delta_biases,
    dishonest_user_rate,
    dishonest_user_run,
    exact_user_sd,
    honest_run,
    measurement_factorization_check,
    oracle_strategy,
    server_security_bound,
    sqom_run,
    strategy_catalog,
    usec_bound,
    user_security_sd,
    z_distribution_exhaustive,
    _image_table,
)

seeds = st.integers(0, 2**32 - 1)
INV_SQRT2 = 1 / math.sqrt(2)


@pytest.fixture
def params8():
    return ProtocolParams(8, 2, block_repetition_code(8))


def test_params_validation():
    with pytest.raises(ValueError):
        ProtocolParams(4, 4, repetition_code(4))
    with pytest.raises(ValueError):
        ProtocolParams(6, 2, repetition_code(4))


def test_honest_runs_accept(params8, rng):
    for _ in range(200):
        w = int(rng.integers(params8.m))
        t = honest_run(params8, w, rng)
        assert t.accept and t.x_prime == t.x
    json.dumps(t.to_json())


def test_dishonest_batch_matches_scalar(rng):
    params = ProtocolParams(8, 2, block_repetition_code(8))
    trials = 4000
    scalar = np.mean([dishonest_user_run(params, 0, 3, rng) for _ in range(trials)])
    batch, se = dishonest_user_rate(params, 0, 3, 40000, rng)
    assert abs(batch - 0.25) < 4 * se
    assert abs(scalar - batch) < 4 * math.sqrt(0.25 * 0.75 / trials)
    # the right password is always accepted
    assert dishonest_user_rate(params, 2, 2, 1000, rng)[0] == 1.0


def test_server_bound():
    assert server_security_bound(4, 8) == pytest.approx(6 / 256)


def test_one_time_pad(params8, rng):
    F = BitMatrix.random(params8.ell, params8.n, rng)
    pz = z_distribution_exhaustive(params8, F)
    assert np.allclose(pz, 1 / (1 << params8.ell))


@given(seeds, st.integers(1, 4))
def test_measurement_factorizes(seed, n):
    rng = np.random.default_rng(seed)
    x, c = BitVec.random(n, rng), BitVec.random(n, rng)
    assert measurement_factorization_check(x, c, ProductBasis.random(n, rng)) < 1e-12


@given(seeds)
def test_bias_bound_when_quantized_mismatch(seed):
    rng = np.random.default_rng(seed)
    theta = ProductBasis.random(6, rng)
    c = BitVec.random(6, rng)
    b = delta_biases(c, theta)
    mismatch = (c ^ quantized(theta)).bits
    for bi, mi in zip(b, mismatch):
        if mi:
            assert bi <= INV_SQRT2 + 1e-9


def test_breidbart_bias():
    th = ProductBasis.uniform(QubitBasis.breidbart(), 2)
    assert np.allclose(delta_biases(BitVec.from_string("01"), th), INV_SQRT2, atol=1e-12)
    circ = ProductBasis.uniform(QubitBasis.circular(), 2)
    assert np.allclose(delta_biases(BitVec.from_string("01"), circ), 0, atol=1e-12)


def test_sqom_run_oracle_recovers_x(params8, rng):
    view = sqom_run(params8, 1, oracle_strategy(params8.code, 1), rng)
    assert view.y == view.transcript.x
    json.dumps(view.to_json())


def test_flip_channel_bruteforce(rng):
    p = rng.dirichlet(np.ones(8))
    q = rng.uniform(0, 1, size=3)
    out = np.zeros(8)
    for x in range(8):
        for delta in range(8):
            pr = np.prod([q[i] if (delta >> i) & 1 else 1 - q[i] for i in range(3)])
            out[x ^ delta] += p[x] * pr
    assert np.allclose(apply_flip_channel(p, q), out)


def test_image_table_and_coset(rng):
    F = BitMatrix.random(2, 5, rng)
    fx = _image_table(F)
    for v in range(32):
        assert fx[v] == F.apply(BitVec(v, 5)).value
    u = int(fx[0])
    p = coset_distribution(fx, u)
    assert p.sum() == pytest.approx(1.0) and p[0] > 0


def test_cells_bias_zero_outside_span(params8, rng):
    F = BitMatrix.random(params8.ell, params8.n, rng)
    g = StrongHash.random(params8.m, params8.ell, rng)
    for strat in strategy_catalog(params8.code):
        for cell in analyse_cells(params8, F, g, strat, 0.1):
            assert cell.max_bias_outside_span < 1e-12
            assert cell.dunif <= cell.xor_bound + 1e-12
            for alpha, b, product_bound, holds, _ in cell.span_checks:
                assert b <= product_bound + 1e-12


def test_user_sd_circular_zero(params8, rng):
    F = BitMatrix.random(params8.ell, params8.n, rng)
    g = StrongHash.random(params8.m, params8.ell, rng)
    sd = exact_user_sd(params8, F, g, circular_strategy(8), 0.1)
    assert max(sd.values()) < 1e-12


def test_user_sd_estimate(params8, rng):
    est = user_security_sd(params8, breidbart_strategy(8), 3, rng)
    assert 0 <= est.estimate <= 1 and est.trials == 3
    assert est.bound == usec_bound(2, 4, 4, 0.1)
    row = est.csv_row("n=8")
    assert row["strategy"] == "breidbart"
    with pytest.raises(ValueError):
        user_security_sd(params8, breidbart_strategy(8), 0, rng)


def test_bell_attack_keeps_true_candidate(rng):
    params = ProtocolParams(16, 2, block_repetition_code(16))
    for _ in range(200):
        res = bell_attack(params, 1, 1, 2, rng)
        assert 1 not in res.discards
    with pytest.raises(ValueError):
        bell_attack(params, 0, 1, 1, rng)


def test_bqsm_bound():
    params = ProtocolParams(8, 2, block_repetition_code(8))
    eps, vac = bqsm_bound(params, 0, 0.02)
    assert vac
    assert bqsm_epsilon(1000, 0.5, 0, 4, 0.05) < 1e-3
    with pytest.raises(ValueError):
        bqsm_bound(params, 0, 0.2)
