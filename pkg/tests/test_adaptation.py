import math

import numpy as np
import pytest

import semc
from semc import _loops
from semc.adaptation import (ExchangeTargetConfig, RobbinsMonroConfig,
                             estimate_exchange_rate, extrapolate_step_size,
                             propose_next_beta, robbins_monro_update,
                             tune_initial_rungs)

from conftest import flat_box, gaussian_well

RM = RobbinsMonroConfig(gain=4.0, offset=15.0, target_accept=0.5, update_interval=50)


def test_rm_update_examples():
    assert robbins_monro_update(0.7, 0.5, 3, RM) == 0.7
    assert robbins_monro_update(1.0, 1.0, 5, RM) == pytest.approx(1.1, rel=1e-12)
    assert robbins_monro_update(1.0, 0.0, 5, RM) == pytest.approx(0.9, rel=1e-12)


def test_rm_update_validation():
    with pytest.raises(ValueError):
        robbins_monro_update(0.0, 0.5, 1, RM)
    with pytest.raises(ValueError):
        robbins_monro_update(1.0, 1.5, 1, RM)
    with pytest.raises(ValueError):
        robbins_monro_update(1.0, 0.5, 0, RM)


def test_rm_update_stays_positive():
    # huge gain would drive eps negative without the floor
    cfg = RobbinsMonroConfig(gain=1e9, offset=1.0, target_accept=0.5, update_interval=1)
    out = robbins_monro_update(1.0, 0.0, 1, cfg)
    assert out == pytest.approx(1e-6)


def _gaussian_accept_prob(eps, scale):
    """Quadrature acceptance rate of the uniform-proposal Metropolis
    kernel on an unbounded Gaussian with energy x^2/(2 scale^2)."""
    xs = np.linspace(-6 * scale, 6 * scale, 801)
    px = np.exp(-0.5 * (xs / scale) ** 2)
    px /= px.sum()
    ds = np.linspace(-eps, eps, 401)
    x2 = (xs[:, None] + ds[None, :]) ** 2
    a = np.minimum(1.0, np.exp(-(x2 - (xs ** 2)[:, None]) / (2 * scale ** 2)))
    return float(px @ a.mean(axis=1))


def test_rm_fixed_point_on_gaussian_acceptance():
    # iterate the recursion against the true acceptance function; after
    # 1e4 updates the realized acceptance must sit within 0.05 of target
    eps = 40.0  # far from optimal
    cfg = RobbinsMonroConfig(update_interval=1)
    p = _gaussian_accept_prob(eps, 1.0)
    for k in range(1, 10_001):
        p = _gaussian_accept_prob(eps, 1.0)
        eps = robbins_monro_update(eps, p, k, cfg)
    assert abs(p - 0.5) < 0.05


def test_exchange_rate_trivial_cases():
    assert estimate_exchange_rate([0.4, 0.9, 0.1], 0.0, 30.0) == 1.0
    assert estimate_exchange_rate([0.3] * 6, 2.5, 30.0) == 1.0


def test_exchange_rate_worked_example():
    got = estimate_exchange_rate([0.0, 1.0], math.log(2.0), 1.0)
    assert got == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_exchange_rate_validation():
    with pytest.raises(ValueError):
        estimate_exchange_rate([0.5], 0.1, 1.0)
    with pytest.raises(ValueError):
        estimate_exchange_rate([0.5, 0.6], -0.1, 1.0)


def test_exchange_rate_monotone_and_bounded(rng):
    deltas = np.linspace(0.0, 2.0, 20)
    for _ in range(100):
        e = rng.normal(rng.uniform(-1, 1), rng.uniform(0.05, 1.0), 50)
        rates = [estimate_exchange_rate(e, d, 5.0) for d in deltas]
        assert all(0.0 <= r <= 1.0 for r in rates)
        assert all(a >= b - 1e-12 for a, b in zip(rates, rates[1:]))


def test_exchange_rate_matches_brute_force(rng):
    # simulate the exchange integral directly: hot draw uniform over the
    # sample, cold draw importance-reweighted, accept min(1, ratio)
    for _ in range(5):
        e = rng.normal(1.0, 0.4, 200)
        delta, n_data = rng.uniform(0.1, 1.0), 1.0
        est = estimate_exchange_rate(e, delta, n_data)
        w = np.exp(-delta * n_data * (e - e.min()))
        w /= w.sum()
        i = rng.integers(0, 200, 1_000_000)
        j = rng.choice(200, 1_000_000, p=w)
        brute = np.minimum(1.0, np.exp(delta * n_data * (e[j] - e[i]))).mean()
        assert est == pytest.approx(brute, abs=0.02)


def test_propose_next_beta_caps():
    cfg = ExchangeTargetConfig()
    assert propose_next_beta([0.5] * 10, 0.0, 30.0, cfg) == 1.0
    assert propose_next_beta(np.linspace(0, 1, 10), 0.999, 30.0, cfg) == 1.0


def test_propose_next_beta_hits_target(rng):
    cfg = ExchangeTargetConfig(target_rate=0.5)
    for _ in range(10):
        e = rng.normal(0.5, rng.uniform(0.05, 0.5), 2000)
        prev = rng.uniform(0.0, 0.2)
        beta = propose_next_beta(e, prev, 50.0, cfg)
        assert prev < beta <= 1.0
        if beta < 1.0:
            got = estimate_exchange_rate(e, beta - prev, 50.0)
            assert got == pytest.approx(0.5, abs=0.02)


def test_extrapolate_examples():
    assert extrapolate_step_size(0.3, 0.3, 0.2, 0.1, 0.4) == pytest.approx(0.3)
    got = extrapolate_step_size(0.7071067811865476, 1.0, 0.5, 0.25, 1.0)
    assert got == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(ValueError):
        extrapolate_step_size(0.5, 0.5, 0.2, 0.2, 0.4)
    with pytest.raises(ValueError):
        extrapolate_step_size(0.5, -0.5, 0.2, 0.1, 0.4)


def test_extrapolate_clamps_exponent():
    # absurd adaptation noise: eps ratio of 1e6 over a tiny beta ratio
    out = extrapolate_step_size(1e6, 1.0, 0.2, 0.1, 0.4)
    assert out == pytest.approx(1e6 * 0.5 ** 3.0)  # d clamped to 3


def test_extrapolate_vectorized():
    out = extrapolate_step_size(np.array([0.7071067811865476, 0.3]),
                                np.array([1.0, 0.3]), 0.5, 0.25, 1.0)
    assert out == pytest.approx([0.5, 0.3], rel=1e-6)


def test_pilot_flat_target_reaches_half_acceptance(rng):
    # at beta=0 only bound rejections exist: eps must grow from width/2
    # until the acceptance rate settles near the target
    p = flat_box()
    eps = tune_initial_rungs(p, 0.0, 4000, RM, rng)
    assert np.all(eps > 0.6)  # grew beyond the width/2 start
    state = p.make_state([0.5, 0.5])
    acc = 0
    for _ in range(2000):
        state, flags = semc.metropolis_sweep(p, 0.0, state, eps, rng)
        acc += flags.sum()
    assert acc / 4000 == pytest.approx(0.5, abs=0.1)


def test_pilot_gaussian_acceptance(rng):
    p = gaussian_well(weight=0.5, n_data=1.0, lo=-40.0, hi=40.0, center=0.0)
    eps = tune_initial_rungs(p, 1.0, 5000, RM, rng)
    state = p.make_state([0.0])
    acc = 0
    for _ in range(4000):
        state, flags = semc.metropolis_sweep(p, 1.0, state, eps, rng)
        acc += flags.sum()
    assert acc / 4000 == pytest.approx(0.5, abs=0.05)


def test_pilot_robust_to_initial_scale(rng):
    # the recursion itself must wash out a 1e3 mis-initialization
    p = gaussian_well(weight=0.5, n_data=1.0, lo=-50.0, hi=50.0, center=0.0)
    results = []
    for scale in (1e3, 1e-3):
        eps = np.array([50.0 * scale])
        coords = np.array([0.0])
        flags = np.zeros(1, np.int64)
        _loops.pilot_tune_continuous(
            p.energy_code, coords, p.error_fn(coords), 1.0, p.data_size_n,
            eps, p.lo, p.hi, 8000, RM.gain, RM.offset, RM.target_accept,
            np.random.default_rng(5), p.payload_params, p.payload_matrix,
            p.payload_vector, np.empty(0), np.empty((0, 0)), np.empty(0), flags)
        results.append(eps[0])
    big, small = results
    assert 0.5 < big / small < 2.0


def test_pilot_rejects_binary(desk_exhaustive, rng):
    with pytest.raises(ValueError):
        tune_initial_rungs(desk_exhaustive, 0.5, 100, RM, rng)


def test_config_validation():
    with pytest.raises(ValueError):
        RobbinsMonroConfig(gain=-1.0)
    with pytest.raises(ValueError):
        RobbinsMonroConfig(target_accept=1.0)
    with pytest.raises(ValueError):
        ExchangeTargetConfig(target_rate=0.0)
