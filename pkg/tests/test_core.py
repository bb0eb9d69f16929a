import numpy as np
import pytest
from hypothesis import given, strategies as st

import semc
from semc.core import (EnsembleSnapshot, ParameterState, TemperatureLadder,
                       tempered_log_density_ratio, validate_state)

from conftest import flat_box, gaussian_well

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_ratio_at_beta_zero_is_zero(bimodal):
    assert tempered_log_density_ratio(bimodal, 0.0, 0.37, 1.2) == 0.0


def test_ratio_hand_value():
    p = flat_box(n_data=10.0)
    assert tempered_log_density_ratio(p, 1.0, 0.2, 0.5) == pytest.approx(3.0, abs=1e-12)


def test_ratio_equal_energies(bimodal):
    assert tempered_log_density_ratio(bimodal, 0.5, 0.8, 0.8) == 0.0


def test_ratio_rejects_nonfinite(bimodal):
    with pytest.raises(ValueError):
        tempered_log_density_ratio(bimodal, 0.5, np.inf, 0.0)
    with pytest.raises(ValueError):
        tempered_log_density_ratio(bimodal, np.nan, 0.0, 0.0)
    with pytest.raises(ValueError):
        tempered_log_density_ratio(bimodal, 1.5, 0.0, 0.0)


@given(e_new=finite, e_old=finite, beta=st.floats(min_value=0, max_value=1))
def test_ratio_antisymmetry(e_new, e_old, beta):
    p = flat_box(n_data=3.0)
    a = tempered_log_density_ratio(p, beta, e_new, e_old)
    b = tempered_log_density_ratio(p, beta, e_old, e_new)
    assert a == -b


@given(e_new=finite, e_old=finite,
       b1=st.floats(min_value=0, max_value=0.5),
       b2=st.floats(min_value=0, max_value=0.5))
def test_ratio_linear_in_beta(e_new, e_old, b1, b2):
    p = flat_box(n_data=2.0)
    lhs = tempered_log_density_ratio(p, b1 + b2, e_new, e_old)
    rhs = (tempered_log_density_ratio(p, b1, e_new, e_old)
           + tempered_log_density_ratio(p, b2, e_new, e_old))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_validate_state_good(bimodal):
    s = bimodal.make_state([0.5, 0.5])
    assert validate_state(bimodal, s)


def test_validate_state_out_of_bounds(bimodal):
    s = ParameterState(np.array([1.5, 0.5]), 0.0)
    assert not validate_state(bimodal, s)


def test_validate_state_stale_cache(bimodal):
    good = bimodal.make_state([0.5, 0.5])
    stale = ParameterState(good.coordinates, good.energy + 1e-12)
    assert not validate_state(bimodal, stale)


def test_validate_state_binary(desk_exhaustive):
    s = desk_exhaustive.make_state(semc.DESK_EXHAUSTIVE.true_support)
    assert validate_state(desk_exhaustive, s)
    bad = ParameterState(np.array([2] * 10, dtype=np.int8), s.energy)
    assert not validate_state(desk_exhaustive, bad)


def test_ladder_invariants():
    lad = TemperatureLadder(np.array([0.0, 0.1, 1.0]), np.array([[0.5], [0.2]]))
    assert lad.complete and lad.n_rungs == 3
    with pytest.raises(ValueError):
        TemperatureLadder(np.array([0.1, 1.0]), None)  # must start at 0
    with pytest.raises(ValueError):
        TemperatureLadder(np.array([0.0, 0.5, 0.5]), None)  # strictly increasing
    with pytest.raises(ValueError):
        TemperatureLadder(np.array([0.0, 1.0]), np.array([[0.0]]))  # positive steps
    with pytest.raises(ValueError):
        TemperatureLadder(np.array([0.0, 0.5, 1.0]), np.array([[1.0]]))  # row count


def test_snapshot_alignment_and_views(bimodal):
    coords = np.array([[0.25, 0.5], [0.75, 0.5]])
    energies = bimodal.batch_energy(coords)
    snap = EnsembleSnapshot(0.5, coords, energies)
    assert snap.size == 2
    assert snap.states[1].energy == energies[1]
    assert np.array_equal(snap.states[0].coordinates, coords[0])
    assert all(validate_state(bimodal, s) for s in snap.states)
    with pytest.raises(ValueError):
        EnsembleSnapshot(0.5, coords, energies[:1])


def test_snapshot_is_immutable(bimodal):
    coords = np.array([[0.25, 0.5]])
    snap = EnsembleSnapshot(0.0, coords.copy(), bimodal.batch_energy(coords))
    with pytest.raises(ValueError):
        snap.coords[0, 0] = 0.9


def test_problem_validation():
    with pytest.raises(ValueError):
        semc.make_quadratic([1.0], [0.5], [[1.0, 0.0]], 1.0)  # hi <= lo
    with pytest.raises(ValueError):
        semc.TargetProblem(dimension=2, kind="weird", bounds=None,
                           data_size_n=1.0, label="x", energy_code=1)


def test_prior_batch_in_support(bimodal, desk_exhaustive, rng):
    xs = bimodal.prior_batch(rng, 100)
    assert all(bimodal.in_support(x) for x in xs)
    bs = desk_exhaustive.prior_batch(rng, 100)
    assert all(desk_exhaustive.in_support(b) for b in bs)
    one = bimodal.prior_sampler(rng)
    assert bimodal.in_support(one)


def test_error_fn_matches_batch(spectral_k3, rng):
    xs = spectral_k3.prior_batch(rng, 8)
    batch = spectral_k3.batch_energy(xs)
    singles = [spectral_k3.error_fn(x) for x in xs]
    assert np.array_equal(batch, np.array(singles))
