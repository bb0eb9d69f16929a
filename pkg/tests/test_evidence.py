import math

import numpy as np
import pytest

import semc
from semc.core import EnsembleSnapshot
from semc.evidence import (enumeration_posterior, estimate_free_energy,
                           free_energy_gap_terms, marginal_histogram_quadrature,
                           reference_free_energy_enumeration,
                           reference_free_energy_quadrature)

from conftest import flat_box, gaussian_well


def _snap(beta, energies, dim=1):
    e = np.asarray(energies, dtype=np.float64)
    return EnsembleSnapshot(beta, np.zeros((e.shape[0], dim)), e)


def test_zero_energy_gives_zero():
    snaps = [_snap(0.0, np.zeros(50)), _snap(0.4, np.zeros(50)), _snap(1.0, np.zeros(50))]
    assert estimate_free_energy(snaps, 30.0) == 0.0


def test_single_gap_hand_value():
    snaps = [_snap(0.0, [0.0, math.log(4.0)]), _snap(1.0, [0.0, 0.0])]
    assert estimate_free_energy(snaps, 1.0) == pytest.approx(math.log(1.6), rel=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        estimate_free_energy([_snap(0.0, [1.0])], 1.0)
    with pytest.raises(ValueError):
        estimate_free_energy([_snap(0.1, [1.0]), _snap(1.0, [1.0])], 1.0)
    with pytest.raises(ValueError):
        estimate_free_energy([_snap(0.0, [1.0]), _snap(0.5, [1.0])], 1.0)
    with pytest.raises(ValueError):
        estimate_free_energy([_snap(0.0, []), _snap(1.0, [])], 1.0)


def test_shift_invariance_machine_precision(rng):
    n_data = 30_000.0
    betas = np.concatenate([[0.0], np.sort(rng.uniform(0.001, 0.999, 6)), [1.0]])
    snaps = [_snap(b, rng.uniform(0.0, 1.0, 200)) for b in betas]
    base = estimate_free_energy(snaps, n_data)
    delta = 0.37
    shifted = [_snap(s.beta, s.energies + delta) for s in snaps]
    got = estimate_free_energy(shifted, n_data)
    assert got - n_data * delta == pytest.approx(base, abs=1e-9 * max(1.0, abs(base)))


def test_gap_terms_bracketed(rng):
    n_data = 100.0
    betas = [0.0, 0.2, 0.7, 1.0]
    snaps = [_snap(b, rng.uniform(0.0, 2.0, 300)) for b in betas]
    for t, lo_snap in zip(free_energy_gap_terms(snaps, n_data), snaps):
        contrib = -t["term"]  # -log <exp(-N db E)>
        lo = n_data * t["delta_beta"] * lo_snap.energies.min()
        hi = n_data * t["delta_beta"] * lo_snap.energies.max()
        assert lo - 1e-9 <= contrib <= hi + 1e-9


def test_extra_rung_leaves_expectation_unchanged(rng):
    # Gaussian well with exact tempered sampling: a 2-rung ladder and a
    # 3-rung ladder must agree within Monte Carlo error
    n_data, w = 50.0, 1.0
    problem = gaussian_well(weight=w, n_data=n_data)
    truth = reference_free_energy_quadrature(problem, initial_resolution=256, tol=1e-6)

    def exact_snap(beta, size):
        if beta == 0.0:
            x = rng.uniform(0.0, 1.0, size)
        else:
            sd = 1.0 / math.sqrt(2.0 * n_data * w * beta)
            x = rng.normal(0.5, sd, size)
            while True:
                bad = (x < 0.0) | (x > 1.0)
                if not bad.any():
                    break
                x[bad] = rng.normal(0.5, sd, bad.sum())
        coords = x.reshape(-1, 1)
        return EnsembleSnapshot(beta, coords, problem.batch_energy(coords))

    reps = 30
    two = np.array([estimate_free_energy([exact_snap(0.0, 4000), exact_snap(1.0, 4000)],
                                         n_data) for _ in range(reps)])
    three = np.array([estimate_free_energy([exact_snap(0.0, 4000), exact_snap(0.5, 4000),
                                            exact_snap(1.0, 4000)], n_data)
                      for _ in range(reps)])
    for vals in (two, three):
        sem = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - truth) < 3.0 * sem + 1e-4
    sem_diff = math.sqrt(two.var(ddof=1) / reps + three.var(ddof=1) / reps)
    assert abs(two.mean() - three.mean()) < 3.0 * sem_diff + 1e-4


def test_quadrature_flat_box_is_zero():
    assert reference_free_energy_quadrature(flat_box(), initial_resolution=64) == pytest.approx(0.0, abs=1e-12)


def test_quadrature_bimodal_value(bimodal):
    got = reference_free_energy_quadrature(bimodal, tol=1e-4)
    assert got == pytest.approx(9.022, abs=1e-3)


def test_quadrature_isotropic_gaussian_closed_form():
    # E = |theta - 0.5|^2 with N = 1e4: Z = pi/N up to negligible
    # truncation, so the free energy is log(N/pi)
    p = semc.make_quadratic([1.0, 1.0], [0.5, 0.5], [[0, 1], [0, 1]], 1e4)
    got = reference_free_energy_quadrature(p, tol=1e-4)
    assert got == pytest.approx(math.log(1e4 / math.pi), abs=1e-3)


def test_quadrature_needs_2d(spectral_k3):
    with pytest.raises(ValueError):
        reference_free_energy_quadrature(spectral_k3)


def test_enumeration_trivial_and_hand_values():
    assert reference_free_energy_enumeration(semc.make_bit_table([0.0, 0.0], 1.0)) == pytest.approx(0.0)
    table = [0.0, math.log(2.0), math.log(2.0), math.log(4.0)]
    got = reference_free_energy_enumeration(semc.make_bit_table(table, 1.0))
    assert got == pytest.approx(math.log(16.0 / 9.0), rel=1e-12)


def test_enumeration_guard():
    p = semc.make_exhaustive(semc.ExhaustiveSpec(n_rows=30, n_features=21,
                                                 support_size=2, data_seed=9))
    with pytest.raises(ValueError):
        reference_free_energy_enumeration(p)


def test_enumeration_posterior_sums_to_one(desk_exhaustive):
    bits, probs = enumeration_posterior(desk_exhaustive)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert bits.shape == (1024, 10)
    # beta=0 is the uniform prior
    _, prior = enumeration_posterior(desk_exhaustive, beta=0.0)
    assert np.allclose(prior, 1.0 / 1024.0)


def test_marginal_histogram_flat_is_uniform():
    h = marginal_histogram_quadrature(flat_box(), 0.1, nodes_per_bin=4, resolution=64)
    assert h.masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(h.masses, 0.1, atol=1e-9)


def test_marginal_histogram_bimodal_masses(bimodal):
    h = marginal_histogram_quadrature(bimodal, 0.001, nodes_per_bin=4, resolution=512)
    left = h.masses[:500].sum()
    expected, _ = semc.bimodal_mode_masses()
    assert left == pytest.approx(expected, abs=2e-3)
