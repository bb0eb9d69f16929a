"""Markov transition kernels and the between-rung exchange move.

Continuous problems use a coordinate-wise Metropolis sweep with uniform
proposals and a fixed ascending update order; binary problems flip one
uniformly chosen bit.  Proposals landing outside the flat prior's
support are rejected.  These are the reference entry points; the
samplers drive the same compiled cores directly.
"""

from __future__ import annotations

import math

import numpy as np

from . import _loops
from .adaptation import _workspace
from .core import BINARY, CONTINUOUS, ParameterState, TargetProblem, _readonly


def metropolis_sweep(problem: TargetProblem, beta: float, state: ParameterState,
                     steps, rng: np.random.Generator):
    """One full sweep over all coordinates in ascending order.

    Coordinate j proposes theta_j + Uniform(-eps_j, eps_j); out-of-bounds
    proposals are rejected outright.  Returns the new state (energy
    cache coherent) and the per-coordinate accept flags.
    """
    if problem.kind != CONTINUOUS:
        raise ValueError("metropolis_sweep needs a continuous problem")
    eps = np.ascontiguousarray(steps, dtype=np.float64)
    if eps.shape != (problem.dimension,):
        raise ValueError("need one step size per coordinate")
    coords = np.array(state.coordinates, dtype=np.float64)
    flags = np.zeros(problem.dimension, np.int64)
    resid, prof, scratch = _workspace(problem)
    if problem.energy_code == _loops.ENERGY_SPECTRAL:
        _loops.init_spectral_workspace(coords, problem.payload_params,
                                       problem.payload_matrix, resid, prof)
    e = _loops.metropolis_sweep_core(
        problem.energy_code, coords, state.energy, beta, problem.data_size_n,
        eps, problem.lo, problem.hi, rng, flags, problem.payload_params,
        problem.payload_matrix, problem.payload_vector, resid, prof, scratch)
    if problem.energy_code == _loops.ENERGY_SPECTRAL:
        # incremental residual updates can drift in the last ulp; hand
        # back a cache that a fresh evaluation reproduces exactly
        e = problem.error_fn(coords)
    return ParameterState(_readonly(coords), float(e)), flags.astype(bool)


def flip_step(problem: TargetProblem, beta: float, state: ParameterState,
              rng: np.random.Generator):
    """One single-bit flip attempt; returns (new state, accepted)."""
    if problem.kind != BINARY:
        raise ValueError("flip_step needs a binary problem")
    bits = np.array(state.coordinates, dtype=np.int8)
    e, accepted, _ = _loops.flip_step_core(
        problem.energy_code, bits, state.energy, beta, problem.data_size_n,
        rng, problem.payload_params, problem.payload_matrix, problem.payload_vector)
    return ParameterState(_readonly(bits), float(e)), bool(accepted)


def exchange_accept_prob(n_data: float, beta_hi: float, beta_lo: float,
                         e_at_hi_rung: float, e_at_lo_rung: float) -> float:
    """Acceptance probability for swapping the states of two rungs:
    min(1, exp((beta_hi - beta_lo) * N * (E_hi_rung - E_lo_rung))),
    where E_hi_rung is the energy currently sitting at the colder rung.
    """
    if not beta_hi > beta_lo:
        raise ValueError("beta_hi must exceed beta_lo")
    if not (np.isfinite(e_at_hi_rung) and np.isfinite(e_at_lo_rung)):
        raise ValueError("energies must be finite")
    arg = (beta_hi - beta_lo) * n_data * (e_at_hi_rung - e_at_lo_rung)
    if arg >= 0.0:
        return 1.0
    return math.exp(arg)


def try_exchange(rng: np.random.Generator, prob: float,
                 a: ParameterState, b: ParameterState):
    """Swap two states (including their energy caches) with the given
    probability; returns (a, b, exchanged)."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("prob must lie in [0, 1]")
    if rng.random() < prob:
        return b, a, True
    return a, b, False
