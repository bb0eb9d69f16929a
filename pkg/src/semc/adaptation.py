"""Automatic tuning: step sizes, exchange-rate estimation, ladder growth.

Step sizes follow a Robbins-Monro recursion toward a target acceptance
rate.  The next inverse temperature is chosen so that the predicted
exchange rate against the previous rung hits a target; the prediction
needs only the previous rung's energy sample, so the ladder can grow
on the fly.  Initial step sizes for a new rung are extrapolated from
the two previous rungs under a power-law-in-beta assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _loops
from .core import CONTINUOUS, TargetProblem


@dataclass(frozen=True)
class RobbinsMonroConfig:
    """Step-size recursion eps += eps * gain * (p_accept - target) /
    (offset + k), applied every update_interval pooled samples."""

    gain: float = 4.0
    offset: float = 15.0
    target_accept: float = 0.5
    update_interval: int = 50

    def __post_init__(self):
        if self.gain <= 0 or self.offset <= 0 or self.update_interval < 1:
            raise ValueError("gain, offset and update_interval must be positive")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")


@dataclass(frozen=True)
class ExchangeTargetConfig:
    """Target exchange rate between adjacent rungs and the bisection
    controls used when solving for the next inverse temperature."""

    target_rate: float = 0.5
    bisection_tol: float = 1e-3
    max_bisection_iters: int = 100

    def __post_init__(self):
        if not 0.0 < self.target_rate < 1.0:
            raise ValueError("target_rate must lie in (0, 1)")
        if self.bisection_tol <= 0 or self.max_bisection_iters < 1:
            raise ValueError("bad bisection controls")


def robbins_monro_update(eps: float, p_accept: float, iter_count: int,
                         cfg: RobbinsMonroConfig) -> float:
    """One step-size update; the result is floored at eps * 1e-6."""
    if not (np.isfinite(eps) and eps > 0.0):
        raise ValueError("eps must be positive and finite")
    if not 0.0 <= p_accept <= 1.0:
        raise ValueError("p_accept must lie in [0, 1]")
    if iter_count < 1:
        raise ValueError("iter_count must be positive")
    return float(_loops._rm_step(eps, p_accept, iter_count,
                                 cfg.gain, cfg.offset, cfg.target_accept))


def _sorted_energy_groups(energies: np.ndarray):
    es = np.sort(np.asarray(energies, dtype=np.float64))
    uniq, counts = np.unique(es, return_counts=True)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return es, uniq, counts.astype(np.float64), starts


def _rate_from_groups(es, counts, starts, delta_beta, n_data):
    t = es.shape[0]
    w = np.exp(-delta_beta * n_data * (es - es[0]))
    group_w = np.add.reduceat(w, starts)
    # weight sits on the higher-energy member of each ordered pair; ties
    # count half so identical ensembles give rate 1
    pair_sum = float(np.sum(group_w * (starts + 0.5 * (counts - 1.0))))
    num = 2.0 * pair_sum / (t * (t - 1.0))
    den = float(np.mean(w))
    return min(1.0, num / den)


def estimate_exchange_rate(energies, delta_beta: float, n_data: float) -> float:
    """Predicted exchange acceptance rate across a gap delta_beta, from
    an energy sample of the hotter rung.

    Sample estimate of the exchange-acceptance integral: over ordered
    pairs (i, j), the higher-energy member carries weight
    exp(-delta_beta N (E - E_min)); the pair sum is normalized by the
    mean weight.  Computed in O(T log T) via sorting and group prefix
    counts, and clipped to [0, 1].
    """
    e = np.asarray(energies, dtype=np.float64)
    if e.ndim != 1 or e.shape[0] < 2:
        raise ValueError("need at least two energies")
    if not (np.isfinite(delta_beta) and delta_beta >= 0.0):
        raise ValueError("delta_beta must be nonnegative and finite")
    es, _, counts, starts = _sorted_energy_groups(e)
    return _rate_from_groups(es, counts, starts, delta_beta, n_data)


def propose_next_beta(energies, beta_prev: float, n_data: float,
                      cfg: ExchangeTargetConfig,
                      prev_gap: Optional[float] = None) -> float:
    """Next inverse temperature: the gap whose predicted exchange rate
    hits cfg.target_rate, found by bracket doubling plus bisection.

    The result is capped at 1; if even the full remaining gap keeps the
    predicted rate at or above target (constant energies, tiny data),
    the cap fires immediately.
    """
    if not 0.0 <= beta_prev < 1.0:
        raise ValueError("beta_prev must lie in [0, 1)")
    e = np.asarray(energies, dtype=np.float64)
    es, _, counts, starts = _sorted_energy_groups(e)

    def rate(delta):
        return _rate_from_groups(es, counts, starts, delta, n_data)

    remaining = 1.0 - beta_prev
    base = prev_gap if (prev_gap is not None and prev_gap > 0) else 1e-6
    hi = min(max(1e-6, 2.0 * base), remaining)
    while rate(hi) >= cfg.target_rate:
        if hi >= remaining:
            return 1.0
        hi = min(2.0 * hi, remaining)
    lo, j_lo = 0.0, 1.0
    j_hi = rate(hi)
    for _ in range(cfg.max_bisection_iters):
        if j_lo - j_hi < cfg.bisection_tol:
            break
        mid = 0.5 * (lo + hi)
        j_mid = rate(mid)
        if j_mid >= cfg.target_rate:
            lo, j_lo = mid, j_mid
        else:
            hi, j_hi = mid, j_mid
    return min(1.0, beta_prev + 0.5 * (lo + hi))


def extrapolate_step_size(eps_prev, eps_prev2, beta_prev: float,
                          beta_prev2: float, beta_next: float):
    """Initial step size for a new rung from the two previous rungs,
    assuming eps proportional to beta^(-d).

    d = log(eps_prev/eps_prev2) / log(beta_prev2/beta_prev), clamped to
    [-3, 3] to bound extrapolation under noisy adaptation.  Works
    element-wise on step-size vectors.
    """
    if not 0.0 < beta_prev2 < beta_prev < beta_next <= 1.0:
        raise ValueError("need 0 < beta_prev2 < beta_prev < beta_next <= 1")
    e1 = np.asarray(eps_prev, dtype=np.float64)
    e2 = np.asarray(eps_prev2, dtype=np.float64)
    if np.any(e1 <= 0) or np.any(e2 <= 0):
        raise ValueError("step sizes must be positive")
    d = np.log(e1 / e2) / np.log(beta_prev2 / beta_prev)
    d = np.clip(d, -3.0, 3.0)
    out = e1 * (beta_prev / beta_next) ** d
    return float(out) if np.isscalar(eps_prev) else out


def tune_initial_rungs(problem: TargetProblem, beta: float, n_sweeps: int,
                       cfg: RobbinsMonroConfig, rng: np.random.Generator) -> np.ndarray:
    """Pilot tuning for the first adapted rungs: run a single chain from
    a prior draw at the given beta, updating every step size once per
    sweep, starting from half the bound width.  Returns the adapted
    per-coordinate step sizes (they seed both rung 2 and rung 3)."""
    if problem.kind != CONTINUOUS:
        raise ValueError("pilot tuning applies to continuous problems")
    d = problem.dimension
    eps = 0.5 * (problem.hi - problem.lo).copy()
    coords = np.ascontiguousarray(problem.prior_batch(rng, 1)[0])
    e = problem.error_fn(coords)
    resid, prof, scratch = _workspace(problem)
    flags = np.zeros(d, np.int64)
    _loops.pilot_tune_continuous(
        problem.energy_code, coords, e, beta, problem.data_size_n, eps,
        problem.lo, problem.hi, n_sweeps, cfg.gain, cfg.offset,
        cfg.target_accept, rng, problem.payload_params,
        problem.payload_matrix, problem.payload_vector,
        resid, prof, scratch, flags)
    return eps


def _workspace(problem: TargetProblem):
    """Residual/profile/scratch arrays for incremental spectral sweeps;
    zero-size placeholders for every other kind."""
    if problem.energy_code == _loops.ENERGY_SPECTRAL:
        n = problem.payload_matrix.shape[1]
        k = int(problem.payload_params[0])
        return np.empty(n), np.empty((k, n)), np.empty(n)
    return np.empty(0), np.empty((0, 0)), np.empty(0)
