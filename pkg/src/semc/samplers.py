"""The four samplers: sequential exchange MC, replica exchange MC, and
SMC samplers in plain and waste-free form.

All four produce a RunResult with one immutable snapshot per rung.
Random streams are derived per (seed, rung, purpose) and chains advance
in a deterministic lockstep order, so identical (config, seed) gives
identical output for any chain count, on either backend.

The sequential samplers grow their temperature ladder on the fly: each
new rung's inverse temperature targets a fixed predicted exchange rate
against the previous rung, its initial step size comes from pilot
tuning (rung 2, reused for rung 3) or power-law extrapolation, and
Robbins-Monro adaptation then runs inside the rung over its burn-in
window with acceptance counts pooled across chains, frozen afterwards.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import Optional, Union

import numpy as np

from . import _loops, _streams
from .adaptation import (ExchangeTargetConfig, RobbinsMonroConfig, _workspace,
                         extrapolate_step_size, propose_next_beta,
                         tune_initial_rungs)
from .core import (BINARY, CONTINUOUS, EnsembleSnapshot, RunResult,
                   TargetProblem, TemperatureLadder)
from .evidence import estimate_free_energy


@dataclass(frozen=True)
class SemcConfig:
    """Sequential exchange MC: n_samples retained per rung, spread over
    n_chains parallel chains (each runs twice its share: the first half
    is the rung's burn-in, the second half is retained)."""

    n_samples: int
    n_chains: int = 50
    exchange: ExchangeTargetConfig = ExchangeTargetConfig()
    rm: RobbinsMonroConfig = RobbinsMonroConfig(update_interval=50)
    pilot_sweeps: int = 2000
    exchange_enabled: bool = True
    max_rungs: int = 10_000

    def __post_init__(self):
        if self.n_chains < 1 or self.n_samples < self.n_chains:
            raise ValueError("need n_samples >= n_chains >= 1")
        if self.n_samples % self.n_chains != 0:
            raise ValueError("n_samples must be divisible by n_chains")


@dataclass(frozen=True)
class SmcsConfig:
    """SMC samplers.  Plain form resamples every particle and moves it
    n_steps times, retaining the final state; the waste-free form
    resamples n_particles/n_steps ancestors and retains every state of
    their length-n_steps chains.

    burn_in_per_chain prepends extra unretained sweeps to each chain
    (0 reproduces the textbook algorithms; benchmark comparisons set it
    to n_steps to match the sequential exchange sampler's burn-in)."""

    n_particles: int
    n_steps: int
    waste_free: bool = False
    burn_in_per_chain: int = 0
    exchange: ExchangeTargetConfig = ExchangeTargetConfig()
    rm: RobbinsMonroConfig = RobbinsMonroConfig(update_interval=50)
    pilot_sweeps: int = 2000
    max_rungs: int = 10_000

    def __post_init__(self):
        if self.n_particles < 1 or self.n_steps < 1 or self.burn_in_per_chain < 0:
            raise ValueError("sizes must be positive")
        if self.waste_free and self.n_particles % self.n_steps != 0:
            raise ValueError("waste-free form needs n_particles = ancestors * n_steps")

    @property
    def ancestors(self) -> int:
        return self.n_particles // self.n_steps


@dataclass(frozen=True)
class RemcConfig:
    """Replica exchange MC on a geometric ladder.

    gamma="auto" picks the hottest gap so its predicted exchange rate
    hits the target on a pilot prior sample, then fills the ladder
    geometrically.  Step sizes adapt during burn-in only."""

    n_rungs: int
    gamma: Union[float, str] = "auto"
    burn_in: int = 10_000
    n_samples: int = 10_000
    exchange_interval: int = 1
    initial_step: Optional[object] = None  # None = half bound width; scalar or (d,)
    exchange: ExchangeTargetConfig = ExchangeTargetConfig()
    rm: RobbinsMonroConfig = RobbinsMonroConfig(update_interval=20)
    ladder_pilot_size: int = 8192

    def __post_init__(self):
        if self.n_rungs < 2:
            raise ValueError("need at least two rungs")
        if self.burn_in < 1 or self.n_samples < 1 or self.exchange_interval < 1:
            raise ValueError("sizes must be positive")
        if not (self.gamma == "auto" or (np.isscalar(self.gamma) and self.gamma > 1)):
            raise ValueError("gamma must be 'auto' or a real > 1")


def resample_weights(energies, delta_beta: float, n_data: float) -> np.ndarray:
    """Normalized importance weights exp(-delta_beta N E), shifted by the
    minimum energy for stability."""
    e = np.asarray(energies, dtype=np.float64)
    w = np.exp(-delta_beta * n_data * (e - e.min()))
    return w / w.sum()


def _pick(u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    return np.minimum(idx, len(weights) - 1).astype(np.int64)


def _prior_snapshot(problem: TargetProblem, seed: int, size: int) -> EnsembleSnapshot:
    rng = _streams.stream(seed, 1, _streams.PRIOR)
    coords = problem.prior_batch(rng, size)
    return EnsembleSnapshot(0.0, coords, problem.batch_energy(coords))


def _plan_rung(problem, snaps, betas, eps_hist, exchange_cfg, rm, pilot_sweeps, seed, rung):
    """Next beta plus the initial step sizes for the new rung."""
    prev_gap = betas[-1] - betas[-2] if len(betas) > 1 else None
    beta = propose_next_beta(snaps[-1].energies, betas[-1], problem.data_size_n,
                             exchange_cfg, prev_gap)
    eps = None
    if problem.kind == CONTINUOUS:
        if rung == 2:
            eps = tune_initial_rungs(problem, beta, pilot_sweeps, rm,
                                     _streams.stream(seed, rung, _streams.PILOT))
        elif rung == 3:
            eps = eps_hist[-1].copy()
        else:
            eps = extrapolate_step_size(eps_hist[-1], eps_hist[-2],
                                        betas[-1], betas[-2], beta)
    return beta, eps


def _semc_workspace(problem, n_chains):
    if problem.energy_code == _loops.ENERGY_SPECTRAL:
        n = problem.payload_matrix.shape[1]
        k = int(problem.payload_params[0])
        return np.empty((n_chains, n)), np.empty((n_chains, k, n)), np.empty(n)
    # zero-width rows so per-chain indexing stays legal on either backend
    return np.empty((n_chains, 0)), np.empty((n_chains, 0, 0)), np.empty(0)


def _finish(problem, snaps, betas, eps_hist, ex_rates, met_rates, seed, t0,
            sampler, meta) -> RunResult:
    steps = np.array(eps_hist) if eps_hist and eps_hist[0] is not None else None
    ladder = TemperatureLadder(np.array(betas), steps)
    free = estimate_free_energy(snaps, problem.data_size_n)
    return RunResult(
        ladder=ladder,
        snapshots=snaps,
        free_energy=free,
        exchange_rates=np.array(ex_rates, dtype=np.float64),
        metropolis_rates=np.array(met_rates, dtype=np.float64).reshape(len(met_rates), -1),
        seed=seed,
        wall_time=time.perf_counter() - t0,
        sampler=sampler,
        meta=meta,
    )


def run_semc(problem: TargetProblem, cfg: SemcConfig, seed: int) -> RunResult:
    """Sequential exchange MC.

    Rung 1 is the prior ensemble.  Each later rung seeds its chains by
    weighted resampling from the previous snapshot, then every chain
    iteration is one kernel update followed by an exchange attempt with
    a live copy of the previous rung's ensemble; the partner order is
    two concatenated shuffles of that ensemble's indices, split
    contiguously across chains.  The second half of every chain is the
    rung's snapshot; the mutated pool is discarded at rung completion.
    """
    t0 = time.perf_counter()
    n_keep, n_chains = cfg.n_samples, cfg.n_chains
    per_chain = n_keep // n_chains
    iters = 2 * per_chain
    snaps = [_prior_snapshot(problem, seed, n_keep)]
    betas = [0.0]
    eps_hist, ex_rates, met_rates = [], [], []
    spectral = problem.energy_code == _loops.ENERGY_SPECTRAL
    resid2, prof3, scratch = _semc_workspace(problem, n_chains)
    rung = 2
    while betas[-1] < 1.0:
        if rung - 1 > cfg.max_rungs:
            raise RuntimeError("ladder exceeded max_rungs; energy scale suspect")
        beta, eps = _plan_rung(problem, snaps, betas, eps_hist, cfg.exchange,
                               cfg.rm, cfg.pilot_sweeps, seed, rung)
        prev = snaps[-1]
        weights = resample_weights(prev.energies, beta - betas[-1], problem.data_size_n)
        u = _streams.stream(seed, rung, _streams.RESAMPLE).random(n_chains)
        sidx = _pick(u, weights)
        pool_c = np.array(prev.coords)
        pool_e = np.array(prev.energies)
        chain_c = np.ascontiguousarray(pool_c[sidx])
        chain_e = pool_e[sidx].copy()
        rng_ch = _streams.stream(seed, rung, _streams.CHAIN)
        rng_ex = _streams.stream(seed, rung, _streams.EXCHANGE)
        if cfg.exchange_enabled:
            partners = np.concatenate([rng_ex.permutation(n_keep),
                                       rng_ex.permutation(n_keep)]).reshape(n_chains, iters)
        else:
            partners = np.zeros((n_chains, iters), dtype=np.int64)
        out_e = np.empty((n_chains, per_chain))
        if problem.kind == CONTINUOUS:
            out_c = np.empty((n_chains, per_chain, problem.dimension))
            kept_acc = np.zeros(problem.dimension, np.int64)
            flags = np.zeros(problem.dimension, np.int64)
            n_exch = _loops.run_semc_rung_continuous(
                problem.energy_code, pool_c, pool_e, chain_c, chain_e,
                beta, betas[-1], problem.data_size_n, eps, problem.lo, problem.hi,
                iters, per_chain, per_chain,
                cfg.rm.gain, cfg.rm.offset, cfg.rm.target_accept, cfg.rm.update_interval,
                cfg.exchange_enabled, partners, rng_ch, rng_ex,
                out_c, out_e, kept_acc,
                problem.payload_params, problem.payload_matrix, problem.payload_vector,
                resid2, prof3, scratch, flags)
            met_rates.append(kept_acc / n_keep)
        else:
            out_c = np.empty((n_chains, per_chain, problem.dimension), dtype=np.int8)
            n_exch, kept_flips = _loops.run_semc_rung_binary(
                problem.energy_code, pool_c, pool_e, chain_c, chain_e,
                beta, betas[-1], problem.data_size_n,
                iters, per_chain,
                cfg.exchange_enabled, partners, rng_ch, rng_ex,
                out_c, out_e,
                problem.payload_params, problem.payload_matrix, problem.payload_vector)
            met_rates.append(np.array([kept_flips / n_keep]))
        snap_c = out_c.reshape(n_keep, problem.dimension)
        snap_e = problem.batch_energy(snap_c) if spectral else out_e.reshape(n_keep)
        snaps.append(EnsembleSnapshot(beta, snap_c, snap_e))
        if cfg.exchange_enabled:
            ex_rates.append(n_exch / (n_chains * iters))
        if eps is not None:
            eps_hist.append(eps)
        betas.append(beta)
        rung += 1
    meta = {"problem": problem.label, "config": asdict(cfg),
            "exchange_enabled": cfg.exchange_enabled}
    return _finish(problem, snaps, betas, eps_hist, ex_rates, met_rates,
                   seed, t0, "semc", meta)


def _run_smc_family(problem: TargetProblem, cfg: SmcsConfig, seed: int,
                    waste_free: bool) -> RunResult:
    t0 = time.perf_counter()
    n_particles, n_steps = cfg.n_particles, cfg.n_steps
    if waste_free:
        n_chains, kept_per_chain = cfg.ancestors, n_steps
        retain_from = cfg.burn_in_per_chain
    else:
        n_chains, kept_per_chain = n_particles, 1
        retain_from = cfg.burn_in_per_chain + n_steps - 1
    iters = cfg.burn_in_per_chain + n_steps
    adapt_until = cfg.burn_in_per_chain if cfg.burn_in_per_chain > 0 else iters // 2
    snaps = [_prior_snapshot(problem, seed, n_particles)]
    betas = [0.0]
    eps_hist, met_rates = [], []
    spectral = problem.energy_code == _loops.ENERGY_SPECTRAL
    resid, prof, scratch = _workspace(problem)
    rung = 2
    while betas[-1] < 1.0:
        if rung - 1 > cfg.max_rungs:
            raise RuntimeError("ladder exceeded max_rungs; energy scale suspect")
        beta, eps = _plan_rung(problem, snaps, betas, eps_hist, cfg.exchange,
                               cfg.rm, cfg.pilot_sweeps, seed, rung)
        prev = snaps[-1]
        weights = resample_weights(prev.energies, beta - betas[-1], problem.data_size_n)
        u = _streams.stream(seed, rung, _streams.RESAMPLE).random(n_chains)
        sidx = _pick(u, weights)
        rng_ch = _streams.stream(seed, rung, _streams.CHAIN)
        out_e = np.empty((n_chains, kept_per_chain))
        if problem.kind == CONTINUOUS:
            out_c = np.empty((n_chains, kept_per_chain, problem.dimension))
            kept_acc = np.zeros(problem.dimension, np.int64)
            flags = np.zeros(problem.dimension, np.int64)
            _loops.run_chains_continuous(
                problem.energy_code, prev.coords, prev.energies, sidx,
                beta, problem.data_size_n, eps, problem.lo, problem.hi,
                iters, retain_from, adapt_until,
                cfg.rm.gain, cfg.rm.offset, cfg.rm.target_accept, cfg.rm.update_interval,
                rng_ch, out_c, out_e, kept_acc,
                problem.payload_params, problem.payload_matrix, problem.payload_vector,
                resid, prof, scratch, flags)
            met_rates.append(kept_acc / n_particles)
        else:
            out_c = np.empty((n_chains, kept_per_chain, problem.dimension), dtype=np.int8)
            kept_flips = _loops.run_chains_binary(
                problem.energy_code, prev.coords, prev.energies, sidx,
                beta, problem.data_size_n, iters, retain_from,
                rng_ch, out_c, out_e,
                problem.payload_params, problem.payload_matrix, problem.payload_vector)
            met_rates.append(np.array([kept_flips / n_particles]))
        snap_c = out_c.reshape(n_particles, problem.dimension)
        snap_e = problem.batch_energy(snap_c) if spectral else out_e.reshape(n_particles)
        snaps.append(EnsembleSnapshot(beta, snap_c, snap_e))
        if eps is not None:
            eps_hist.append(eps)
        betas.append(beta)
        rung += 1
    name = "waste_free_smc" if waste_free else "smcs"
    meta = {"problem": problem.label, "config": asdict(cfg)}
    return _finish(problem, snaps, betas, eps_hist, [], met_rates,
                   seed, t0, name, meta)


def run_smcs(problem: TargetProblem, cfg: SmcsConfig, seed: int) -> RunResult:
    """Plain SMC sampler: resample every particle by importance weight,
    move each n_steps times, keep the final states as the rung."""
    if cfg.waste_free:
        raise ValueError("cfg.waste_free must be False for run_smcs")
    return _run_smc_family(problem, cfg, seed, waste_free=False)


def run_waste_free_smc(problem: TargetProblem, cfg: SmcsConfig, seed: int) -> RunResult:
    """Waste-free SMC: resample only n_particles/n_steps ancestors and
    keep every state of their chains, so intermediate moves are not
    thrown away."""
    if not cfg.waste_free:
        raise ValueError("cfg.waste_free must be True for run_waste_free_smc")
    return _run_smc_family(problem, cfg, seed, waste_free=True)


def _remc_ladder(problem: TargetProblem, cfg: RemcConfig, seed: int) -> np.ndarray:
    n_rungs = cfg.n_rungs
    if cfg.gamma == "auto":
        rng = _streams.stream(seed, 0, _streams.PILOT)
        pilot = problem.prior_batch(rng, cfg.ladder_pilot_size)
        pe = problem.batch_energy(pilot)
        beta2 = propose_next_beta(pe, 0.0, problem.data_size_n, cfg.exchange, None)
        if n_rungs == 2:
            return np.array([0.0, 1.0])
        # near-constant pilot energies push beta2 to the cap; any ladder
        # samples such a target, so keep the geometric form well-defined
        beta2 = min(beta2, 0.9)
        gamma = beta2 ** (-1.0 / (n_rungs - 2))
    else:
        gamma = float(cfg.gamma)
    betas = np.zeros(n_rungs)
    betas[1:] = gamma ** (np.arange(2, n_rungs + 1, dtype=np.float64) - n_rungs)
    return betas


def run_remc(problem: TargetProblem, cfg: RemcConfig, seed: int) -> RunResult:
    """Replica exchange MC over a fixed geometric ladder.

    Every iteration redraws rung 1 from the prior, sweeps rungs 2..L,
    then attempts adjacent exchanges in ascending order.  Step sizes
    adapt during burn-in only; the snapshots hold the post-burn-in
    states of every rung.
    """
    t0 = time.perf_counter()
    betas = _remc_ladder(problem, cfg, seed)
    n_rungs = betas.shape[0]
    d = problem.dimension
    n_keep = cfg.n_samples
    rng_prior = _streams.stream(seed, 0, _streams.PRIOR)
    rng_ch = _streams.stream(seed, 0, _streams.CHAIN)
    rng_ex = _streams.stream(seed, 0, _streams.EXCHANGE)
    init = problem.prior_batch(rng_prior, n_rungs)
    energies = problem.batch_energy(init)
    ex_att = np.zeros(n_rungs - 1, np.int64)
    ex_acc = np.zeros(n_rungs - 1, np.int64)
    snap_e = np.empty((n_rungs, n_keep))
    if problem.kind == CONTINUOUS:
        states = np.ascontiguousarray(init, dtype=np.float64)
        if cfg.initial_step is None:
            base = 0.5 * (problem.hi - problem.lo)
        else:
            base = np.broadcast_to(np.asarray(cfg.initial_step, np.float64), (d,)).copy()
            if np.any(base <= 0):
                raise ValueError("initial_step must be positive")
        eps2d = np.tile(base, (n_rungs, 1))
        snap_c = np.empty((n_rungs, n_keep, d))
        kept_acc = np.zeros((n_rungs, d), np.int64)
        flags = np.zeros(d, np.int64)
        if problem.energy_code == _loops.ENERGY_SPECTRAL:
            n_pts = problem.payload_matrix.shape[1]
            k = int(problem.payload_params[0])
            resid2, prof3 = np.empty((n_rungs, n_pts)), np.empty((n_rungs, k, n_pts))
            scratch = np.empty(n_pts)
        else:
            resid2, prof3 = np.empty((n_rungs, 0)), np.empty((n_rungs, 0, 0))
            scratch = np.empty(0)
        _loops.run_remc_continuous(
            problem.energy_code, states, energies, betas, eps2d,
            problem.data_size_n, problem.lo, problem.hi,
            cfg.burn_in, n_keep, cfg.exchange_interval,
            cfg.rm.gain, cfg.rm.offset, cfg.rm.target_accept, cfg.rm.update_interval,
            rng_prior, rng_ch, rng_ex, snap_c, snap_e,
            kept_acc, ex_att, ex_acc,
            problem.payload_params, problem.payload_matrix, problem.payload_vector,
            resid2, prof3, scratch, flags)
        met_rates = kept_acc[1:] / n_keep
        step_rows = eps2d[1:]
    else:
        states = np.ascontiguousarray(init, dtype=np.int8)
        snap_c = np.empty((n_rungs, n_keep, d), dtype=np.int8)
        kept_flips = np.zeros(n_rungs, np.int64)
        _loops.run_remc_binary(
            problem.energy_code, states, energies, betas,
            problem.data_size_n, cfg.burn_in, n_keep, cfg.exchange_interval,
            rng_prior, rng_ch, rng_ex, snap_c, snap_e,
            kept_flips, ex_att, ex_acc,
            problem.payload_params, problem.payload_matrix, problem.payload_vector)
        met_rates = (kept_flips[1:] / n_keep).reshape(n_rungs - 1, 1)
        step_rows = None
    spectral = problem.energy_code == _loops.ENERGY_SPECTRAL
    snaps = []
    for l in range(n_rungs):
        e_l = problem.batch_energy(snap_c[l]) if spectral else snap_e[l]
        snaps.append(EnsembleSnapshot(float(betas[l]), snap_c[l], e_l))
    ex_rates = np.divide(ex_acc, ex_att, out=np.zeros(n_rungs - 1), where=ex_att > 0)
    ladder = TemperatureLadder(betas, step_rows)
    free = estimate_free_energy(snaps, problem.data_size_n)
    meta = {"problem": problem.label, "config": asdict(cfg),
            "realized_gamma": None if cfg.gamma != "auto" or n_rungs < 3
            else float(betas[2] / betas[1])}
    return RunResult(
        ladder=ladder, snapshots=snaps, free_energy=free,
        exchange_rates=ex_rates, metropolis_rates=np.asarray(met_rates, np.float64),
        seed=seed, wall_time=time.perf_counter() - t0, sampler="remc", meta=meta)
