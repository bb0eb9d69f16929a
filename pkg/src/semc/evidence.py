"""Free-energy (log-evidence) estimation and desk-scale oracles.

The stepping-stone estimator telescopes per-gap expectations
<exp(-N db E)> over the rung ensembles.  All exponentials are shifted by
the per-rung minimum energy before exponentiation: N runs to 3e4 here,
so the naive form underflows to zero.

Free energies are reported without the likelihood normalization
constant throughout (the constant cancels in every model comparison the
benchmarks make).
"""

from __future__ import annotations

import math
from typing import List, Sequence

import numpy as np

from .core import CONTINUOUS, BINARY, EnsembleSnapshot, TargetProblem


def logsumexp(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=np.float64)
    m = np.max(v)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(v - m))))


def free_energy_gap_terms(snapshots: Sequence[EnsembleSnapshot], n_data: float) -> List[dict]:
    """Per-gap summaries of the stepping-stone estimator.

    Each entry covers the gap from snapshot l to l+1 and records the
    pieces needed to reproduce the term: the gap, the energy shift, and
    the shifted mean exponential.  term = log(mean_exp_shifted)
    - N * delta_beta * e_min, and the free energy is -sum(term).
    """
    if len(snapshots) < 2:
        raise ValueError("need at least two rung snapshots")
    betas = [s.beta for s in snapshots]
    if betas[0] != 0.0 or betas[-1] != 1.0 or np.any(np.diff(betas) <= 0):
        raise ValueError("snapshots must run from beta 0 to beta 1, increasing")
    terms = []
    for lo, hi in zip(snapshots[:-1], snapshots[1:]):
        e = lo.energies
        if e.shape[0] == 0:
            raise ValueError("empty snapshot")
        delta = hi.beta - lo.beta
        e_min = float(np.min(e))
        mean_shifted = float(np.mean(np.exp(-n_data * delta * (e - e_min))))
        term = math.log(mean_shifted) - n_data * delta * e_min
        terms.append({
            "beta": float(lo.beta),
            "delta_beta": float(delta),
            "e_min": e_min,
            "mean_exp_shifted": mean_shifted,
            "term": term,
        })
    return terms


def estimate_free_energy(snapshots: Sequence[EnsembleSnapshot], n_data: float) -> float:
    """Stepping-stone free energy from per-rung snapshots (no
    normalization-constant term)."""
    return -sum(t["term"] for t in free_energy_gap_terms(snapshots, n_data))


# ---------------------------------------------------------------------------
# quadrature oracle (2-D continuous problems)

def theta1_row_log_integrals(problem: TargetProblem, resolution: int):
    """Trapezoid quadrature helper for 2-D boxes.

    Returns (first-axis nodes, their log trapezoid weights, and per-node
    log integral of exp(-N E) over the second axis).
    """
    if problem.kind != CONTINUOUS or problem.dimension != 2:
        raise ValueError("quadrature oracle needs a 2-D continuous problem")
    lo, hi = problem.lo, problem.hi
    x0 = np.linspace(lo[0], hi[0], resolution + 1)
    x1 = np.linspace(lo[1], hi[1], resolution + 1)
    w = np.full(resolution + 1, (hi[1] - lo[1]) / resolution)
    w[0] *= 0.5
    w[-1] *= 0.5
    logw1 = np.log(w)
    w0 = np.full(resolution + 1, (hi[0] - lo[0]) / resolution)
    w0[0] *= 0.5
    w0[-1] *= 0.5
    coords = np.empty((resolution + 1, 2))
    coords[:, 1] = x1
    rows = np.empty(resolution + 1)
    for i, v in enumerate(x0):
        coords[:, 0] = v
        e = problem.batch_energy(coords)
        rows[i] = logsumexp(-problem.data_size_n * e + logw1)
    return x0, np.log(w0), rows


def reference_free_energy_quadrature(problem: TargetProblem,
                                     initial_resolution: int = 512,
                                     tol: float = 1e-3,
                                     max_resolution: int = 1 << 14) -> float:
    """Tensor-grid trapezoid integral of exp(-N E) over the box,
    refined by doubling until the result moves by less than tol."""
    res = initial_resolution
    prev = None
    while True:
        x0, logw0, rows = theta1_row_log_integrals(problem, res)
        val = -logsumexp(rows + logw0)
        if prev is not None and abs(val - prev) < tol:
            return val
        if res >= max_resolution:
            raise RuntimeError("quadrature did not converge; energy too rough?")
        prev = val
        res *= 2


def marginal_histogram_quadrature(problem: TargetProblem, bin_width: float,
                                  nodes_per_bin: int = 8, resolution: int = 2048):
    """First-coordinate marginal of the beta=1 target, integrated bin by
    bin (trapezoid sub-grid per bin); returns a normalized Histogram."""
    from .metrics import Histogram

    lo, hi = float(problem.lo[0]), float(problem.hi[0])
    n_bins = int(round((hi - lo) / bin_width))
    log_masses = np.empty(n_bins)
    for b in range(n_bins):
        left = lo + b * bin_width
        nodes = np.linspace(left, left + bin_width, nodes_per_bin + 1)
        w = np.full(nodes_per_bin + 1, bin_width / nodes_per_bin)
        w[0] *= 0.5
        w[-1] *= 0.5
        rows = _rows_at(problem, nodes, resolution)
        log_masses[b] = logsumexp(rows + np.log(w))
    total = logsumexp(log_masses)
    return Histogram(lo=lo, hi=hi, bin_width=bin_width, masses=np.exp(log_masses - total))


def _rows_at(problem: TargetProblem, x0_nodes: np.ndarray, resolution: int) -> np.ndarray:
    lo, hi = problem.lo, problem.hi
    x1 = np.linspace(lo[1], hi[1], resolution + 1)
    w = np.full(resolution + 1, (hi[1] - lo[1]) / resolution)
    w[0] *= 0.5
    w[-1] *= 0.5
    logw1 = np.log(w)
    coords = np.empty((resolution + 1, 2))
    coords[:, 1] = x1
    rows = np.empty(x0_nodes.shape[0])
    for i, v in enumerate(x0_nodes):
        coords[:, 0] = v
        e = problem.batch_energy(coords)
        rows[i] = logsumexp(-problem.data_size_n * e + logw1)
    return rows


# ---------------------------------------------------------------------------
# enumeration oracle (binary problems)

def all_bit_vectors(p: int) -> np.ndarray:
    idx = np.arange(1 << p, dtype=np.int64)
    return ((idx[:, None] >> np.arange(p)) & 1).astype(np.int8)


def reference_free_energy_enumeration(problem: TargetProblem) -> float:
    """Exact free energy of a binary problem by summing all 2^p states
    under the uniform indicator prior.  Refuses p > 20."""
    if problem.kind != BINARY:
        raise ValueError("enumeration oracle needs a binary problem")
    p = problem.dimension
    if p > 20:
        raise ValueError("enumeration limited to dimension <= 20")
    bits = all_bit_vectors(p)
    e = problem.batch_energy(bits)
    return -(logsumexp(-problem.data_size_n * e) - p * math.log(2.0))


def enumeration_posterior(problem: TargetProblem, beta: float = 1.0):
    """Exact tempered probabilities of every bit vector (p <= 20).

    Returns (bit matrix, probabilities) in table-index order."""
    if problem.kind != BINARY or problem.dimension > 20:
        raise ValueError("enumeration limited to binary problems with p <= 20")
    bits = all_bit_vectors(problem.dimension)
    e = problem.batch_energy(bits)
    le = -beta * problem.data_size_n * e
    probs = np.exp(le - logsumexp(le))
    return bits, probs / probs.sum()
