"""Benchmark target problems and their synthetic-data generators.

Three benchmark families ship with the package:

* an asymmetric two-well distribution on the unit square whose free
  energy and mode masses have quadrature/closed-form oracles,
* Gaussian-peak spectral regression on a fixed 301-point grid, and
* Bayesian variable selection for a linear model, where the energy is
  the (exact, marginalized) negative log likelihood of an indicator
  vector and small instances can be enumerated.

Two generic families back tests and custom experiments: quadratic wells
over a box and arbitrary energy tables over bit vectors.  Datasets are
generated from their own seeds and can be persisted as CSV plus a JSON
sidecar so reference and test runs share identical data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import _loops, _streams
from .core import BINARY, CONTINUOUS, TargetProblem


# ---------------------------------------------------------------------------
# two-well benchmark

@dataclass(frozen=True)
class BimodalSpec:
    """Two quadratic wells of unequal stiffness/depth on [0,1]^2."""

    r: float = 1.001
    n_data: float = 30_000.0

    def __post_init__(self):
        if not self.r > 1.0:
            raise ValueError("r must exceed 1")


def bimodal_energy(theta, spec: BimodalSpec = BimodalSpec()) -> float:
    """Piecewise two-well energy; the boundary column belongs to the
    right branch (the function is continuous there)."""
    t = np.asarray(theta, dtype=np.float64)
    if t.shape != (2,) or np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("theta must lie in [0,1]^2")
    return float(_loops.energy_continuous(
        _loops.ENERGY_BIMODAL, t, np.array([spec.r]), _EMPTY_M, _EMPTY_V))


def make_bimodal(spec: BimodalSpec = BimodalSpec()) -> TargetProblem:
    return TargetProblem(
        dimension=2,
        kind=CONTINUOUS,
        bounds=np.array([[0.0, 1.0], [0.0, 1.0]]),
        data_size_n=spec.n_data,
        label="bimodal",
        energy_code=_loops.ENERGY_BIMODAL,
        payload_params=np.array([spec.r]),
    )


def bimodal_mode_masses(spec: BimodalSpec = BimodalSpec(),
                        tol: float = 1e-5) -> Tuple[float, float]:
    """Quadrature masses of the two wells (theta_1 below/above 0.5).

    Grid resolution doubles until the left mass moves by less than tol.
    The node exactly at 0.5 contributes half its trapezoid weight to
    each side.
    """
    from . import evidence

    problem = make_bimodal(spec)
    prev = None
    res = 1024
    while True:
        x0, logw0, rows = evidence.theta1_row_log_integrals(problem, res)
        le = rows + logw0
        on_cut = x0 == 0.5
        left = le.copy()
        left[x0 > 0.5] = -np.inf
        left[on_cut] += np.log(0.5)
        total = evidence.logsumexp(le)
        frac = float(np.exp(evidence.logsumexp(left) - total))
        if prev is not None and abs(frac - prev) < tol:
            return frac, 1.0 - frac
        if res >= 1 << 15:
            return frac, 1.0 - frac
        prev = frac
        res *= 2


# ---------------------------------------------------------------------------
# spectral peak regression

@dataclass(frozen=True)
class SpectralSpec:
    """Gaussian-peak regression setup: true curve, noise scale, grid.

    Flat priors: amplitudes on (0, 2), centers on (0, 1), widths on
    (10, 500); the noise scale is known and fixed.  Parameter vectors
    are laid out as [amplitudes | centers | widths].
    """

    k_peaks: int = 3
    amplitudes: tuple = (0.8, 0.6, 0.9)
    centers: tuple = (0.25, 0.5, 0.75)
    widths: tuple = (100.0, 150.0, 120.0)
    sigma: float = 0.05
    n_points: int = 301
    data_seed: int = 101

    def __post_init__(self):
        if not (len(self.amplitudes) == len(self.centers) == len(self.widths) == self.k_peaks):
            raise ValueError("need k_peaks amplitudes, centers and widths")
        if not all(0.0 < m < 1.0 for m in self.centers):
            raise ValueError("centers must lie in (0, 1)")
        if not (all(a > 0 for a in self.amplitudes) and all(w > 0 for w in self.widths)):
            raise ValueError("amplitudes and widths must be positive")

    @property
    def x_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_points)

    @property
    def true_params(self) -> np.ndarray:
        return np.concatenate([self.amplitudes, self.centers, self.widths]).astype(np.float64)


SPECTRAL_K10 = SpectralSpec(
    k_peaks=10,
    amplitudes=(0.9, 0.7, 1.0, 0.6, 0.8, 1.1, 0.5, 0.9, 0.7, 1.0),
    centers=(0.08, 0.173, 0.267, 0.36, 0.453, 0.547, 0.64, 0.733, 0.827, 0.92),
    widths=(250.0, 300.0, 350.0, 280.0, 320.0, 260.0, 340.0, 300.0, 310.0, 290.0),
    sigma=0.05,
    data_seed=102,
)


def spectral_model(x, amplitudes, centers, widths):
    """Sum of Gaussian peaks a_k exp(-w_k/2 (x - mu_k)^2)."""
    coords = np.concatenate([amplitudes, centers, widths]).astype(np.float64)
    k = len(amplitudes)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(xa)
    _loops.spectral_curve(coords, k, xa, out)
    return float(out[0]) if np.isscalar(x) else out


def spectral_energy(amplitudes, centers, widths, x, y, sigma) -> float:
    """Mean squared misfit scaled so the likelihood is exp(-N E) with
    N = len(y): E = sum_i (y_i - f(x_i))^2 / (2 sigma^2 N)."""
    coords = np.concatenate([amplitudes, centers, widths]).astype(np.float64)
    k = len(amplitudes)
    params = np.array([float(k), 1.0 / (2.0 * sigma * sigma * len(y))])
    m = np.ascontiguousarray(np.vstack([x, y]).astype(np.float64))
    return float(_loops.energy_continuous(_loops.ENERGY_SPECTRAL, coords, params, m, _EMPTY_V))


def generate_spectral_data(spec: SpectralSpec,
                           rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Noisy observations of the spec's true curve on its x grid."""
    if rng is None:
        rng = _streams.stream(spec.data_seed, 0, _streams.DATA)
    x = spec.x_grid
    f = np.empty_like(x)
    _loops.spectral_curve(spec.true_params, spec.k_peaks, x, f)
    y = f + spec.sigma * rng.standard_normal(x.shape[0])
    return x, y


def make_spectral(spec: SpectralSpec = SpectralSpec(),
                  data: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> TargetProblem:
    if data is None:
        data = generate_spectral_data(spec)
    x, y = data
    if len(x) != spec.n_points or len(y) != spec.n_points:
        raise ValueError("data length must match the spec's grid")
    k = spec.k_peaks
    bounds = np.empty((3 * k, 2))
    bounds[:k] = (0.0, 2.0)
    bounds[k:2 * k] = (0.0, 1.0)
    bounds[2 * k:] = (10.0, 500.0)
    params = np.array([float(k), 1.0 / (2.0 * spec.sigma ** 2 * spec.n_points)])
    return TargetProblem(
        dimension=3 * k,
        kind=CONTINUOUS,
        bounds=bounds,
        data_size_n=float(spec.n_points),
        label=f"spectral_k{k}",
        energy_code=_loops.ENERGY_SPECTRAL,
        payload_params=params,
        payload_matrix=np.vstack([x, y]).astype(np.float64),
    )


# ---------------------------------------------------------------------------
# variable selection for a linear model

@dataclass(frozen=True)
class ExhaustiveSpec:
    """Indicator-vector selection for y = X (beta * c) + noise.

    The energy of an indicator vector is the exact marginal negative log
    likelihood (coefficients integrated out under a centered normal
    prior with scale prior_scale), divided by n_rows.  The indicator
    prior is uniform over {0,1}^p.  True support is the first
    support_size columns.
    """

    n_rows: int = 700
    n_features: int = 200
    prior_scale: float = 1.0
    noise_var: float = 0.1
    support_size: int = 4
    data_seed: int = 202

    def __post_init__(self):
        if self.noise_var <= 0 or self.prior_scale <= 0:
            raise ValueError("scales must be positive")
        if not 0 <= self.support_size <= self.n_features:
            raise ValueError("support size out of range")

    @property
    def true_support(self) -> np.ndarray:
        c = np.zeros(self.n_features, dtype=np.int8)
        c[:self.support_size] = 1
        return c


DESK_EXHAUSTIVE = ExhaustiveSpec(n_rows=50, n_features=10, support_size=3, data_seed=201)


def generate_exhaustive_data(spec: ExhaustiveSpec,
                             rng: Optional[np.random.Generator] = None):
    """Returns (X, y, coefficients); the response only uses the first
    support_size coefficients."""
    if rng is None:
        rng = _streams.stream(spec.data_seed, 0, _streams.DATA)
    x = rng.standard_normal((spec.n_rows, spec.n_features))
    coef = rng.normal(0.0, spec.prior_scale, spec.n_features)
    noise = rng.normal(0.0, np.sqrt(spec.noise_var), spec.n_rows)
    y = x @ (coef * spec.true_support) + noise
    return x, y, coef


def _selection_payload(x: np.ndarray, y: np.ndarray, prior_scale: float, noise_var: float):
    n_rows = x.shape[0]
    const = 0.5 * n_rows * np.log(2.0 * np.pi * noise_var) + 0.5 * float(y @ y) / noise_var
    params = np.array([1.0 / noise_var, prior_scale, const, float(n_rows)])
    gram = np.ascontiguousarray(x.T @ x)
    xty = np.ascontiguousarray(x.T @ y)
    return params, gram, xty


def exhaustive_energy(bits, x: np.ndarray, y: np.ndarray,
                      prior_scale: float = 1.0, noise_var: float = 0.1) -> float:
    """Marginal negative log likelihood of an indicator vector, per row."""
    b = np.ascontiguousarray(bits, dtype=np.int8)
    if b.shape != (x.shape[1],):
        raise ValueError("indicator length must match the feature count")
    params, gram, xty = _selection_payload(x, y, prior_scale, noise_var)
    return float(_loops.energy_binary(_loops.ENERGY_SELECT, b, params, gram, xty))


def make_exhaustive(spec: ExhaustiveSpec = ExhaustiveSpec(),
                    data: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> TargetProblem:
    if data is None:
        x, y, _ = generate_exhaustive_data(spec)
    else:
        x, y = data
    params, gram, xty = _selection_payload(x, y, spec.prior_scale, spec.noise_var)
    return TargetProblem(
        dimension=spec.n_features,
        kind=BINARY,
        bounds=None,
        data_size_n=float(spec.n_rows),
        label=f"exhaustive_p{spec.n_features}",
        energy_code=_loops.ENERGY_SELECT,
        payload_params=params,
        payload_matrix=gram,
        payload_vector=xty,
    )


# ---------------------------------------------------------------------------
# generic families (tests, custom experiments)

def make_quadratic(weights, centers, bounds, n_data: float,
                   label: str = "quadratic") -> TargetProblem:
    """Separable quadratic well sum_j w_j (x_j - c_j)^2 over a box; zero
    weights give a flat target."""
    w = np.asarray(weights, dtype=np.float64)
    c = np.asarray(centers, dtype=np.float64)
    if w.shape != c.shape or w.ndim != 1:
        raise ValueError("weights and centers must be equal-length vectors")
    return TargetProblem(
        dimension=w.shape[0],
        kind=CONTINUOUS,
        bounds=np.asarray(bounds, dtype=np.float64),
        data_size_n=float(n_data),
        label=label,
        energy_code=_loops.ENERGY_QUADRATIC,
        payload_params=np.concatenate([w, c]),
    )


def make_bit_table(table, n_data: float, label: str = "bit_table") -> TargetProblem:
    """Arbitrary energy table over bit vectors; table[i] is the energy of
    the vector whose bit j equals (i >> j) & 1."""
    t = np.asarray(table, dtype=np.float64)
    p = int(np.log2(t.shape[0]))
    if 1 << p != t.shape[0]:
        raise ValueError("table length must be a power of two")
    return TargetProblem(
        dimension=p,
        kind=BINARY,
        bounds=None,
        data_size_n=float(n_data),
        label=label,
        energy_code=_loops.ENERGY_BIT_TABLE,
        payload_vector=t,
    )


# ---------------------------------------------------------------------------
# dataset persistence (CSV + JSON sidecar)

def save_dataset(path, columns: dict, spec, data_seed: int) -> None:
    """Write named columns as CSV with a JSON sidecar recording the
    generating spec and seed."""
    path = Path(path)
    names = list(columns)
    arrs = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    mat = np.column_stack(arrs)
    header = ",".join(names)
    np.savetxt(path, mat, delimiter=",", header=header, comments="", fmt="%.17g")
    sidecar = {"spec_type": type(spec).__name__, "spec": asdict(spec), "data_seed": data_seed}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))


def load_dataset(path) -> Tuple[dict, dict]:
    """Inverse of save_dataset: returns (columns dict, sidecar dict)."""
    path = Path(path)
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    mat = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cols = {n: mat[:, i] for i, n in enumerate(names)}
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return cols, sidecar


_EMPTY_M = np.empty((0, 0))
_EMPTY_V = np.empty(0)
