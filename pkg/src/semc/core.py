"""Domain types shared by all samplers.

States carry their coordinates together with a cached energy value; the
samplers never re-evaluate an energy they already hold.  Target problems
bundle the energy function with its support, the data-size factor that
scales it in the tempered density, and a payload that lets the compiled
loops evaluate the energy without calling back into Python.  Priors are
implicitly flat over the declared support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _loops

CONTINUOUS = "continuous"
BINARY = "binary"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParameterState:
    """One point of the parameter space with its cached energy.

    coordinates is float64 for continuous problems and int8 bits for
    binary ones.  A state is owned by exactly one chain at a time.
    """

    coordinates: np.ndarray
    energy: float


@dataclass(frozen=True, eq=False)
class TargetProblem:
    """A Bayesian target: energy function, support, and data size.

    The likelihood convention is p(D|theta) = exp(-N E(theta)) / C with a
    flat prior over the support, so tempered densities need only the
    energy difference.  energy_code/payload_* mirror error_fn for the
    compiled loops; error_fn itself is derived from them so that cached
    and freshly evaluated energies agree bit-for-bit.
    """

    dimension: int
    kind: str  # CONTINUOUS or BINARY
    bounds: Optional[np.ndarray]  # (dimension, 2) for continuous problems
    data_size_n: float
    label: str
    energy_code: int
    payload_params: np.ndarray = field(default_factory=lambda: np.empty(0))
    payload_matrix: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    payload_vector: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY):
            raise ValueError(f"kind must be {CONTINUOUS!r} or {BINARY!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not np.isfinite(self.data_size_n) or self.data_size_n < 0:
            raise ValueError("data_size_N must be a nonnegative finite real")
        if self.kind == CONTINUOUS:
            b = np.asarray(self.bounds, dtype=np.float64)
            if b.shape != (self.dimension, 2) or not (b[:, 1] > b[:, 0]).all():
                raise ValueError("bounds must be (dimension, 2) with high > low")
            object.__setattr__(self, "bounds", _readonly(b))
        elif self.bounds is not None:
            raise ValueError("binary problems take no bounds")
        object.__setattr__(self, "payload_params", _readonly(np.asarray(self.payload_params, np.float64)))
        object.__setattr__(self, "payload_matrix", _readonly(np.asarray(self.payload_matrix, np.float64)))
        object.__setattr__(self, "payload_vector", _readonly(np.asarray(self.payload_vector, np.float64)))

    @property
    def lo(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bounds[:, 1]

    def error_fn(self, coordinates) -> float:
        """Deterministic energy E(theta) for one coordinate vector."""
        if self.kind == CONTINUOUS:
            c = np.ascontiguousarray(coordinates, dtype=np.float64)
            return float(_loops.energy_continuous(
                self.energy_code, c, self.payload_params,
                self.payload_matrix, self.payload_vector))
        c = np.ascontiguousarray(coordinates, dtype=np.int8)
        return float(_loops.energy_binary(
            self.energy_code, c, self.payload_params,
            self.payload_matrix, self.payload_vector))

    def batch_energy(self, coords2d: np.ndarray) -> np.ndarray:
        out = np.empty(coords2d.shape[0])
        if self.kind == CONTINUOUS:
            _loops.batch_energy_continuous(
                self.energy_code, np.ascontiguousarray(coords2d, np.float64),
                self.payload_params, self.payload_matrix, self.payload_vector, out)
        else:
            _loops.batch_energy_binary(
                self.energy_code, np.ascontiguousarray(coords2d, np.int8),
                self.payload_params, self.payload_matrix, self.payload_vector, out)
        return out

    def prior_sampler(self, rng: np.random.Generator) -> np.ndarray:
        """One draw from the flat prior over the support."""
        return self.prior_batch(rng, 1)[0]

    def prior_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == CONTINUOUS:
            u = rng.random((n, self.dimension))
            return self.lo + u * (self.hi - self.lo)
        return rng.integers(0, 2, size=(n, self.dimension), dtype=np.int8)

    def make_state(self, coordinates) -> ParameterState:
        dtype = np.float64 if self.kind == CONTINUOUS else np.int8
        c = _readonly(np.asarray(coordinates, dtype))
        return ParameterState(c, self.error_fn(c))

    def in_support(self, coordinates) -> bool:
        c = np.asarray(coordinates)
        if c.shape != (self.dimension,):
            return False
        if self.kind == CONTINUOUS:
            return bool(np.all(c >= self.lo) and np.all(c <= self.hi) and np.all(np.isfinite(c)))
        return bool(np.all((c == 0) | (c == 1)))


@dataclass(frozen=True)
class TemperatureLadder:
    """Ordered inverse temperatures plus per-rung step sizes.

    betas[0] = 0 and betas are strictly increasing; a completed ladder
    ends at 1.  step_sizes has one row per rung starting at rung 2
    (shape (len(betas) - 1, dimension)); binary problems carry None.
    """

    betas: np.ndarray
    step_sizes: Optional[np.ndarray]

    def __post_init__(self):
        b = _readonly(np.asarray(self.betas, np.float64))
        if b.ndim != 1 or b.shape[0] < 1 or b[0] != 0.0:
            raise ValueError("betas must start at 0")
        if np.any(np.diff(b) <= 0):
            raise ValueError("betas must be strictly increasing")
        object.__setattr__(self, "betas", b)
        if self.step_sizes is not None:
            s = _readonly(np.asarray(self.step_sizes, np.float64))
            if s.shape[0] != b.shape[0] - 1:
                raise ValueError("need one step-size row per rung >= 2")
            if not np.all(np.isfinite(s)) or np.any(s <= 0):
                raise ValueError("step sizes must be positive and finite")
            object.__setattr__(self, "step_sizes", s)

    @property
    def n_rungs(self) -> int:
        return int(self.betas.shape[0])

    @property
    def complete(self) -> bool:
        return self.betas[-1] == 1.0


class _StateView(Sequence):
    """Sequence of ParameterState views over a snapshot's arrays."""

    def __init__(self, snapshot: "EnsembleSnapshot"):
        self._snap = snapshot

    def __len__(self) -> int:
        return self._snap.coords.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return ParameterState(self._snap.coords[i], float(self._snap.energies[i]))


@dataclass(frozen=True, eq=False)
class EnsembleSnapshot:
    """Retained samples and energies at one rung (immutable copy)."""

    beta: float
    coords: np.ndarray    # (T, dimension)
    energies: np.ndarray  # (T,)

    def __post_init__(self):
        object.__setattr__(self, "coords", _readonly(self.coords))
        object.__setattr__(self, "energies", _readonly(np.asarray(self.energies, np.float64)))
        if self.coords.shape[0] != self.energies.shape[0]:
            raise ValueError("states and energies must align")

    @property
    def states(self) -> Sequence[ParameterState]:
        return _StateView(self)

    @property
    def size(self) -> int:
        return int(self.energies.shape[0])


@dataclass(eq=False)
class RunResult:
    """Everything one sampler run produces."""

    ladder: TemperatureLadder
    snapshots: list          # one EnsembleSnapshot per rung, ordered by beta
    free_energy: float
    exchange_rates: np.ndarray    # per adjacent rung pair; empty if no exchanges
    metropolis_rates: np.ndarray  # per rung >= 2: per coordinate, or (.,1) for flips
    seed: int
    wall_time: float
    sampler: str = ""
    meta: dict = field(default_factory=dict)

    def final_snapshot(self) -> EnsembleSnapshot:
        return self.snapshots[-1]


def tempered_log_density_ratio(problem: TargetProblem, beta: float,
                               e_new: float, e_old: float) -> float:
    """Log ratio of the tempered density at two cached energies.

    Equals -beta * N * (e_new - e_old); flat priors contribute nothing
    inside the support (out-of-support proposals are the caller's job).
    """
    if not (np.isfinite(beta) and np.isfinite(e_new) and np.isfinite(e_old)):
        raise ValueError("beta and energies must be finite")
    if beta < 0.0 or beta > 1.0:
        raise ValueError("beta must lie in [0, 1]")
    return -beta * problem.data_size_n * (e_new - e_old)


def validate_state(problem: TargetProblem, state: ParameterState) -> bool:
    """True iff the state is in the support and its energy cache is
    bit-for-bit reproducible by a fresh evaluation."""
    if not problem.in_support(state.coordinates):
        return False
    return problem.error_fn(state.coordinates) == state.energy
