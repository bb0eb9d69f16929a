"""Tempered MCMC toolkit: sequential exchange Monte Carlo with automatic
temperature-ladder and step-size tuning, replica-exchange and SMC
baselines, free-energy estimation, and a benchmark harness."""

from ._backend import BACKEND, USING_NUMBA
from .adaptation import (ExchangeTargetConfig, RobbinsMonroConfig,
                         estimate_exchange_rate, extrapolate_step_size,
                         propose_next_beta, robbins_monro_update,
                         tune_initial_rungs)
from .core import (BINARY, CONTINUOUS, EnsembleSnapshot, ParameterState,
                   RunResult, TargetProblem, TemperatureLadder,
                   tempered_log_density_ratio, validate_state)
from .evidence import (estimate_free_energy, free_energy_gap_terms,
                       reference_free_energy_enumeration,
                       reference_free_energy_quadrature)
from .kernels import (exchange_accept_prob, flip_step, metropolis_sweep,
                      try_exchange)
from .metrics import (Histogram, build_histogram, mean_slot_wasserstein,
                      sorted_mu_histograms, step_size_scaling_slope,
                      wasserstein1)
from .problems import (BimodalSpec, DESK_EXHAUSTIVE, ExhaustiveSpec,
                       SPECTRAL_K10, SpectralSpec, bimodal_energy,
                       bimodal_mode_masses, exhaustive_energy,
                       generate_exhaustive_data, generate_spectral_data,
                       make_bimodal, make_bit_table, make_exhaustive,
                       make_quadratic, make_spectral, spectral_energy,
                       spectral_model)
from .samplers import (RemcConfig, SemcConfig, SmcsConfig, resample_weights,
                       run_remc, run_semc, run_smcs, run_waste_free_smc)

__version__ = "0.1.0"
