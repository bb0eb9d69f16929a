"""Result serialization: result.json, sample/diagnostic CSVs, histograms.

result.json is schema-versioned and carries, besides the headline
numbers, the per-gap energy summaries of the free-energy estimator so
the stored estimate can be recomputed from the file alone.  Float
fields go through Python's shortest-round-trip repr, so identical runs
serialize byte-identically (wall_time is the one field that differs).
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CONTINUOUS, RunResult, TargetProblem
from .evidence import free_energy_gap_terms
from .metrics import Histogram, build_histogram, save_histogram, sorted_mu_histograms

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "SEMC_OUTPUT_ROOT"

BIMODAL_BIN_WIDTH = 0.001
SPECTRAL_BIN_WIDTH = 0.005


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def result_to_dict(result: RunResult, problem: TargetProblem, config: dict) -> dict:
    terms = free_energy_gap_terms(result.snapshots, problem.data_size_n)
    return _plain({
        "schema_version": SCHEMA_VERSION,
        "sampler": result.sampler,
        "problem": {
            "label": problem.label,
            "kind": problem.kind,
            "dimension": problem.dimension,
            "data_size_n": problem.data_size_n,
        },
        "config": config,
        "seed": result.seed,
        "free_energy": result.free_energy,
        "betas": result.ladder.betas,
        "step_sizes": result.ladder.step_sizes,
        "exchange_rates": result.exchange_rates,
        "metropolis_rates": result.metropolis_rates,
        "snapshot_sizes": [s.size for s in result.snapshots],
        "evidence_terms": terms,
        "wall_time": result.wall_time,
    })


def recompute_free_energy(result_dict: dict) -> float:
    """Free energy from the stored per-gap summaries alone."""
    total = 0.0
    for t in result_dict["evidence_terms"]:
        total += math.log(t["mean_exp_shifted"]) - \
            result_dict["problem"]["data_size_n"] * t["delta_beta"] * t["e_min"]
    return -total


def problem_histograms(result: RunResult, problem: TargetProblem) -> dict:
    """Named report histograms for the final-rung samples."""
    final = result.final_snapshot()
    hists = {}
    if problem.label == "bimodal":
        hists["theta1"] = build_histogram(final.coords[:, 0], 0.0, 1.0, BIMODAL_BIN_WIDTH)
    elif problem.label.startswith("spectral_k"):
        k = int(problem.label.split("spectral_k")[1])
        for i, h in enumerate(sorted_mu_histograms(final.coords, k, SPECTRAL_BIN_WIDTH)):
            hists[f"mu_slot_{i + 1}"] = h
    return hists


def write_run_outputs(out_dir, result: RunResult, problem: TargetProblem,
                      config: dict) -> Path:
    """Write result.json, final-rung samples, histograms and per-rung
    diagnostics under out_dir; returns the result.json path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = result_to_dict(result, problem, config)
    path = out / "result.json"
    path.write_text(json.dumps(doc, indent=1) + "\n")

    final = result.final_snapshot()
    cols = [f"theta_{j}" for j in range(problem.dimension)]
    header = ",".join(cols + ["energy"])
    mat = np.column_stack([final.coords.astype(np.float64), final.energies])
    np.savetxt(out / "samples_rung_final.csv", mat, delimiter=",",
               header=header, comments="", fmt="%.17g")

    for name, hist in problem_histograms(result, problem).items():
        save_histogram(out / f"histogram_{name}.csv", hist)

    with open(out / "diagnostics.csv", "w") as fh:
        d = problem.dimension if problem.kind == CONTINUOUS else 1
        eps_cols = ",".join(f"eps_{j}" for j in range(d)) if result.ladder.step_sizes is not None else ""
        met_cols = ",".join(f"accept_{j}" for j in range(result.metropolis_rates.shape[1]))
        head = "rung,beta,exchange_rate," + met_cols
        if eps_cols:
            head += "," + eps_cols
        fh.write(head + "\n")
        betas = result.ladder.betas
        for l in range(1, len(betas)):
            ex = result.exchange_rates[l - 1] if result.exchange_rates.size else float("nan")
            row = [str(l + 1), repr(float(betas[l])), repr(float(ex))]
            row += [repr(float(v)) for v in result.metropolis_rates[l - 1]]
            if result.ladder.step_sizes is not None:
                row += [repr(float(v)) for v in result.ladder.step_sizes[l - 1]]
            fh.write(",".join(row) + "\n")
    return path


def read_result(path_or_dir) -> dict:
    p = Path(path_or_dir)
    if p.is_dir():
        p = p / "result.json"
    return json.loads(p.read_text())


def load_run_histograms(run_dir) -> dict:
    from .metrics import load_histogram

    out = {}
    for f in sorted(Path(run_dir).glob("histogram_*.csv")):
        out[f.stem.replace("histogram_", "")] = load_histogram(f)
    return out


def write_reference(out_dir, problem_label: str, method: str, free_energy: float,
                    details: Optional[dict] = None,
                    histograms: Optional[dict] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = _plain({
        "schema_version": SCHEMA_VERSION,
        "problem": problem_label,
        "method": method,
        "free_energy": free_energy,
        "details": details or {},
    })
    path = out / "reference.json"
    path.write_text(json.dumps(doc, indent=1) + "\n")
    for name, hist in (histograms or {}).items():
        save_histogram(out / f"histogram_{name}.csv", hist)
    return path
