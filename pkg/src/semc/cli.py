"""Command-line harness: run experiments, build references, compare.

Configuration comes from an optional YAML file plus flags (flags win).
Exit codes: 0 success, 1 runtime failure, 2 usage/config failure.
"""

from __future__ import annotations

import dataclasses
import json
import sys
import time
from pathlib import Path

import click
import numpy as np
import yaml

from . import _backend, io, problems
from .adaptation import ExchangeTargetConfig, RobbinsMonroConfig
from .evidence import (enumeration_posterior, marginal_histogram_quadrature,
                       reference_free_energy_enumeration,
                       reference_free_energy_quadrature)
from .metrics import mean_slot_wasserstein, wasserstein1
from .samplers import (RemcConfig, SemcConfig, SmcsConfig, run_remc, run_semc,
                       run_smcs, run_waste_free_smc)

PROBLEM_NAMES = ("bimodal", "spectral_k3", "spectral_k10",
                 "exhaustive_desk", "exhaustive_full")
SAMPLER_NAMES = ("semc", "remc", "smcs", "waste_free")

# default sampler sizes per preset; flags and config files override
PRESETS = {
    "desk": {
        "semc": {"n_samples": 10_000, "n_chains": 50},
        "remc": {"n_rungs": 30, "burn_in": 3_000, "n_samples": 3_000},
        "smcs": {"n_particles": 10_000, "n_steps": 10},
        "waste_free": {"n_particles": 10_000, "n_steps": 10},
    },
    "paper": {
        "semc": {"n_samples": 300_000, "n_chains": 50},
        "remc": {"n_rungs": 300, "burn_in": 10_000, "n_samples": 10_000},
        "smcs": {"n_particles": 300_000, "n_steps": 10},
        "waste_free": {"n_particles": 300_000, "n_steps": 100},
    },
}


def _build_problem(name: str, overrides: dict):
    if name == "bimodal":
        spec = _replace(problems.BimodalSpec(), overrides)
        return problems.make_bimodal(spec), spec
    if name == "spectral_k3":
        spec = _replace(problems.SpectralSpec(), overrides)
        return problems.make_spectral(spec), spec
    if name == "spectral_k10":
        spec = _replace(problems.SPECTRAL_K10, overrides)
        return problems.make_spectral(spec), spec
    if name == "exhaustive_desk":
        spec = _replace(problems.DESK_EXHAUSTIVE, overrides)
        return problems.make_exhaustive(spec), spec
    if name == "exhaustive_full":
        spec = _replace(problems.ExhaustiveSpec(), overrides)
        return problems.make_exhaustive(spec), spec
    raise click.UsageError(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")


def _replace(spec, overrides: dict):
    if not overrides:
        return spec
    names = {f.name for f in dataclasses.fields(spec)}
    bad = set(overrides) - names
    if bad:
        raise click.UsageError(f"unknown {type(spec).__name__} keys: {sorted(bad)}")
    return dataclasses.replace(spec, **overrides)


def _sub_config(params: dict, cls, key: str):
    if key in params:
        params[key] = cls(**params.pop(key))
    return params


def _build_sampler_config(name: str, params: dict):
    params = dict(params)
    _sub_config(params, RobbinsMonroConfig, "rm")
    _sub_config(params, ExchangeTargetConfig, "exchange")
    try:
        if name == "semc":
            return SemcConfig(**params), run_semc
        if name == "remc":
            return RemcConfig(**params), run_remc
        if name == "smcs":
            return SmcsConfig(waste_free=False, **params), run_smcs
        if name == "waste_free":
            return SmcsConfig(waste_free=True, **params), run_waste_free_smc
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"bad {name} config: {exc}")
    raise click.UsageError(f"unknown sampler {name!r}; choose from {SAMPLER_NAMES}")


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise click.UsageError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise click.UsageError(f"config file does not parse: {exc}")
    if not isinstance(doc, dict):
        raise click.UsageError("config file must hold a mapping")
    return doc


def _parse_set(values):
    out = {}
    for item in values:
        if "=" not in item:
            raise click.UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(raw)
    return out


def _apply_dotted(config: dict, dotted: dict):
    for key, value in dotted.items():
        node = config
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value


@click.group()
@click.option("--threads", type=int, default=None,
              help="Cap the numba thread pool (kernels themselves run "
                   "deterministic single-threaded lockstep).")
def main(threads):
    """Tempered-MCMC benchmark harness."""
    if threads is not None and _backend.USING_NUMBA:
        import numba

        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="YAML config file.")
@click.option("--problem", type=str, default=None)
@click.option("--sampler", type=str, default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="desk")
@click.option("--T", "size_t", type=int, default=None,
              help="Main size: samples (semc/remc) or particles (smcs/waste_free).")
@click.option("--S", "chains", type=int, default=None, help="Parallel chains (semc).")
@click.option("--L", "rungs", type=int, default=None, help="Ladder size (remc).")
@click.option("--n", "steps", type=int, default=None, help="Move steps per rung (smcs/waste_free).")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=str, default=None)
@click.option("--set", "set_values", multiple=True,
              help="Dotted config override, e.g. --set sampler.pilot_sweeps=500")
def run(config_path, problem, sampler, preset, size_t, chains, rungs, steps,
        seed, out_dir, set_values):
    """Run one (problem, sampler, size) cell and write its outputs."""
    config = _load_config(config_path)
    _apply_dotted(config, _parse_set(set_values))
    problem_cfg = dict(config.get("problem", {}))
    sampler_cfg = dict(config.get("sampler", {}))
    problem_name = problem or problem_cfg.pop("name", None)
    sampler_name = sampler or sampler_cfg.pop("name", None)
    if not problem_name or not sampler_name:
        raise click.UsageError("need --problem and --sampler (or a config file naming them)")
    if sampler_name not in SAMPLER_NAMES:
        raise click.UsageError(f"unknown sampler {sampler_name!r}")

    params = dict(PRESETS[preset].get(sampler_name, {}))
    params.update(sampler_cfg)
    if size_t is not None:
        params["n_particles" if sampler_name in ("smcs", "waste_free") else "n_samples"] = size_t
    if chains is not None and sampler_name == "semc":
        params["n_chains"] = chains
    if rungs is not None and sampler_name == "remc":
        params["n_rungs"] = rungs
    if steps is not None and sampler_name in ("smcs", "waste_free"):
        params["n_steps"] = steps
    run_seed = seed if seed is not None else int(config.get("seed", 0))

    target, spec = _build_problem(problem_name, problem_cfg)
    cfg, runner = _build_sampler_config(sampler_name, params)

    out = Path(out_dir or config.get("out_dir")
               or io.default_output_root() / f"{problem_name}_{sampler_name}_seed{run_seed}")
    try:
        result = runner(target, cfg, run_seed)
        doc_cfg = {"sampler": sampler_name, "params": io._plain(dataclasses.asdict(cfg)),
                   "problem": problem_name, "problem_spec": io._plain(dataclasses.asdict(spec)),
                   "preset": preset}
        path = io.write_run_outputs(out, result, target, doc_cfg)
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 1 per contract
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"free_energy={result.free_energy:.6f} rungs={result.ladder.n_rungs} "
               f"wall={result.wall_time:.2f}s -> {path}")


REFERENCE_DEFAULTS = {
    "spectral_k3": {"n_rungs": 50, "burn_in": 100_000, "n_samples": 100_000},
    "spectral_k10": {"n_rungs": 50, "burn_in": 100_000, "n_samples": 100_000},
    "exhaustive_full": {"n_rungs": 50, "burn_in": 30_000, "n_samples": 30_000},
}


@main.command()
@click.option("--problem", "problem_name", required=True, type=str)
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--seed", type=int, default=1)
@click.option("--L", "rungs", type=int, default=None)
@click.option("--T", "size_t", type=int, default=None, help="Burn-in and sample count per rung.")
def reference(problem_name, out_dir, seed, rungs, size_t):
    """Build the reference answer for a problem.

    bimodal: quadrature; desk selection problem: exact enumeration;
    spectral and full selection: a long replica-exchange run (the
    artifact's internal reference; sizes are documented defaults,
    overridable here).
    """
    target, spec = _build_problem(problem_name, {})
    try:
        if problem_name == "bimodal":
            free = reference_free_energy_quadrature(target, tol=1e-4)
            hist = marginal_histogram_quadrature(target, io.BIMODAL_BIN_WIDTH)
            left, right = problems.bimodal_mode_masses(spec)
            io.write_reference(out_dir, problem_name, "quadrature", free,
                               {"mode_masses": [left, right]}, {"theta1": hist})
        elif problem_name == "exhaustive_desk":
            free = reference_free_energy_enumeration(target)
            bits, probs = enumeration_posterior(target)
            support_idx = int(np.packbits(spec.true_support[::-1]).view(np.uint8)[-1]) \
                if spec.n_features <= 8 else None
            mass = float(probs[(bits == spec.true_support).all(axis=1)][0])
            io.write_reference(out_dir, problem_name, "enumeration", free,
                               {"true_support_mass": mass,
                                "true_support_index": support_idx})
        else:
            params = dict(REFERENCE_DEFAULTS[problem_name])
            if rungs is not None:
                params["n_rungs"] = rungs
            if size_t is not None:
                params["burn_in"] = size_t
                params["n_samples"] = size_t
            cfg = RemcConfig(**params)
            result = run_remc(target, cfg, seed)
            doc_cfg = {"sampler": "remc", "params": io._plain(dataclasses.asdict(cfg)),
                       "problem": problem_name}
            io.write_run_outputs(Path(out_dir) / "remc_reference", result, target, doc_cfg)
            io.write_reference(out_dir, problem_name, "long_remc", result.free_energy,
                               {"seed": seed, "config": io._plain(dataclasses.asdict(cfg))},
                               io.problem_histograms(result, target))
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        click.echo(f"reference failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"reference written to {out_dir}")


@main.command()
@click.argument("results", nargs=-1, required=True)
@click.option("--reference", "reference_dir", required=True, type=str)
@click.option("--out", "out_path", type=str, default=None, help="comparison.csv path")
def compare(results, reference_dir, out_path):
    """Compare run directories against a reference: mean absolute
    free-energy error, mean transport distance, mean wall time, grouped
    by sampler and size."""
    ref_path = Path(reference_dir)
    if not (ref_path / "reference.json").exists():
        raise click.UsageError(f"no reference.json under {reference_dir}")
    ref = json.loads((ref_path / "reference.json").read_text())
    ref_hists = io.load_run_histograms(ref_path)
    groups = {}
    for rd in results:
        rp = Path(rd)
        if not (rp / "result.json").exists():
            raise click.UsageError(f"no result.json under {rd}")
        doc = io.read_result(rp)
        hists = io.load_run_histograms(rp)
        shared = sorted(set(hists) & set(ref_hists))
        try:
            w1 = float(np.mean([wasserstein1(hists[k], ref_hists[k]) for k in shared]) if shared else np.nan)
        except ValueError as exc:
            raise click.UsageError(f"histogram binning mismatch for {rd}: {exc}")
        key = (doc["sampler"], doc["problem"]["label"], _size_key(doc))
        groups.setdefault(key, []).append(
            (abs(doc["free_energy"] - ref["free_energy"]), w1, doc["wall_time"]))
    lines = [("sampler", "problem", "size", "trials", "mean_abs_df", "mean_w1", "mean_wall_s")]
    for key in sorted(groups):
        vals = np.array(groups[key], dtype=np.float64)
        lines.append((key[0], key[1], key[2], str(vals.shape[0]),
                      f"{vals[:, 0].mean():.6f}",
                      "nan" if np.isnan(vals[:, 1]).all() else f"{np.nanmean(vals[:, 1]):.6f}",
                      f"{vals[:, 2].mean():.3f}"))
    widths = [max(len(row[i]) for row in lines) for i in range(len(lines[0]))]
    for row in lines:
        click.echo("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    if out_path:
        with open(out_path, "w") as fh:
            for row in lines:
                fh.write(",".join(row) + "\n")


def _size_key(doc: dict) -> str:
    p = doc["config"].get("params", {})
    if doc["sampler"] == "remc":
        return f"L{p.get('n_rungs')}xT{p.get('n_samples')}"
    if doc["sampler"] in ("smcs", "waste_free"):
        return f"T{p.get('n_particles')}xn{p.get('n_steps')}"
    return f"T{p.get('n_samples')}"


@main.command()
@click.option("--T", "size_t", type=int, default=4000)
@click.option("--seed", type=int, default=1)
def bench(size_t, seed):
    """Time the compiled against the uncompiled backend on a small
    two-well run (subprocess per backend) and check they agree."""
    import subprocess

    rows = []
    for backend in ("numba", "numpy"):
        code = (
            "import time, numpy as np\n"
            "from semc import problems, samplers\n"
            "p = problems.make_bimodal()\n"
            f"cfg = samplers.SemcConfig(n_samples={size_t}, n_chains=50, pilot_sweeps=500)\n"
            f"t0 = time.perf_counter(); r = samplers.run_semc(p, cfg, {seed})\n"
            "t1 = time.perf_counter()\n"
            "print('RESULT', r.free_energy, r.ladder.n_rungs, t1 - t0)\n"
        )
        env = dict(**__import__("os").environ, SEMC_BACKEND=backend)
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-c", code], env=env,
                              capture_output=True, text=True)
        wall = time.perf_counter() - t0
        if proc.returncode != 0:
            click.echo(proc.stderr, err=True)
            sys.exit(1)
        line = [l for l in proc.stdout.splitlines() if l.startswith("RESULT")][0]
        _, free, rungs, inner = line.split()
        rows.append((backend, float(free), int(rungs), float(inner), wall))
    click.echo(f"{'backend':8} {'free_energy':>14} {'rungs':>6} {'sampler_s':>10} {'process_s':>10}")
    for backend, free, rungs, inner, wall in rows:
        click.echo(f"{backend:8} {free:14.6f} {rungs:6d} {inner:10.3f} {wall:10.3f}")
    agree = abs(rows[0][1] - rows[1][1]) < 1e-9 and rows[0][2] == rows[1][2]
    click.echo(f"backends agree: {agree}")
    if not agree:
        sys.exit(1)


if __name__ == "__main__":
    main()
