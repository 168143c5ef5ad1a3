"""Run execution and artifact emission for the command-line front end.

Every run writes a manifest (resolved config, derived scales, seed,
convergence indicators, output list), plus CSV time series and optional
Wigner grids / basis exports.  All writes are atomic (temp file + rename)
and locale-independent at full double precision, so a run is reproducible
from its manifest and the package version alone.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .hilbert import Operator, fock_ops
from .liouville import assemble, steady_state
from .mcwf import run_ensemble
from .model import (
    DerivedScales,
    ModelOptions,
    SystemParams,
    TruncationConfig,
    build_hamiltonian,
    build_liouvillean_jump,
    make_particle_basis,
    build_effective_hamiltonian,
    resonance_detuning,
    self_consistent_resonance,
)
from .observables import (
    coherent_fit_fidelity,
    default_wigner_axes,
    field_reduced,
    negativity,
    photon_stats,
    squeezing,
    wigner,
)
from .presets import RunConfig, config_to_dict, initial_state
from .subspace import build_coherent_subspace, build_effective_subspace, save_basis

ENV_OUTDIR = "CAVMOTION_OUTDIR"


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def resolve_out_dir(out_dir, label: str) -> Path:
    if out_dir is None:
        base = os.environ.get(ENV_OUTDIR, "runs")
        out_dir = Path(base) / label
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_series_csv(path: Path, times: np.ndarray, columns: dict,
                     stderrs: dict | None = None) -> list[str]:
    """Time-series table: time plus <name>[, <name>_stderr] column pairs."""
    names = list(columns)
    header = ["time"]
    cols = [np.asarray(times, dtype=float)]
    for name in names:
        header.append(name)
        cols.append(np.asarray(columns[name], dtype=float))
        if stderrs is not None and name in stderrs:
            header.append(f"{name}_stderr")
            cols.append(np.asarray(stderrs[name], dtype=float))
    lines = [",".join(header)]
    data = np.column_stack(cols)
    for row in data:
        lines.append(",".join(format(v, ".17g") for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
    return header


def read_series_csv(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(header)}


def write_wigner_grid(path: Path, grid) -> None:
    lines = ["# cavmotion wigner grid v1",
             f"# meta: {json.dumps(grid.meta, sort_keys=True)}",
             "# layout: values[i,j] = W(x[i], p[j]); one row per x value",
             "x: " + " ".join(format(v, ".17g") for v in grid.x_axis),
             "p: " + " ".join(format(v, ".17g") for v in grid.p_axis)]
    for row in grid.values:
        lines.append(" ".join(format(v, ".17g") for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_wigner_grid(path):
    x_axis = p_axis = None
    rows = []
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# meta:"):
                meta = json.loads(line[len("# meta:"):])
            elif line.startswith("#"):
                continue
            elif line.startswith("x:"):
                x_axis = np.array([float(v) for v in line[2:].split()])
            elif line.startswith("p:"):
                p_axis = np.array([float(v) for v in line[2:].split()])
            else:
                rows.append([float(v) for v in line.split()])
    if x_axis is None or p_axis is None:
        raise ValueError(f"{path} is not a wigner grid file")
    return x_axis, p_axis, np.array(rows), meta


def _derived_scales_block(params: SystemParams, opts: ModelOptions) -> dict:
    scales = DerivedScales(params)
    ns = np.arange(5.0)
    return {
        "potential_depth": list(scales.potential_depth(ns)),
        "trap_frequency": list(scales.trap_frequency(ns)),
        "oscillator_length": list(scales.oscillator_length(ns)),
        "xi_ref": opts.trunc.resolve_xi_ref(params),
    }


def _number_observable(n_fock: int, particle_dim: int) -> Operator:
    from .hilbert import tensor

    num = fock_ops(n_fock)[2]
    eye_p = Operator(np.eye(particle_dim, dtype=complex), "particle")
    return tensor(num, eye_p)


def _build_observables(cfg: RunConfig) -> dict:
    pdim = make_particle_basis(cfg.params, cfg.opts).dim
    obs = {"n": _number_observable(cfg.opts.trunc.n_fock, pdim)}
    if cfg.experiment in ("trajectory_ensemble", "subspace_diagnostic"):
        coh = build_coherent_subspace(cfg.params, cfg.m_list, cfg.opts,
                                      tail_tol=cfg.subspace_tail_tol)
        obs["P_coh"] = coh.projector_observable()
        if cfg.experiment == "trajectory_ensemble":
            for m in (0, 2):
                if m in cfg.m_list:
                    obs[f"P_coh_{m}"] = coh.branch_projector(m)
        for eps in cfg.epsilons:
            eff = build_effective_subspace(cfg.params, cfg.m_list, eps, cfg.opts)
            obs[f"P_eps_{eps:.0e}"] = eff.projector_observable()
    return obs


def run_trajectory_experiment(cfg: RunConfig, opts: ModelOptions | None = None):
    """Build the configured system and run its trajectory ensemble."""
    if opts is not None and opts is not cfg.opts:
        kwargs = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)}
        cfg = RunConfig(**{**kwargs, "opts": opts})
    opts = cfg.opts
    h = build_hamiltonian(cfg.params, opts)
    jump, decay = build_liouvillean_jump(cfg.params, opts)
    h_eff = h + (-1j) * decay
    psi0 = initial_state(cfg.initial_state, cfg.params, opts)
    obs = _build_observables(cfg)
    times = cfg.times.build()
    density_times = times if cfg.track_density else None
    return run_ensemble(h_eff, jump, psi0, times, cfg.n_traj, cfg.master_seed,
                        observables=obs, density_times=density_times,
                        workers=cfg.workers, rtol=cfg.rtol)


def _convergence_block(cfg: RunConfig, base_means: dict) -> dict:
    """Rerun at +25% truncation with identical seeds; compare final means."""
    trunc = cfg.opts.trunc
    big = TruncationConfig(
        n_fock=int(np.ceil(trunc.n_fock * 1.25)),
        m_levels=int(np.ceil(trunc.m_levels * 1.25)),
        xi_ref=trunc.resolve_xi_ref(cfg.params))
    big_opts = ModelOptions(potential=cfg.opts.potential, parity=cfg.opts.parity,
                            trunc=big)
    ens_big = run_trajectory_experiment(cfg, big_opts)
    changes = {}
    for name, series in base_means.items():
        ref = float(series[-1])
        new = float(ens_big.means[name][-1])
        changes[name] = abs(new - ref) / max(abs(ref), 1e-12)
    worst = max(changes.values()) if changes else 0.0
    return {
        "checked": True,
        "inflated_truncation": {"n_fock": big.n_fock, "m_levels": big.m_levels},
        "max_rel_change": worst,
        "per_observable": changes,
        "tolerance": cfg.convergence_tol,
        "converged": bool(worst < cfg.convergence_tol),
    }


def execute(cfg: RunConfig, out_dir=None) -> dict:
    """Run one configured experiment and write all declared artifacts.

    Returns the manifest dictionary (also written to ``manifest.json``).
    """
    t_start = time.time()
    out = resolve_out_dir(out_dir, cfg.label)
    outputs = []
    extra: dict = {}

    if cfg.experiment in ("trajectory_ensemble", "subspace_diagnostic",
                          "decay_squeezing", "custom"):
        ens = run_trajectory_experiment(cfg)
        columns = dict(ens.means)
        stderrs = dict(ens.stderrs)
        if cfg.track_density:
            sq, neg, pur = [], [], []
            for rho in ens.averaged_density:
                rf = field_reduced(rho)
                sq.append(squeezing(rf).measure)
                neg.append(negativity(rho))
                pur.append(rf.purity())
            columns["squeezing"] = np.array(sq)
            columns["negativity"] = np.array(neg)
            columns["purity_field"] = np.array(pur)
        series_path = out / "series.csv"
        header = write_series_csv(series_path, ens.times, columns, stderrs)
        outputs.append(series_path.name)
        extra["observable_columns"] = header
        extra["total_jumps"] = int(ens.jump_counts.sum())
        if cfg.experiment == "subspace_diagnostic":
            coh = build_coherent_subspace(cfg.params, cfg.m_list, cfg.opts,
                                          tail_tol=cfg.subspace_tail_tol)
            path = out / "basis_coherent.json"
            save_basis(coh, path)
            outputs.append(path.name)
            n_m_rows = {"coherent": coh.n_m}
            for eps in cfg.epsilons:
                eff = build_effective_subspace(cfg.params, cfg.m_list, eps, cfg.opts)
                path = out / f"basis_eps_{eps:.0e}.json"
                save_basis(eff, path)
                outputs.append(path.name)
                n_m_rows[f"eps_{eps:.0e}"] = eff.n_m
            extra["n_m"] = n_m_rows
        if cfg.convergence_check:
            extra["convergence"] = _convergence_block(cfg, ens.means)

    elif cfg.experiment == "effective_steady":
        rows = {"m": [], "delta_c": [], "mean_n": [], "var_n": [],
                "purity": [], "coherent_fidelity": []}
        for m in cfg.m_list:
            params = cfg.params
            if m in cfg.resonance_m:
                if cfg.resonance_mode == "self_consistent":
                    dc, _ = self_consistent_resonance(cfg.params, m)
                else:
                    dc = resonance_detuning(cfg.params, m)
                params = dataclasses.replace(cfg.params, delta_c=dc)
            h_m = build_effective_hamiltonian(params, m, cfg.opts.trunc.n_fock)
            rho = steady_state(assemble(h_m, params.kappa))
            mean, var = photon_stats(rho)
            rows["m"].append(m)
            rows["delta_c"].append(params.delta_c)
            rows["mean_n"].append(mean)
            rows["var_n"].append(var)
            rows["purity"].append(rho.purity())
            rows["coherent_fidelity"].append(coherent_fit_fidelity(rho))
            x_ax, p_ax = default_wigner_axes(rho, points=81)
            grid = wigner(rho, x_ax, p_ax)
            wpath = out / f"wigner_m{m}.txt"
            write_wigner_grid(wpath, grid)
            outputs.append(wpath.name)
        table = out / "steady_summary.csv"
        write_series_csv(table, np.array(rows["m"], dtype=float),
                         {k: np.array(v, dtype=float) for k, v in rows.items() if k != "m"})
        # first column of steady_summary is the level index, not time
        outputs.append(table.name)
        extra["steady_summary"] = {k: list(map(float, v)) for k, v in rows.items()}
    else:
        raise ValueError(f"unhandled experiment {cfg.experiment}")

    config_dict = config_to_dict(cfg)
    config_path = out / "config.json"
    atomic_write_text(config_path, canonical_json(config_dict))
    outputs.append(config_path.name)

    manifest = {
        "label": cfg.label,
        "experiment": cfg.experiment,
        "code_version": __version__,
        "master_seed": cfg.master_seed,
        "config": config_dict,
        "derived_scales": _derived_scales_block(cfg.params, cfg.opts),
        "outputs": sorted(outputs),
        "runtime_seconds": round(time.time() - t_start, 3),
        **extra,
    }
    atomic_write_text(out / "manifest.json", canonical_json(manifest))
    return manifest
