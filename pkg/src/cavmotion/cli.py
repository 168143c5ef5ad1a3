"""Command-line front end: simulate, steady, subspace, wigner, presets.

Config files are JSON renderings of RunConfig; command-line flags override
config fields and the fully resolved config is echoed into the manifest, so
every run is reproducible from its artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .hilbert import ConfigurationError, UsageError
from .model import ModelOptions, TruncationConfig
from .presets import PRESETS, RunConfig, TimeGridSpec, config_from_dict, config_to_dict
from .runio import canonical_json, execute


def _load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(payload)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    kwargs = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)}
    if getattr(args, "n_traj", None) is not None:
        kwargs["n_traj"] = args.n_traj
    if getattr(args, "seed", None) is not None:
        kwargs["master_seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        kwargs["workers"] = args.workers
    if getattr(args, "label", None) is not None:
        kwargs["label"] = args.label
    if getattr(args, "convergence_check", False):
        kwargs["convergence_check"] = True
    trunc = cfg.opts.trunc
    n_fock = getattr(args, "n_fock", None) or trunc.n_fock
    m_levels = getattr(args, "m_levels", None) or trunc.m_levels
    if (n_fock, m_levels) != (trunc.n_fock, trunc.m_levels):
        kwargs["opts"] = ModelOptions(
            potential=cfg.opts.potential, parity=cfg.opts.parity,
            trunc=TruncationConfig(n_fock=n_fock, m_levels=m_levels, xi_ref=trunc.xi_ref))
    t_final = getattr(args, "t_final", None) or cfg.times.t_final
    n_points = getattr(args, "n_points", None) or cfg.times.n_points
    if (t_final, n_points) != (cfg.times.t_final, cfg.times.n_points):
        kwargs["times"] = TimeGridSpec(t_final=t_final, n_points=n_points)
    return RunConfig(**kwargs)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output directory (default: $CAVMOTION_OUTDIR/<label> or runs/<label>)")
    p.add_argument("--n-traj", type=int, default=None, dest="n_traj")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--n-fock", type=int, default=None, dest="n_fock")
    p.add_argument("--m-levels", type=int, default=None, dest="m_levels")
    p.add_argument("--t-final", type=float, default=None, dest="t_final")
    p.add_argument("--n-points", type=int, default=None, dest="n_points")
    p.add_argument("--convergence-check", action="store_true", dest="convergence_check")
    p.add_argument("--config-only", action="store_true",
                   help="emit the resolved config and exit without running")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavmotion",
        description="Coupled cavity-field / particle-motion simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="trajectory ensemble from a config file")
    p_sim.add_argument("--config", required=True)
    _add_common(p_sim)

    p_steady = sub.add_parser("steady", help="per-level conditional steady states")
    p_steady.add_argument("--config", required=True)
    _add_common(p_steady)

    p_sub = sub.add_parser("subspace", help="subspace construction + diagnostics")
    p_sub.add_argument("--config", required=True)
    _add_common(p_sub)

    p_wig = sub.add_parser("wigner", help="Wigner grids of conditional steady states")
    p_wig.add_argument("--config", required=True)
    _add_common(p_wig)

    p_pre = sub.add_parser("presets", help="run a canonical experiment")
    p_pre.add_argument("name", choices=sorted(PRESETS))
    p_pre.add_argument("--scale", choices=("full", "smoke"), default="full")
    p_pre.add_argument("--initial", choices=("ground", "superposition"),
                       default="superposition", help="fig2 initial particle state")
    _add_common(p_pre)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.name == "fig2":
                cfg = PRESETS[args.name](scale=args.scale, initial=args.initial)
            else:
                cfg = PRESETS[args.name](scale=args.scale)
        else:
            cfg = _load_config(args.config)
            expected = {
                "simulate": ("trajectory_ensemble", "decay_squeezing", "custom"),
                "steady": ("effective_steady",),
                "wigner": ("effective_steady",),
                "subspace": ("subspace_diagnostic",),
            }[args.command]
            if cfg.experiment not in expected:
                raise ConfigurationError(
                    f"{args.command} expects experiment in {expected}, "
                    f"config says {cfg.experiment!r}")
        cfg = _apply_overrides(cfg, args)
        if args.config_only:
            sys.stdout.write(canonical_json(config_to_dict(cfg)))
            return 0
        manifest = execute(cfg, args.out)
        sys.stdout.write(f"{cfg.label}: wrote {len(manifest['outputs'])} artifacts "
                         f"in {manifest['runtime_seconds']}s\n")
        return 0
    except (ConfigurationError, UsageError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except Exception as exc:  # module errors surface with context, nonzero exit
        sys.stderr.write(f"runtime error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
